#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "als/calibration.hpp"
#include "als/labeling.hpp"
#include "als/model.hpp"
#include "als/synthdata.hpp"

namespace als {

/// Step schedule: lr = base_lr * lr_decay^m where m counts the milestones
/// round(fraction * epochs) already reached.
struct TrainConfig {
  int epochs = 30;
  double base_lr = 0.1;
  double lr_decay = 0.1;
  std::vector<double> decay_fractions = {0.25, 0.5, 0.75};
  int batch_size = 64;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
  double lr_at(int epoch) const;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean of the step losses
  double val_acc = 0.0;     // object validation accuracy, 0 without a val set
};

struct TrainResult {
  ModelState state;
  std::vector<EpochLog> log;
  std::uint64_t first_batch_hash = 0;  // draw_hash of the first batch
  std::int64_t steps = 0;
  std::int64_t context_items = 0;
};

/// Runs `tc.epochs` passes of N draws each. Context-only draws get the
/// uniform label; every other draw is labeled by `policy` with its
/// post-crop objectness. `sampler.seed` and `tc.seed` together key the data
/// stream, so two policies with the same seeds see the same images.
TrainResult train(const Dataset& dataset, std::span<const EvalItem> val, const LabelingPolicy& policy,
                  const NetConfig& net, const TrainConfig& tc, const SamplerConfig& sampler, int workers = 1);

std::vector<PredictionRecord> evaluate(const ModelState& state, std::span<const EvalItem> items);

std::uint64_t fnv1a(std::span<const Raster> images);

/// Which sample and which crop each draw used. Context substitution does not
/// change it, so policies sharing seeds report the same hash.
struct DrawKey {
  std::int64_t sample_index = 0;
  AugmentTransform transform;
};
std::uint64_t draw_hash(std::span<const DrawKey> draws);

}  // namespace als

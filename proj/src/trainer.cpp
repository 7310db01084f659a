#include "als/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "als/error.hpp"
#include "als/loss.hpp"
#include "als/rng.hpp"

namespace als {

void TrainConfig::validate() const {
  if (epochs <= 0) throw InvalidInput("epochs must be positive");
  if (!(base_lr >= 0.0)) throw InvalidInput("base learning rate must be non-negative");
  if (!(lr_decay > 0.0)) throw InvalidInput("learning-rate decay must be positive");
  if (batch_size <= 0) throw InvalidInput("batch size must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidInput("momentum must lie in [0, 1)");
  if (!std::is_sorted(decay_fractions.begin(), decay_fractions.end()))
    throw InvalidInput("decay epochs must be sorted");
  for (double f : decay_fractions)
    if (!(f > 0.0 && f <= 1.0)) throw InvalidInput("decay fractions must lie in (0, 1]");
}

double TrainConfig::lr_at(int epoch) const {
  double lr = base_lr;
  for (double f : decay_fractions)
    if (epoch >= std::lround(f * epochs)) lr *= lr_decay;
  return lr;
}

namespace {

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void operator()(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
};

}  // namespace

std::uint64_t fnv1a(std::span<const Raster> images) {
  Fnv1a mix;
  for (const Raster& r : images) {
    mix(static_cast<std::uint32_t>(r.width));
    mix(static_cast<std::uint32_t>(r.height));
    for (float p : r.pixels) mix(std::bit_cast<std::uint32_t>(p));
  }
  return mix.h;
}

std::uint64_t draw_hash(std::span<const DrawKey> draws) {
  Fnv1a mix;
  for (const DrawKey& d : draws) {
    mix(static_cast<std::uint32_t>(d.sample_index));
    mix(static_cast<std::uint32_t>(d.sample_index >> 32));
    const AugmentTransform& t = d.transform;
    for (int v : {t.crop.x, t.crop.y, t.crop.w, t.crop.h, t.out_w, t.out_h, t.hflip ? 1 : 0})
      mix(static_cast<std::uint32_t>(v));
  }
  return mix.h;
}

std::vector<PredictionRecord> evaluate(const ModelState& state, std::span<const EvalItem> items) {
  std::vector<Raster> images;
  images.reserve(items.size());
  for (const auto& it : items) images.push_back(it.image);
  const auto logits = forward(state, images);
  std::vector<PredictionRecord> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
    out.push_back(make_record(items[i].id, softmax(logits[i]), items[i].class_id, items[i].objectness));
  return out;
}

TrainResult train(const Dataset& dataset, std::span<const EvalItem> val, const LabelingPolicy& policy,
                  const NetConfig& net, const TrainConfig& tc, const SamplerConfig& sampler, int workers) {
  tc.validate();
  policy.validate();
  if (policy.num_classes != net.num_classes || net.num_classes != dataset.spec.num_classes)
    throw InvalidInput("policy, network and dataset disagree on the number of classes");
  if (sampler.out_w != net.in_w || sampler.out_h != net.in_h)
    throw InvalidInput("sampler output size must match the network input size");

  SamplerConfig cfg = sampler;
  cfg.seed = derive_seed({sampler.seed, tc.seed});
  const TrainingSampler stream(dataset, cfg);
  const std::int64_t n = stream.dataset_size();

  TrainResult result;
  result.state = ModelState::initialize(net);
  std::vector<Raster> batch;
  std::vector<LabelVector> labels;
  std::vector<DrawKey> keys;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const double lr = tc.lr_at(epoch);
    double loss_sum = 0.0;
    std::int64_t loss_steps = 0;
    for (std::int64_t start = 0; start < n; start += tc.batch_size) {
      const std::int64_t stop = std::min<std::int64_t>(n, start + tc.batch_size);
      batch.clear();
      labels.clear();
      for (std::int64_t j = start; j < stop; ++j) {
        TrainingItem item = stream.draw(static_cast<std::int64_t>(epoch) * n + j);
        if (result.steps == 0) keys.push_back({item.sample_index, item.transform});
        if (item.context) {
          labels.push_back(context_label(policy.num_classes));
          ++result.context_items;
        } else {
          labels.push_back(policy.label(item.class_id, std::clamp(item.objectness, 0.0, 1.0)));
        }
        batch.push_back(std::move(item.image));
      }
      if (result.steps == 0) result.first_batch_hash = draw_hash(keys);
      const StepResult step = train_step(result.state, batch, labels, lr, tc.momentum, workers, result.steps);
      ++result.steps;
      loss_sum += step.loss;
      ++loss_steps;
    }
    EpochLog entry{epoch, lr, loss_sum / static_cast<double>(loss_steps), 0.0};
    if (!val.empty()) entry.val_acc = accuracy(evaluate(result.state, val));
    result.log.push_back(entry);
  }
  return result;
}

}  // namespace als

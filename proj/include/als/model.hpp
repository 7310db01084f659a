#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "als/calibration.hpp"
#include "als/geometry.hpp"
#include "als/labeling.hpp"

namespace als {

/// conv3x3 -> ReLU -> maxpool2 per stage, then dense -> ReLU -> dense(K).
struct NetConfig {
  int in_w = 32;
  int in_h = 32;
  std::vector<int> channels = {8, 16};
  int kernel = 3;
  int hidden = 64;
  int num_classes = 10;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// Offsets of every parameter tensor inside the flat parameter vector, in
/// declaration order: per stage conv weight [Cout][Cin][k][k] and bias
/// [Cout], then dense1 weight [hidden][flat] and bias, then dense2 weight
/// [K][hidden] and bias.
struct TensorSlot {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

class ConvNet {
 public:
  explicit ConvNet(NetConfig config);

  const NetConfig& config() const { return config_; }
  std::size_t parameter_count() const { return param_count_; }
  const std::vector<TensorSlot>& slots() const { return slots_; }
  std::size_t input_size() const { return static_cast<std::size_t>(config_.in_w) * config_.in_h; }

  /// He-style fan-in scaled normal init; final layer and all biases zero.
  std::vector<float> initial_parameters() const;

  /// Per-sample activations kept for the backward pass.
  template <typename Real>
  struct Workspace {
    std::vector<std::vector<Real>> stage_in;   // input to each conv
    std::vector<std::vector<Real>> cols;       // im2col of stage_in
    std::vector<std::vector<Real>> conv_out;   // pre-activation
    std::vector<std::vector<Real>> pooled;
    std::vector<std::vector<std::uint32_t>> pool_arg;
    std::vector<Real> hidden_pre;
    std::vector<Real> hidden_act;
    std::vector<Real> logits;
    // backward scratch
    std::vector<Real> d_a;
    std::vector<Real> d_b;
  };

  /// Logits for one input image (row-major, in_w x in_h, values in [0, 1]).
  template <typename Real>
  void forward(std::span<const Real> params, std::span<const Real> input, Workspace<Real>& ws) const;

  /// Accumulates d loss / d params into `grad` given d loss / d logits, using
  /// the activations left in `ws` by the matching forward call.
  template <typename Real>
  void backward(std::span<const Real> params, std::span<const Real> d_logits, Workspace<Real>& ws,
                std::span<Real> grad) const;

  /// Gradient of the loss with respect to the input image (used by the
  /// end-to-end gradient check).
  template <typename Real>
  std::vector<Real> input_gradient(std::span<const Real> params, std::span<const Real> d_logits,
                                   Workspace<Real>& ws) const;

 private:
  struct Stage {
    int c_in, c_out, w, h;  // conv input dims (same padding)
    std::size_t weight, bias;
  };

  template <typename Real>
  void backward_impl(std::span<const Real> params, std::span<const Real> d_logits, Workspace<Real>& ws,
                     std::span<Real> grad, bool want_input, std::vector<Real>* d_input) const;

  NetConfig config_;
  std::vector<Stage> stages_;
  std::vector<TensorSlot> slots_;
  std::size_t flat_ = 0;
  std::size_t dense1_w_ = 0, dense1_b_ = 0, dense2_w_ = 0, dense2_b_ = 0;
  std::size_t param_count_ = 0;
};

/// Parameters plus SGD momentum buffers.
struct ModelState {
  NetConfig config;
  std::vector<float> params;
  std::vector<float> momentum;

  static ModelState initialize(const NetConfig& config);
  friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// Logits for each image; throws InvalidInput on a size mismatch.
std::vector<std::vector<double>> forward(const ModelState& state, std::span<const Raster> batch);

PredictionRecord predict(const ModelState& state, const Raster& image, int true_class = 0,
                         std::optional<double> objectness = std::nullopt, std::int64_t id = 0);

struct StepResult {
  double loss = 0.0;  // mean cross-entropy before the update
};

/// One SGD-with-momentum step (v = mu v + g; theta -= lr v) on the mean
/// cross-entropy of the batch. With `workers` > 1 per-sample gradients are
/// computed concurrently and summed in sample order, giving the same bits as
/// a single worker. Throws NumericError on a non-finite loss.
StepResult train_step(ModelState& state, std::span<const Raster> batch, std::span<const LabelVector> labels,
                      double lr, double momentum = 0.9, int workers = 1, std::int64_t step = 0);

/// Versioned little-endian checkpoint ("ALSM"). Written to a temporary file
/// and renamed into place.
void save_checkpoint(const ModelState& state, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace als

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace als {

/// Length-K target distribution. Entries lie in [0, 1]; the final entry
/// absorbs floating-point rounding so the vector sums to 1.
struct LabelVector {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t k) const { return probs[k]; }
  std::span<const double> view() const { return probs; }

  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

LabelVector hard_label(int y, int num_classes);

/// (1 - alpha) on y, alpha / (K - 1) elsewhere.
LabelVector uniform_smooth_label(int y, int num_classes, double alpha);

/// alpha = 1 - objectness.
double adaptive_alpha(double objectness);

/// beta * smoothed(alpha = 1 - objectness) + (1 - beta) * hard.
///
/// At objectness == 0 the smoothed term would put zero mass on y and 1/(K-1)
/// on every other class. With `uniform_at_zero` (the default) that term is
/// replaced by the uniform 1/K vector instead, so an image without its object
/// is trained towards equiprobable classes. Passing false keeps the raw
/// formula.
LabelVector adaptive_label(int y, int num_classes, double objectness, double beta,
                           bool uniform_at_zero = true);

/// Uniform 1/K target for context-only inputs.
LabelVector context_label(int num_classes);

struct LabelingPolicy {
  enum class Mode { Hard, UniformSmoothing, Adaptive };

  Mode mode = Mode::Hard;
  int num_classes = 2;
  double alpha = 0.0;  // UniformSmoothing only
  double beta = 1.0;   // Adaptive only
  bool uniform_at_zero = true;

  static LabelingPolicy hard(int num_classes);
  static LabelingPolicy uniform(int num_classes, double alpha);
  static LabelingPolicy adaptive(int num_classes, double beta, bool uniform_at_zero = true);

  /// Throws InvalidInput when K < 2 or a hyperparameter is outside [0, 1].
  void validate() const;

  /// Target for a sample of class `y` whose visible object fraction is
  /// `objectness`. Objectness is ignored by Hard and UniformSmoothing.
  LabelVector label(int y, double objectness) const;

  bool is_adaptive() const { return mode == Mode::Adaptive; }
};

/// Parses "hard", "uniform:<alpha>", "adaptive:<beta>" and
/// "adaptive-raw:<beta>" (raw formula at zero objectness).
LabelingPolicy parse_policy(std::string_view text, int num_classes);

/// Inverse of parse_policy; also used as the policy's file-name stem.
std::string policy_name(const LabelingPolicy& policy);

}  // namespace als

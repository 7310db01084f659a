#include "als/labeling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "als/error.hpp"
#include "als/format.hpp"

namespace als {

namespace {

void check_classes(int num_classes) {
  if (num_classes < 2) throw InvalidInput("number of classes must be at least 2");
}

void check_class(int y, int num_classes) {
  check_classes(num_classes);
  if (y < 0 || y >= num_classes) {
    throw InvalidInput("class id " + std::to_string(y) + " out of range [0, " +
                       std::to_string(num_classes) + ")");
  }
}

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput(std::string(what) + " must lie in [0, 1]");
}

// Last entry takes whatever the others leave over.
LabelVector close_simplex(std::vector<double> probs) {
  double head = 0.0;
  for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
    probs[k] = std::clamp(probs[k], 0.0, 1.0);
    head += probs[k];
  }
  probs.back() = std::clamp(1.0 - head, 0.0, 1.0);
  return {std::move(probs)};
}

std::vector<double> smoothed(int y, int num_classes, double alpha) {
  std::vector<double> p(static_cast<std::size_t>(num_classes), alpha / (num_classes - 1));
  p[static_cast<std::size_t>(y)] = 1.0 - alpha;
  return p;
}

}  // namespace

LabelVector hard_label(int y, int num_classes) {
  check_class(y, num_classes);
  std::vector<double> p(static_cast<std::size_t>(num_classes), 0.0);
  p[static_cast<std::size_t>(y)] = 1.0;
  return {std::move(p)};
}

LabelVector uniform_smooth_label(int y, int num_classes, double alpha) {
  check_class(y, num_classes);
  check_unit(alpha, "smoothing alpha");
  return close_simplex(smoothed(y, num_classes, alpha));
}

double adaptive_alpha(double objectness) {
  check_unit(objectness, "objectness");
  return 1.0 - objectness;
}

LabelVector adaptive_label(int y, int num_classes, double objectness, double beta,
                           bool uniform_at_zero) {
  check_class(y, num_classes);
  check_unit(beta, "beta");
  const double alpha = adaptive_alpha(objectness);
  std::vector<double> soft =
      (uniform_at_zero && objectness == 0.0)
          ? std::vector<double>(static_cast<std::size_t>(num_classes), 1.0 / num_classes)
          : smoothed(y, num_classes, alpha);
  for (std::size_t k = 0; k < soft.size(); ++k) {
    const double hard = static_cast<int>(k) == y ? 1.0 : 0.0;
    soft[k] = beta * soft[k] + (1.0 - beta) * hard;
  }
  return close_simplex(std::move(soft));
}

LabelVector context_label(int num_classes) {
  check_classes(num_classes);
  return close_simplex(std::vector<double>(static_cast<std::size_t>(num_classes), 1.0 / num_classes));
}

LabelingPolicy LabelingPolicy::hard(int num_classes) {
  LabelingPolicy p;
  p.mode = Mode::Hard;
  p.num_classes = num_classes;
  p.validate();
  return p;
}

LabelingPolicy LabelingPolicy::uniform(int num_classes, double alpha) {
  LabelingPolicy p;
  p.mode = Mode::UniformSmoothing;
  p.num_classes = num_classes;
  p.alpha = alpha;
  p.validate();
  return p;
}

LabelingPolicy LabelingPolicy::adaptive(int num_classes, double beta, bool uniform_at_zero) {
  LabelingPolicy p;
  p.mode = Mode::Adaptive;
  p.num_classes = num_classes;
  p.beta = beta;
  p.uniform_at_zero = uniform_at_zero;
  p.validate();
  return p;
}

void LabelingPolicy::validate() const {
  check_classes(num_classes);
  check_unit(alpha, "smoothing alpha");
  check_unit(beta, "beta");
}

LabelVector LabelingPolicy::label(int y, double objectness) const {
  switch (mode) {
    case Mode::Hard:
      return hard_label(y, num_classes);
    case Mode::UniformSmoothing:
      return uniform_smooth_label(y, num_classes, alpha);
    case Mode::Adaptive:
      return adaptive_label(y, num_classes, objectness, beta, uniform_at_zero);
  }
  throw InvalidInput("unknown labeling mode");
}

LabelingPolicy parse_policy(std::string_view text, int num_classes) {
  const auto colon = text.find(':');
  const std::string_view kind = text.substr(0, colon);
  double value = 0.0;
  if (colon != std::string_view::npos) {
    const std::string_view arg = text.substr(colon + 1);
    const auto [end, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), value);
    if (ec != std::errc{} || end != arg.data() + arg.size())
      throw InvalidInput("malformed policy parameter in '" + std::string(text) + "'");
  }
  const bool has_arg = colon != std::string_view::npos;
  if (kind == "hard" && !has_arg) return LabelingPolicy::hard(num_classes);
  if (kind == "uniform" && has_arg) return LabelingPolicy::uniform(num_classes, value);
  if (kind == "adaptive" && has_arg) return LabelingPolicy::adaptive(num_classes, value);
  if (kind == "adaptive-raw" && has_arg) return LabelingPolicy::adaptive(num_classes, value, false);
  throw InvalidInput("unknown policy '" + std::string(text) +
                     "' (expected hard, uniform:<alpha>, adaptive:<beta> or adaptive-raw:<beta>)");
}

std::string policy_name(const LabelingPolicy& policy) {
  switch (policy.mode) {
    case LabelingPolicy::Mode::Hard:
      return "hard";
    case LabelingPolicy::Mode::UniformSmoothing:
      return "uniform:" + format_double(policy.alpha);
    case LabelingPolicy::Mode::Adaptive:
      return (policy.uniform_at_zero ? "adaptive:" : "adaptive-raw:") + format_double(policy.beta);
  }
  return "unknown";
}

}  // namespace als

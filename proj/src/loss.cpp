#include "als/loss.hpp"

#include <algorithm>
#include <cmath>

#include "als/error.hpp"

namespace als {

namespace {

void check_logits(std::span<const double> z) {
  if (z.empty()) throw InvalidInput("empty logit vector");
  for (double v : z)
    if (!std::isfinite(v)) throw InvalidInput("non-finite logit");
}

void check_pair(std::span<const double> z, const LabelVector& label) {
  check_logits(z);
  if (label.size() != z.size()) throw InvalidInput("label and logit dimensions differ");
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits) {
  check_logits(logits);
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - top);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  check_logits(logits);
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits) total += std::exp(v - top);
  const double log_norm = std::log(total);
  std::vector<double> out(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = (logits[k] - top) - log_norm;
  return out;
}

double cross_entropy(std::span<const double> logits, const LabelVector& label) {
  check_pair(logits, label);
  const std::vector<double> lp = log_softmax(logits);
  double loss = 0.0;
  for (std::size_t k = 0; k < lp.size(); ++k) {
    if (label[k] != 0.0) loss -= label[k] * lp[k];
  }
  return loss;
}

std::vector<double> grad_logits(std::span<const double> logits, const LabelVector& label) {
  check_pair(logits, label);
  std::vector<double> g = softmax(logits);
  for (std::size_t k = 0; k < g.size(); ++k) g[k] -= label[k];
  return g;
}

int argmax(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("argmax of empty vector");
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace als

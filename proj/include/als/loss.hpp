#pragma once

#include <span>
#include <vector>

#include "als/labeling.hpp"

namespace als {

// Softmax cross-entropy against an arbitrary target distribution. One-hot,
// uniformly smoothed and adaptive/blended targets all go through the same
// loss; only the label differs.

/// exp(z_k - max z) / sum_j exp(z_j - max z). Throws on non-finite logits.
std::vector<double> softmax(std::span<const double> logits);

/// Log-softmax via max shift and log-sum-exp.
std::vector<double> log_softmax(std::span<const double> logits);

/// -sum_k label_k * log softmax(z)_k.
double cross_entropy(std::span<const double> logits, const LabelVector& label);

/// d cross_entropy / d z = softmax(z) - label.
std::vector<double> grad_logits(std::span<const double> logits, const LabelVector& label);

/// Index of the largest entry; ties go to the lowest index.
int argmax(std::span<const double> values);

}  // namespace als

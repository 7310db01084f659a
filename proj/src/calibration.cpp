#include "als/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "als/error.hpp"
#include "als/loss.hpp"
#include "als/rng.hpp"

namespace als {

namespace {

void check_records(std::span<const PredictionRecord> records) {
  if (records.empty()) throw InvalidInput("calibration metrics need at least one record");
}

void check_bins(int num_bins) {
  if (num_bins < 1) throw InvalidInput("number of bins must be at least 1");
}

double bin_edge(int i, int num_bins) { return static_cast<double>(i) / num_bins; }

}  // namespace

PredictionRecord make_record(std::int64_t id, std::vector<double> probs, int true_class,
                             std::optional<double> objectness) {
  PredictionRecord r;
  r.id = id;
  r.predicted = argmax(probs);
  r.confidence = probs[static_cast<std::size_t>(r.predicted)];
  r.probs = std::move(probs);
  r.true_class = true_class;
  r.objectness = objectness;
  return r;
}

void ExactUnitSum::add(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("value outside [0, 1] in exact sum");
  total_ += static_cast<unsigned __int128>(std::ldexp(v, 64));
}

double ExactUnitSum::mean(std::int64_t n) const {
  if (n <= 0) return 0.0;
  // Correctly rounded total / (n 2^64): widen the integer quotient to at least
  // 55 bits, fold the remainder into a sticky bit, convert once.
  const auto d = static_cast<unsigned __int128>(n);
  const unsigned __int128 top = static_cast<unsigned __int128>(1) << 126;
  int shift = 0;
  unsigned __int128 scaled = total_;
  while ((scaled / d) < (static_cast<unsigned __int128>(1) << 54) && scaled != 0 && scaled < top) {
    scaled <<= 1;
    ++shift;
  }
  unsigned __int128 q = scaled / d;
  if (scaled % d != 0) q |= 1;
  return std::ldexp(static_cast<double>(q), -64 - shift);
}

int bin_index(double confidence, int num_bins) {
  check_bins(num_bins);
  if (!(confidence >= 0.0 && confidence <= 1.0)) throw InvalidInput("confidence outside [0, 1]");
  int i = static_cast<int>(std::ceil(confidence * num_bins)) - 1;
  i = std::clamp(i, 0, num_bins - 1);
  // Settle rounding in confidence * num_bins against the actual edges.
  while (i > 0 && confidence <= bin_edge(i, num_bins)) --i;
  while (i < num_bins - 1 && confidence > bin_edge(i + 1, num_bins)) ++i;
  return i;
}

std::vector<ReliabilityBin> reliability_bins(std::span<const PredictionRecord> records, int num_bins) {
  check_records(records);
  check_bins(num_bins);
  std::vector<ExactUnitSum> conf(static_cast<std::size_t>(num_bins));
  std::vector<std::int64_t> hits(static_cast<std::size_t>(num_bins), 0);
  std::vector<ReliabilityBin> bins(static_cast<std::size_t>(num_bins));
  for (int i = 0; i < num_bins; ++i) {
    bins[static_cast<std::size_t>(i)].lower = bin_edge(i, num_bins);
    bins[static_cast<std::size_t>(i)].upper = bin_edge(i + 1, num_bins);
  }
  for (const auto& r : records) {
    const auto b = static_cast<std::size_t>(bin_index(r.confidence, num_bins));
    ++bins[b].count;
    conf[b].add(r.confidence);
    if (r.correct()) ++hits[b];
  }
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins[b].count == 0) continue;
    bins[b].mean_confidence = conf[b].mean(bins[b].count);
    bins[b].empirical_accuracy = static_cast<double>(hits[b]) / static_cast<double>(bins[b].count);
  }
  return bins;
}

double ece_from_bins(std::span<const ReliabilityBin> bins) {
  std::int64_t n = 0;
  for (const auto& b : bins) n += b.count;
  if (n == 0) throw InvalidInput("reliability bins are empty");
  double total = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    total += (static_cast<double>(b.count) / static_cast<double>(n)) *
             std::abs(b.empirical_accuracy - b.mean_confidence);
  }
  return total;
}

double ece(std::span<const PredictionRecord> records, int num_bins) {
  return ece_from_bins(reliability_bins(records, num_bins));
}

double mce(std::span<const PredictionRecord> records, int num_bins) {
  double worst = 0.0;
  for (const auto& b : reliability_bins(records, num_bins)) {
    if (b.count > 0) worst = std::max(worst, std::abs(b.empirical_accuracy - b.mean_confidence));
  }
  return worst;
}

double accuracy(std::span<const PredictionRecord> records) {
  check_records(records);
  std::int64_t hits = 0;
  for (const auto& r : records) hits += r.correct() ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double average_confidence(std::span<const PredictionRecord> records) {
  check_records(records);
  ExactUnitSum s;
  for (const auto& r : records) s.add(r.confidence);
  return s.mean(static_cast<std::int64_t>(records.size()));
}

ConditionalMean overconfidence(std::span<const PredictionRecord> records) {
  ExactUnitSum s;
  std::int64_t n = 0;
  for (const auto& r : records) {
    if (r.correct()) continue;
    s.add(r.confidence);
    ++n;
  }
  return {s.mean(n), n > 0};
}

ConditionalMean underconfidence(std::span<const PredictionRecord> records) {
  ExactUnitSum s;
  std::int64_t n = 0;
  for (const auto& r : records) {
    if (!r.correct()) continue;
    s.add(1.0 - r.confidence);
    ++n;
  }
  return {s.mean(n), n > 0};
}

double mean_deviation(std::span<const PredictionRecord> records) {
  check_records(records);
  ExactUnitSum s;
  for (const auto& r : records) {
    if (!r.objectness) throw InvalidInput("record " + std::to_string(r.id) + " has no objectness");
    s.add(std::abs(r.confidence - *r.objectness));
  }
  return s.mean(static_cast<std::int64_t>(records.size()));
}

double CalibrationReport::ece_at(int num_bins) const {
  for (const auto& e : ece)
    if (e.num_bins == num_bins) return e.value;
  throw InvalidInput("ECE with " + std::to_string(num_bins) + " bins was not computed");
}

namespace {

double bootstrap_std(std::span<const PredictionRecord> records, int num_bins, int resamples,
                     std::uint64_t seed) {
  Rng rng(derive_seed({seed, salt::kBootstrap, static_cast<std::uint64_t>(num_bins)}));
  std::vector<PredictionRecord> draw(records.size());
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    for (auto& d : draw) d = records[rng.below(records.size())];
    values.push_back(ece(draw, num_bins));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
}

}  // namespace

CalibrationReport report(std::span<const PredictionRecord> records, const ReportOptions& options) {
  check_records(records);
  if (options.num_bins.empty()) throw InvalidInput("report needs at least one bin count");
  CalibrationReport rep;
  rep.n = static_cast<std::int64_t>(records.size());
  rep.accuracy = accuracy(records);
  for (int nb : options.num_bins) {
    EceEntry e{nb, ece(records, nb), std::nullopt};
    if (options.bootstrap_resamples > 0)
      e.bootstrap_std = bootstrap_std(records, nb, options.bootstrap_resamples, options.bootstrap_seed);
    rep.ece.push_back(e);
  }
  rep.bins = reliability_bins(records, options.num_bins.front());
  rep.mce = mce(records, options.num_bins.front());
  rep.overconfidence = overconfidence(records);
  rep.underconfidence = underconfidence(records);
  rep.avg_confidence = average_confidence(records);
  const bool all_have_objectness = std::all_of(records.begin(), records.end(),
                                               [](const auto& r) { return r.objectness.has_value(); });
  if (all_have_objectness) rep.mean_deviation = mean_deviation(records);
  return rep;
}

}  // namespace als

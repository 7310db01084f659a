#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace als {

struct PredictionRecord {
  std::int64_t id = 0;
  std::vector<double> probs;
  int predicted = 0;
  double confidence = 0.0;
  int true_class = 0;
  std::optional<double> objectness;

  bool correct() const { return predicted == true_class; }
};

/// Fills predicted (argmax, lowest id on ties) and confidence (max prob).
PredictionRecord make_record(std::int64_t id, std::vector<double> probs, int true_class,
                             std::optional<double> objectness = std::nullopt);

/// Exact, order-independent sum of values in [0, 1]. Each value is truncated
/// to a multiple of 2^-64 and accumulated in 128-bit integer arithmetic, so
/// partial sums from any partition of the records merge to the same bits.
class ExactUnitSum {
 public:
  void add(double v);
  void merge(const ExactUnitSum& other) { total_ += other.total_; }
  double mean(std::int64_t n) const;

 private:
  unsigned __int128 total_ = 0;
};

/// Equal-width confidence bin, interval (lower, upper]; confidence 0 goes to
/// the first bin.
struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t count = 0;
  double mean_confidence = 0.0;
  double empirical_accuracy = 0.0;
};

int bin_index(double confidence, int num_bins);
std::vector<ReliabilityBin> reliability_bins(std::span<const PredictionRecord> records, int num_bins);

/// Histogram-weighted gap sum_b (count_b / N) |acc_b - conf_b|.
double ece_from_bins(std::span<const ReliabilityBin> bins);

double ece(std::span<const PredictionRecord> records, int num_bins);
double mce(std::span<const PredictionRecord> records, int num_bins);

/// Mean over a subset that may be empty. An empty subset reports 0 with
/// `defined == false`.
struct ConditionalMean {
  double value = 0.0;
  bool defined = false;
};

double accuracy(std::span<const PredictionRecord> records);
double average_confidence(std::span<const PredictionRecord> records);
ConditionalMean overconfidence(std::span<const PredictionRecord> records);
ConditionalMean underconfidence(std::span<const PredictionRecord> records);

/// Mean |confidence - objectness|. Every record must carry objectness.
double mean_deviation(std::span<const PredictionRecord> records);

struct EceEntry {
  int num_bins = 0;
  double value = 0.0;
  std::optional<double> bootstrap_std;
};

struct CalibrationReport {
  std::int64_t n = 0;
  double accuracy = 0.0;
  std::vector<EceEntry> ece;  // one per requested bin count, in request order
  double mce = 0.0;           // at the first bin count
  ConditionalMean overconfidence;
  ConditionalMean underconfidence;
  double avg_confidence = 0.0;
  std::optional<double> mean_deviation;  // present when every record has objectness
  std::vector<ReliabilityBin> bins;      // at the first bin count

  /// ECE at `num_bins`; throws if that bin count was not computed.
  double ece_at(int num_bins) const;
};

struct ReportOptions {
  std::vector<int> num_bins = {100, 15};
  int bootstrap_resamples = 0;  // 0 disables the ECE standard deviation
  std::uint64_t bootstrap_seed = 0;
};

CalibrationReport report(std::span<const PredictionRecord> records, const ReportOptions& options = {});

}  // namespace als

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "als/config.hpp"
#include "als/dataset_io.hpp"
#include "als/reports.hpp"

namespace als {

// A run directory holds one trained policy:
//   checkpoint.alsm   model + momentum
//   epochs.csv        epoch,lr,train_loss,val_acc
//   summary.json      policy, context fraction, data-stream hash, step counts
// and, after evaluation, predictions_<set>.csv, report_<set>.csv, bins_<set>.csv.

struct ExperimentData {
  ExperimentConfig config;
  Dataset train;
  EvalSets eval;
};

ExperimentData generate_data(const ExperimentConfig& cfg);
ExperimentData load_data(const std::filesystem::path& dataset_dir);

struct TrainOptions {
  std::optional<double> context_fraction;
  int workers = 1;
};

struct RunSummary {
  std::string policy;
  double context_fraction = 0.0;
  std::uint64_t first_batch_hash = 0;
  std::int64_t steps = 0;
  std::int64_t context_items = 0;
  int epochs = 0;
};

RunSummary train_run(const ExperimentData& data, const LabelingPolicy& policy, const TrainOptions& options,
                     const std::filesystem::path& run_dir);
RunSummary read_summary(const std::filesystem::path& run_dir);

/// Writes predictions/report/bins CSVs for one evaluation set; returns the
/// report.
CalibrationReport write_evaluation(const std::filesystem::path& dir, const std::string& set_name,
                                   const std::vector<PredictionRecord>& records, const ReportOptions& options);

/// Evaluates the checkpoint in `run_dir` on both eval sets and writes their
/// CSVs next to it. A missing checkpoint raises an IoError naming `policy`.
ComparisonRow evaluate_run(const ExperimentData& data, const std::string& policy,
                           const std::filesystem::path& run_dir);

/// Loads every policy's run under `runs_dir`, evaluates it and writes
/// comparison.csv there.
std::vector<ComparisonRow> context_comparison(const ExperimentData& data, const std::vector<std::string>& policies,
                                              const std::filesystem::path& runs_dir);

/// The whole pipeline: dataset to `out/dataset`, one run per policy under
/// `out/runs/<stem>`, then the comparison.
std::vector<ComparisonRow> run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out,
                                          int workers = 1);

}  // namespace als

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "als/calibration.hpp"
#include "als/trainer.hpp"

namespace als {

// Predictions: sample_id,true,predicted,confidence,objectness,p0..p{K-1}
// Objectness is left empty when unknown.
std::string predictions_csv(std::span<const PredictionRecord> records);
std::vector<PredictionRecord> parse_predictions_csv(const std::string& text);

// Report: metric,value rows. Conditional means come with a *_defined row
// (1/0); ECE rows are ece_<bins>, followed by ece_<bins>_std when bootstrapped.
std::string report_csv(const CalibrationReport& report);

// Bins: lower,upper,count,mean_conf,acc
std::string bins_csv(std::span<const ReliabilityBin> bins);
std::vector<ReliabilityBin> parse_bins_csv(const std::string& text);

// Epoch log: epoch,lr,train_loss,val_acc
std::string epochs_csv(std::span<const EpochLog> log);

struct ComparisonRow {
  std::string policy;
  double context_fraction = 0.0;
  CalibrationReport context;
  CalibrationReport object;
};

std::string comparison_csv(std::span<const ComparisonRow> rows);

}  // namespace als

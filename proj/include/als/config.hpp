#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "als/calibration.hpp"
#include "als/labeling.hpp"
#include "als/model.hpp"
#include "als/synthdata.hpp"
#include "als/trainer.hpp"

namespace als {

/// Everything one experiment needs, loadable from a single JSON file. Any
/// field left out keeps its default; unknown keys are rejected.
struct ExperimentConfig {
  SceneSpec scene;
  std::int64_t n_train = 5000;
  std::int64_t n_val = 1000;
  double eval_crop_fraction = 0.875;
  SamplerConfig sampler;
  // Whether Hard/UniformSmoothing runs also receive context-only draws.
  bool baselines_use_context = false;
  std::vector<int> channels = {8, 16};
  int kernel = 3;
  int hidden = 64;
  std::uint64_t net_seed = 0;
  TrainConfig train;
  std::vector<int> num_bins = {100, 15};
  int bootstrap = 0;
  std::vector<std::string> policies = {"hard", "uniform:0.1", "adaptive:1"};

  /// Throws ConfigError describing the first invalid field.
  void validate() const;

  NetConfig net() const;
  EvalCrop eval_crop() const;
  ReportOptions report_options() const;
  std::vector<LabelingPolicy> labeling_policies() const;

  /// Sets every seed (scene, sampler, net, train) to `seed`.
  void override_seed(std::uint64_t seed);
};

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Context fraction a policy trains with: the sampler's fraction for adaptive
/// policies (and for baselines when `baselines_use_context`), 0 otherwise. An
/// explicit override wins for every policy.
double effective_context_fraction(const ExperimentConfig& cfg, const LabelingPolicy& policy,
                                  std::optional<double> override_fraction = std::nullopt);

/// File-system friendly policy name, e.g. "uniform:0.1" -> "uniform_0.1".
std::string policy_stem(const LabelingPolicy& policy);

}  // namespace als

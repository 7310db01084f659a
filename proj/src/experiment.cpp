#include "als/experiment.hpp"

#include <cstdio>

#include "als/error.hpp"
#include "als/format.hpp"

namespace als {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

ExperimentData generate_data(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentData d;
  d.config = cfg;
  d.train = generate_dataset(cfg.scene, cfg.n_train);
  d.eval = build_eval_sets(cfg.scene, cfg.n_val, d.train.mean_pixel, cfg.eval_crop());
  return d;
}

ExperimentData load_data(const fs::path& dataset_dir) {
  DatasetOnDisk disk = load_dataset(dataset_dir);
  ExperimentData d;
  d.config = disk.config;
  d.train = std::move(disk.train);
  d.eval = make_eval_sets(std::move(disk.val), d.train.mean_pixel, d.config.eval_crop());
  return d;
}

RunSummary train_run(const ExperimentData& data, const LabelingPolicy& policy, const TrainOptions& options,
                     const fs::path& run_dir) {
  const ExperimentConfig& cfg = data.config;
  SamplerConfig sampler = cfg.sampler;
  sampler.context_fraction = effective_context_fraction(cfg, policy, options.context_fraction);

  TrainResult result = train(data.train, data.eval.object, policy, cfg.net(), cfg.train, sampler, options.workers);

  ensure_dir(run_dir);
  save_checkpoint(result.state, run_dir / "checkpoint.alsm");
  write_file_atomic(run_dir / "epochs.csv", epochs_csv(result.log));

  RunSummary s;
  s.policy = policy_name(policy);
  s.context_fraction = sampler.context_fraction;
  s.first_batch_hash = result.first_batch_hash;
  s.steps = result.steps;
  s.context_items = result.context_items;
  s.epochs = cfg.train.epochs;

  ordered_json j;
  j["policy"] = s.policy;
  j["context_fraction"] = s.context_fraction;
  j["first_batch_hash"] = hex64(s.first_batch_hash);
  j["steps"] = s.steps;
  j["context_items"] = s.context_items;
  j["epochs"] = s.epochs;
  j["config"] = to_json(cfg);
  write_file_atomic(run_dir / "summary.json", j.dump(2) + "\n");
  return s;
}

RunSummary read_summary(const fs::path& run_dir) {
  const fs::path path = run_dir / "summary.json";
  json j;
  try {
    j = json::parse(read_file(path));
    RunSummary s;
    s.policy = j.at("policy").get<std::string>();
    s.context_fraction = j.at("context_fraction").get<double>();
    s.first_batch_hash = std::stoull(j.at("first_batch_hash").get<std::string>(), nullptr, 16);
    s.steps = j.at("steps").get<std::int64_t>();
    s.context_items = j.at("context_items").get<std::int64_t>();
    s.epochs = j.at("epochs").get<int>();
    return s;
  } catch (const json::exception& e) {
    throw IoError("malformed run summary " + path.string() + ": " + e.what());
  } catch (const std::logic_error& e) {
    throw IoError("malformed run summary " + path.string() + ": " + e.what());
  }
}

CalibrationReport write_evaluation(const fs::path& dir, const std::string& set_name,
                                   const std::vector<PredictionRecord>& records, const ReportOptions& options) {
  ensure_dir(dir);
  const CalibrationReport r = report(records, options);
  write_file_atomic(dir / ("predictions_" + set_name + ".csv"), predictions_csv(records));
  write_file_atomic(dir / ("report_" + set_name + ".csv"), report_csv(r));
  write_file_atomic(dir / ("bins_" + set_name + ".csv"), bins_csv(r.bins));
  return r;
}

ComparisonRow evaluate_run(const ExperimentData& data, const std::string& policy, const fs::path& run_dir) {
  const fs::path ckpt = run_dir / "checkpoint.alsm";
  if (!fs::exists(ckpt))
    throw IoError("no checkpoint for policy '" + policy + "' (expected " + ckpt.string() +
                  "); train it first with: als train --policy " + policy + " --out " + run_dir.string());
  const ModelState state = load_checkpoint(ckpt);
  const ReportOptions options = data.config.report_options();

  ComparisonRow row;
  row.policy = policy;
  row.context_fraction = fs::exists(run_dir / "summary.json") ? read_summary(run_dir).context_fraction : 0.0;
  row.object = write_evaluation(run_dir, "object", evaluate(state, data.eval.object), options);
  row.context = write_evaluation(run_dir, "context", evaluate(state, data.eval.context), options);
  return row;
}

std::vector<ComparisonRow> context_comparison(const ExperimentData& data, const std::vector<std::string>& policies,
                                              const fs::path& runs_dir) {
  std::vector<ComparisonRow> rows;
  for (const auto& p : policies) {
    const LabelingPolicy policy = parse_policy(p, data.config.scene.num_classes);
    rows.push_back(evaluate_run(data, policy_name(policy), runs_dir / policy_stem(policy)));
  }
  ensure_dir(runs_dir);
  write_file_atomic(runs_dir / "comparison.csv", comparison_csv(rows));
  return rows;
}

std::vector<ComparisonRow> run_experiment(const ExperimentConfig& cfg, const fs::path& out, int workers) {
  cfg.validate();
  {
    const ExperimentData fresh = generate_data(cfg);
    write_dataset(out / "dataset", cfg, fresh.train, fresh.eval.samples);
  }
  // Train from what is on disk so the pipeline matches a staged CLI run.
  const ExperimentData data = load_data(out / "dataset");
  TrainOptions options;
  options.workers = workers;
  for (const auto& policy : cfg.labeling_policies())
    train_run(data, policy, options, out / "runs" / policy_stem(policy));
  return context_comparison(data, cfg.policies, out / "runs");
}

}  // namespace als

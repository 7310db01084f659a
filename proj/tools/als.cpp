// als: dataset generation, label inspection, training, evaluation and the
// context-dependence comparison, one subcommand per pipeline stage.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "als/dataset_io.hpp"
#include "als/error.hpp"
#include "als/experiment.hpp"
#include "als/format.hpp"

namespace fs = std::filesystem;
using namespace als;

namespace {

enum Exit { kOk = 0, kConfig = 2, kIo = 3, kNumeric = 4 };

int worker_count() {
  const char* env = std::getenv("ALS_THREADS");
  if (!env || !*env) return 1;
  long long n = 0;
  try {
    n = parse_int(env);
  } catch (const InvalidInput&) {
    throw ConfigError("ALS_THREADS must be a positive integer, got '" + std::string(env) + "'");
  }
  if (n < 1) throw ConfigError("ALS_THREADS must be a positive integer, got '" + std::string(env) + "'");
  return static_cast<int>(n);
}

ExperimentConfig base_config(const std::string& path) {
  ExperimentConfig cfg = path.empty() ? ExperimentConfig{} : load_config(path);
  cfg.validate();
  return cfg;
}

void set_training_seeds(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.sampler.seed = seed;
  cfg.net_seed = seed;
  cfg.train.seed = seed;
}

// Data for train/eval/context: from a dataset directory when given (scene
// settings then come from its manifest), otherwise generated from the config.
ExperimentData obtain_data(const std::string& config_path, const std::string& dataset_dir,
                           std::optional<std::uint64_t> seed) {
  if (dataset_dir.empty()) {
    ExperimentConfig cfg = base_config(config_path);
    if (seed) cfg.override_seed(*seed);
    return generate_data(cfg);
  }
  ExperimentData data = load_data(dataset_dir);
  if (!config_path.empty()) {
    ExperimentConfig cfg = base_config(config_path);
    cfg.scene = data.config.scene;
    cfg.n_train = data.config.n_train;
    cfg.n_val = data.config.n_val;
    cfg.validate();
    if (cfg.eval_crop_fraction != data.config.eval_crop_fraction || cfg.sampler.out_w != data.config.sampler.out_w ||
        cfg.sampler.out_h != data.config.sampler.out_h)
      data.eval = make_eval_sets(std::move(data.eval.samples), data.train.mean_pixel, cfg.eval_crop());
    data.config = cfg;
  }
  if (seed) set_training_seeds(data.config, *seed);
  return data;
}

std::string label_row(std::int64_t id, double obj, const LabelingPolicy& policy, const LabelVector& label, int y,
                      bool sparse) {
  double alpha = 0.0;
  if (policy.mode == LabelingPolicy::Mode::UniformSmoothing) alpha = policy.alpha;
  if (policy.mode == LabelingPolicy::Mode::Adaptive) alpha = adaptive_alpha(obj);
  std::string out = std::to_string(id) + ',' + format_double(obj) + ',' + format_double(alpha);
  if (sparse) {
    const double py = label.probs[static_cast<std::size_t>(y)];
    out += ",y:" + format_double(py) + ",rest:" + format_double((1.0 - py) / (policy.num_classes - 1));
  } else {
    for (double p : label.probs) out += ',' + format_double(p);
  }
  return out;
}

int cmd_label(const std::string& annotations, const std::string& transform_path, const std::string& policy_text,
              int classes, const std::string& objectness_mode, bool sparse, const std::string& out_path) {
  if (objectness_mode != "analytic" && objectness_mode != "pixel")
    throw ConfigError("--objectness must be 'analytic' or 'pixel'");
  const LabelingPolicy policy = parse_policy(policy_text, classes);
  std::optional<AugmentTransform> shared;
  if (!transform_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(transform_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("cannot parse transform " + transform_path + ": " + e.what());
    }
    shared = transform_from_json(j);
  }
  const fs::path base = fs::path(annotations).parent_path();
  std::string out = "sample_id,objectness,alpha";
  if (sparse) {
    out += ",y,rest";
  } else {
    for (int c = 0; c < classes; ++c) out += ",p" + std::to_string(c);
  }
  out += '\n';
  for (const auto& rec : read_annotations(annotations)) {
    if (rec.class_id < 0 || rec.class_id >= classes)
      throw InvalidInput("annotation " + std::to_string(rec.id) + " has class " + std::to_string(rec.class_id) +
                         " outside [0, " + std::to_string(classes) + ")");
    const AugmentTransform t = rec.transform ? *rec.transform : shared ? *shared : identity_transform(rec.frame);
    double obj = 0.0;
    if (objectness_mode == "analytic") {
      obj = transformed_objectness(rec.box, rec.frame, t);
    } else {
      const ObjectMask mask = rec.mask ? read_mask_pgm(base / *rec.mask) : mask_from_box(rec.box, rec.frame);
      obj = objectness_pixels(apply_transform(mask, t));
    }
    out += label_row(rec.id, obj, policy, policy.label(rec.class_id, obj), rec.class_id, sparse);
    out += '\n';
  }
  if (out_path.empty() || out_path == "-") {
    std::cout << out;
  } else {
    write_file_atomic(out_path, out);
  }
  return kOk;
}

void print_row(const ComparisonRow& r) {
  std::cout << r.policy << ": context acc " << format_double(r.context.accuracy) << " A.conf "
            << format_double(r.context.avg_confidence) << " U.conf " << format_double(r.context.underconfidence.value)
            << " | object acc " << format_double(r.object.accuracy) << " mean deviation "
            << format_double(r.object.mean_deviation.value_or(0.0)) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive label smoothing experiment pipeline"};
  app.require_subcommand(1);

  std::string config_path, dataset_dir, out, policy_text, checkpoint, predictions, runs_dir, set_name = "both";
  std::optional<std::uint64_t> seed;
  std::optional<double> context_fraction;
  std::optional<int> epochs, bootstrap;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic dataset");
  gen->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output dataset directory")->required();
  gen->add_option("--seed", seed, "Override every seed");

  std::string annotations, transform_path, objectness_mode = "analytic", label_policy = "adaptive:1";
  int classes = 10;
  bool sparse = false;
  auto* label = app.add_subcommand("label", "Print training labels for annotated samples");
  label->add_option("--annotations", annotations, "Annotation JSON-lines file")->required()->check(CLI::ExistingFile);
  label->add_option("--transform", transform_path, "JSON transform {crop, output_size, hflip} for every record")
      ->check(CLI::ExistingFile);
  label->add_option("--policy", label_policy, "hard | uniform:<alpha> | adaptive:<beta>");
  label->add_option("--classes", classes, "Number of classes");
  label->add_option("--objectness", objectness_mode, "analytic | pixel");
  label->add_flag("--sparse", sparse, "Write y:<p_y>,rest:<p_rest> instead of all K entries");
  label->add_option("--out", out, "Output CSV (default stdout)");

  auto* train_cmd = app.add_subcommand("train", "Train one policy");
  train_cmd->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  train_cmd->add_option("--dataset", dataset_dir, "Dataset directory from gen-data")->check(CLI::ExistingDirectory);
  train_cmd->add_option("--policy", policy_text, "hard | uniform:<alpha> | adaptive:<beta>")->required();
  train_cmd->add_option("--context-fraction", context_fraction, "Probability of a context-only draw");
  train_cmd->add_option("--seed", seed, "Override seeds");
  train_cmd->add_option("--epochs", epochs, "Override the epoch count");
  train_cmd->add_option("--out", out, "Run directory")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the validation sets");
  eval->add_option("--checkpoint", checkpoint, "checkpoint.alsm")->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", dataset_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  eval->add_option("--set", set_name, "object | context | both");
  eval->add_option("--bootstrap", bootstrap, "Bootstrap resamples for the ECE standard deviation");
  eval->add_option("--out", out, "Output directory (default: the checkpoint's directory)");

  std::vector<int> bins;
  std::uint64_t report_seed = 0;
  auto* report_cmd = app.add_subcommand("report", "Recompute a calibration report from a predictions CSV");
  report_cmd->add_option("--predictions", predictions, "Predictions CSV")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out", out, "Output directory (default: next to the predictions)");
  report_cmd->add_option("--bins", bins, "Bin counts; the first drives MCE and the bins CSV");
  report_cmd->add_option("--bootstrap", bootstrap, "Bootstrap resamples for the ECE standard deviation");
  report_cmd->add_option("--bootstrap-seed", report_seed, "Seed for the bootstrap");

  std::vector<std::string> policies;
  auto* context = app.add_subcommand("context", "Compare trained policies on the context-only and object sets");
  context->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  context->add_option("--dataset", dataset_dir, "Dataset directory")->check(CLI::ExistingDirectory);
  context->add_option("--runs", runs_dir, "Directory holding one run directory per policy")->required();
  context->add_option("--policy", policies, "Policies to compare (default: the config's list)");

  auto* run = app.add_subcommand("run", "Whole pipeline: data, every policy, comparison");
  run->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--seed", seed, "Override every seed");
  run->add_option("--epochs", epochs, "Override the epoch count");

  auto* show = app.add_subcommand("config", "Print the fully resolved config as JSON");
  show->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  show->add_option("--seed", seed, "Override every seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    const int workers = worker_count();

    if (*show) {
      ExperimentConfig cfg = base_config(config_path);
      if (seed) cfg.override_seed(*seed);
      std::cout << to_json(cfg).dump(2) << '\n';
      return kOk;
    }

    if (*gen) {
      ExperimentConfig cfg = base_config(config_path);
      if (seed) cfg.override_seed(*seed);
      const ExperimentData data = generate_data(cfg);
      write_dataset(out, cfg, data.train, data.eval.samples);
      std::cout << "wrote " << data.train.samples.size() << " train and " << data.eval.samples.size()
                << " validation samples to " << out << '\n';
      return kOk;
    }

    if (*label) return cmd_label(annotations, transform_path, label_policy, classes, objectness_mode, sparse, out);

    if (*train_cmd) {
      ExperimentData data = obtain_data(config_path, dataset_dir, seed);
      if (epochs) data.config.train.epochs = *epochs;
      data.config.validate();
      const LabelingPolicy policy = parse_policy(policy_text, data.config.scene.num_classes);
      TrainOptions options;
      options.context_fraction = context_fraction;
      options.workers = workers;
      const RunSummary s = train_run(data, policy, options, out);
      std::cout << s.policy << ": " << s.steps << " steps, " << s.context_items << " context draws, first batch "
                << std::hex << s.first_batch_hash << std::dec << '\n';
      return kOk;
    }

    if (*eval) {
      if (set_name != "object" && set_name != "context" && set_name != "both")
        throw ConfigError("--set must be object, context or both");
      ExperimentData data = obtain_data(config_path, dataset_dir, std::nullopt);
      if (bootstrap) data.config.bootstrap = *bootstrap;
      data.config.validate();
      const ModelState state = load_checkpoint(checkpoint);
      const fs::path dir = out.empty() ? fs::path(checkpoint).parent_path() : fs::path(out);
      const ReportOptions options = data.config.report_options();
      for (const std::string name : {"object", "context"}) {
        if (set_name != "both" && set_name != name) continue;
        const auto& items = name == "object" ? data.eval.object : data.eval.context;
        const CalibrationReport r = write_evaluation(dir, name, evaluate(state, items), options);
        std::cout << name << ": accuracy " << format_double(r.accuracy) << " avg confidence "
                  << format_double(r.avg_confidence) << '\n';
      }
      return kOk;
    }

    if (*report_cmd) {
      const fs::path pred(predictions);
      const auto records = parse_predictions_csv(read_file(pred));
      ReportOptions options;
      if (!bins.empty()) options.num_bins = bins;
      if (bootstrap) options.bootstrap_resamples = *bootstrap;
      options.bootstrap_seed = report_seed;
      std::string stem = pred.stem().string();
      const std::string prefix = "predictions_";
      if (stem.rfind(prefix, 0) == 0) stem = stem.substr(prefix.size());
      const fs::path dir = out.empty() ? pred.parent_path() : fs::path(out);
      fs::create_directories(dir);
      const CalibrationReport r = report(records, options);
      write_file_atomic(dir / ("report_" + stem + ".csv"), report_csv(r));
      write_file_atomic(dir / ("bins_" + stem + ".csv"), bins_csv(r.bins));
      std::cout << report_csv(r);
      return kOk;
    }

    if (*context) {
      const ExperimentData data = obtain_data(config_path, dataset_dir, std::nullopt);
      const auto rows = context_comparison(data, policies.empty() ? data.config.policies : policies, runs_dir);
      for (const auto& r : rows) print_row(r);
      return kOk;
    }

    if (*run) {
      ExperimentConfig cfg = base_config(config_path);
      if (seed) cfg.override_seed(*seed);
      if (epochs) cfg.train.epochs = *epochs;
      cfg.validate();
      for (const auto& r : run_experiment(cfg, out, workers)) print_row(r);
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "als: config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InvalidInput& e) {
    std::cerr << "als: invalid input: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "als: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "als: " << e.what() << '\n';
    return kIo;
  } catch (const NumericError& e) {
    std::cerr << "als: numeric failure: " << e.what() << '\n';
    return kNumeric;
  }
  return kOk;
}

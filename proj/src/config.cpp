#include "als/config.hpp"

#include <fstream>
#include <set>

#include "als/error.hpp"

namespace als {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
  }
}

void read_size(const json& obj, const char* key, const std::string& where, int& w, int& h) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_integer() || !(*it)[1].is_number_integer())
    throw ConfigError("config key '" + where + "." + key + "' must be [width, height]");
  w = (*it)[0].get<int>();
  h = (*it)[1].get<int>();
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    scene.validate();
    sampler.validate();
    net().validate();
    train.validate();
    if (n_train < 1) throw InvalidInput("data.n_train must be at least 1");
    if (n_val < 1) throw InvalidInput("data.n_val must be at least 1");
    if (!(eval_crop_fraction > 0.0 && eval_crop_fraction <= 1.0))
      throw InvalidInput("data.eval_crop_fraction must lie in (0, 1]");
    if (num_bins.empty()) throw InvalidInput("eval.num_bins must not be empty");
    for (int b : num_bins)
      if (b < 1) throw InvalidInput("eval.num_bins entries must be positive");
    if (bootstrap < 0) throw InvalidInput("eval.bootstrap must be non-negative");
    if (policies.empty()) throw InvalidInput("at least one policy is required");
    labeling_policies();
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

NetConfig ExperimentConfig::net() const {
  NetConfig n;
  n.in_w = sampler.out_w;
  n.in_h = sampler.out_h;
  n.channels = channels;
  n.kernel = kernel;
  n.hidden = hidden;
  n.num_classes = scene.num_classes;
  n.seed = net_seed;
  return n;
}

EvalCrop ExperimentConfig::eval_crop() const { return {eval_crop_fraction, sampler.out_w, sampler.out_h}; }

ReportOptions ExperimentConfig::report_options() const {
  return {num_bins, bootstrap, train.seed};
}

std::vector<LabelingPolicy> ExperimentConfig::labeling_policies() const {
  std::vector<LabelingPolicy> out;
  for (const auto& p : policies) out.push_back(parse_policy(p, scene.num_classes));
  return out;
}

void ExperimentConfig::override_seed(std::uint64_t seed) {
  scene.seed = seed;
  sampler.seed = seed;
  net_seed = seed;
  train.seed = seed;
}

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["scene"] = {{"num_classes", c.scene.num_classes},
                {"width", c.scene.width},
                {"height", c.scene.height},
                {"min_object_size", c.scene.min_object_size},
                {"max_object_size", c.scene.max_object_size},
                {"context_correlation", c.scene.context_correlation},
                {"seed", c.scene.seed}};
  j["data"] = {{"n_train", c.n_train}, {"n_val", c.n_val}, {"eval_crop_fraction", c.eval_crop_fraction}};
  j["sampler"] = {{"context_fraction", c.sampler.context_fraction},
                  {"baselines_use_context", c.baselines_use_context},
                  {"min_crop_area", c.sampler.min_crop_area},
                  {"max_crop_area", c.sampler.max_crop_area},
                  {"output_size", {c.sampler.out_w, c.sampler.out_h}},
                  {"seed", c.sampler.seed}};
  j["net"] = {{"channels", c.channels}, {"kernel", c.kernel}, {"hidden", c.hidden}, {"seed", c.net_seed}};
  j["train"] = {{"epochs", c.train.epochs},
                {"base_lr", c.train.base_lr},
                {"lr_decay", c.train.lr_decay},
                {"decay_fractions", c.train.decay_fractions},
                {"batch_size", c.train.batch_size},
                {"momentum", c.train.momentum},
                {"seed", c.train.seed}};
  j["eval"] = {{"num_bins", c.num_bins}, {"bootstrap", c.bootstrap}};
  j["policies"] = c.policies;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  reject_unknown(j, "<root>", {"scene", "data", "sampler", "net", "train", "eval", "policies"});
  if (const auto it = j.find("scene"); it != j.end()) {
    const json& s = *it;
    reject_unknown(s, "scene",
                   {"num_classes", "width", "height", "min_object_size", "max_object_size",
                    "context_correlation", "seed"});
    read(s, "num_classes", "scene", c.scene.num_classes);
    read(s, "width", "scene", c.scene.width);
    read(s, "height", "scene", c.scene.height);
    read(s, "min_object_size", "scene", c.scene.min_object_size);
    read(s, "max_object_size", "scene", c.scene.max_object_size);
    read(s, "context_correlation", "scene", c.scene.context_correlation);
    read(s, "seed", "scene", c.scene.seed);
  }
  if (const auto it = j.find("data"); it != j.end()) {
    reject_unknown(*it, "data", {"n_train", "n_val", "eval_crop_fraction"});
    read(*it, "n_train", "data", c.n_train);
    read(*it, "n_val", "data", c.n_val);
    read(*it, "eval_crop_fraction", "data", c.eval_crop_fraction);
  }
  if (const auto it = j.find("sampler"); it != j.end()) {
    const json& s = *it;
    reject_unknown(s, "sampler",
                   {"context_fraction", "baselines_use_context", "min_crop_area", "max_crop_area",
                    "output_size", "seed"});
    read(s, "context_fraction", "sampler", c.sampler.context_fraction);
    read(s, "baselines_use_context", "sampler", c.baselines_use_context);
    read(s, "min_crop_area", "sampler", c.sampler.min_crop_area);
    read(s, "max_crop_area", "sampler", c.sampler.max_crop_area);
    read_size(s, "output_size", "sampler", c.sampler.out_w, c.sampler.out_h);
    read(s, "seed", "sampler", c.sampler.seed);
  }
  if (const auto it = j.find("net"); it != j.end()) {
    reject_unknown(*it, "net", {"channels", "kernel", "hidden", "seed"});
    read(*it, "channels", "net", c.channels);
    read(*it, "kernel", "net", c.kernel);
    read(*it, "hidden", "net", c.hidden);
    read(*it, "seed", "net", c.net_seed);
  }
  if (const auto it = j.find("train"); it != j.end()) {
    const json& t = *it;
    reject_unknown(t, "train",
                   {"epochs", "base_lr", "lr_decay", "decay_fractions", "batch_size", "momentum", "seed"});
    read(t, "epochs", "train", c.train.epochs);
    read(t, "base_lr", "train", c.train.base_lr);
    read(t, "lr_decay", "train", c.train.lr_decay);
    read(t, "decay_fractions", "train", c.train.decay_fractions);
    read(t, "batch_size", "train", c.train.batch_size);
    read(t, "momentum", "train", c.train.momentum);
    read(t, "seed", "train", c.train.seed);
  }
  if (const auto it = j.find("eval"); it != j.end()) {
    reject_unknown(*it, "eval", {"num_bins", "bootstrap"});
    read(*it, "num_bins", "eval", c.num_bins);
    read(*it, "bootstrap", "eval", c.bootstrap);
  }
  read(j, "policies", "<root>", c.policies);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

double effective_context_fraction(const ExperimentConfig& cfg, const LabelingPolicy& policy,
                                  std::optional<double> override_fraction) {
  if (override_fraction) return *override_fraction;
  return (policy.is_adaptive() || cfg.baselines_use_context) ? cfg.sampler.context_fraction : 0.0;
}

std::string policy_stem(const LabelingPolicy& policy) {
  std::string s = policy_name(policy);
  for (char& ch : s)
    if (ch == ':') ch = '_';
  return s;
}

}  // namespace als

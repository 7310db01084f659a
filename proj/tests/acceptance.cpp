// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Usage: acceptance [work_dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "als/dataset_io.hpp"
#include "als/experiment.hpp"
#include "als/format.hpp"
#include "als/loss.hpp"
#include "als/model.hpp"
#include "als/rng.hpp"
#include "oracles.hpp"

using namespace als;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void need(Outcome& o, bool cond, const std::string& what) {
  if (!cond && o.pass) {
    o.pass = false;
    o.detail = what;
  }
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

Outcome label_algebra() {
  Outcome o;
  Rng rng(101);
  int cases = 0;
  for (; cases < 20000 && o.pass; ++cases) {
    const int K = 2 + static_cast<int>(rng.below(cases % 10 == 0 ? 999 : 30));
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    const double beta = cases % 9 == 0 ? 1.0 : rng.uniform();
    const double obj = cases % 11 == 0 ? 0.0 : (cases % 13 == 0 ? 1.0 : rng.uniform());
    const LabelVector v = adaptive_label(y, K, obj, beta);
    double sum = 0.0;
    for (double p : v.probs) {
      sum += p;
      need(o, p >= 0.0 && p <= 1.0, "entry outside [0,1]");
    }
    need(o, std::abs(sum - 1.0) <= 1e-12, "simplex closure");
    need(o, adaptive_label(y, K, obj, 0.0) == hard_label(y, K), "beta=0 is not one-hot");
    const double a = 1.0 - rng.uniform();
    const LabelVector u = adaptive_label(y, K, 1.0 - a, 1.0, false), ref = uniform_smooth_label(y, K, a);
    for (int k = 0; k < K; ++k)
      need(o, std::abs(u[static_cast<std::size_t>(k)] - ref[static_cast<std::size_t>(k)]) <= 1e-12, "beta=1 vs uniform smoothing");
    need(o, v[static_cast<std::size_t>(y)] >= 1.0 - beta - 1e-12, "floor 1-beta");
    const double obj2 = std::min(1.0, obj + rng.uniform() * (1.0 - obj));
    const bool raw = obj == 0.0;
    const LabelVector lo = adaptive_label(y, K, obj, beta, !raw), hi = adaptive_label(y, K, obj2, beta, !raw);
    need(o, hi[static_cast<std::size_t>(y)] >= lo[static_cast<std::size_t>(y)] - 1e-12, "monotone in objectness");
  }
  if (o.pass) o.detail = std::to_string(cases) + " random cases";
  return o;
}

Outcome objectness_oracle() {
  Outcome o;
  Rng rng(102);
  double worst = 0.0;
  for (int i = 0; i < 1000 && o.pass; ++i) {
    const ImageFrame f{8 + static_cast<int>(rng.below(57)), 8 + static_cast<int>(rng.below(57))};
    const BoundingBox box{static_cast<int>(rng.below(static_cast<std::uint64_t>(f.W))),
                          static_cast<int>(rng.below(static_cast<std::uint64_t>(f.H))),
                          1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(f.W))),
                          1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(f.H)))};
    const int cx = static_cast<int>(rng.below(static_cast<std::uint64_t>(f.W)));
    const int cy = static_cast<int>(rng.below(static_cast<std::uint64_t>(f.H)));
    const BoundingBox crop{cx, cy, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(f.W - cx))),
                           1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(f.H - cy)))};
    const ObjectMask mask = mask_from_box(box, f);
    const AugmentTransform aligned{crop, crop.w, crop.h, rng.bernoulli(0.5)};
    const double analytic = transformed_objectness(box, f, aligned);
    need(o, objectness_pixels(apply_transform(mask, aligned)) == analytic, "pixel count != analytic at grid scale");
    need(o, oracle::crop_coverage(box, crop, f.W, f.H) == analytic, "naive coverage != analytic");
    const int ow = 4 + static_cast<int>(rng.below(61)), oh = 4 + static_cast<int>(rng.below(61));
    const double resampled = objectness_pixels(apply_transform(mask, {crop, ow, oh, rng.bernoulli(0.5)}));
    const double err = std::abs(resampled - analytic) * std::min(ow, oh);
    worst = std::max(worst, err);
    need(o, err <= 2.0 + 1e-9, "resampling error above 2/min(output)");
  }
  if (o.pass) o.detail = "1000 exact pairs; worst resampled error " + fmt(worst, 3) + "/min(output dims)";
  return o;
}

Outcome gradient_oracle() {
  Outcome o;
  Rng rng(103);
  double worst = 0.0;
  int cases = 0;
  for (int K : {2, 5, 100})
    for (int i = 0; i < 67; ++i, ++cases) {
      std::vector<double> z(static_cast<std::size_t>(K)), p(static_cast<std::size_t>(K));
      double s = 0.0;
      for (auto& v : z) v = 2.0 * rng.normal();
      for (auto& v : p) s += (v = rng.uniform() + 1e-3);
      for (auto& v : p) v /= s;
      const LabelVector l{p};
      const auto fd = oracle::central_diff([&](const std::vector<double>& x) { return cross_entropy(x, l); }, z, 1e-5);
      const double e = oracle::rel_err(grad_logits(z, l), fd);
      worst = std::max(worst, e);
      need(o, e < 1e-6, "softmax cross-entropy gradient");
    }

  // whole network: single-precision backprop against a double-precision
  // central-difference oracle
  NetConfig c;
  c.in_w = c.in_h = 8;
  c.channels = {2, 3};
  c.hidden = 5;
  c.num_classes = 2;
  const ConvNet net(c);
  double worst_net = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng r(seed);
    std::vector<double> params(net.parameter_count()), input(net.input_size());
    for (auto& v : params) v = static_cast<float>(0.6 * r.normal());
    for (auto& v : input) v = static_cast<float>(r.uniform());
    const LabelVector label = adaptive_label(1, 2, 0.3, 1.0);
    auto loss = [&](const std::vector<double>& p) {
      ConvNet::Workspace<double> ws;
      net.forward<double>(p, input, ws);
      return cross_entropy(ws.logits, label);
    };
    std::vector<float> pf(params.begin(), params.end()), xf(input.begin(), input.end());
    ConvNet::Workspace<float> ws;
    net.forward<float>(pf, xf, ws);
    const auto dz = grad_logits(std::vector<double>(ws.logits.begin(), ws.logits.end()), label);
    std::vector<float> dzf(dz.begin(), dz.end()), g(params.size(), 0.0f);
    net.backward<float>(pf, dzf, ws, g);
    const double e = oracle::rel_err(std::vector<double>(g.begin(), g.end()), oracle::central_diff(loss, params, 1e-6));
    worst_net = std::max(worst_net, e);
    need(o, e < 1e-4, "network gradient (single precision)");
  }
  if (o.pass)
    o.detail = std::to_string(cases) + " loss cases, worst rel err " + fmt(worst, 2) + "; network worst " + fmt(worst_net, 2);
  return o;
}

Outcome calibration_oracle() {
  Outcome o;
  Rng rng(104);
  auto record = [](double conf, bool correct) {
    PredictionRecord r;
    r.probs = {conf, 1.0 - conf};
    r.confidence = conf;
    r.predicted = 0;
    r.true_class = correct ? 0 : 1;
    return r;
  };
  int sets = 0;
  for (; sets < 300 && o.pass; ++sets) {
    std::vector<PredictionRecord> recs;
    const std::size_t n = 1 + rng.below(500);
    for (std::size_t i = 0; i < n; ++i) {
      // 2^-20 grid: the naive oracle's sums are then exact
      const double c = static_cast<double>(rng.below((1u << 20) + 1)) / (1u << 20);
      recs.push_back(record(c, rng.bernoulli(c)));
    }
    for (int B : {10, 15, 100}) {
      const double e = ece(recs, B), m = mce(recs, B);
      need(o, e == oracle::naive_ece(recs, B), "ECE differs from naive recomputation");
      need(o, m == oracle::naive_mce(recs, B), "MCE differs from naive recomputation");
      need(o, m >= e, "MCE < ECE");
      need(o, std::abs(ece_from_bins(reliability_bins(recs, B)) - e) <= 1e-12, "reliability-bin identity");
    }
  }
  const std::vector<PredictionRecord> four{record(0.6, true), record(0.6, false), record(0.9, true), record(0.9, true)};
  need(o, std::abs(ece(four, 10) - 0.1) <= 1e-12, "4-record ECE != 0.1");
  need(o, std::abs(mce(four, 10) - 0.1) <= 1e-12, "4-record MCE != 0.1");
  if (o.pass) o.detail = std::to_string(sets) + " random record sets; 4-record example ECE " + fmt(ece(four, 10), 6) + " MCE " + fmt(mce(four, 10), 6);
  return o;
}

std::map<std::string, std::string> csv_files(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".csv") out[fs::relative(e.path(), root).string()] = read_file(e.path());
  return out;
}

const ComparisonRow* find(const std::vector<ComparisonRow>& rows, const std::string& policy) {
  for (const auto& r : rows)
    if (r.policy == policy) return &r;
  return nullptr;
}

void print(const char* status, int n, const std::string& name, const std::string& detail) {
  std::printf("%s criterion %d: %s -- %s\n", status, n, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "als_acceptance";
  int workers = 1;
  if (const char* env = std::getenv("ALS_THREADS"); env && *env) workers = std::max(1, std::atoi(env));

  int failures = 0;
  auto timed = [&](int n, const std::string& name, const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    print(o.pass ? "PASS" : "FAIL", n, name, o.detail + " [" + fmt(secs, 3) + " s]");
    if (!o.pass) ++failures;
    return secs;
  };

  timed(1, "label algebra", label_algebra);
  timed(2, "objectness oracle", objectness_oracle);
  timed(3, "gradient oracle", gradient_oracle);
  timed(4, "calibration oracle", calibration_oracle);

  // Criteria 5-7 share one default-configuration run; criterion 8 repeats it.
  std::vector<ComparisonRow> rows;
  std::string run_error;
  const ExperimentConfig cfg;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    fs::remove_all(work / "first");
    rows = run_experiment(cfg, work / "first", workers);
  } catch (const std::exception& e) {
    run_error = e.what();
  }
  const double run_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const ComparisonRow* hard = find(rows, "hard");
  const ComparisonRow* ada = find(rows, "adaptive:1");
  const ComparisonRow* uni = find(rows, "uniform:0.1");
  const bool have = run_error.empty() && hard && ada && uni;
  auto report_row = [&](int n, const std::string& name, bool ok, const std::string& detail) {
    if (!have) {
      print("FAIL", n, name, run_error.empty() ? "missing policy rows" : "pipeline failed: " + run_error);
      ++failures;
      return;
    }
    print(ok ? "PASS" : "FAIL", n, name, detail);
    if (!ok) ++failures;
  };

  if (have) {
    for (const auto* r : {hard, uni, ada})
      std::printf("  %-12s context: acc %.4f O.conf %.4f U.conf %.4f A.conf %.4f | object: acc %.4f A.conf %.4f mean dev %.4f ECE100 %.4f\n",
                  r->policy.c_str(), r->context.accuracy, r->context.overconfidence.value, r->context.underconfidence.value,
                  r->context.avg_confidence, r->object.accuracy, r->object.avg_confidence,
                  r->object.mean_deviation.value_or(0.0), r->object.ece_at(100));
  }
  {
    const bool ok = have && ada->context.avg_confidence <= hard->context.avg_confidence / 3.0 &&
                    ada->context.underconfidence.value > hard->context.underconfidence.value;
    report_row(5, "context dependence", ok,
               have ? "A.conf adaptive " + fmt(ada->context.avg_confidence) + " vs hard " + fmt(hard->context.avg_confidence) +
                          " (" + fmt(hard->context.avg_confidence / ada->context.avg_confidence, 3) + "x, need >= 3x); U.conf " +
                          fmt(ada->context.underconfidence.value) + " vs " + fmt(hard->context.underconfidence.value) +
                          " [" + fmt(run_secs, 4) + " s for 3 policies]"
                    : "");
  }
  {
    const double gap = have ? hard->object.accuracy - ada->object.accuracy : 0.0;
    report_row(6, "accuracy non-collapse", have && gap <= 0.10,
               have ? "object accuracy adaptive " + fmt(ada->object.accuracy) + " vs hard " + fmt(hard->object.accuracy) +
                          " (gap " + fmt(100 * gap, 3) + " pp, limit 10)"
                    : "");
  }
  {
    const double a = have ? ada->object.mean_deviation.value_or(1.0) : 0.0;
    const double h = have ? hard->object.mean_deviation.value_or(0.0) : 0.0;
    report_row(7, "mean-deviation ordering", have && a < h,
               have ? "mean |conf - objectness| adaptive " + fmt(a) + " vs hard " + fmt(h) : "");
  }
  {
    Outcome o;
    if (!have) {
      o = {false, "first run unavailable"};
    } else {
      try {
        fs::remove_all(work / "second");
        run_experiment(cfg, work / "second", workers);
        const auto a = csv_files(work / "first"), b = csv_files(work / "second");
        need(o, a.size() == b.size() && !a.empty(), "different CSV sets");
        for (const auto& [name, body] : a) {
          const auto it = b.find(name);
          need(o, it != b.end() && it->second == body, name + " differs");
        }
        if (o.pass) o.detail = std::to_string(a.size()) + " CSV files byte-identical across reruns";
      } catch (const std::exception& e) {
        o = {false, std::string("rerun failed: ") + e.what()};
      }
    }
    print(o.pass ? "PASS" : "FAIL", 8, "determinism", o.detail);
    if (!o.pass) ++failures;
  }

  std::printf("%s: %d of 8 criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}

#include "als/reports.hpp"

#include <sstream>

#include "als/error.hpp"
#include "als/format.hpp"

namespace als {

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

void row(std::string& out, const std::string& name, double v) {
  out += name;
  out += ',';
  out += format_double(v);
  out += '\n';
}

void conditional(std::string& out, const std::string& name, const ConditionalMean& m) {
  row(out, name, m.value);
  out += name + "_defined," + (m.defined ? "1" : "0") + "\n";
}

}  // namespace

std::string predictions_csv(std::span<const PredictionRecord> records) {
  std::size_t k = records.empty() ? 0 : records.front().probs.size();
  std::string out = "sample_id,true,predicted,confidence,objectness";
  for (std::size_t c = 0; c < k; ++c) out += ",p" + std::to_string(c);
  out += '\n';
  for (const auto& r : records) {
    if (r.probs.size() != k) throw InvalidInput("prediction records disagree on the number of classes");
    out += std::to_string(r.id) + ',' + std::to_string(r.true_class) + ',' + std::to_string(r.predicted) + ',' +
           format_double(r.confidence) + ',';
    if (r.objectness) out += format_double(*r.objectness);
    for (double p : r.probs) out += ',' + format_double(p);
    out += '\n';
  }
  return out;
}

std::vector<PredictionRecord> parse_predictions_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw InvalidInput("predictions CSV is empty");
  const auto header = split_csv(lines[0]);
  const char* fixed[] = {"sample_id", "true", "predicted", "confidence", "objectness"};
  if (header.size() < 7) throw InvalidInput("predictions CSV needs at least two probability columns");
  for (std::size_t i = 0; i < 5; ++i)
    if (header[i] != fixed[i]) throw InvalidInput("unexpected predictions CSV header column '" + std::string(header[i]) + "'");
  const std::size_t k = header.size() - 5;
  std::vector<PredictionRecord> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto f = split_csv(lines[li]);
    if (f.size() != header.size())
      throw InvalidInput("predictions CSV line " + std::to_string(li + 1) + " has " + std::to_string(f.size()) +
                         " fields, expected " + std::to_string(header.size()));
    std::vector<double> probs(k);
    for (std::size_t c = 0; c < k; ++c) probs[c] = parse_double(f[5 + c]);
    std::optional<double> obj;
    if (!f[4].empty()) obj = parse_double(f[4]);
    const long long true_class = parse_int(f[1]);
    if (true_class < 0 || true_class >= static_cast<long long>(k))
      throw InvalidInput("predictions CSV line " + std::to_string(li + 1) + ": class out of range");
    // predicted/confidence are recomputed from the probabilities so the
    // report never trusts a stale column.
    out.push_back(make_record(parse_int(f[0]), std::move(probs), static_cast<int>(true_class), obj));
  }
  return out;
}

std::string report_csv(const CalibrationReport& r) {
  std::string out = "metric,value\n";
  out += "n," + std::to_string(r.n) + "\n";
  row(out, "accuracy", r.accuracy);
  for (const auto& e : r.ece) {
    row(out, "ece_" + std::to_string(e.num_bins), e.value);
    if (e.bootstrap_std) row(out, "ece_" + std::to_string(e.num_bins) + "_std", *e.bootstrap_std);
  }
  row(out, "mce", r.mce);
  conditional(out, "overconfidence", r.overconfidence);
  conditional(out, "underconfidence", r.underconfidence);
  row(out, "avg_confidence", r.avg_confidence);
  conditional(out, "mean_deviation", {r.mean_deviation.value_or(0.0), r.mean_deviation.has_value()});
  return out;
}

std::string bins_csv(std::span<const ReliabilityBin> bins) {
  std::string out = "lower,upper,count,mean_conf,acc\n";
  for (const auto& b : bins)
    out += format_double(b.lower) + ',' + format_double(b.upper) + ',' + std::to_string(b.count) + ',' +
           format_double(b.mean_confidence) + ',' + format_double(b.empirical_accuracy) + '\n';
  return out;
}

std::vector<ReliabilityBin> parse_bins_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != "lower,upper,count,mean_conf,acc") throw InvalidInput("not a bins CSV");
  std::vector<ReliabilityBin> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto f = split_csv(lines[li]);
    if (f.size() != 5) throw InvalidInput("bins CSV line " + std::to_string(li + 1) + " must have 5 fields");
    out.push_back({parse_double(f[0]), parse_double(f[1]), parse_int(f[2]), parse_double(f[3]), parse_double(f[4])});
  }
  return out;
}

std::string epochs_csv(std::span<const EpochLog> log) {
  std::string out = "epoch,lr,train_loss,val_acc\n";
  for (const auto& e : log)
    out += std::to_string(e.epoch) + ',' + format_double(e.lr) + ',' + format_double(e.train_loss) + ',' +
           format_double(e.val_acc) + '\n';
  return out;
}

std::string comparison_csv(std::span<const ComparisonRow> rows) {
  std::string out =
      "policy,context_fraction,"
      "context_acc,context_oconf,context_uconf,context_aconf,"
      "object_acc,object_oconf,object_uconf,object_aconf,"
      "object_mean_deviation,object_ece";
  const int ece_bins = rows.empty() || rows.front().object.ece.empty() ? 0 : rows.front().object.ece.front().num_bins;
  if (ece_bins > 0) out += "_" + std::to_string(ece_bins);
  out += '\n';
  auto metrics = [](const CalibrationReport& r) {
    return format_double(r.accuracy) + ',' + format_double(r.overconfidence.value) + ',' +
           format_double(r.underconfidence.value) + ',' + format_double(r.avg_confidence);
  };
  for (const auto& r : rows) {
    out += r.policy + ',' + format_double(r.context_fraction) + ',' + metrics(r.context) + ',' + metrics(r.object) +
           ',' + format_double(r.object.mean_deviation.value_or(0.0)) + ',' +
           format_double(r.object.ece.empty() ? 0.0 : r.object.ece.front().value) + '\n';
  }
  return out;
}

}  // namespace als

#include "brainform/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace brainform {

std::optional<double> task_accuracy(const RunTally& tally) {
  const std::size_t total = tally.correct + tally.incorrect;
  if (total == 0) return std::nullopt;
  return static_cast<double>(tally.correct) / static_cast<double>(total);
}

double task_time(const RunTally& tally) {
  const double dt = tally.t_end - tally.t_start;
  if (dt < 0.0) throw InputError("run ends before it starts");
  return dt;
}

double itr_bits_per_selection(std::size_t n_classes, double accuracy) {
  if (n_classes < 2) throw InputError("ITR needs at least two classes");
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw InputError("accuracy must lie in [0, 1]");
  const double n = static_cast<double>(n_classes);
  const double p = accuracy;
  if (p <= 1.0 / n) return 0.0;
  double bits = std::log2(n);
  if (p > 0.0) bits += p * std::log2(p);
  if (p < 1.0) bits += (1.0 - p) * std::log2((1.0 - p) / (n - 1.0));
  return std::max(bits, 0.0);
}

ItrRates itr(std::size_t n_classes, double accuracy, std::size_t n_trials, double task_time_s) {
  if (!(task_time_s > 0.0)) throw InputError("ITR rate needs a positive task time");
  ItrRates r;
  r.bits_per_selection = itr_bits_per_selection(n_classes, accuracy);
  r.bits_per_sec = static_cast<double>(n_trials) / task_time_s * r.bits_per_selection;
  r.bits_per_min = 60.0 * r.bits_per_sec;
  return r;
}

RunMetrics compute_metrics(const RunTally& tally) {
  RunMetrics m;
  m.accuracy = task_accuracy(tally);
  m.task_time_s = task_time(tally);
  m.n_trials = tally.correct + tally.incorrect;
  m.n_classes = tally.n_classes;
  if (m.accuracy && m.task_time_s > 0.0 && tally.n_classes >= 2) {
    m.itr = itr(tally.n_classes, *m.accuracy, m.n_trials, m.task_time_s);
  }
  return m;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Stat describe(std::span<const double> values) {
  Stat s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  s.median = median_of({values.begin(), values.end()});
  std::vector<double> dev;
  dev.reserve(s.n);
  for (double v : values) dev.push_back(std::abs(v - s.median));
  s.mad = median_of(std::move(dev));
  return s;
}

RunSummary summarize_runs(std::span<const RunMetrics> metrics, const std::string& tag) {
  if (metrics.empty()) throw InputError("cannot summarize an empty run list");
  std::vector<double> acc, time, rate;
  for (const auto& m : metrics) {
    if (m.accuracy) acc.push_back(*m.accuracy);
    time.push_back(m.task_time_s);
    if (m.itr) rate.push_back(m.itr->bits_per_min);
  }
  return RunSummary{tag, describe(acc), describe(time), describe(rate)};
}

void to_json(nlohmann::json& j, const Stat& s) {
  j = nlohmann::json{{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}, {"median", s.median}, {"mad", s.mad}};
}

void to_json(nlohmann::json& j, const RunSummary& s) {
  j = nlohmann::json{{"tag", s.tag},
                     {"accuracy", s.accuracy},
                     {"task_time_s", s.task_time},
                     {"itr_bits_per_min", s.itr_bits_per_min}};
}

std::string format_summary_table(std::span<const RunSummary> rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %4s | %7s %7s | %8s %8s | %8s %8s\n", "run", "n",
                "acc.MED", "acc.MAD", "time.MED", "time.MAD", "itr.M", "itr.SD");
  out << line;
  out << std::string(78, '-') << '\n';
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-8s %4zu | %7.3f %7.3f | %8.2f %8.3f | %8.2f %8.3f\n",
                  r.tag.c_str(), r.task_time.n, r.accuracy.median, r.accuracy.mad,
                  r.task_time.median, r.task_time.mad, r.itr_bits_per_min.mean,
                  r.itr_bits_per_min.sd);
    out << line;
  }
  return out.str();
}

ErpAverage average_erps(std::span<const Epoch> epochs) {
  ErpAverage avg;
  for (const Epoch& e : epochs) {
    if (e.label == Label::Unknown) continue;
    if (avg.length == 0) avg.length = e.length;
    if (e.length != avg.length) throw InputError("epochs differ in length");
    auto& acc = e.label == Label::Target ? avg.target_mean : avg.nontarget_mean;
    auto& count = e.label == Label::Target ? avg.n_target : avg.n_nontarget;
    if (acc.empty()) acc.assign(e.data.size(), 0.0);
    for (std::size_t i = 0; i < e.data.size(); ++i) acc[i] += e.data[i];
    ++count;
  }
  for (double& v : avg.target_mean) v /= static_cast<double>(avg.n_target);
  for (double& v : avg.nontarget_mean) v /= static_cast<double>(avg.n_nontarget);
  avg.partial = avg.n_target == 0 || avg.n_nontarget == 0;
  return avg;
}

}  // namespace brainform

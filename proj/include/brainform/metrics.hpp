#pragma once

#include "brainform/dsp.hpp"
#include "brainform/stimulus.hpp"

#include "json.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace brainform {

struct RunTally {
  std::size_t correct{0};    // C_class
  std::size_t incorrect{0};  // M_class
  double t_start{0.0};
  double t_end{0.0};
  std::size_t n_classes{0};
  bool timed{false};
  TextureSpec texture;
};

// C / (C + M); nullopt when no selection was made.
std::optional<double> task_accuracy(const RunTally& tally);

// T_end - T_start. Throws InputError when negative.
double task_time(const RunTally& tally);

// Wolpaw bits per selection, clamped to 0 for P <= 1/N. Throws InputError for
// N < 2 or P outside [0, 1].
double itr_bits_per_selection(std::size_t n_classes, double accuracy);

struct ItrRates {
  double bits_per_selection{0.0};
  double bits_per_sec{0.0};
  double bits_per_min{0.0};
};

// Throws InputError when task_time_s <= 0.
ItrRates itr(std::size_t n_classes, double accuracy, std::size_t n_trials, double task_time_s);

struct RunMetrics {
  std::optional<double> accuracy;
  double task_time_s{0.0};
  std::optional<ItrRates> itr;
  std::size_t n_trials{0};
  std::size_t n_classes{0};
};

// n_trials = C + M. Accuracy and ITR are absent when they are undefined.
RunMetrics compute_metrics(const RunTally& tally);

struct Stat {
  std::size_t n{0};
  double mean{0.0};
  double sd{0.0};
  double median{0.0};
  double mad{0.0};
};

// Sample SD (0 for a single value) and unscaled median absolute deviation.
Stat describe(std::span<const double> values);

struct RunSummary {
  std::string tag;
  Stat accuracy;
  Stat task_time;
  Stat itr_bits_per_min;
};

// Absent accuracies/ITRs are skipped. Throws InputError on an empty list.
RunSummary summarize_runs(std::span<const RunMetrics> metrics, const std::string& tag);

void to_json(nlohmann::json& j, const Stat& s);
void to_json(nlohmann::json& j, const RunSummary& s);

// Aligned text table, one row per summary.
std::string format_summary_table(std::span<const RunSummary> rows);

struct ErpAverage {
  std::size_t length{0};
  std::vector<double> target_mean;     // channel-major
  std::vector<double> nontarget_mean;  // channel-major
  std::size_t n_target{0};
  std::size_t n_nontarget{0};
  // True when one class had no epochs; its mean is left empty.
  bool partial{false};
};

ErpAverage average_erps(std::span<const Epoch> epochs);

}  // namespace brainform

#pragma once

#include "brainform/types.hpp"

#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace brainform {

struct GateConfig {
  std::size_t n_targets{10};
  // Number of most recent epochs per target kept in the evidence window.
  std::size_t window_cycles{3};
  double confidence_threshold{0.95};
  double dwell_seconds{0.5};
  // Lockout after an activation; one flash cycle by default.
  double refractory_seconds{1.0};

  static GateConfig for_targets(std::size_t n);
};

struct Activation {
  int target_id{0};
  double t{0.0};
  double confidence{0.0};
};

// Per-target evidence accumulation with a confidence/dwell activation rule.
//
// Each classified epoch contributes its log-odds to the flashed target's
// window; the target distribution is the softmax of the windowed sums. An
// activation fires when the same target holds at least the confidence
// threshold for an uninterrupted dwell period. Epochs whose onset precedes the
// last reset are stale and ignored.
class DecisionGate {
 public:
  explicit DecisionGate(const GateConfig& config);

  const GateConfig& config() const { return config_; }

  // Throws InputError when posterior is outside (0, 1) or the target is out
  // of range, OrderingError when onsets regress.
  void update_evidence(int target_id, double posterior, double t_onset);

  // Throws OrderingError when t_now regresses.
  std::optional<Activation> tick(double t_now);

  void reset();

  std::span<const double> distribution() const { return distribution_; }
  std::optional<int> focus_target() const { return focus_target_; }
  std::optional<double> focus_since() const { return focus_since_; }
  std::optional<double> refractory_until() const { return refractory_until_; }
  std::size_t window_size(int target_id) const;
  double score(int target_id) const;

 private:
  void recompute();

  GateConfig config_;
  std::vector<std::deque<double>> windows_;
  std::vector<double> distribution_;
  std::optional<int> focus_target_;
  std::optional<double> focus_since_;
  std::optional<double> refractory_until_;
  std::optional<double> last_tick_;
  std::optional<double> last_onset_;
  std::optional<double> stale_before_;
};

}  // namespace brainform

#include "brainform/gate.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <string>

namespace brainform {

GateConfig GateConfig::for_targets(std::size_t n) {
  GateConfig c;
  c.n_targets = n;
  c.refractory_seconds = static_cast<double>(n) * kFlashDuration;
  return c;
}

DecisionGate::DecisionGate(const GateConfig& config) : config_(config) {
  if (config_.n_targets < 2) throw ConfigError("decision gate needs at least two targets");
  if (config_.window_cycles == 0) throw ConfigError("evidence window must hold at least one cycle");
  if (!(config_.confidence_threshold > 0.0 && config_.confidence_threshold < 1.0)) {
    throw ConfigError("confidence threshold must lie in (0, 1)");
  }
  reset();
}

void DecisionGate::reset() {
  windows_.assign(config_.n_targets, {});
  distribution_.assign(config_.n_targets, 1.0 / static_cast<double>(config_.n_targets));
  focus_target_.reset();
  focus_since_.reset();
  refractory_until_.reset();
  last_tick_.reset();
  last_onset_.reset();
  stale_before_.reset();
}

void DecisionGate::update_evidence(int target_id, double posterior, double t_onset) {
  if (target_id < 0 || static_cast<std::size_t>(target_id) >= config_.n_targets) {
    throw InputError("target " + std::to_string(target_id) + " out of range");
  }
  if (!(posterior > 0.0 && posterior < 1.0)) {
    throw InputError("posterior " + std::to_string(posterior) + " outside (0, 1)");
  }
  if (last_onset_ && t_onset < *last_onset_ - kTimeEps) {
    throw OrderingError("evidence onsets must be fed in time order");
  }
  last_onset_ = t_onset;
  if (stale_before_ && t_onset < *stale_before_ - kTimeEps) return;

  auto& w = windows_[static_cast<std::size_t>(target_id)];
  w.push_back(std::log(posterior / (1.0 - posterior)));
  while (w.size() > config_.window_cycles) w.pop_front();
  recompute();
}

void DecisionGate::recompute() {
  std::vector<double> s(config_.n_targets);
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = score(static_cast<int>(j));
  const double hi = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    distribution_[j] = std::exp(s[j] - hi);
    z += distribution_[j];
  }
  for (double& p : distribution_) p /= z;
}

double DecisionGate::score(int target_id) const {
  const auto& w = windows_.at(static_cast<std::size_t>(target_id));
  return std::accumulate(w.begin(), w.end(), 0.0);
}

std::size_t DecisionGate::window_size(int target_id) const {
  return windows_.at(static_cast<std::size_t>(target_id)).size();
}

std::optional<Activation> DecisionGate::tick(double t_now) {
  if (last_tick_ && t_now < *last_tick_ - kTimeEps) {
    throw OrderingError("gate time regressed from " + std::to_string(*last_tick_) + " to " +
                        std::to_string(t_now));
  }
  last_tick_ = t_now;

  if (refractory_until_ && t_now < *refractory_until_ - kTimeEps) {
    focus_target_.reset();
    focus_since_.reset();
    return std::nullopt;
  }

  const auto best = std::max_element(distribution_.begin(), distribution_.end());
  const int j = static_cast<int>(best - distribution_.begin());
  const double confidence = *best;
  if (confidence < config_.confidence_threshold) {
    focus_target_.reset();
    focus_since_.reset();
    return std::nullopt;
  }
  if (focus_target_ != j) {
    focus_target_ = j;
    focus_since_ = t_now;
  }
  if (t_now - *focus_since_ < config_.dwell_seconds - kTimeEps) return std::nullopt;

  assert(confidence >= config_.confidence_threshold);
  const Activation act{j, t_now, confidence};
  windows_.assign(config_.n_targets, {});
  distribution_.assign(config_.n_targets, 1.0 / static_cast<double>(config_.n_targets));
  focus_target_.reset();
  focus_since_.reset();
  refractory_until_ = t_now + config_.refractory_seconds;
  stale_before_ = t_now;
  return act;
}

}  // namespace brainform

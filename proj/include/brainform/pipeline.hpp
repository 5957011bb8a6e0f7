#pragma once

#include "brainform/classifier.hpp"
#include "brainform/dsp.hpp"
#include "brainform/gate.hpp"
#include "brainform/subject.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

namespace brainform {

struct EngineConfig {
  FilterChainConfig filter;
  FeatureConfig features;
  double gamma{1.0};
  std::size_t cv_folds{5};
  std::size_t window_cycles{3};
  double confidence_threshold{0.95};
  double dwell_seconds{0.5};
  // Seconds of filtered signal kept for epoch extraction.
  double history_seconds{4.0};

  double fs() const { return filter.fs; }
  GateConfig gate_for(std::size_t n_targets) const;
};

// Raw values are stored at 1e-4 µV resolution. The live path quantizes
// before filtering so that decoding a recording reproduces it exactly.
double quantize_uv(double v);

// Encodes a flash as context_code * 100 + target_id + 1; 0 means no event.
int encode_trigger(const TriggerEvent& t);

// Tick k spans the samples with times in [k * 0.1 s, (k + 1) * 0.1 s).
std::int64_t tick_first_sample(std::int64_t tick, double fs);
double tick_time(std::int64_t tick);

// Trigger-locked epochs waiting for their 900 ms window to fill.
class EpochQueue {
 public:
  void add(const TriggerEvent& trigger) { pending_.push_back(trigger); }

  // Pops every epoch whose window is complete, in onset order.
  std::vector<Epoch> drain_ready(const FilteredHistory& history);

  std::size_t pending() const { return pending_.size(); }
  void clear() { pending_.clear(); }

 private:
  std::deque<TriggerEvent> pending_;
};

// Online classification: completed epochs are featurized and scored, their
// posteriors feed the decision gate, and the gate is ticked.
class OnlineDecoder {
 public:
  OnlineDecoder(const LdaModel& model, const GateConfig& gate);

  void add_trigger(const TriggerEvent& trigger) { queue_.add(trigger); }

  std::optional<Activation> tick(const FilteredHistory& history, double t_now);

  const DecisionGate& gate() const { return gate_; }
  std::size_t epochs_classified() const { return classified_; }

 private:
  const LdaModel* model_;
  DecisionGate gate_;
  EpochQueue queue_;
  std::size_t classified_{0};
};

// The simulated acquisition stream: a synthetic subject feeding the causal
// filter chain. One continuous stream per session; time advances in flash
// ticks. Every raw sample and its trigger code is handed to the optional sink.
class BciEngine {
 public:
  using Sink = std::function<void(const SampleFrame& raw, int trigger_code)>;

  BciEngine(const EngineConfig& config, const SubjectProfile& profile, Sink sink = {});

  const EngineConfig& config() const { return config_; }
  const FilteredHistory& history() const { return history_; }
  const SubjectProfile& profile() const { return subject_.profile(); }

  std::int64_t current_tick() const { return tick_; }
  double now() const { return tick_time(tick_); }
  std::int64_t samples_generated() const { return sample_; }

  // Presents the flash (if any) at the current tick, generates the tick's
  // samples, and moves to the next tick.
  void advance_tick(const std::optional<TriggerEvent>& flash, const AttentionState& attention);

 private:
  EngineConfig config_;
  SubjectSimulator subject_;
  FilterChain chain_;
  FilteredHistory history_;
  Sink sink_;
  std::int64_t tick_{0};
  std::int64_t sample_{0};
};

}  // namespace brainform

#include "brainform/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace brainform {

GateConfig EngineConfig::gate_for(std::size_t n_targets) const {
  GateConfig g = GateConfig::for_targets(n_targets);
  g.window_cycles = window_cycles;
  g.confidence_threshold = confidence_threshold;
  g.dwell_seconds = dwell_seconds;
  return g;
}

double quantize_uv(double v) { return std::round(v * 1e4) / 1e4; }

int encode_trigger(const TriggerEvent& t) {
  return static_cast<int>(t.context) * 100 + t.target_id + 1;
}

std::int64_t tick_first_sample(std::int64_t tick, double fs) {
  return static_cast<std::int64_t>(std::ceil(static_cast<double>(tick) * kFlashDuration * fs - 1e-6));
}

double tick_time(std::int64_t tick) { return static_cast<double>(tick) * kFlashDuration; }

std::vector<Epoch> EpochQueue::drain_ready(const FilteredHistory& history) {
  std::vector<Epoch> out;
  while (!pending_.empty()) {
    auto e = extract_epoch(history, pending_.front());
    if (!e) break;
    out.push_back(std::move(*e));
    pending_.pop_front();
  }
  return out;
}

OnlineDecoder::OnlineDecoder(const LdaModel& model, const GateConfig& gate)
    : model_(&model), gate_(gate) {}

std::optional<Activation> OnlineDecoder::tick(const FilteredHistory& history, double t_now) {
  for (const Epoch& e : queue_.drain_ready(history)) {
    const FeatureVector x = featurize(e, model_->features.bins_per_channel);
    double p = predict_posterior(*model_, x);
    // Saturated posteriors carry no finite log-odds; keep them strictly inside (0, 1).
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    gate_.update_evidence(e.target_id, p, e.onset);
    ++classified_;
  }
  return gate_.tick(t_now);
}

BciEngine::BciEngine(const EngineConfig& config, const SubjectProfile& profile, Sink sink)
    : config_(config),
      subject_(profile, config.fs()),
      chain_(config.filter),
      history_(config.fs(),
               static_cast<std::size_t>(std::ceil(config.history_seconds * config.fs()))),
      sink_(std::move(sink)) {}

void BciEngine::advance_tick(const std::optional<TriggerEvent>& flash,
                             const AttentionState& attention) {
  const double fs = config_.fs();
  const std::int64_t end = tick_first_sample(tick_ + 1, fs);
  if (flash) subject_.register_flash(*flash, attention);
  bool trigger_pending = flash.has_value();
  for (; sample_ < end; ++sample_) {
    SampleFrame raw = subject_.synth_frame(static_cast<double>(sample_) / fs);
    for (double& v : raw.channels) v = quantize_uv(v);
    if (sink_) sink_(raw, trigger_pending ? encode_trigger(*flash) : 0);
    trigger_pending = false;
    history_.push(chain_.process(raw));
  }
  ++tick_;
}

}  // namespace brainform

#include "brainform/subject.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace brainform {

namespace {

constexpr double kPinkLowHz = 0.01;
constexpr double kLineHz = 50.0;
// Responses are dropped once the slower component has fully decayed.
constexpr double kResponseHorizon = kEpochSeconds;

double gaussian_bump(double x, double sd) {
  if (sd <= 0.0) return x == 0.0 ? 1.0 : 0.0;
  return std::exp(-0.5 * (x / sd) * (x / sd));
}

}  // namespace

void SubjectProfile::validate() const {
  for (double v : {erp_amp, n200_amp, p300_latency, n200_latency, p300_width, n200_width,
                   latency_jitter_sd, noise_rms, line_amp, learning_rate}) {
    if (!std::isfinite(v)) throw ConfigError("subject profile values must be finite");
  }
  if (!(lapse_rate >= 0.0 && lapse_rate <= 1.0)) throw ConfigError("lapse_rate must lie in [0, 1]");
  if (noise_rms < 0.0 || latency_jitter_sd < 0.0) {
    throw ConfigError("noise_rms and latency_jitter_sd must be non-negative");
  }
  for (double w : spatial_weights) {
    if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("spatial weights must lie in [0, 1]");
  }
}

void to_json(nlohmann::json& j, const SubjectProfile& p) {
  j = nlohmann::json{{"erp_amp", p.erp_amp},
                     {"n200_amp", p.n200_amp},
                     {"p300_latency", p.p300_latency},
                     {"n200_latency", p.n200_latency},
                     {"p300_width", p.p300_width},
                     {"n200_width", p.n200_width},
                     {"latency_jitter_sd", p.latency_jitter_sd},
                     {"lapse_rate", p.lapse_rate},
                     {"noise_rms", p.noise_rms},
                     {"line_amp", p.line_amp},
                     {"spatial_weights", p.spatial_weights},
                     {"learning_rate", p.learning_rate},
                     {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, SubjectProfile& p) {
  // Absent keys keep their defaults so partial overrides are accepted.
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  try {
    take("erp_amp", p.erp_amp);
    take("n200_amp", p.n200_amp);
    take("p300_latency", p.p300_latency);
    take("n200_latency", p.n200_latency);
    take("p300_width", p.p300_width);
    take("n200_width", p.n200_width);
    take("latency_jitter_sd", p.latency_jitter_sd);
    take("lapse_rate", p.lapse_rate);
    take("noise_rms", p.noise_rms);
    take("line_amp", p.line_amp);
    take("spatial_weights", p.spatial_weights);
    take("learning_rate", p.learning_rate);
    take("seed", p.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed subject profile: ") + e.what());
  }
}

double apply_learning(const SubjectProfile& profile, int run_index) {
  if (run_index < 0) throw InputError("run index must be non-negative");
  return 1.0 + profile.learning_rate * static_cast<double>(run_index);
}

double erp_template(const SubjectProfile& profile, std::size_t channel, double tau,
                    double multiplier, double jitter) {
  const double w = profile.spatial_weights.at(channel) * multiplier;
  return w * (profile.n200_amp * gaussian_bump(tau - profile.n200_latency - jitter, profile.n200_width) +
              profile.erp_amp * gaussian_bump(tau - profile.p300_latency - jitter, profile.p300_width));
}

SubjectSimulator::SubjectSimulator(const SubjectProfile& profile, double fs)
    : profile_(profile),
      fs_(fs),
      noise_rng_(profile.seed),
      erp_rng_(profile.seed ^ 0xa0761d6478bd642fULL) {
  profile_.validate();
  if (!(fs > 0.0)) throw ConfigError("sampling rate must be positive");

  // Equal variance per log-spaced corner approximates a 1/f spectrum.
  const double high = fs / 2.0;
  const double var_each = profile_.noise_rms * profile_.noise_rms / static_cast<double>(kPinkPoles);
  for (std::size_t k = 0; k < kPinkPoles; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(kPinkPoles - 1);
    const double corner = kPinkLowHz * std::pow(high / kPinkLowHz, frac);
    const double a = std::exp(-2.0 * std::numbers::pi * corner / fs);
    pole_[k] = a;
    innovation_sd_[k] = std::sqrt(var_each * (1.0 - a * a));
  }
  // Start in the stationary distribution so no warm-up transient exists.
  const double sd_each = std::sqrt(var_each);
  for (auto& ch : pink_state_) {
    for (double& s : ch) s = sd_each * noise_normal_(noise_rng_);
  }
}

void SubjectSimulator::register_flash(const TriggerEvent& trigger, const AttentionState& attention) {
  if (!attention.attended_target || *attention.attended_target != trigger.target_id) return;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const bool lapse = u(erp_rng_) < profile_.lapse_rate;
  const double jitter = profile_.latency_jitter_sd * erp_normal_(erp_rng_);
  if (lapse) return;
  active_.push_back({trigger.t, jitter, apply_learning(profile_, attention.run_index)});
}

SampleFrame SubjectSimulator::synth_frame(double t) {
  SampleFrame f;
  f.t = t;
  const double line = profile_.line_amp * std::sin(2.0 * std::numbers::pi * kLineHz * t);
  std::erase_if(active_, [t](const Response& r) { return t - r.onset > kResponseHorizon; });
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    double noise = 0.0;
    for (std::size_t k = 0; k < kPinkPoles; ++k) {
      double& s = pink_state_[ch][k];
      s = pole_[k] * s + innovation_sd_[k] * noise_normal_(noise_rng_);
      noise += s;
    }
    double erp = 0.0;
    for (const Response& r : active_) {
      const double tau = t - r.onset;
      if (tau >= 0.0) erp += erp_template(profile_, ch, tau, r.multiplier, r.jitter);
    }
    f.channels[ch] = noise + line + erp;
  }
  return f;
}

}  // namespace brainform

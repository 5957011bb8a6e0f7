#pragma once

#include "brainform/types.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace brainform {

struct SubjectProfile {
  double erp_amp{5.0};          // P300 peak, µV
  double n200_amp{-3.0};        // N200 peak, µV
  double p300_latency{0.310};   // s
  double n200_latency{0.200};   // s
  double p300_width{0.080};     // Gaussian sd, s
  double n200_width{0.035};     // Gaussian sd, s
  double latency_jitter_sd{0.030};
  double lapse_rate{0.10};
  double noise_rms{10.0};       // µV per channel
  double line_amp{2.0};         // µV at 50 Hz
  ChannelValues spatial_weights{0.35, 0.45, 0.6, 0.45, 1.0, 0.9, 0.8, 0.9};
  double learning_rate{0.10};
  std::uint64_t seed{1};

  void validate() const;
};

void to_json(nlohmann::json& j, const SubjectProfile& p);
void from_json(const nlohmann::json& j, SubjectProfile& p);

struct AttentionState {
  std::optional<int> attended_target;
  int run_index{0};
};

// Per-run amplitude multiplier, 1 + learning_rate * run_index.
double apply_learning(const SubjectProfile& profile, int run_index);

// Noise-free ERP value on one channel, tau seconds after flash onset, with
// the latencies shifted by jitter seconds.
double erp_template(const SubjectProfile& profile, std::size_t channel, double tau,
                    double multiplier = 1.0, double jitter = 0.0);

// Synthetic EEG source. Background is 1/f noise built from a bank of
// first-order processes with log-spaced corners, plus mains interference.
// Flashes of the attended target add a jittered N200/P300 response unless the
// subject lapses. Noise and response randomness use separate streams so the
// background realization does not depend on where the subject looks.
class SubjectSimulator {
 public:
  SubjectSimulator(const SubjectProfile& profile, double fs);

  const SubjectProfile& profile() const { return profile_; }

  void register_flash(const TriggerEvent& trigger, const AttentionState& attention);

  SampleFrame synth_frame(double t);

 private:
  static constexpr std::size_t kPinkPoles = 8;

  SubjectProfile profile_;
  double fs_;
  std::mt19937_64 noise_rng_;
  std::mt19937_64 erp_rng_;
  // One distribution per stream: normal_distribution caches half of each
  // generated pair, so sharing it would couple the streams.
  std::normal_distribution<double> noise_normal_{0.0, 1.0};
  std::normal_distribution<double> erp_normal_{0.0, 1.0};
  std::array<double, kPinkPoles> pole_{};
  std::array<double, kPinkPoles> innovation_sd_{};
  std::array<std::array<double, kPinkPoles>, kNumChannels> pink_state_{};

  struct Response {
    double onset;
    double jitter;
    double multiplier;
  };
  std::vector<Response> active_;
};

}  // namespace brainform

#pragma once

#include "brainform/types.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace brainform {

// Normalized biquad coefficients (a0 == 1) for Direct Form II Transposed:
//
//   y[n] = b0*x[n] + b1*x[n-1] + b2*x[n-2] - a1*y[n-1] - a2*y[n-2]
struct BiquadCoeffs {
  double b0{1.0};
  double b1{0.0};
  double b2{0.0};
  double a1{0.0};
  double a2{0.0};
};

// Magnitude of the section's frequency response at f_hz.
double biquad_magnitude(const BiquadCoeffs& c, double f_hz, double fs_hz);

// True iff both poles lie strictly inside the unit circle.
bool biquad_is_stable(const BiquadCoeffs& c);

// Notch section with unit gain away from f0 (RBJ cookbook form).
BiquadCoeffs design_notch(double f0_hz, double q, double fs_hz);

// Digital Butterworth band-pass of the given total order (even), realized as
// order/2 second-order sections via analog prototype, LP->BP transform and a
// prewarped bilinear transform. Unity gain at the geometric band center.
std::vector<BiquadCoeffs> design_butterworth_bandpass(int order, double low_hz,
                                                      double high_hz, double fs_hz);

struct FilterChainConfig {
  double fs{250.0};
  std::vector<double> notch_freqs{50.0, 60.0};
  int notch_order{2};
  double notch_q{30.0};
  double bandpass_low{0.5};
  double bandpass_high{15.0};
  int bandpass_order{6};

  // Throws ConfigError when the frequency plan is inconsistent.
  void validate() const;
};

// Causal, stateful filter cascade applied per channel with shared coefficients.
// One instance belongs to one stream; it is not safe for concurrent writers.
class FilterChain {
 public:
  explicit FilterChain(const FilterChainConfig& config);

  const FilterChainConfig& config() const { return config_; }
  std::span<const BiquadCoeffs> sections() const { return sections_; }

  // Filters one frame. Throws OrderingError if t does not strictly increase
  // and InputError on non-finite channel values.
  SampleFrame process(const SampleFrame& frame);

  // Overall magnitude response of the cascade.
  double magnitude(double f_hz) const;

  void reset();

 private:
  struct SectionState {
    double z1{0.0};
    double z2{0.0};
  };

  FilterChainConfig config_;
  std::vector<BiquadCoeffs> sections_;
  // Indexed [channel * sections + section].
  std::vector<SectionState> state_;
  std::optional<double> last_t_;
};

FilterChain build_filter_chain(const FilterChainConfig& config);

// Number of samples in a 0-900 ms epoch.
std::size_t epoch_length(double fs);

struct Epoch {
  double onset{0.0};
  int target_id{0};
  StimContext context{StimContext::Calibration};
  Label label{Label::Unknown};
  std::size_t length{0};
  // Channel-major: data[ch * length + i].
  std::vector<double> data;

  double at(std::size_t ch, std::size_t i) const { return data[ch * length + i]; }
  double& at(std::size_t ch, std::size_t i) { return data[ch * length + i]; }
  std::span<const double> channel(std::size_t ch) const {
    return {data.data() + ch * length, length};
  }
};

// Rolling store of filtered frames addressed by absolute sample index.
// Frame k is assumed to carry time first_t + k / fs.
class FilteredHistory {
 public:
  FilteredHistory(double fs, std::size_t capacity_samples);

  void push(const SampleFrame& frame);

  double fs() const { return fs_; }
  std::int64_t total_pushed() const { return next_index_; }
  std::int64_t oldest_index() const { return next_index_ - static_cast<std::int64_t>(frames_.size()); }

  // Index of the first sample at or after t (may not be pushed yet).
  std::int64_t first_index_at_or_after(double t) const;

  const SampleFrame& frame(std::int64_t index) const;

  void clear();

 private:
  double fs_;
  std::size_t capacity_;
  std::optional<double> first_t_;
  std::int64_t next_index_{0};
  std::deque<SampleFrame> frames_;
};

// Cuts the trigger-locked epoch. Returns nullopt while fewer than
// epoch_length(fs) samples at or after trigger.t are buffered; throws
// InputError if the window has already been evicted.
std::optional<Epoch> extract_epoch(const FilteredHistory& history, const TriggerEvent& trigger);

}  // namespace brainform

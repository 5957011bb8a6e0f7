#include "brainform/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace brainform {

namespace {

using cplx = std::complex<double>;

constexpr double kPi = std::numbers::pi;

cplx section_response(const BiquadCoeffs& c, double w) {
  const cplx z1 = std::polar(1.0, -w);
  const cplx z2 = z1 * z1;
  return (c.b0 + c.b1 * z1 + c.b2 * z2) / (1.0 + c.a1 * z1 + c.a2 * z2);
}

}  // namespace

double biquad_magnitude(const BiquadCoeffs& c, double f_hz, double fs_hz) {
  return std::abs(section_response(c, 2.0 * kPi * f_hz / fs_hz));
}

bool biquad_is_stable(const BiquadCoeffs& c) {
  // Roots of z^2 + a1 z + a2.
  const cplx disc = std::sqrt(cplx(c.a1 * c.a1 - 4.0 * c.a2, 0.0));
  const cplx r1 = (-c.a1 + disc) / 2.0;
  const cplx r2 = (-c.a1 - disc) / 2.0;
  return std::abs(r1) < 1.0 && std::abs(r2) < 1.0;
}

BiquadCoeffs design_notch(double f0_hz, double q, double fs_hz) {
  const double w0 = 2.0 * kPi * f0_hz / fs_hz;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double cw = std::cos(w0);
  const double a0 = 1.0 + alpha;
  return BiquadCoeffs{1.0 / a0, -2.0 * cw / a0, 1.0 / a0, -2.0 * cw / a0, (1.0 - alpha) / a0};
}

std::vector<BiquadCoeffs> design_butterworth_bandpass(int order, double low_hz, double high_hz,
                                                      double fs_hz) {
  if (order < 2 || order % 2 != 0) {
    throw ConfigError("band-pass order must be a positive even number, got " +
                      std::to_string(order));
  }
  const int proto_order = order / 2;
  const double fs2 = 2.0 * fs_hz;
  // Prewarped analog band edges.
  const double wl = fs2 * std::tan(kPi * low_hz / fs_hz);
  const double wh = fs2 * std::tan(kPi * high_hz / fs_hz);
  const double bw = wh - wl;
  const double w0sq = wl * wh;

  std::vector<cplx> poles;
  poles.reserve(static_cast<std::size_t>(order));
  for (int k = 0; k < proto_order; ++k) {
    const double theta = kPi * (2.0 * k + proto_order + 1) / (2.0 * proto_order);
    const cplx p = std::polar(1.0, theta);
    const cplx half = p * bw / 2.0;
    const cplx root = std::sqrt(half * half - w0sq);
    for (const cplx s : {half + root, half - root}) {
      poles.push_back((fs2 + s) / (fs2 - s));
    }
  }

  // Complex poles pair with their conjugates; real poles pair with each other.
  std::vector<cplx> upper;
  std::vector<double> reals;
  for (const cplx& p : poles) {
    if (std::abs(p.imag()) < 1e-12) {
      reals.push_back(p.real());
    } else if (p.imag() > 0.0) {
      upper.push_back(p);
    }
  }
  std::sort(reals.begin(), reals.end());

  std::vector<BiquadCoeffs> sections;
  // Each section gets one zero at z = 1 and one at z = -1.
  for (const cplx& p : upper) {
    sections.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    sections.push_back({1.0, 0.0, -1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});
  }
  if (static_cast<int>(sections.size()) != proto_order) {
    throw ConfigError("band-pass design produced an unexpected pole layout");
  }

  // Normalize to unity gain at the digital image of the analog center.
  const double wc = 2.0 * std::atan(std::sqrt(w0sq) / fs2);
  double gain = 1.0;
  for (const auto& s : sections) gain *= std::abs(section_response(s, wc));
  const double scale = std::pow(gain, -1.0 / proto_order);
  for (auto& s : sections) {
    s.b0 *= scale;
    s.b1 *= scale;
    s.b2 *= scale;
  }
  return sections;
}

void FilterChainConfig::validate() const {
  if (!(fs > 0.0) || !std::isfinite(fs)) throw ConfigError("sampling rate must be positive");
  const double nyquist = fs / 2.0;
  if (!(bandpass_low > 0.0 && bandpass_low < bandpass_high && bandpass_high < nyquist)) {
    throw ConfigError("band-pass edges must satisfy 0 < low < high < fs/2");
  }
  if (bandpass_order < 2 || bandpass_order % 2 != 0) {
    throw ConfigError("band-pass order must be a positive even number");
  }
  if (notch_order != 2) throw ConfigError("notch sections are second order");
  if (!(notch_q > 0.0)) throw ConfigError("notch quality factor must be positive");
  for (double f : notch_freqs) {
    if (!(f > 0.0 && f < nyquist)) {
      throw ConfigError("notch frequency " + std::to_string(f) + " Hz violates Nyquist");
    }
  }
}

FilterChain::FilterChain(const FilterChainConfig& config) : config_(config) {
  config_.validate();
  for (double f : config_.notch_freqs) {
    sections_.push_back(design_notch(f, config_.notch_q, config_.fs));
  }
  for (const auto& s : design_butterworth_bandpass(config_.bandpass_order, config_.bandpass_low,
                                                   config_.bandpass_high, config_.fs)) {
    sections_.push_back(s);
  }
  for (const auto& s : sections_) {
    if (!biquad_is_stable(s)) throw ConfigError("filter design produced an unstable section");
  }
  state_.assign(kNumChannels * sections_.size(), SectionState{});
}

SampleFrame FilterChain::process(const SampleFrame& frame) {
  if (last_t_ && !(frame.t > *last_t_)) {
    throw OrderingError("frame time " + std::to_string(frame.t) +
                        " does not advance past " + std::to_string(*last_t_));
  }
  for (double v : frame.channels) {
    if (!std::isfinite(v)) throw InputError("non-finite channel value in frame");
  }
  last_t_ = frame.t;

  SampleFrame out{frame.t, {}};
  const std::size_t n_sections = sections_.size();
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    double x = frame.channels[ch];
    SectionState* st = &state_[ch * n_sections];
    for (std::size_t s = 0; s < n_sections; ++s) {
      const BiquadCoeffs& c = sections_[s];
      const double y = c.b0 * x + st[s].z1;
      st[s].z1 = c.b1 * x - c.a1 * y + st[s].z2;
      st[s].z2 = c.b2 * x - c.a2 * y;
      x = y;
    }
    out.channels[ch] = x;
  }
  return out;
}

double FilterChain::magnitude(double f_hz) const {
  double m = 1.0;
  for (const auto& s : sections_) m *= biquad_magnitude(s, f_hz, config_.fs);
  return m;
}

void FilterChain::reset() {
  std::fill(state_.begin(), state_.end(), SectionState{});
  last_t_.reset();
}

FilterChain build_filter_chain(const FilterChainConfig& config) { return FilterChain(config); }

std::size_t epoch_length(double fs) {
  return static_cast<std::size_t>(std::llround(kEpochSeconds * fs));
}

FilteredHistory::FilteredHistory(double fs, std::size_t capacity_samples)
    : fs_(fs), capacity_(capacity_samples) {
  if (!(fs > 0.0)) throw ConfigError("sampling rate must be positive");
  if (capacity_samples < epoch_length(fs)) {
    throw ConfigError("history must hold at least one epoch");
  }
}

void FilteredHistory::push(const SampleFrame& frame) {
  if (!first_t_) first_t_ = frame.t;
  frames_.push_back(frame);
  ++next_index_;
  while (frames_.size() > capacity_) frames_.pop_front();
}

std::int64_t FilteredHistory::first_index_at_or_after(double t) const {
  const double origin = first_t_.value_or(0.0);
  const double pos = (t - origin) * fs_;
  auto k = static_cast<std::int64_t>(std::ceil(pos - 1e-6));
  return std::max<std::int64_t>(k, 0);
}

const SampleFrame& FilteredHistory::frame(std::int64_t index) const {
  if (index < oldest_index() || index >= next_index_) {
    throw InputError("sample " + std::to_string(index) + " is not buffered");
  }
  return frames_[static_cast<std::size_t>(index - oldest_index())];
}

void FilteredHistory::clear() {
  frames_.clear();
  first_t_.reset();
  next_index_ = 0;
}

std::optional<Epoch> extract_epoch(const FilteredHistory& history, const TriggerEvent& trigger) {
  const std::size_t len = epoch_length(history.fs());
  const std::int64_t start = history.first_index_at_or_after(trigger.t);
  if (start + static_cast<std::int64_t>(len) > history.total_pushed()) return std::nullopt;
  if (start < history.oldest_index()) {
    throw InputError("epoch window at t=" + std::to_string(trigger.t) + " was evicted");
  }
  Epoch e;
  e.onset = trigger.t;
  e.target_id = trigger.target_id;
  e.context = trigger.context;
  e.length = len;
  e.data.resize(kNumChannels * len);
  for (std::size_t i = 0; i < len; ++i) {
    const SampleFrame& f = history.frame(start + static_cast<std::int64_t>(i));
    for (std::size_t ch = 0; ch < kNumChannels; ++ch) e.at(ch, i) = f.channels[ch];
  }
  return e;
}

}  // namespace brainform

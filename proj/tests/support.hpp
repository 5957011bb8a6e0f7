#pragma once

#include "brainform/classifier.hpp"
#include "brainform/dsp.hpp"
#include "brainform/pipeline.hpp"
#include "brainform/session.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace testsupport {

using namespace brainform;

// Steady-state gain of the chain for a unit sinusoid, from output RMS over
// the second half of the run against the input RMS.
inline double sine_gain_db(const FilterChainConfig& cfg, double f_hz, double seconds) {
  FilterChain chain(cfg);
  const auto n = static_cast<std::size_t>(seconds * cfg.fs);
  double sum_sq = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    SampleFrame fr;
    fr.t = static_cast<double>(i) / cfg.fs;
    fr.channels.fill(std::sin(2.0 * std::numbers::pi * f_hz * fr.t));
    const SampleFrame out = chain.process(fr);
    if (i >= n / 2) {
      sum_sq += out.channels[Pz] * out.channels[Pz];
      ++counted;
    }
  }
  const double rms = std::sqrt(sum_sq / static_cast<double>(counted));
  return 20.0 * std::log10(rms / std::sqrt(0.5));
}

struct Dataset {
  std::vector<FeatureVector> x;
  std::vector<Label> y;
};

// Two Gaussian classes sharing a random non-spherical covariance: a random
// rotation with variances spread over [0.5, 4].
inline Dataset make_dataset(std::uint64_t seed, std::size_t n_target, std::size_t n_nontarget,
                            std::size_t d, double separation) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> log_var(std::log(0.5), std::log(4.0));
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = z(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::VectorXd sd(d);
  for (std::size_t i = 0; i < d; ++i) sd[static_cast<Eigen::Index>(i)] = std::sqrt(std::exp(log_var(rng)));
  const Eigen::MatrixXd mix = q * sd.asDiagonal();
  Eigen::VectorXd shift(d);
  for (std::size_t i = 0; i < d; ++i) shift[static_cast<Eigen::Index>(i)] = z(rng);
  shift *= separation / shift.norm();
  Dataset ds;
  for (std::size_t i = 0; i < n_target + n_nontarget; ++i) {
    Eigen::VectorXd e(d);
    for (std::size_t k = 0; k < d; ++k) e[static_cast<Eigen::Index>(k)] = z(rng);
    const bool target = i < n_target;
    ds.x.push_back(mix * e + (target ? shift : Eigen::VectorXd::Zero(d)));
    ds.y.push_back(target ? Label::Target : Label::NonTarget);
  }
  return ds;
}

// Closed-form LDA with plain loops in extended precision: class means,
// pooled covariance over n - 2 degrees of freedom, and Gauss-Jordan with
// partial pivoting.
struct OracleLda {
  std::vector<double> w;
  double bias{0.0};
  std::vector<std::vector<double>> cov;
};

inline OracleLda oracle_lda(const Dataset& ds) {
  using R = long double;
  const std::size_t d = static_cast<std::size_t>(ds.x.front().size());
  auto x = [&](std::size_t i, std::size_t k) { return static_cast<R>(ds.x[i][static_cast<Eigen::Index>(k)]); };
  std::vector<R> mt(d, 0), mn(d, 0);
  R nt = 0, nn = 0;
  for (std::size_t i = 0; i < ds.x.size(); ++i) {
    const bool target = ds.y[i] == Label::Target;
    (target ? nt : nn) += 1;
    for (std::size_t k = 0; k < d; ++k) (target ? mt : mn)[k] += x(i, k);
  }
  for (std::size_t k = 0; k < d; ++k) {
    mt[k] /= nt;
    mn[k] /= nn;
  }
  std::vector<std::vector<R>> s(d, std::vector<R>(d, 0));
  for (std::size_t i = 0; i < ds.x.size(); ++i) {
    const auto& m = ds.y[i] == Label::Target ? mt : mn;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) s[a][b] += (x(i, a) - m[a]) * (x(i, b) - m[b]);
    }
  }
  for (auto& row : s) {
    for (R& v : row) v /= (nt + nn - 2);
  }
  // Augmented system [cov | mt - mn].
  std::vector<std::vector<R>> a = s;
  for (std::size_t r = 0; r < d; ++r) a[r].push_back(mt[r] - mn[r]);
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < d; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == c) continue;
      const R f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= d; ++k) a[r][k] -= f * a[c][k];
    }
  }
  OracleLda o;
  o.cov.assign(d, std::vector<double>(d));
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) o.cov[r][c] = static_cast<double>(s[r][c]);
  }
  o.w.resize(d);
  R dot = 0;
  for (std::size_t r = 0; r < d; ++r) {
    const R w = a[r][d] / a[r][r];
    o.w[r] = static_cast<double>(w);
    dot += w * (mt[r] + mn[r]) / 2;
  }
  o.bias = static_cast<double>(-dot + std::log(nt / nn));
  return o;
}

inline double binom_cdf(std::size_t k, std::size_t n, double p) {
  double sum = 0.0;
  for (std::size_t i = 0; i <= k; ++i) {
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                            static_cast<double>(i) * std::log(p) + static_cast<double>(n - i) * std::log1p(-p);
    sum += std::exp(log_term);
  }
  return sum;
}

// Central interval holding at least `level` of Binomial(n, p) mass, in counts.
inline std::pair<std::size_t, std::size_t> binom_interval(std::size_t n, double p, double level) {
  const double tail = (1.0 - level) / 2.0;
  std::size_t lo = 0;
  while (lo < n && binom_cdf(lo, n, p) <= tail) ++lo;
  std::size_t hi = n;
  while (hi > 0 && 1.0 - binom_cdf(hi - 1, n, p) <= tail) --hi;
  return {lo, hi};
}

// Calibration block on a running engine, cue attended on every flash.
inline CalibrationResult calibrate(BciEngine& engine, int cue, std::size_t cycles, std::uint64_t cv_seed) {
  CalibrationDriver cd(engine.current_tick(), cue, 10, cycles);
  while (!cd.done(engine.current_tick())) {
    const auto flash = cd.flash_for(engine.current_tick());
    if (flash) cd.present(*flash);
    AttentionState att;
    att.attended_target = cue;
    engine.advance_tick(flash, att);
    cd.after_tick(engine.history());
  }
  return cd.fit(engine.config(), cv_seed);
}

// A 10-class speller run where the subject always attends the cue (or
// nothing when `attend` is false). Stops after max_selections selections
// when that is set.
inline RunTally play_speller(BciEngine& engine, const LdaModel& model, std::uint64_t seed, std::size_t cues,
                             bool attend = true, std::size_t max_selections = 0,
                             double max_seconds = 300.0) {
  RunPlan plan;
  plan.run_id = "speller";
  plan.task = TaskType::Speller;
  plan.context = StimContext::TaskB;
  plan.speller = SpellerTaskConfig::generate(seed, 10, cues);
  plan.max_run_seconds = max_seconds;
  RunDriver driver(plan, model, engine.config(), engine.current_tick());
  while (!driver.done()) {
    const std::int64_t k = engine.current_tick();
    const TriggerEvent flash = driver.flash_for(k);
    AttentionState att;
    if (attend) att.attended_target = driver.intended_target(flash.t);
    driver.present(flash);
    engine.advance_tick(flash, att);
    driver.after_tick(engine.history(), engine.now());
    const RunTally t = driver.tally();
    if (max_selections && t.correct + t.incorrect >= max_selections) break;
  }
  return driver.tally();
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testsupport

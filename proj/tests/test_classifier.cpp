#include "doctest.h"
#include "support.hpp"

#include <random>

using namespace brainform;
using testsupport::make_dataset;
using testsupport::oracle_lda;

TEST_CASE("featurize averages contiguous bins channel-major") {
  Epoch e;
  e.length = 10;
  e.data.resize(kNumChannels * 10);
  for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
    for (std::size_t i = 0; i < 10; ++i) e.at(ch, i) = 100.0 * ch + i;
  }
  const auto x = featurize(e, 3);
  REQUIRE(x.size() == 24);
  // Bins [0,3) [3,6) [6,10).
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(4.0));
  CHECK(x[2] == doctest::Approx(7.5));
  CHECK(x[3] == doctest::Approx(101.0));
  CHECK(x[23] == doctest::Approx(707.5));
  CHECK_THROWS_AS(featurize(e, 0), ConfigError);
  CHECK_THROWS_AS(featurize(e, 11), ConfigError);
}

TEST_CASE("default feature vector has 120 entries at 250 Hz") {
  Epoch e;
  e.length = epoch_length(250.0);
  e.data.assign(kNumChannels * e.length, 1.0);
  CHECK(featurize(e, 15).size() == 120);
}

TEST_CASE("property: featurize preserves the mean of each channel") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z;
  std::uniform_int_distribution<std::size_t> len(20, 300);
  for (int trial = 0; trial < 50; ++trial) {
    Epoch e;
    e.length = len(rng);
    e.data.resize(kNumChannels * e.length);
    for (double& v : e.data) v = z(rng);
    const std::size_t m = 1 + trial % 15;
    const auto x = featurize(e, m);
    for (std::size_t ch = 0; ch < kNumChannels; ++ch) {
      // Weighted by bin size, the bin means give back the channel mean.
      double weighted = 0.0, direct = 0.0;
      for (std::size_t b = 0; b < m; ++b) {
        const std::size_t lo = b * e.length / m, hi = (b + 1) * e.length / m;
        weighted += x[static_cast<Eigen::Index>(ch * m + b)] * static_cast<double>(hi - lo);
      }
      for (double v : e.channel(ch)) direct += v;
      CHECK(weighted == doctest::Approx(direct).epsilon(1e-9));
    }
  }
}

TEST_CASE("gamma 0 matches closed-form LDA") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ds = make_dataset(seed, 60, 240, 12, 2.0);
    const auto m = fit_lda(ds.x, ds.y, 0.0);
    const auto o = oracle_lda(ds);
    for (std::size_t k = 0; k < o.w.size(); ++k) CHECK(std::abs(m.weights[static_cast<Eigen::Index>(k)] - o.w[k]) < 1e-8);
    CHECK(std::abs(m.bias - o.bias) < 1e-8);
  }
}

TEST_CASE("gamma 1 uses a spherical covariance of the mean variance") {
  const auto ds = make_dataset(7, 50, 200, 8, 1.5);
  const auto m = fit_lda(ds.x, ds.y, 1.0);
  const auto o = oracle_lda(ds);
  double nu = 0.0;
  for (std::size_t k = 0; k < 8; ++k) nu += o.cov[k][k];
  nu /= 8.0;
  for (Eigen::Index r = 0; r < 8; ++r) {
    for (Eigen::Index c = 0; c < 8; ++c) {
      CHECK(m.pooled_cov_reg(r, c) == doctest::Approx(r == c ? nu : 0.0).epsilon(1e-12));
    }
  }
  // Weights reduce to the scaled mean difference.
  const Eigen::VectorXd expected = (m.mean_target - m.mean_nontarget) / nu;
  CHECK((m.weights - expected).norm() < 1e-10);
}

TEST_CASE("intermediate gamma blends the covariance linearly") {
  const auto ds = make_dataset(3, 40, 160, 6, 1.0);
  const auto m0 = fit_lda(ds.x, ds.y, 0.0);
  const auto m1 = fit_lda(ds.x, ds.y, 1.0);
  const auto mh = fit_lda(ds.x, ds.y, 0.3);
  CHECK((mh.pooled_cov_reg - (0.7 * m0.pooled_cov_reg + 0.3 * m1.pooled_cov_reg)).norm() < 1e-10);
}

TEST_CASE("fit_lda input errors") {
  auto ds = make_dataset(1, 10, 10, 4, 1.0);
  CHECK_THROWS_AS(fit_lda(ds.x, ds.y, 1.5), ConfigError);
  std::vector<Label> all_n(ds.y.size(), Label::NonTarget);
  CHECK_THROWS_AS(fit_lda(ds.x, all_n, 1.0), TrainingError);
  std::vector<Label> short_y(ds.y.begin(), ds.y.end() - 1);
  CHECK_THROWS_AS(fit_lda(ds.x, short_y, 1.0), InputError);
  ds.y[0] = Label::Unknown;
  CHECK_THROWS_AS(fit_lda(ds.x, ds.y, 1.0), InputError);
}

TEST_CASE("posterior is the logistic of the score and never overflows") {
  LdaModel m;
  m.weights = Eigen::VectorXd::Ones(2);
  m.bias = 0.0;
  FeatureVector x(2);
  x << 0.5, 0.5;
  CHECK(predict_posterior(m, x) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  x << 500.0, 500.0;
  CHECK(predict_posterior(m, x) == 1.0);
  x << -500.0, -500.0;
  const double p = predict_posterior(m, x);
  CHECK(p >= 0.0);
  CHECK(p < 1e-300);
  CHECK_THROWS_AS(m.score(FeatureVector::Zero(3)), InputError);
}

TEST_CASE("grade boundaries") {
  CHECK(grade_for(0.7999999) == Grade::Red);
  CHECK(grade_for(0.80) == Grade::Yellow);
  CHECK(grade_for(0.90) == Grade::Yellow);
  CHECK(grade_for(0.9000001) == Grade::Green);
  CHECK(grade_from_string(to_string(Grade::Yellow)) == Grade::Yellow);
  CHECK_THROWS_AS(grade_from_string("blue"), ParseError);
}

TEST_CASE("cross-validation separates easy data and is seed deterministic") {
  const auto ds = make_dataset(4, 60, 540, 10, 6.0);
  const auto a = cross_validate(ds.x, ds.y, 1.0, 5, 99);
  const auto b = cross_validate(ds.x, ds.y, 1.0, 5, 99);
  CHECK(a.cv_accuracy == b.cv_accuracy);
  CHECK(a.cv_accuracy > 0.95);
  CHECK(a.grade == Grade::Green);
  CHECK(a.n_target == 60);
  CHECK(a.n_nontarget == 540);
}

TEST_CASE("cross-validation of pure noise sits near chance") {
  const auto ds = make_dataset(5, 60, 540, 10, 0.0);
  const auto r = cross_validate(ds.x, ds.y, 1.0, 5, 1);
  CHECK(r.cv_accuracy == doctest::Approx(0.5).epsilon(0.15));
  CHECK(r.grade == Grade::Red);
}

TEST_CASE("cross-validation needs enough epochs per class") {
  const auto ds = make_dataset(1, 4, 40, 3, 1.0);
  CHECK_THROWS_AS(cross_validate(ds.x, ds.y, 1.0, 5, 1), CalibrationError);
  CHECK_THROWS_AS(cross_validate(ds.x, ds.y, 1.0, 1, 1), ConfigError);
}

TEST_CASE("model json round trip") {
  const auto ds = make_dataset(2, 20, 80, 5, 2.0);
  auto m = fit_lda(ds.x, ds.y, 0.4);
  m.features.bins_per_channel = 7;
  nlohmann::json j = m;
  const auto back = j.get<LdaModel>();
  CHECK(back.weights == m.weights);
  CHECK(back.bias == m.bias);
  CHECK(back.gamma == m.gamma);
  CHECK(back.features.bins_per_channel == 7);
  CHECK(back.prior_target == m.prior_target);
}

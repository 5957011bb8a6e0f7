#include "doctest.h"

#include "brainform/metrics.hpp"

#include <cmath>
#include <random>

using namespace brainform;

namespace {

// Wolpaw bits written out term by term.
double wolpaw(double n, double p) {
  return std::log2(n) + p * std::log2(p) + (1 - p) * std::log2((1 - p) / (n - 1));
}

}  // namespace

TEST_CASE("itr is zero at chance and log2 N at perfect accuracy") {
  for (std::size_t n : {2u, 5u, 10u}) {
    CHECK(itr_bits_per_selection(n, 1.0 / static_cast<double>(n)) == 0.0);
    CHECK(itr_bits_per_selection(n, 1.0) == doctest::Approx(std::log2(static_cast<double>(n))));
  }
  CHECK(itr_bits_per_selection(10, 0.773) == doctest::Approx(1.830).epsilon(0.001 / 1.83));
}

TEST_CASE("itr below chance is clamped to zero") {
  CHECK(itr_bits_per_selection(10, 0.0) == 0.0);
  CHECK(itr_bits_per_selection(10, 0.05) == 0.0);
  CHECK(itr_bits_per_selection(2, 0.3) == 0.0);
}

TEST_CASE("property: itr matches the formula and rises with accuracy") {
  std::mt19937_64 rng(8);
  for (std::size_t n = 2; n <= 12; ++n) {
    std::uniform_real_distribution<double> p_dist(1.0 / n + 1e-6, 1.0 - 1e-9);
    double prev = -1;
    std::vector<double> ps;
    for (int i = 0; i < 50; ++i) ps.push_back(p_dist(rng));
    std::sort(ps.begin(), ps.end());
    for (double p : ps) {
      const double b = itr_bits_per_selection(n, p);
      CHECK(b == doctest::Approx(wolpaw(static_cast<double>(n), p)).epsilon(1e-12));
      CHECK(b >= prev);
      CHECK(b <= std::log2(static_cast<double>(n)) + 1e-12);
      prev = b;
    }
  }
}

TEST_CASE("itr input errors") {
  CHECK_THROWS_AS(itr_bits_per_selection(1, 1.0), InputError);
  CHECK_THROWS_AS(itr_bits_per_selection(5, 1.2), InputError);
  CHECK_THROWS_AS(itr(5, 0.9, 3, 0.0), InputError);
}

TEST_CASE("itr rates scale with selections per time") {
  const auto r = itr(10, 1.0, 6, 30.0);
  CHECK(r.bits_per_selection == doctest::Approx(std::log2(10.0)));
  CHECK(r.bits_per_sec == doctest::Approx(6 * std::log2(10.0) / 30.0));
  CHECK(r.bits_per_min == doctest::Approx(60 * r.bits_per_sec));
}

TEST_CASE("compute_metrics from a tally") {
  RunTally t;
  t.correct = 6;
  t.incorrect = 2;
  t.t_start = 10.0;
  t.t_end = 50.0;
  t.n_classes = 10;
  const auto m = compute_metrics(t);
  CHECK(*m.accuracy == 0.75);
  CHECK(m.task_time_s == 40.0);
  CHECK(m.n_trials == 8);
  REQUIRE(m.itr);
  CHECK(m.itr->bits_per_min == doctest::Approx(8.0 / 40.0 * 60.0 * wolpaw(10, 0.75)));

  RunTally empty;
  empty.n_classes = 5;
  const auto e = compute_metrics(empty);
  CHECK_FALSE(e.accuracy);
  CHECK_FALSE(e.itr);

  t.t_end = 5.0;
  CHECK_THROWS_AS(compute_metrics(t), InputError);
}

TEST_CASE("describe gives mean, sample sd, median and MAD") {
  const std::vector<double> v{1, 2, 3, 4, 100};
  const auto s = describe(v);
  CHECK(s.n == 5);
  CHECK(s.mean == doctest::Approx(22.0));
  CHECK(s.median == 3.0);
  CHECK(s.mad == 1.0);
  CHECK(s.sd == doctest::Approx(std::sqrt(((21 * 21) + 400 + 361 + 324 + 78 * 78) / 4.0)));
  const std::vector<double> one{7};
  CHECK(describe(one).sd == 0.0);
  const std::vector<double> even{1, 2, 3, 10};
  CHECK(describe(even).median == 2.5);
}

TEST_CASE("summaries skip undefined values") {
  std::vector<RunMetrics> ms(3);
  ms[0].accuracy = 1.0;
  ms[0].itr = ItrRates{1, 1, 30};
  ms[1].accuracy = 0.5;
  ms[1].itr = ItrRates{1, 1, 10};
  ms[2].task_time_s = 4.0;
  const auto s = summarize_runs(ms, "t1b");
  CHECK(s.accuracy.n == 2);
  CHECK(s.task_time.n == 3);
  CHECK(s.itr_bits_per_min.median == 20.0);
  CHECK(format_summary_table(std::span(&s, 1)).find("t1b") != std::string::npos);
  CHECK_THROWS_AS(summarize_runs(std::span<const RunMetrics>{}, "x"), InputError);
}

TEST_CASE("grand averages separate classes") {
  std::vector<Epoch> eps(4);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    eps[i].length = 3;
    eps[i].data.assign(3 * kNumChannels, i < 1 ? 4.0 : 1.0);
    eps[i].label = i < 1 ? Label::Target : Label::NonTarget;
  }
  const auto avg = average_erps(eps);
  CHECK(avg.n_target == 1);
  CHECK(avg.n_nontarget == 3);
  CHECK(avg.target_mean[0] == 4.0);
  CHECK(avg.nontarget_mean[5] == 1.0);
  CHECK_FALSE(avg.partial);
  eps.erase(eps.begin());
  CHECK(average_erps(eps).partial);
}

#include "doctest.h"

#include "brainform/gate.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace brainform;

namespace {

// Pushes the gate to confidence ~1 for `target`.
void convince(DecisionGate& g, int target, double t) { g.update_evidence(target, 0.9999, t); }

}  // namespace

TEST_CASE("refractory default is one flash cycle") {
  CHECK(GateConfig::for_targets(10).refractory_seconds == doctest::Approx(1.0));
  CHECK(GateConfig::for_targets(5).refractory_seconds == doctest::Approx(0.5));
}

TEST_CASE("activation needs 500 ms of uninterrupted focus") {
  DecisionGate g(GateConfig::for_targets(10));
  convince(g, 3, 0.0);
  for (int k = 0; k <= 4; ++k) CHECK_FALSE(g.tick(1.0 + 0.1 * k));
  const auto act = g.tick(1.5);
  REQUIRE(act);
  CHECK(act->target_id == 3);
  CHECK(act->confidence >= 0.95);
  CHECK(act->t == doctest::Approx(1.5));
}

TEST_CASE("focus broken after 400 ms does not fire") {
  DecisionGate g(GateConfig::for_targets(10));
  convince(g, 3, 0.0);
  for (int k = 0; k <= 4; ++k) CHECK_FALSE(g.tick(1.0 + 0.1 * k));
  // Competing evidence drops the leader below threshold.
  convince(g, 5, 0.1);
  CHECK_FALSE(g.tick(1.5));
  CHECK_FALSE(g.focus_target());
  CHECK(g.distribution()[3] < 0.95);
}

TEST_CASE("switching leader restarts the dwell clock") {
  DecisionGate g(GateConfig::for_targets(10));
  convince(g, 1, 0.0);
  g.tick(0.0);
  g.tick(0.3);
  // Overwhelming evidence for target 2 takes over above threshold.
  g.update_evidence(2, 1 - 1e-9, 0.1);
  g.update_evidence(2, 1 - 1e-9, 0.2);
  CHECK_FALSE(g.tick(0.4));
  CHECK(g.focus_target() == 2);
  CHECK_FALSE(g.tick(0.8));
  const auto act = g.tick(0.9);
  REQUIRE(act);
  CHECK(act->target_id == 2);
}

TEST_CASE("activation resets evidence and starts the refractory period") {
  DecisionGate g(GateConfig::for_targets(10));
  convince(g, 4, 0.0);
  g.tick(0.0);
  REQUIRE(g.tick(0.5));
  CHECK(g.window_size(4) == 0);
  CHECK(g.distribution()[4] == doctest::Approx(0.1));
  CHECK(g.refractory_until() == doctest::Approx(1.5));
  // Epochs that began before the activation are stale.
  convince(g, 4, 0.4);
  CHECK(g.window_size(4) == 0);
  // Fresh evidence counts but the gate stays closed until 1.5 s.
  convince(g, 4, 0.6);
  CHECK(g.window_size(4) == 1);
  CHECK_FALSE(g.tick(1.0));
  CHECK_FALSE(g.tick(1.4));
  CHECK_FALSE(g.tick(1.5));
  CHECK_FALSE(g.tick(1.9));
  CHECK(g.tick(2.0));
}

TEST_CASE("window keeps only the most recent cycles") {
  GateConfig c = GateConfig::for_targets(4);
  c.window_cycles = 2;
  DecisionGate g(c);
  g.update_evidence(0, 0.9, 0.0);
  g.update_evidence(0, 0.9, 0.1);
  g.update_evidence(0, 0.2, 0.2);
  CHECK(g.window_size(0) == 2);
  CHECK(g.score(0) == doctest::Approx(std::log(9.0) + std::log(0.25)));
}

TEST_CASE("gate input validation") {
  DecisionGate g(GateConfig::for_targets(10));
  CHECK_THROWS_AS(g.update_evidence(10, 0.5, 0.0), InputError);
  CHECK_THROWS_AS(g.update_evidence(-1, 0.5, 0.0), InputError);
  CHECK_THROWS_AS(g.update_evidence(0, 1.0, 0.0), InputError);
  CHECK_THROWS_AS(g.update_evidence(0, 0.0, 0.0), InputError);
  g.update_evidence(0, 0.5, 1.0);
  CHECK_THROWS_AS(g.update_evidence(0, 0.5, 0.5), OrderingError);
  g.tick(2.0);
  CHECK_THROWS_AS(g.tick(1.0), OrderingError);
  CHECK_THROWS_AS(DecisionGate(GateConfig::for_targets(1)), ConfigError);
  GateConfig bad;
  bad.confidence_threshold = 1.0;
  CHECK_THROWS_AS(DecisionGate{bad}, ConfigError);
}

TEST_CASE("property: distribution is a probability vector ordered like the scores") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  for (int trial = 0; trial < 20; ++trial) {
    DecisionGate g(GateConfig::for_targets(2 + trial % 9));
    const int n = static_cast<int>(g.config().n_targets);
    for (int k = 0; k < 200; ++k) {
      g.update_evidence(k % n, u(rng), 0.1 * k);
      const auto d = g.distribution();
      CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(1.0));
      for (int a = 0; a < n; ++a) {
        CHECK(d[a] > 0.0);
        for (int b = 0; b < n; ++b) {
          if (g.score(a) > g.score(b)) CHECK(d[a] >= d[b]);
        }
      }
    }
  }
}

TEST_CASE("uninformative posteriors never activate") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DecisionGate g(GateConfig::for_targets(10));
    std::mt19937_64 rng(seed);
    std::vector<int> order(10);
    std::iota(order.begin(), order.end(), 0);
    for (int k = 0; k < 600; ++k) {
      if (k % 10 == 0) std::shuffle(order.begin(), order.end(), rng);
      if (k >= 9) g.update_evidence(order[(k - 9) % 10], 0.5, 0.1 * (k - 9));
      CHECK_FALSE(g.tick(0.1 * k));
    }
  }
}

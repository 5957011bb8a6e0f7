#pragma once

#include "brainform/session.hpp"

namespace testsupport {

// A subject strong enough to pass calibration and finish every run.
inline brainform::SessionConfig strong_session(std::uint64_t seed) {
  brainform::SessionConfig c;
  c.session_id = "strong_" + std::to_string(seed);
  c.seed = seed;
  c.profile.seed = seed * 7 + 1;
  c.profile.erp_amp = 12.0;
  c.profile.n200_amp = -6.0;
  c.compliance = 1.0;
  return c;
}

// Shared across test files: one recorded session, computed once.
inline const brainform::SessionResult& strong_result() {
  static const brainform::SessionResult r = brainform::run_session(strong_session(3));
  return r;
}

}  // namespace testsupport

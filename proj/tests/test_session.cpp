#include "doctest.h"
#include "session_fixture.hpp"
#include "support.hpp"

#include "brainform/recorder.hpp"

using namespace brainform;
using testsupport::strong_result;
using testsupport::strong_session;

TEST_CASE("derived seeds depend on master, tag and index") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
}

TEST_CASE("scripted attention honours compliance per cycle") {
  ScriptedAttention always(1.0, 1);
  ScriptedAttention never(0.0, 1);
  for (int k = 0; k < 50; ++k) {
    CHECK(always.decide(3, k, 10, 0).attended_target == 3);
    CHECK_FALSE(never.decide(3, k, 10, 0).attended_target);
  }
  ScriptedAttention half(0.5, 9);
  int attended_cycles = 0;
  for (int c = 0; c < 400; ++c) {
    const bool first = half.decide(1, c * 10, 10, 2).attended_target.has_value();
    for (int i = 1; i < 10; ++i) CHECK(half.decide(1, c * 10 + i, 10, 2).attended_target.has_value() == first);
    attended_cycles += first;
  }
  CHECK(attended_cycles == doctest::Approx(200).epsilon(0.15));
  CHECK(half.decide(1, 0, 10, 2).run_index == 2);
}

TEST_CASE("run plans follow the phase") {
  SessionConfig cfg;
  const auto tut_c = make_run_plan(cfg, Phase::Tutorial, "tutorial_a", TaskType::Complex, 100, TextureSpec{});
  CHECK(tut_c.tutorial);
  CHECK(tut_c.n_targets() == 2);
  CHECK(tut_c.context == StimContext::Tutorial);
  CHECK(tut_c.complex.npc_schedule.size() == cfg.tutorial_windows);
  const auto tut_s = make_run_plan(cfg, Phase::Tutorial, "tutorial_b", TaskType::Speller, 100, TextureSpec{});
  CHECK(tut_s.n_targets() == 4);
  CHECK(tut_s.speller.n_cues == cfg.tutorial_cues);
  const auto timed = make_run_plan(cfg, Phase::TimedRun, "t3b", TaskType::Speller, 100, TextureSpec{});
  CHECK(timed.deadline_s == 90.0);
  CHECK(timed.n_targets() == 10);
  CHECK(timed.context == StimContext::TaskB);
  const auto untimed = make_run_plan(cfg, Phase::Run1, "t1a", TaskType::Complex, 100, TextureSpec{});
  CHECK_FALSE(untimed.deadline_s);
  CHECK(untimed.n_targets() == 5);
  CHECK(untimed.context == StimContext::TaskA);
  // Different runs get different content.
  const auto other = make_run_plan(cfg, Phase::Run2, "t2a", TaskType::Complex, 100, TextureSpec{});
  CHECK(other.schedule_seed != untimed.schedule_seed);
}

TEST_CASE("session config validation") {
  SessionConfig c;
  c.compliance = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.calibration_cycles = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.free_play_texture = 2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("strong subject completes the protocol in order") {
  const auto& r = strong_result();
  const auto& log = r.log;
  CHECK_FALSE(log.aborted);
  CHECK(log.trace.front() == Phase::Setup);
  CHECK(log.trace.back() == Phase::Done);
  std::vector<std::string> ids;
  for (const auto& run : log.runs) ids.push_back(run.plan.run_id);
  CHECK(ids == std::vector<std::string>{"tutorial_a", "tutorial_b", "t1a", "t1b", "t2a", "t2b", "t3a", "t3b",
                                        "t4a", "t4b"});
  // Session 1 texture, then the swap, then the free-play choice (slot 0).
  CHECK(log.runs[2].tally.texture.kind == log.textures.first.kind);
  CHECK(log.runs[4].tally.texture.kind == log.textures.second.kind);
  CHECK(log.runs[8].tally.texture.kind == log.textures.first.kind);
  CHECK(log.runs[6].tally.timed);
  CHECK_FALSE(log.runs[2].tally.timed);
  for (const auto& run : log.runs) {
    CHECK(run.end_tick > run.start_tick);
    CHECK(run.model_index < log.models.size());
  }
  for (std::size_t i = 1; i < log.runs.size(); ++i) CHECK(log.runs[i].start_tick >= log.runs[i - 1].end_tick);
  CHECK(r.eeg.frames.size() == static_cast<std::size_t>(tick_first_sample(log.total_ticks, 250.0)));
  CHECK(r.eeg.triggers.size() == r.eeg.frames.size());
}

TEST_CASE("sessions are deterministic") {
  const auto a = run_session(strong_session(3));
  CHECK(dump_json(session_to_json(a.log)) == dump_json(session_to_json(strong_result().log)));
  CHECK(format_eeg_csv(a.eeg) == format_eeg_csv(strong_result().eeg));
  auto cfg = strong_session(3);
  cfg.seed = 4;
  CHECK(dump_json(session_to_json(run_session(cfg).log)) != dump_json(session_to_json(a.log)));
}

TEST_CASE("a subject without signal aborts after too many red calibrations") {
  SessionConfig c;
  c.profile.erp_amp = 0.0;
  c.profile.n200_amp = 0.0;
  c.max_calibration_attempts = 3;
  c.calibration_cycles = 20;
  c.record_eeg = false;
  const auto r = run_session(c);
  CHECK(r.log.aborted);
  CHECK(r.log.trace.back() == Phase::Aborted);
  CHECK(r.log.calibrations.size() == 4);
  CHECK(r.log.runs.empty());
  CHECK(r.eeg.frames.empty());
  for (const auto& cal : r.log.calibrations) CHECK(cal.report.grade == Grade::Red);
}

TEST_CASE("declined free play skips runs 4a and 4b") {
  auto c = strong_session(5);
  c.free_play_texture.reset();
  c.record_eeg = false;
  const auto r = run_session(c);
  CHECK(r.log.trace.back() == Phase::Done);
  CHECK(r.log.runs.size() == 8);
}

#include "doctest.h"

#include "brainform/game.hpp"

using namespace brainform;

namespace {

Activation act(int target, double t) { return Activation{target, t, 0.99}; }

ComplexTaskConfig two_windows() {
  ComplexTaskConfig c;
  c.npc_schedule = {{1, 2.0, 5.0}, {3, 7.0, 10.0}};
  return c;
}

}  // namespace

TEST_CASE("complex task counts hits inside windows") {
  ComplexTask task(two_windows(), 0.0);
  task.step(act(1, 1.0), 1.0);  // too early
  CHECK(task.tally().correct == 0);
  CHECK(task.active_color(3.0) == 1);
  task.step(act(4, 3.0), 3.0);  // wrong color is ignored
  CHECK(task.tally().incorrect == 0);
  task.step(act(1, 3.5), 3.5);
  CHECK(task.tally().correct == 1);
  CHECK_FALSE(task.active_color(4.0));
  task.step(std::nullopt, 8.0);
  task.step(act(3, 9.0), 9.0);
  CHECK(task.done());
  CHECK(task.tally().t_end == 9.0);
  CHECK(task.tally().correct == 2);
}

TEST_CASE("complex task counts expired windows as errors") {
  ComplexTask task(two_windows(), 0.0);
  task.step(std::nullopt, 5.1);
  CHECK(task.tally().incorrect == 1);
  task.step(std::nullopt, 10.1);
  CHECK(task.done());
  CHECK(task.tally().incorrect == 2);
  CHECK(task.tally().t_end == doctest::Approx(10.1));
}

TEST_CASE("complex task deadline ends the run and fails open windows") {
  ComplexTask task(two_windows(), 0.0, 8.0);
  CHECK(task.tally().timed);
  task.step(act(1, 2.5), 2.5);
  task.step(std::nullopt, 8.0);
  CHECK(task.done());
  CHECK(task.tally().correct == 1);
  CHECK(task.tally().incorrect == 1);
  CHECK(task.tally().t_end == 8.0);
}

TEST_CASE("complex task config validation") {
  ComplexTaskConfig c = two_windows();
  c.n_targets = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.tutorial = true;
  CHECK_NOTHROW(c.validate());
  c = two_windows();
  c.npc_schedule.push_back({1, 4.0, 6.0});
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = two_windows();
  c.npc_schedule[0].color = 5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  ComplexTask t(two_windows(), 0.0);
  CHECK_THROWS_AS(t.step(act(9, 1.0), 1.0), InputError);
}

TEST_CASE("generated complex schedules are seeded and spaced") {
  const auto a = ComplexTaskConfig::generate(5, 10.0);
  const auto b = ComplexTaskConfig::generate(5, 10.0);
  REQUIRE(a.npc_schedule.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(a.npc_schedule[i].color == b.npc_schedule[i].color);
    CHECK(a.npc_schedule[i].start == doctest::Approx(10.0 + 2.5 + 5.5 * i));
    CHECK(a.npc_schedule[i].end - a.npc_schedule[i].start == doctest::Approx(3.0));
  }
  CHECK_FALSE(a.tutorial);
  CHECK(ComplexTaskConfig::generate(5, 0.0, 2, 3).tutorial);
}

TEST_CASE("speller advances on correct selections only") {
  SpellerTaskConfig c;
  c.n_cues = 3;
  c.cue_sequence = {4, 4, 7};
  SpellerTask task(c, 1.0);
  CHECK(task.current_cue() == 4);
  auto fb = task.step(act(2, 2.0), 2.0);
  REQUIRE(fb);
  CHECK_FALSE(fb->correct);
  CHECK(fb->next_cue == 4);
  fb = task.step(act(4, 3.0), 3.0);
  CHECK(fb->correct);
  CHECK(fb->next_cue == 4);
  task.step(act(4, 4.0), 4.0);
  CHECK(task.current_cue() == 7);
  CHECK_FALSE(task.step(std::nullopt, 4.5));
  fb = task.step(act(7, 6.5), 6.6);
  CHECK(fb->correct);
  CHECK_FALSE(fb->next_cue);
  CHECK(task.done());
  CHECK(task.tally().correct == 3);
  CHECK(task.tally().incorrect == 1);
  CHECK(task.tally().t_end == 6.5);
  CHECK_FALSE(task.current_cue());
}

TEST_CASE("speller deadline stops without adding errors") {
  auto c = SpellerTaskConfig::generate(3);
  SpellerTask task(c, 0.0, 90.0);
  task.step(std::nullopt, 89.9);
  CHECK_FALSE(task.done());
  task.step(std::nullopt, 90.0);
  CHECK(task.done());
  CHECK(task.tally().incorrect == 0);
  CHECK(task.tally().t_end == 90.0);
}

TEST_CASE("speller config validation and json") {
  SpellerTaskConfig c = SpellerTaskConfig::generate(1, 4, 3);
  CHECK(c.tutorial);
  c.tutorial = false;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SpellerTaskConfig::generate(2);
  c.cue_sequence.pop_back();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SpellerTaskConfig::generate(2);
  const auto back = nlohmann::json(c).get<SpellerTaskConfig>();
  CHECK(back.cue_sequence == c.cue_sequence);
  const auto cx = ComplexTaskConfig::generate(2, 0.0);
  const auto cb = nlohmann::json(cx).get<ComplexTaskConfig>();
  CHECK(cb.npc_schedule.size() == cx.npc_schedule.size());
  CHECK(cb.npc_schedule[3].start == cx.npc_schedule[3].start);
  CHECK_THROWS_AS(nlohmann::json({{"n_targets", 5}}).get<ComplexTaskConfig>(), ParseError);
  CHECK_THROWS_AS(task_type_from_string("maze"), ParseError);
}

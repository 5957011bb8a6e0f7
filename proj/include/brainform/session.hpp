#pragma once

#include "brainform/classifier.hpp"
#include "brainform/game.hpp"
#include "brainform/metrics.hpp"
#include "brainform/pipeline.hpp"
#include "brainform/protocol.hpp"
#include "brainform/stimulus.hpp"
#include "brainform/subject.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace brainform {

// Deterministic child seed for a named stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0);

// Raw samples as acquired, with the trigger code written on each sample.
struct EegRecord {
  double fs{250.0};
  std::vector<SampleFrame> frames;
  std::vector<int> triggers;

  void append(const SampleFrame& f, int trigger) {
    frames.push_back(f);
    triggers.push_back(trigger);
  }
};

struct CalibrationResult {
  CalibrationReport report;
  LdaModel model;
  std::vector<Epoch> epochs;
};

// 10 flashing positions, one cued, for a fixed number of cycles, followed by
// blank ticks until the last epoch is complete.
class CalibrationDriver {
 public:
  CalibrationDriver(std::int64_t start_tick, int cued_target,
                    std::size_t positions = 10, std::size_t cycles = 60,
                    OrderPolicy policy = OrderPolicy::RoundRobin, std::uint64_t schedule_seed = 0);

  int cued_target() const { return cued_; }
  std::int64_t start_tick() const { return start_tick_; }
  std::size_t n_positions() const { return positions_; }

  // Flash for the given tick; absent during the blank tail.
  std::optional<TriggerEvent> flash_for(std::int64_t tick);
  void present(const TriggerEvent& trigger) { queue_.add(trigger); }
  void after_tick(const FilteredHistory& history);
  bool done(std::int64_t next_tick) const;

  std::size_t epochs_collected() const { return epochs_.size(); }

  // Fits on every epoch and grades by stratified cross-validation.
  CalibrationResult fit(const EngineConfig& config, std::uint64_t cv_seed) const;

 private:
  std::int64_t start_tick_;
  int cued_;
  std::size_t positions_;
  std::size_t cycles_;
  FlashSchedule schedule_;
  EpochQueue queue_;
  std::vector<Epoch> epochs_;
};

struct RunPlan {
  std::string run_id;
  TaskType task{TaskType::Speller};
  bool tutorial{false};
  StimContext context{StimContext::TaskB};
  ComplexTaskConfig complex;
  SpellerTaskConfig speller;
  std::optional<double> deadline_s;  // relative to the run start
  double max_run_seconds{300.0};     // safety cap for untimed runs
  TextureSpec texture;
  OrderPolicy policy{OrderPolicy::RoundRobin};
  std::uint64_t schedule_seed{0};

  std::size_t n_targets() const;
};

struct RunStep {
  std::optional<Activation> activation;
  std::optional<SpellerFeedback> feedback;
  bool finished{false};
};

// One game run: flash scheduling, online decoding, and task scoring.
// Used identically by live sessions and by replay.
class RunDriver {
 public:
  RunDriver(RunPlan plan, const LdaModel& model, const EngineConfig& config, std::int64_t start_tick);
  // The decoder points at model_, so the driver stays put.
  RunDriver(const RunDriver&) = delete;
  RunDriver& operator=(const RunDriver&) = delete;

  const RunPlan& plan() const { return plan_; }
  std::int64_t start_tick() const { return start_tick_; }
  double t_start() const { return tick_time(start_tick_); }

  TriggerEvent flash_for(std::int64_t tick);
  void present(const TriggerEvent& trigger) { decoder_.add_trigger(trigger); }

  // Classifies completed epochs, ticks the gate at t_now and scores the task.
  RunStep after_tick(const FilteredHistory& history, double t_now);

  // Target the task currently asks for (cue, or color of the NPC on screen).
  std::optional<int> intended_target(double t) const;
  std::optional<int> current_cue() const;

  bool done() const;
  bool capped() const { return capped_; }
  RunTally tally() const;
  const std::vector<Activation>& activations() const { return activations_; }
  const DecisionGate& gate() const { return decoder_.gate(); }

 private:
  RunPlan plan_;
  LdaModel model_;
  std::int64_t start_tick_;
  FlashSchedule schedule_;
  OnlineDecoder decoder_;
  std::variant<ComplexTask, SpellerTask> task_;
  std::vector<Activation> activations_;
  bool capped_{false};
};

struct CalibrationRecord {
  Phase phase{Phase::Calibration1};
  std::size_t attempt{1};
  int cued_target{0};
  std::int64_t start_tick{0};
  std::int64_t end_tick{0};
  std::uint64_t cv_seed{0};
  CalibrationReport report;
  std::optional<std::size_t> model_index;  // set when the grade was accepted
  TextureSpec texture;
};

struct RunRecord {
  RunPlan plan;
  Phase phase{Phase::Run1};
  std::int64_t start_tick{0};
  std::int64_t end_tick{0};
  std::size_t model_index{0};
  std::size_t calibration_attempts{0};
  double cv_accuracy{0.0};
  bool capped{false};
  RunTally tally;
  std::vector<Activation> activations;
};

struct SessionConfig {
  std::string session_id{"session"};
  std::uint64_t seed{1};
  SubjectProfile profile;
  EngineConfig engine;
  std::pair<TextureSpec, TextureSpec> textures{TextureSpec::checkerboard(), TextureSpec::grain()};
  // Probability of attending the intended target for a whole flash cycle.
  double compliance{0.95};
  std::size_t calibration_cycles{60};
  std::size_t max_calibration_attempts{10};
  std::size_t speller_cues{6};
  std::size_t tutorial_cues{3};
  std::size_t tutorial_windows{3};
  double timed_deadline_s{90.0};
  double max_run_seconds{300.0};
  // Texture slot chosen for free play; absent declines it.
  std::optional<std::size_t> free_play_texture{0};
  OrderPolicy order{OrderPolicy::RoundRobin};
  bool record_eeg{true};

  void validate() const;
};

// Plan for a run starting at start_tick within the given protocol phase.
// Task content and flash order derive from the session seed and run id.
RunPlan make_run_plan(const SessionConfig& config, Phase phase, const std::string& run_id, TaskType task,
                      std::int64_t start_tick, const TextureSpec& texture);

struct SessionLog {
  std::string session_id;
  std::uint64_t seed{0};
  SubjectProfile profile;
  EngineConfig engine;
  std::pair<TextureSpec, TextureSpec> textures;
  double compliance{0.95};
  std::vector<Phase> trace;
  bool aborted{false};
  std::int64_t total_ticks{0};
  std::vector<LdaModel> models;
  std::vector<CalibrationRecord> calibrations;
  std::vector<RunRecord> runs;
};

struct SessionResult {
  SessionLog log;
  EegRecord eeg;
};

// Scripted subject playing the full protocol.
SessionResult run_session(const SessionConfig& config);

// Scripted attention with per-cycle compliance draws.
class ScriptedAttention {
 public:
  ScriptedAttention(double compliance, std::uint64_t seed);

  // Call once per flash; draws a new compliance decision at each cycle start.
  AttentionState decide(std::optional<int> intended, std::int64_t flash_index, std::size_t n_targets,
                        int run_index);

 private:
  double compliance_;
  std::mt19937_64 rng_;
  bool compliant_{true};
};

}  // namespace brainform

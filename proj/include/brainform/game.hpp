#pragma once

#include "brainform/gate.hpp"
#include "brainform/metrics.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace brainform {

enum class TaskType { Complex, Speller };

std::string_view to_string(TaskType t);
TaskType task_type_from_string(std::string_view s);

struct NpcWindow {
  int color{0};
  double start{0.0};
  double end{0.0};
};

struct ComplexTaskConfig {
  std::size_t n_targets{5};
  std::vector<NpcWindow> npc_schedule;
  // Reduced target counts are only legal for tutorial runs.
  bool tutorial{false};

  void validate() const;

  // Seeded colors; windows of window_s separated by gap_s, first one after a gap.
  static ComplexTaskConfig generate(std::uint64_t seed, double t_start, std::size_t n_targets = 5,
                                    std::size_t n_windows = 7, double window_s = 3.0,
                                    double gap_s = 2.5);
};

// Laser task: hit each NPC by activating its color while it is on screen.
// Only expired unhit windows count as errors; wrong colors are ignored.
class ComplexTask {
 public:
  ComplexTask(ComplexTaskConfig config, double t_start, std::optional<double> deadline = std::nullopt,
              TextureSpec texture = {});

  // Processes an optional activation, then expires windows ending before t_now.
  void step(const std::optional<Activation>& activation, double t_now);

  // Ends the run at t_end; windows still open count as misses.
  void expire(double t_end);

  bool done() const { return done_; }
  const RunTally& tally() const { return tally_; }
  const ComplexTaskConfig& config() const { return config_; }

  // Color of the NPC on screen at t, if any.
  std::optional<int> active_color(double t) const;

 private:
  void finish(double t_end);

  ComplexTaskConfig config_;
  RunTally tally_;
  std::optional<double> deadline_;
  std::vector<bool> resolved_;
  bool done_{false};
};

struct SpellerTaskConfig {
  std::size_t n_targets{10};
  std::size_t n_cues{6};
  std::vector<int> cue_sequence;
  bool tutorial{false};

  void validate() const;

  static SpellerTaskConfig generate(std::uint64_t seed, std::size_t n_targets = 10,
                                    std::size_t n_cues = 6);
};

struct SpellerFeedback {
  bool correct{false};
  int selected{0};
  int cue{0};                   // cue the selection was judged against
  std::optional<int> next_cue;  // absent once the door unlocks
};

// Symbol spelling: each correct selection advances the cue, each wrong one
// is an error and the cue stays. Ends after n_cues correct selections.
class SpellerTask {
 public:
  SpellerTask(SpellerTaskConfig config, double t_start, std::optional<double> deadline = std::nullopt,
              TextureSpec texture = {});

  std::optional<SpellerFeedback> step(const std::optional<Activation>& activation, double t_now);

  // Ends the run at t_end without further errors.
  void expire(double t_end);

  bool done() const { return done_; }
  const RunTally& tally() const { return tally_; }
  const SpellerTaskConfig& config() const { return config_; }
  std::optional<int> current_cue() const;

 private:
  SpellerTaskConfig config_;
  RunTally tally_;
  std::optional<double> deadline_;
  std::size_t cue_index_{0};
  bool done_{false};
};

void to_json(nlohmann::json& j, const ComplexTaskConfig& c);
void from_json(const nlohmann::json& j, ComplexTaskConfig& c);
void to_json(nlohmann::json& j, const SpellerTaskConfig& c);
void from_json(const nlohmann::json& j, SpellerTaskConfig& c);

}  // namespace brainform

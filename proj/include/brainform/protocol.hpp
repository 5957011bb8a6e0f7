#pragma once

#include "brainform/classifier.hpp"
#include "brainform/stimulus.hpp"

#include <array>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace brainform {

enum class Phase {
  Setup,
  Calibration1,
  Tutorial,
  Run1,
  Questionnaire1,
  Calibration2,
  Run2,
  TimedRun,
  Questionnaire2,
  OptionalCalibration,
  FreePlay,
  Done,
  Aborted,
};

std::string_view to_string(Phase p);
Phase phase_from_string(std::string_view s);

bool is_calibration(Phase p);
bool is_run(Phase p);

enum class ProtocolEventKind {
  Begin,
  CalibrationGraded,
  RunCompleted,
  QuestionnaireDone,
  ChooseFreePlay,
  DeclineFreePlay,
};

struct ProtocolEvent {
  ProtocolEventKind kind{ProtocolEventKind::Begin};
  Grade grade{Grade::Red};            // CalibrationGraded
  std::size_t preferred_texture{0};   // ChooseFreePlay: index into texture_order

  static ProtocolEvent begin() { return {ProtocolEventKind::Begin}; }
  static ProtocolEvent graded(Grade g) { return {ProtocolEventKind::CalibrationGraded, g}; }
  static ProtocolEvent run_completed() { return {ProtocolEventKind::RunCompleted}; }
  static ProtocolEvent questionnaire_done() { return {ProtocolEventKind::QuestionnaireDone}; }
  static ProtocolEvent choose_free_play(std::size_t texture) {
    return {ProtocolEventKind::ChooseFreePlay, Grade::Red, texture};
  }
  static ProtocolEvent decline_free_play() { return {ProtocolEventKind::DeclineFreePlay}; }
};

// Two texture sessions, calibration repeated until at least yellow, an
// optional free-play extension. Every phase entry (including calibration
// repeats) is appended to the trace.
class ProtocolState {
 public:
  explicit ProtocolState(std::pair<TextureSpec, TextureSpec> texture_order,
                         std::size_t max_calibration_attempts = 10);

  Phase phase() const { return phase_; }
  const std::vector<Phase>& trace() const { return trace_; }

  // Texture shown in the current phase.
  const TextureSpec& texture() const;
  const std::pair<TextureSpec, TextureSpec>& texture_order() const { return texture_order_; }

  // Attempts made in the calibration phase with the given session slot
  // (0: first session, 1: second session, 2: optional).
  std::size_t calibration_attempts(std::size_t slot) const { return attempts_.at(slot); }
  std::size_t current_calibration_attempts() const;

  // Index of the game-play run the phase belongs to; drives the simulated
  // learning effect.
  int run_index() const;

  // Throws ProtocolError on an illegal transition.
  void advance(const ProtocolEvent& event);

 private:
  void enter(Phase p);
  static std::size_t calibration_slot(Phase p);

  std::pair<TextureSpec, TextureSpec> texture_order_;
  std::size_t max_attempts_;
  Phase phase_{Phase::Setup};
  std::vector<Phase> trace_;
  std::array<std::size_t, 3> attempts_{};
  std::size_t free_play_texture_{0};
};

ProtocolState advance_protocol(ProtocolState state, const ProtocolEvent& event);

}  // namespace brainform

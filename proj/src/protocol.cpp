#include "brainform/protocol.hpp"

#include <string>

namespace brainform {

namespace {

constexpr std::array<std::pair<Phase, std::string_view>, 13> kPhaseNames{{
    {Phase::Setup, "setup"},
    {Phase::Calibration1, "calibration1"},
    {Phase::Tutorial, "tutorial"},
    {Phase::Run1, "run1"},
    {Phase::Questionnaire1, "questionnaire1"},
    {Phase::Calibration2, "calibration2"},
    {Phase::Run2, "run2"},
    {Phase::TimedRun, "timed_run"},
    {Phase::Questionnaire2, "questionnaire2"},
    {Phase::OptionalCalibration, "optional_calibration"},
    {Phase::FreePlay, "free_play"},
    {Phase::Done, "done"},
    {Phase::Aborted, "aborted"},
}};

}  // namespace

std::string_view to_string(Phase p) {
  for (const auto& [phase, name] : kPhaseNames) {
    if (phase == p) return name;
  }
  return "unknown";
}

Phase phase_from_string(std::string_view s) {
  for (const auto& [phase, name] : kPhaseNames) {
    if (name == s) return phase;
  }
  throw ParseError("unknown protocol phase '" + std::string(s) + "'");
}

bool is_calibration(Phase p) {
  return p == Phase::Calibration1 || p == Phase::Calibration2 || p == Phase::OptionalCalibration;
}

bool is_run(Phase p) {
  return p == Phase::Tutorial || p == Phase::Run1 || p == Phase::Run2 || p == Phase::TimedRun ||
         p == Phase::FreePlay;
}

ProtocolState::ProtocolState(std::pair<TextureSpec, TextureSpec> texture_order,
                             std::size_t max_calibration_attempts)
    : texture_order_(std::move(texture_order)), max_attempts_(max_calibration_attempts) {
  if (max_attempts_ == 0) throw ConfigError("at least one calibration attempt is required");
  trace_.push_back(Phase::Setup);
}

const TextureSpec& ProtocolState::texture() const {
  switch (phase_) {
    case Phase::Calibration2:
    case Phase::Run2:
    case Phase::TimedRun:
    case Phase::Questionnaire2:
      return texture_order_.second;
    case Phase::OptionalCalibration:
    case Phase::FreePlay:
      return free_play_texture_ == 0 ? texture_order_.first : texture_order_.second;
    default:
      return texture_order_.first;
  }
}

std::size_t ProtocolState::calibration_slot(Phase p) {
  switch (p) {
    case Phase::Calibration1: return 0;
    case Phase::Calibration2: return 1;
    default: return 2;
  }
}

std::size_t ProtocolState::current_calibration_attempts() const {
  return is_calibration(phase_) ? attempts_[calibration_slot(phase_)] : 0;
}

int ProtocolState::run_index() const {
  switch (phase_) {
    case Phase::Calibration2:
    case Phase::Run2:
    case Phase::Questionnaire2:
      return 1;
    case Phase::TimedRun:
      return 2;
    case Phase::OptionalCalibration:
    case Phase::FreePlay:
    case Phase::Done:
      return 3;
    default:
      return 0;
  }
}

void ProtocolState::enter(Phase p) {
  phase_ = p;
  trace_.push_back(p);
}

void ProtocolState::advance(const ProtocolEvent& event) {
  auto illegal = [&]() {
    return ProtocolError("event not legal in phase '" + std::string(to_string(phase_)) + "'");
  };
  switch (event.kind) {
    case ProtocolEventKind::Begin:
      if (phase_ != Phase::Setup) throw illegal();
      enter(Phase::Calibration1);
      return;

    case ProtocolEventKind::CalibrationGraded: {
      if (!is_calibration(phase_)) throw illegal();
      std::size_t& attempts = attempts_[calibration_slot(phase_)];
      ++attempts;
      if (event.grade == Grade::Red) {
        if (attempts > max_attempts_) {
          enter(Phase::Aborted);
        } else {
          enter(phase_);
        }
        return;
      }
      if (phase_ == Phase::Calibration1) enter(Phase::Tutorial);
      else if (phase_ == Phase::Calibration2) enter(Phase::Run2);
      else enter(Phase::FreePlay);
      return;
    }

    case ProtocolEventKind::RunCompleted:
      switch (phase_) {
        case Phase::Tutorial: enter(Phase::Run1); return;
        case Phase::Run1: enter(Phase::Questionnaire1); return;
        case Phase::Run2: enter(Phase::TimedRun); return;
        case Phase::TimedRun: enter(Phase::Questionnaire2); return;
        case Phase::FreePlay: enter(Phase::Done); return;
        default: throw illegal();
      }

    case ProtocolEventKind::QuestionnaireDone:
      if (phase_ != Phase::Questionnaire1) throw illegal();
      enter(Phase::Calibration2);
      return;

    case ProtocolEventKind::ChooseFreePlay:
      if (phase_ != Phase::Questionnaire2) throw illegal();
      if (event.preferred_texture > 1) throw ProtocolError("preferred texture index must be 0 or 1");
      free_play_texture_ = event.preferred_texture;
      enter(Phase::OptionalCalibration);
      return;

    case ProtocolEventKind::DeclineFreePlay:
      if (phase_ != Phase::Questionnaire2) throw illegal();
      enter(Phase::Done);
      return;
  }
  throw illegal();
}

ProtocolState advance_protocol(ProtocolState state, const ProtocolEvent& event) {
  state.advance(event);
  return state;
}

}  // namespace brainform

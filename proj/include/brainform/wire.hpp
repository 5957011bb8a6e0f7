#pragma once

#include "brainform/session.hpp"

#include "json.hpp"

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace brainform {

inline constexpr int kWireVersion = 1;

// One interactive session driven by wire messages. Time advances only through
// tick(); the caller decides the pacing. Every outgoing message carries the
// session id and a gapless sequence number.
//
// Client messages:
//   {"type":"attend","target":3|null}
//   {"type":"start_phase","phase":"calibration1"}   (also "optional_calibration"
//       with optional "texture":0|1, or "done" to decline free play)
//   {"type":"configure","profile":{...overrides}}    (before the first phase)
// Server events: flash, confidence, activation, feedback, cue, phase,
// calibration, run_summary, and error replies.
class LiveSession {
 public:
  LiveSession(std::string id, SessionConfig config);

  const std::string& id() const { return id_; }
  Phase phase() const { return protocol_.phase(); }
  bool busy() const { return cal_.has_value() || run_ != nullptr; }
  std::optional<int> attended() const { return attended_; }
  std::uint64_t last_seq() const { return seq_; }
  const std::vector<RunRecord>& runs() const { return runs_; }
  const std::vector<CalibrationRecord>& calibrations() const { return calibrations_; }
  std::optional<int> calibration_cue() const;

  // Malformed or illegal messages produce an error reply; state is untouched.
  std::vector<nlohmann::json> handle(const nlohmann::json& msg);
  std::vector<nlohmann::json> handle_line(std::string_view line);

  // Advances one 100 ms flash tick.
  std::vector<nlohmann::json> tick();

  // Greeting sent when a client attaches.
  std::vector<nlohmann::json> hello(const nlohmann::json& info);
  std::vector<nlohmann::json> error_reply(const std::string& reason);

  // Messages with seq > after still held for resumption.
  std::vector<nlohmann::json> since(std::uint64_t after) const;

 private:
  nlohmann::json emit(std::string type, nlohmann::json body, std::vector<nlohmann::json>& out);
  void error(const std::string& reason, std::vector<nlohmann::json>& out);
  void enter_phase_events(std::vector<nlohmann::json>& out);
  void start_calibration(std::vector<nlohmann::json>& out);
  void start_next_run(std::vector<nlohmann::json>& out);
  void finish_run(std::vector<nlohmann::json>& out);
  void start_phase(const std::string& name, const nlohmann::json& msg, std::vector<nlohmann::json>& out);

  std::string id_;
  SessionConfig cfg_;
  std::unique_ptr<BciEngine> engine_;
  ProtocolState protocol_;
  std::optional<CalibrationDriver> cal_;
  std::unique_ptr<RunDriver> run_;
  std::vector<std::pair<std::string, TaskType>> pending_runs_;
  std::optional<int> attended_;
  std::optional<int> last_cue_;
  std::vector<LdaModel> models_;
  std::vector<CalibrationRecord> calibrations_;
  std::vector<RunRecord> runs_;
  std::size_t active_model_{0};
  std::size_t active_calibration_{0};
  bool started_{false};
  std::uint64_t seq_{0};
  std::deque<nlohmann::json> outbox_;
};

}  // namespace brainform

#pragma once

#include "brainform/session.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace brainform {

inline constexpr int kSessionFormatVersion = 1;
inline constexpr std::string_view kEegHeader = "t,fz,c3,cz,c4,pz,po7,oz,po8,trigger";

// One row per sample: t with 6 decimals, µV with 4, integer trigger code.
std::string format_eeg_csv(const EegRecord& eeg);
// Strict: header, column count, numeric fields, timestamps and the final
// newline are all checked. Throws ParseError naming the line.
EegRecord parse_eeg_csv(std::string_view text, double fs);

// The per-run record with exactly the documented field set. Throws InputError
// for a run that never completed.
nlohmann::json run_metadata(const RunRecord& run, std::uint64_t rng_seed);

nlohmann::json session_to_json(const SessionLog& log);
// Throws ParseError naming the offending field or a version mismatch.
SessionLog session_from_json(const nlohmann::json& j);

// Canonical text form: sorted keys, two-space indent, trailing newline.
std::string dump_json(const nlohmann::json& j);

// Layout: session.json, eeg.csv, runs/<run_id>.json. Throws IoError.
void write_session(const std::filesystem::path& dir, const SessionResult& session);
// Throws IoError when files are missing and ParseError on malformed content.
SessionResult read_session(const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

struct RunReplay {
  std::string run_id;
  RunTally recorded;
  RunTally replayed;
  std::vector<Activation> recorded_activations;
  std::vector<Activation> replayed_activations;
  std::int64_t recorded_end_tick{0};
  std::int64_t replayed_end_tick{0};
  std::vector<std::string> divergences;

  bool identical() const { return divergences.empty(); }
};

struct ReplayReport {
  std::vector<RunReplay> runs;
  std::vector<std::string> stream_issues;  // triggers found off the tick grid

  bool identical() const;
};

// Filters the recorded raw stream once, from the first sample, and re-decodes
// every run with its recorded model and task configuration, taking flashes
// from the trigger column.
ReplayReport replay_session(const SessionLog& log, const EegRecord& eeg);

}  // namespace brainform

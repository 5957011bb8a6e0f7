#pragma once

#include "brainform/metrics.hpp"
#include "brainform/session.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace brainform {

// checker / grain: that texture in session 1 for everyone; alternate:
// counterbalanced by subject index. Session 2 always uses the other one.
enum class TexturePolicy { Checker, Grain, Alternate };

TexturePolicy texture_policy_from_string(std::string_view s);

struct SimConfig {
  std::size_t n_subjects{20};
  // 3 stops after the timed run; 4 adds free play.
  int runs{4};
  TexturePolicy texture{TexturePolicy::Alternate};
  std::uint64_t master_seed{1};
  SubjectProfile profile;
  double compliance{0.95};
  double deadline_s{90.0};
  std::size_t speller_cues{6};
  std::optional<std::filesystem::path> out_dir;  // nothing is written when absent
  bool record_eeg{true};
  std::size_t threads{0};  // 0: hardware concurrency

  void validate() const;
};

SessionConfig subject_config(const SimConfig& sim, std::size_t subject);

struct SimReport {
  std::vector<SessionLog> sessions;
  std::vector<RunSummary> rows;
  std::vector<std::string> aborted;  // session ids
};

// Rows t1a..t4b over the sessions that reached each run.
std::vector<RunSummary> summarize_sessions(const std::vector<SessionLog>& sessions);

std::string format_report(const SimReport& report);
nlohmann::json report_json(const SimReport& report);

// Runs every subject (in parallel, results in subject order) and, with an
// output directory, writes subject_NN/ trees plus summary.json/summary.txt.
SimReport run_sim(const SimConfig& config);

// Reads every session below dir (dir itself or its subject_* children).
std::vector<std::filesystem::path> find_session_dirs(const std::filesystem::path& dir);

}  // namespace brainform

#include "brainform/batch.hpp"

#include "brainform/recorder.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

namespace brainform {

namespace fs = std::filesystem;

TexturePolicy texture_policy_from_string(std::string_view s) {
  if (s == "checker" || s == "checkerboard") return TexturePolicy::Checker;
  if (s == "grain") return TexturePolicy::Grain;
  if (s == "alternate") return TexturePolicy::Alternate;
  throw ConfigError("texture policy must be checker, grain or alternate");
}

void SimConfig::validate() const {
  if (n_subjects == 0) throw ConfigError("at least one subject is required");
  if (runs != 3 && runs != 4) throw ConfigError("runs must be 3 (through the timed run) or 4 (with free play)");
  profile.validate();
}

SessionConfig subject_config(const SimConfig& sim, std::size_t subject) {
  char id[32];
  std::snprintf(id, sizeof id, "subject_%02zu", subject);
  SessionConfig c;
  c.session_id = id;
  c.seed = derive_seed(sim.master_seed, "subject", subject);
  c.profile = sim.profile;
  c.profile.seed = derive_seed(c.seed, "eeg");
  c.compliance = sim.compliance;
  c.timed_deadline_s = sim.deadline_s;
  c.speller_cues = sim.speller_cues;
  c.record_eeg = sim.record_eeg && sim.out_dir.has_value();
  const TextureSpec checker = TextureSpec::checkerboard();
  const TextureSpec grain = TextureSpec::grain(8, derive_seed(c.seed, "grain"));
  bool checker_first = sim.texture == TexturePolicy::Checker ||
                       (sim.texture == TexturePolicy::Alternate && subject % 2 == 0);
  c.textures = checker_first ? std::pair{checker, grain} : std::pair{grain, checker};
  // Free play reuses the first session's texture.
  if (sim.runs == 4) {
    c.free_play_texture = 0;
  } else {
    c.free_play_texture.reset();
  }
  return c;
}

std::vector<RunSummary> summarize_sessions(const std::vector<SessionLog>& sessions) {
  std::map<std::string, std::vector<RunMetrics>> by_run;
  for (const auto& s : sessions) {
    for (const auto& r : s.runs) {
      if (r.plan.tutorial) continue;
      by_run[r.plan.run_id].push_back(compute_metrics(r.tally));
    }
  }
  std::vector<RunSummary> rows;
  for (const auto& [id, metrics] : by_run) rows.push_back(summarize_runs(metrics, id));
  return rows;
}

std::string format_report(const SimReport& report) {
  std::ostringstream out;
  out << format_summary_table(report.rows);
  std::size_t calibrations = 0;
  std::vector<double> per_session;
  for (const auto& s : report.sessions) {
    calibrations += s.calibrations.size();
    per_session.push_back(static_cast<double>(s.calibrations.size()));
  }
  const Stat cal = describe(per_session);
  char line[160];
  std::snprintf(line, sizeof line, "calibration blocks per session: mean %.2f, median %.1f (%zu total)\n",
                cal.mean, cal.median, calibrations);
  out << line;
  out << "sessions: " << report.sessions.size() << ", aborted: " << report.aborted.size();
  if (!report.aborted.empty()) {
    out << " (";
    for (std::size_t i = 0; i < report.aborted.size(); ++i) out << (i ? ", " : "") << report.aborted[i];
    out << ")";
  }
  out << "\n";
  return out.str();
}

nlohmann::json report_json(const SimReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) rows.push_back(r);
  nlohmann::json sessions = nlohmann::json::array();
  for (const auto& s : report.sessions) {
    nlohmann::json cv = nlohmann::json::array();
    for (const auto& c : s.calibrations) cv.push_back(c.report.cv_accuracy);
    sessions.push_back({{"session_id", s.session_id},
                        {"aborted", s.aborted},
                        {"calibration_cv", cv},
                        {"runs", s.runs.size()}});
  }
  return {{"rows", rows}, {"sessions", sessions}, {"aborted", report.aborted}};
}

SimReport run_sim(const SimConfig& config) {
  config.validate();
  if (config.out_dir) {
    std::error_code ec;
    fs::create_directories(*config.out_dir, ec);
    if (ec) throw IoError("cannot create '" + config.out_dir->string() + "': " + ec.message());
  }
  SimReport report;
  report.sessions.resize(config.n_subjects);
  std::vector<std::exception_ptr> failures(config.n_subjects);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < config.n_subjects; i = next++) {
      try {
        const SessionConfig sc = subject_config(config, i);
        SessionResult r = run_session(sc);
        if (config.out_dir) write_session(*config.out_dir / sc.session_id, r);
        report.sessions[i] = std::move(r.log);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  std::size_t n_threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, config.n_subjects);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  for (const auto& s : report.sessions) {
    if (s.aborted) report.aborted.push_back(s.session_id);
  }
  report.rows = summarize_sessions(report.sessions);
  if (config.out_dir) {
    write_text_file(*config.out_dir / "summary.json", dump_json(report_json(report)));
    write_text_file(*config.out_dir / "summary.txt", format_report(report));
  }
  return report;
}

std::vector<fs::path> find_session_dirs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (fs::exists(dir / "session.json")) {
    out.push_back(dir);
    return out;
  }
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_directory() && fs::exists(entry.path() / "session.json")) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace brainform

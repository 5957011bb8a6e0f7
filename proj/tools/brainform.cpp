#include "brainform/batch.hpp"
#include "brainform/recorder.hpp"
#include "brainform/serve.hpp"

#include "CLI11.hpp"

#include <csignal>
#include <cstdlib>
#include <iostream>

namespace fs = std::filesystem;
using namespace brainform;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiverged = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitSchema = 4;

SessionServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

struct ProfileFlags {
  std::optional<std::string> file;
  std::optional<double> erp_amp, n200_amp, noise_rms, lapse_rate, jitter, learning_rate, line_amp;

  void add(CLI::App* app) {
    app->add_option("--profile", file, "JSON file with subject profile overrides");
    app->add_option("--erp-amp", erp_amp, "P300 amplitude (uV)");
    app->add_option("--n200-amp", n200_amp, "N200 amplitude (uV)");
    app->add_option("--noise-rms", noise_rms, "Background noise RMS (uV)");
    app->add_option("--lapse-rate", lapse_rate, "Probability an attended flash evokes nothing");
    app->add_option("--jitter", jitter, "Latency jitter SD (s)");
    app->add_option("--learning-rate", learning_rate, "Amplitude gain per run");
    app->add_option("--line-amp", line_amp, "50 Hz line noise amplitude (uV)");
  }

  SubjectProfile apply(SubjectProfile p) const {
    if (file) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_text_file(*file));
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(*file + ": " + e.what());
      }
      from_json(j, p);
    }
    if (erp_amp) p.erp_amp = *erp_amp;
    if (n200_amp) p.n200_amp = *n200_amp;
    if (noise_rms) p.noise_rms = *noise_rms;
    if (lapse_rate) p.lapse_rate = *lapse_rate;
    if (jitter) p.latency_jitter_sd = *jitter;
    if (learning_rate) p.learning_rate = *learning_rate;
    if (line_amp) p.line_amp = *line_amp;
    p.validate();
    return p;
  }
};

fs::path default_out_dir() {
  if (const char* env = std::getenv("BRAINFORM_OUT_DIR"); env && *env) return env;
  return "brainform_out";
}

int cmd_sim(const SimConfig& base, const ProfileFlags& flags, const std::string& texture,
            const std::optional<std::string>& out, bool no_output) {
  SimConfig cfg = base;
  cfg.texture = texture_policy_from_string(texture);
  cfg.profile = flags.apply(cfg.profile);
  if (!no_output) cfg.out_dir = out ? fs::path(*out) : default_out_dir();
  const SimReport report = run_sim(cfg);
  std::cout << format_report(report);
  if (cfg.out_dir) std::cout << "output: " << cfg.out_dir->string() << "\n";
  return kExitOk;
}

int cmd_replay(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    std::cerr << "replay: '" << dir << "' is not a directory\n";
    return kExitUsage;
  }
  const auto sessions = find_session_dirs(dir);
  if (sessions.empty()) {
    std::cerr << "replay: no session.json found in '" << dir << "' or its subdirectories\n";
    return kExitUsage;
  }
  bool all_same = true;
  for (const auto& path : sessions) {
    const SessionResult s = read_session(path);
    const ReplayReport rep = replay_session(s.log, s.eeg);
    std::cout << s.log.session_id << ":\n";
    for (const auto& issue : rep.stream_issues) std::cout << "  stream: " << issue << "\n";
    for (const auto& r : rep.runs) {
      std::cout << "  " << r.run_id << " recorded " << r.recorded.correct << "/" << r.recorded.incorrect
                << " replayed " << r.replayed.correct << "/" << r.replayed.incorrect << " "
                << (r.identical() ? "identical" : "DIVERGED") << "\n";
      for (const auto& d : r.divergences) std::cout << "    " << d << "\n";
    }
    all_same = all_same && rep.identical();
  }
  std::cout << (all_same ? "replay identical\n" : "replay diverged\n");
  return all_same ? kExitOk : kExitDiverged;
}

int cmd_report(const std::string& dir, bool as_json) {
  if (!fs::is_directory(dir)) {
    std::cerr << "report: '" << dir << "' is not a directory\n";
    return kExitUsage;
  }
  const auto paths = find_session_dirs(dir);
  if (paths.empty()) {
    std::cerr << "report: no sessions found in '" << dir << "'\n";
    return kExitUsage;
  }
  SimReport report;
  for (const auto& p : paths) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(p / "session.json"));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError((p / "session.json").string() + ": " + e.what());
    }
    report.sessions.push_back(session_from_json(j));
    if (report.sessions.back().aborted) report.aborted.push_back(report.sessions.back().session_id);
  }
  report.rows = summarize_sessions(report.sessions);
  if (as_json) {
    std::cout << dump_json(report_json(report));
  } else {
    std::cout << format_report(report);
  }
  return kExitOk;
}

int cmd_serve(ServeOptions opts, const ProfileFlags& flags) {
  opts.session.profile = flags.apply(opts.session.profile);
  SessionServer server(opts);
  const int port = server.listen();
  std::cout << "listening on " << opts.host << ":" << port << (opts.wall_clock ? " (wall clock)" : " (simulated time)")
            << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.serve();
  g_server = nullptr;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated ERP-BCI engine: batch simulation, replay, reporting and a live session service"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BRAINFORM_VERSION);

  SimConfig sim;
  ProfileFlags sim_profile;
  std::string texture = "alternate";
  std::optional<std::string> out;
  bool no_output = false;
  auto* sim_cmd = app.add_subcommand("sim", "Run the full protocol for simulated subjects");
  sim_cmd->add_option("--subjects", sim.n_subjects, "Number of subjects")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim.master_seed, "Master seed");
  sim_cmd->add_option("--texture", texture, "checker, grain or alternate (session-1 texture)")
      ->check(CLI::IsMember({"checker", "grain", "alternate"}));
  sim_cmd->add_option("--runs", sim.runs, "3: up to the timed run, 4: add free play")->check(CLI::IsMember({3, 4}));
  sim_cmd->add_option("--deadline", sim.deadline_s, "Timed-run deadline (s)")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--compliance", sim.compliance, "Per-cycle probability of attending the cue")
      ->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--cues", sim.speller_cues, "Correct selections per speller run")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (0: all cores)");
  sim_cmd->add_option("--out", out, "Output directory (default $BRAINFORM_OUT_DIR or ./brainform_out)");
  sim_cmd->add_flag("--no-output", no_output, "Print the summary only");
  sim_profile.add(sim_cmd);

  std::string replay_dir;
  auto* replay_cmd = app.add_subcommand("replay", "Re-decode recorded sessions and compare with the record");
  replay_cmd->add_option("dir", replay_dir, "Session directory or sim output tree")->required();

  std::string report_dir;
  bool report_json_flag = false;
  auto* report_cmd = app.add_subcommand("report", "Summarize recorded sessions");
  report_cmd->add_option("dir", report_dir, "Session directory or sim output tree")->required();
  report_cmd->add_flag("--json", report_json_flag, "Emit JSON");

  ServeOptions serve;
  ProfileFlags serve_profile;
  auto* serve_cmd = app.add_subcommand("serve", "Live NDJSON session service over TCP");
  serve_cmd->add_option("--host", serve.host, "Listen address");
  serve_cmd->add_option("--port", serve.port, "Port (0 picks one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_flag("--wall-clock", serve.wall_clock, "Tick every 100 ms of real time");
  serve_cmd->add_option("--resume-timeout", serve.resume_timeout_s, "Seconds a dropped session stays resumable");
  serve_cmd->add_option("--seed", serve.session.seed, "Master seed for sessions");
  serve_profile.add(serve_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim_cmd) return cmd_sim(sim, sim_profile, texture, out, no_output);
    if (*replay_cmd) return cmd_replay(replay_dir);
    if (*report_cmd) return cmd_report(report_dir, report_json_flag);
    if (*serve_cmd) return cmd_serve(serve, serve_profile);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

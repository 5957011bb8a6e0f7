#include "brainform/recorder.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace brainform {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void append_fixed(std::string& out, double v, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  out.append(buf, res.ptr);
}

[[noreturn]] void csv_error(std::size_t line, const std::string& what) {
  throw ParseError("eeg.csv line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    csv_error(line, "malformed number '" + std::string(s) + "'");
  }
  return v;
}

int parse_int(std::string_view s, std::size_t line) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    csv_error(line, "malformed trigger '" + std::string(s) + "'");
  }
  return v;
}

std::string_view policy_name(OrderPolicy p) {
  return p == OrderPolicy::RoundRobin ? "round_robin" : "per_cycle_shuffle";
}

OrderPolicy policy_from_name(std::string_view s) {
  if (s == "round_robin") return OrderPolicy::RoundRobin;
  if (s == "per_cycle_shuffle") return OrderPolicy::PerCycleShuffle;
  throw ParseError("unknown order policy '" + std::string(s) + "'");
}

json tally_json(const RunTally& t) {
  return {{"correct", t.correct}, {"incorrect", t.incorrect}, {"t_start", t.t_start},
          {"t_end", t.t_end},     {"n_classes", t.n_classes}, {"timed", t.timed}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json engine_json(const EngineConfig& e) {
  return {{"fs", e.filter.fs},
          {"notch_freqs", e.filter.notch_freqs},
          {"notch_order", e.filter.notch_order},
          {"notch_q", e.filter.notch_q},
          {"bandpass_low", e.filter.bandpass_low},
          {"bandpass_high", e.filter.bandpass_high},
          {"bandpass_order", e.filter.bandpass_order},
          {"bins_per_channel", e.features.bins_per_channel},
          {"gamma", e.gamma},
          {"cv_folds", e.cv_folds},
          {"window_cycles", e.window_cycles},
          {"confidence_threshold", e.confidence_threshold},
          {"dwell_seconds", e.dwell_seconds},
          {"history_seconds", e.history_seconds}};
}

EngineConfig engine_from_json(const json& j) {
  EngineConfig e;
  e.filter.fs = j.at("fs").get<double>();
  e.filter.notch_freqs = j.at("notch_freqs").get<std::vector<double>>();
  e.filter.notch_order = j.at("notch_order").get<int>();
  e.filter.notch_q = j.at("notch_q").get<double>();
  e.filter.bandpass_low = j.at("bandpass_low").get<double>();
  e.filter.bandpass_high = j.at("bandpass_high").get<double>();
  e.filter.bandpass_order = j.at("bandpass_order").get<int>();
  e.features.bins_per_channel = j.at("bins_per_channel").get<std::size_t>();
  e.gamma = j.at("gamma").get<double>();
  e.cv_folds = j.at("cv_folds").get<std::size_t>();
  e.window_cycles = j.at("window_cycles").get<std::size_t>();
  e.confidence_threshold = j.at("confidence_threshold").get<double>();
  e.dwell_seconds = j.at("dwell_seconds").get<double>();
  e.history_seconds = j.at("history_seconds").get<double>();
  return e;
}

json run_json(const RunRecord& r) {
  const RunPlan& p = r.plan;
  json acts = json::array();
  for (const Activation& a : r.activations) acts.push_back({a.target_id, a.t, a.confidence});
  json task = p.task == TaskType::Complex ? json(p.complex) : json(p.speller);
  return {{"run_id", p.run_id},
          {"phase", std::string(to_string(r.phase))},
          {"task_type", std::string(to_string(p.task))},
          {"tutorial", p.tutorial},
          {"context", static_cast<int>(p.context)},
          {"task_config", task},
          {"deadline_s", optional_json(p.deadline_s)},
          {"max_run_seconds", p.max_run_seconds},
          {"texture", p.texture},
          {"order_policy", std::string(policy_name(p.policy))},
          {"schedule_seed", p.schedule_seed},
          {"start_tick", r.start_tick},
          {"end_tick", r.end_tick},
          {"model_index", r.model_index},
          {"calibration_attempts", r.calibration_attempts},
          {"cv_accuracy", r.cv_accuracy},
          {"capped", r.capped},
          {"tally", tally_json(r.tally)},
          {"activations", acts}};
}

RunRecord run_from_json(const json& j) {
  RunRecord r;
  RunPlan& p = r.plan;
  p.run_id = j.at("run_id").get<std::string>();
  r.phase = phase_from_string(j.at("phase").get<std::string>());
  p.task = task_type_from_string(j.at("task_type").get<std::string>());
  p.tutorial = j.at("tutorial").get<bool>();
  p.context = stim_context_from_code(j.at("context").get<int>());
  if (p.task == TaskType::Complex) {
    p.complex = j.at("task_config").get<ComplexTaskConfig>();
  } else {
    p.speller = j.at("task_config").get<SpellerTaskConfig>();
  }
  if (!j.at("deadline_s").is_null()) p.deadline_s = j.at("deadline_s").get<double>();
  p.max_run_seconds = j.at("max_run_seconds").get<double>();
  p.texture = j.at("texture").get<TextureSpec>();
  p.policy = policy_from_name(j.at("order_policy").get<std::string>());
  p.schedule_seed = j.at("schedule_seed").get<std::uint64_t>();
  r.start_tick = j.at("start_tick").get<std::int64_t>();
  r.end_tick = j.at("end_tick").get<std::int64_t>();
  r.model_index = j.at("model_index").get<std::size_t>();
  r.calibration_attempts = j.at("calibration_attempts").get<std::size_t>();
  r.cv_accuracy = j.at("cv_accuracy").get<double>();
  r.capped = j.at("capped").get<bool>();
  const json& t = j.at("tally");
  r.tally.correct = t.at("correct").get<std::size_t>();
  r.tally.incorrect = t.at("incorrect").get<std::size_t>();
  r.tally.t_start = t.at("t_start").get<double>();
  r.tally.t_end = t.at("t_end").get<double>();
  r.tally.n_classes = t.at("n_classes").get<std::size_t>();
  r.tally.timed = t.at("timed").get<bool>();
  r.tally.texture = p.texture;
  for (const json& a : j.at("activations")) {
    r.activations.push_back({a.at(0).get<int>(), a.at(1).get<double>(), a.at(2).get<double>()});
  }
  return r;
}

json calibration_json(const CalibrationRecord& c) {
  return {{"phase", std::string(to_string(c.phase))},
          {"attempt", c.attempt},
          {"cued_target", c.cued_target},
          {"start_tick", c.start_tick},
          {"end_tick", c.end_tick},
          {"cv_seed", c.cv_seed},
          {"report", c.report},
          {"model_index", c.model_index ? json(*c.model_index) : json(nullptr)},
          {"texture", c.texture}};
}

CalibrationRecord calibration_from_json(const json& j) {
  CalibrationRecord c;
  c.phase = phase_from_string(j.at("phase").get<std::string>());
  c.attempt = j.at("attempt").get<std::size_t>();
  c.cued_target = j.at("cued_target").get<int>();
  c.start_tick = j.at("start_tick").get<std::int64_t>();
  c.end_tick = j.at("end_tick").get<std::int64_t>();
  c.cv_seed = j.at("cv_seed").get<std::uint64_t>();
  c.report = j.at("report").get<CalibrationReport>();
  if (!j.at("model_index").is_null()) c.model_index = j.at("model_index").get<std::size_t>();
  c.texture = j.at("texture").get<TextureSpec>();
  return c;
}

std::string run_file_name(const RunRecord& r) { return "runs/" + r.plan.run_id + ".json"; }

}  // namespace

std::string format_eeg_csv(const EegRecord& eeg) {
  if (eeg.frames.size() != eeg.triggers.size()) throw InputError("frames and triggers differ in length");
  std::string out;
  out.reserve(eeg.frames.size() * 96 + kEegHeader.size() + 1);
  out.append(kEegHeader);
  out.push_back('\n');
  for (std::size_t i = 0; i < eeg.frames.size(); ++i) {
    append_fixed(out, static_cast<double>(i) / eeg.fs, 6);
    for (double v : eeg.frames[i].channels) {
      out.push_back(',');
      append_fixed(out, v, 4);
    }
    out.push_back(',');
    out.append(std::to_string(eeg.triggers[i]));
    out.push_back('\n');
  }
  return out;
}

EegRecord parse_eeg_csv(std::string_view text, double fs) {
  if (!(fs > 0.0)) throw ConfigError("sampling rate must be positive");
  EegRecord eeg;
  eeg.fs = fs;
  if (!text.empty() && text.back() != '\n') csv_error(0, "truncated file (no final newline)");
  std::size_t pos = 0;
  std::size_t line = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view row = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line;
    if (line == 1) {
      if (row != kEegHeader) csv_error(line, "unexpected header");
      continue;
    }
    std::size_t field = 0;
    std::size_t start = 0;
    SampleFrame f;
    int trigger = 0;
    for (;;) {
      const std::size_t comma = row.find(',', start);
      const std::string_view cell = row.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (field == 0) {
        f.t = parse_double(cell, line);
      } else if (field <= kNumChannels) {
        f.channels[field - 1] = parse_double(cell, line);
      } else if (field == kNumChannels + 1) {
        trigger = parse_int(cell, line);
      }
      ++field;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (field != kNumChannels + 2) {
      csv_error(line, "expected " + std::to_string(kNumChannels + 2) + " fields, found " + std::to_string(field));
    }
    const double expected_t = static_cast<double>(eeg.frames.size()) / fs;
    if (std::abs(f.t - expected_t) > 1e-6 + 1e-12 * expected_t) {
      csv_error(line, "timestamp does not match the sample grid");
    }
    f.t = expected_t;
    eeg.append(f, trigger);
  }
  if (line == 0) csv_error(1, "missing header");
  return eeg;
}

nlohmann::json run_metadata(const RunRecord& run, std::uint64_t rng_seed) {
  if (run.end_tick <= run.start_tick || run.tally.t_end < run.tally.t_start) {
    throw InputError("run '" + run.plan.run_id + "' did not complete");
  }
  const RunMetrics m = compute_metrics(run.tally);
  json j{{"run_id", run.plan.run_id},
         {"task_type", std::string(to_string(run.plan.task))},
         {"t_start", run.tally.t_start},
         {"t_end", run.tally.t_end},
         {"n_classes", run.tally.n_classes},
         {"correct", run.tally.correct},
         {"incorrect", run.tally.incorrect},
         {"accuracy", optional_json(m.accuracy)},
         {"task_time_s", m.task_time_s},
         {"itr_bits_per_selection", m.itr ? json(m.itr->bits_per_selection) : json(nullptr)},
         {"itr_bits_per_min", m.itr ? json(m.itr->bits_per_min) : json(nullptr)},
         {"texture", run.tally.texture},
         {"timed", run.tally.timed},
         {"calibration_attempts", run.calibration_attempts},
         {"cv_accuracy", run.cv_accuracy},
         {"engine_version", BRAINFORM_VERSION},
         {"rng_seed", rng_seed}};
  return j;
}

nlohmann::json session_to_json(const SessionLog& log) {
  json trace = json::array();
  for (Phase p : log.trace) trace.push_back(std::string(to_string(p)));
  json cals = json::array();
  for (const auto& c : log.calibrations) cals.push_back(calibration_json(c));
  json runs = json::array();
  json run_files = json::array();
  for (const auto& r : log.runs) {
    runs.push_back(run_json(r));
    run_files.push_back(run_file_name(r));
  }
  return {{"format_version", kSessionFormatVersion},
          {"engine_version", BRAINFORM_VERSION},
          {"session_id", log.session_id},
          {"seed", log.seed},
          {"profile", log.profile},
          {"engine", engine_json(log.engine)},
          {"textures", {log.textures.first, log.textures.second}},
          {"compliance", log.compliance},
          {"trace", trace},
          {"aborted", log.aborted},
          {"total_ticks", log.total_ticks},
          {"models", log.models},
          {"calibrations", cals},
          {"runs", runs},
          {"manifest", {{"eeg", "eeg.csv"}, {"runs", run_files}}}};
}

SessionLog session_from_json(const nlohmann::json& j) {
  const char* field = "format_version";
  try {
    if (!j.is_object()) throw ParseError("session document must be a JSON object");
    if (!j.contains(field)) throw ParseError("missing field 'format_version'");
    const int version = j.at(field).get<int>();
    if (version != kSessionFormatVersion) {
      throw ParseError("unsupported format_version " + std::to_string(version) + " (expected " +
                       std::to_string(kSessionFormatVersion) + ")");
    }
    SessionLog log;
    field = "session_id";
    log.session_id = j.at(field).get<std::string>();
    field = "seed";
    log.seed = j.at(field).get<std::uint64_t>();
    field = "profile";
    log.profile = j.at(field).get<SubjectProfile>();
    field = "engine";
    log.engine = engine_from_json(j.at(field));
    field = "textures";
    const auto& tx = j.at(field);
    if (!tx.is_array() || tx.size() != 2) throw ParseError("field 'textures' must hold two textures");
    log.textures = {tx.at(0).get<TextureSpec>(), tx.at(1).get<TextureSpec>()};
    field = "compliance";
    log.compliance = j.at(field).get<double>();
    field = "trace";
    for (const auto& p : j.at(field)) log.trace.push_back(phase_from_string(p.get<std::string>()));
    field = "aborted";
    log.aborted = j.at(field).get<bool>();
    field = "total_ticks";
    log.total_ticks = j.at(field).get<std::int64_t>();
    field = "models";
    for (const auto& m : j.at(field)) log.models.push_back(m.get<LdaModel>());
    field = "calibrations";
    for (const auto& c : j.at(field)) log.calibrations.push_back(calibration_from_json(c));
    field = "runs";
    for (const auto& r : j.at(field)) {
      log.runs.push_back(run_from_json(r));
      if (log.runs.back().model_index >= log.models.size()) {
        throw ParseError("run '" + log.runs.back().plan.run_id + "' references a missing model");
      }
    }
    field = "manifest";
    (void)j.at(field).at("eeg");
    return log;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("session field '") + field + "': " + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("session field '") + field + "': " + e.what());
  }
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_session(const fs::path& dir, const SessionResult& session) {
  std::error_code ec;
  fs::create_directories(dir / "runs", ec);
  if (ec) throw IoError("cannot create '" + (dir / "runs").string() + "': " + ec.message());
  write_text_file(dir / "eeg.csv", format_eeg_csv(session.eeg));
  for (const auto& r : session.log.runs) {
    write_text_file(dir / run_file_name(r), dump_json(run_metadata(r, session.log.seed)));
  }
  write_text_file(dir / "session.json", dump_json(session_to_json(session.log)));
}

SessionResult read_session(const fs::path& dir) {
  const fs::path meta = dir / "session.json";
  if (!fs::exists(meta)) throw IoError("no session.json in '" + dir.string() + "'");
  json j;
  try {
    j = json::parse(read_text_file(meta));
  } catch (const json::parse_error& e) {
    throw ParseError("session.json: " + std::string(e.what()));
  }
  SessionResult s;
  s.log = session_from_json(j);
  s.eeg = parse_eeg_csv(read_text_file(dir / "eeg.csv"), s.log.engine.fs());
  const auto expected_rows = tick_first_sample(s.log.total_ticks, s.log.engine.fs());
  if (static_cast<std::int64_t>(s.eeg.frames.size()) != expected_rows) {
    throw ParseError("eeg.csv holds " + std::to_string(s.eeg.frames.size()) + " rows, session expects " +
                     std::to_string(expected_rows));
  }
  for (const auto& r : s.log.runs) {
    const fs::path p = dir / run_file_name(r);
    json rj;
    try {
      rj = json::parse(read_text_file(p));
    } catch (const json::parse_error& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
    if (rj != run_metadata(r, s.log.seed)) {
      throw ParseError(p.string() + ": run metadata disagrees with session.json");
    }
  }
  return s;
}

bool ReplayReport::identical() const {
  if (!stream_issues.empty()) return false;
  for (const auto& r : runs) {
    if (!r.identical()) return false;
  }
  return true;
}

namespace {

bool same_activation(const Activation& a, const Activation& b) {
  return a.target_id == b.target_id && a.t == b.t && a.confidence == b.confidence;
}

std::string describe(const Activation& a) {
  std::ostringstream ss;
  ss << "target " << a.target_id << " at t=" << a.t;
  return ss.str();
}

}  // namespace

ReplayReport replay_session(const SessionLog& log, const EegRecord& eeg) {
  const double fs = log.engine.fs();
  FilterChain chain(log.engine.filter);
  FilteredHistory history(fs, static_cast<std::size_t>(std::ceil(log.engine.history_seconds * fs)));
  ReplayReport report;

  std::int64_t sample = 0;
  const auto n_samples = static_cast<std::int64_t>(eeg.frames.size());
  auto push_tick = [&](std::int64_t tick) {
    const std::int64_t end = std::min(tick_first_sample(tick + 1, fs), n_samples);
    for (; sample < end; ++sample) {
      const int code = eeg.triggers[static_cast<std::size_t>(sample)];
      if (code != 0 && sample != tick_first_sample(tick, fs)) {
        report.stream_issues.push_back("trigger " + std::to_string(code) + " off the tick grid at row " +
                                       std::to_string(sample + 2));
      }
      history.push(chain.process(eeg.frames[static_cast<std::size_t>(sample)]));
    }
  };

  std::int64_t tick = 0;
  for (const RunRecord& rec : log.runs) {
    RunReplay out;
    out.run_id = rec.plan.run_id;
    out.recorded = rec.tally;
    out.recorded_activations = rec.activations;
    out.recorded_end_tick = rec.end_tick;
    for (; tick < rec.start_tick; ++tick) push_tick(tick);

    RunDriver driver(rec.plan, log.models.at(rec.model_index), log.engine, rec.start_tick);
    std::int64_t flash_index = 0;
    for (;; ++tick) {
      const std::int64_t first = tick_first_sample(tick, fs);
      if (first >= n_samples) {
        out.divergences.push_back("recording ends before the run finished");
        break;
      }
      const int code = eeg.triggers[static_cast<std::size_t>(first)];
      if (code != 0) {
        TriggerEvent t;
        t.t = tick_time(tick);
        t.target_id = code % 100 - 1;
        t.cycle_index = flash_index / static_cast<std::int64_t>(rec.plan.n_targets());
        try {
          t.context = stim_context_from_code(code / 100);
        } catch (const Error&) {
          out.divergences.push_back("undecodable trigger " + std::to_string(code) + " at tick " + std::to_string(tick));
          push_tick(tick);
          continue;
        }
        if (t.target_id < 0 || static_cast<std::size_t>(t.target_id) >= rec.plan.n_targets()) {
          out.divergences.push_back("trigger " + std::to_string(code) + " names a target outside the run");
          push_tick(tick);
          continue;
        }
        ++flash_index;
        driver.present(t);
      }
      push_tick(tick);
      if (driver.after_tick(history, tick_time(tick + 1)).finished) {
        ++tick;
        break;
      }
    }
    out.replayed = driver.tally();
    out.replayed_activations = driver.activations();
    out.replayed_end_tick = tick;

    const auto& a = out.recorded_activations;
    const auto& b = out.replayed_activations;
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
      if (i >= a.size()) {
        out.divergences.push_back("extra activation " + describe(b[i]));
      } else if (i >= b.size()) {
        out.divergences.push_back("missing activation " + describe(a[i]));
      } else if (!same_activation(a[i], b[i])) {
        out.divergences.push_back("activation " + std::to_string(i) + " recorded " + describe(a[i]) +
                                  ", replayed " + describe(b[i]));
      }
    }
    if (out.recorded.correct != out.replayed.correct || out.recorded.incorrect != out.replayed.incorrect) {
      out.divergences.push_back("tally recorded " + std::to_string(out.recorded.correct) + "/" +
                                std::to_string(out.recorded.incorrect) + ", replayed " +
                                std::to_string(out.replayed.correct) + "/" +
                                std::to_string(out.replayed.incorrect));
    }
    if (out.recorded.t_end != out.replayed.t_end || out.recorded_end_tick != out.replayed_end_tick) {
      out.divergences.push_back("run end differs");
    }
    report.runs.push_back(std::move(out));
  }
  for (; tick < log.total_ticks; ++tick) push_tick(tick);
  return report;
}

}  // namespace brainform

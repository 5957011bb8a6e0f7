#include "brainform/wire.hpp"

namespace brainform {

using nlohmann::json;

namespace {

constexpr std::size_t kOutboxLimit = 8192;

const char* run_prefix(Phase p) {
  switch (p) {
    case Phase::Run1: return "t1";
    case Phase::Run2: return "t2";
    case Phase::TimedRun: return "t3";
    case Phase::FreePlay: return "t4";
    default: return "tutorial_";
  }
}

json opt(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

json metrics_json(const RunRecord& r) {
  const RunMetrics m = compute_metrics(r.tally);
  return {{"run_id", r.plan.run_id},
          {"task_type", std::string(to_string(r.plan.task))},
          {"correct", r.tally.correct},
          {"incorrect", r.tally.incorrect},
          {"accuracy", m.accuracy ? json(*m.accuracy) : json(nullptr)},
          {"task_time_s", m.task_time_s},
          {"itr_bits_per_selection", m.itr ? json(m.itr->bits_per_selection) : json(nullptr)},
          {"itr_bits_per_min", m.itr ? json(m.itr->bits_per_min) : json(nullptr)},
          {"n_classes", r.tally.n_classes},
          {"timed", r.tally.timed}};
}

}  // namespace

LiveSession::LiveSession(std::string id, SessionConfig config)
    : id_(std::move(id)),
      cfg_(std::move(config)),
      engine_(std::make_unique<BciEngine>(cfg_.engine, cfg_.profile)),
      protocol_(cfg_.textures, cfg_.max_calibration_attempts) {
  cfg_.validate();
}

std::optional<int> LiveSession::calibration_cue() const {
  if (!cal_) return std::nullopt;
  return cal_->cued_target();
}

json LiveSession::emit(std::string type, json body, std::vector<json>& out) {
  body["v"] = kWireVersion;
  body["session"] = id_;
  body["seq"] = ++seq_;
  body["type"] = std::move(type);
  outbox_.push_back(body);
  if (outbox_.size() > kOutboxLimit) outbox_.pop_front();
  out.push_back(body);
  return body;
}

void LiveSession::error(const std::string& reason, std::vector<json>& out) {
  emit("error", {{"reason", reason}}, out);
}

std::vector<json> LiveSession::hello(const json& info) {
  std::vector<json> out;
  json body = info;
  body["phase"] = std::string(to_string(protocol_.phase()));
  emit("hello", body, out);
  return out;
}

std::vector<json> LiveSession::error_reply(const std::string& reason) {
  std::vector<json> out;
  error(reason, out);
  return out;
}

std::vector<json> LiveSession::since(std::uint64_t after) const {
  std::vector<json> out;
  for (const json& m : outbox_) {
    if (m.at("seq").get<std::uint64_t>() > after) out.push_back(m);
  }
  return out;
}

std::vector<json> LiveSession::handle_line(std::string_view line) {
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::parse_error&) {
    std::vector<json> out;
    error("malformed JSON", out);
    return out;
  }
  return handle(msg);
}

std::vector<json> LiveSession::handle(const json& msg) {
  std::vector<json> out;
  if (!msg.is_object() || !msg.contains("type") || !msg.at("type").is_string()) {
    error("message needs a string 'type'", out);
    return out;
  }
  const std::string type = msg.at("type").get<std::string>();
  if (type == "attend") {
    if (!msg.contains("target")) {
      error("attend needs 'target' (integer or null)", out);
    } else if (msg.at("target").is_null()) {
      attended_.reset();
    } else if (msg.at("target").is_number_integer()) {
      const int t = msg.at("target").get<int>();
      if (t < 0 || t > 9) {
        error("attend target out of range", out);
      } else {
        attended_ = t;
      }
    } else {
      error("attend needs 'target' (integer or null)", out);
    }
  } else if (type == "configure") {
    if (started_) {
      error("configure is only accepted before the first phase", out);
    } else if (!msg.contains("profile") || !msg.at("profile").is_object()) {
      error("configure needs a 'profile' object", out);
    } else {
      try {
        SubjectProfile p = cfg_.profile;
        from_json(msg.at("profile"), p);
        p.validate();
        cfg_.profile = p;
        engine_ = std::make_unique<BciEngine>(cfg_.engine, cfg_.profile);
        emit("configured", {{"profile", cfg_.profile}}, out);
      } catch (const Error& e) {
        error(e.what(), out);
      }
    }
  } else if (type == "start_phase") {
    if (!msg.contains("phase") || !msg.at("phase").is_string()) {
      error("start_phase needs a 'phase' name", out);
    } else {
      start_phase(msg.at("phase").get<std::string>(), msg, out);
    }
  } else {
    error("unknown message type '" + type + "'", out);
  }
  return out;
}

void LiveSession::enter_phase_events(std::vector<json>& out) {
  emit("phase", {{"name", std::string(to_string(protocol_.phase()))}, {"texture", protocol_.texture()}},
       out);
}

void LiveSession::start_phase(const std::string& name, const json& msg, std::vector<json>& out) {
  if (busy()) {
    error("a phase is already running", out);
    return;
  }
  Phase target;
  try {
    target = phase_from_string(name);
  } catch (const ParseError& e) {
    error(e.what(), out);
    return;
  }
  try {
    const Phase now = protocol_.phase();
    if (now == Phase::Setup && target == Phase::Calibration1) {
      protocol_.advance(ProtocolEvent::begin());
    } else if (now == Phase::Questionnaire1 && target == Phase::Calibration2) {
      protocol_.advance(ProtocolEvent::questionnaire_done());
    } else if (now == Phase::Questionnaire2 && target == Phase::OptionalCalibration) {
      std::size_t texture = 0;
      if (msg.contains("texture")) {
        const json& tx = msg.at("texture");
        if (!tx.is_number_integer() || tx.get<std::int64_t>() < 0) throw ProtocolError("texture must be 0 or 1");
        texture = tx.get<std::size_t>();
      }
      protocol_.advance(ProtocolEvent::choose_free_play(texture));
    } else if (now == Phase::Questionnaire2 && target == Phase::Done) {
      protocol_.advance(ProtocolEvent::decline_free_play());
    } else if (now != target) {
      throw ProtocolError("cannot start '" + name + "' during '" + std::string(to_string(now)) + "'");
    }
  } catch (const ProtocolError& e) {
    error(e.what(), out);
    return;
  }
  started_ = true;
  const Phase p = protocol_.phase();
  enter_phase_events(out);
  if (is_calibration(p)) {
    start_calibration(out);
  } else if (is_run(p)) {
    const std::string prefix = run_prefix(p);
    pending_runs_ = {{prefix + "a", TaskType::Complex},
                     {prefix + "b", TaskType::Speller}};
    start_next_run(out);
  }
}

void LiveSession::start_calibration(std::vector<json>& out) {
  const std::size_t n = calibrations_.size();
  const int cued = static_cast<int>(derive_seed(cfg_.seed, "cue", n) % 10);
  cal_.emplace(engine_->current_tick(), cued, 10, cfg_.calibration_cycles, cfg_.order,
               derive_seed(cfg_.seed, "calibration_schedule", n));
  emit("cue", {{"target", cued}, {"t", engine_->now()}}, out);
}

void LiveSession::start_next_run(std::vector<json>& out) {
  const auto [run_id, task] = pending_runs_.front();
  pending_runs_.erase(pending_runs_.begin());
  const Phase p = protocol_.phase();
  const std::int64_t start = engine_->current_tick();
  const double t0 = tick_time(start);
  const RunPlan plan = make_run_plan(cfg_, p, run_id, task, start, protocol_.texture());
  run_ = std::make_unique<RunDriver>(plan, models_.at(active_model_), cfg_.engine, start);
  json body{{"run_id", run_id}, {"task_type", std::string(to_string(task))}, {"n_targets", plan.n_targets()},
            {"t", t0}, {"timed", plan.deadline_s.has_value()}};
  if (plan.deadline_s) body["deadline"] = t0 + *plan.deadline_s;
  if (task == TaskType::Complex) body["npc_schedule"] = plan.complex;
  emit("run_start", body, out);
  last_cue_.reset();
  const auto cue = run_->intended_target(t0);
  if (cue) {
    emit("cue", {{"target", *cue}, {"t", t0}}, out);
    last_cue_ = cue;
  }
}

void LiveSession::finish_run(std::vector<json>& out) {
  RunRecord rec;
  rec.plan = run_->plan();
  rec.phase = protocol_.phase();
  rec.start_tick = run_->start_tick();
  rec.end_tick = engine_->current_tick();
  rec.model_index = active_model_;
  rec.calibration_attempts = calibrations_.at(active_calibration_).attempt;
  rec.cv_accuracy = calibrations_.at(active_calibration_).report.cv_accuracy;
  rec.capped = run_->capped();
  rec.tally = run_->tally();
  rec.activations = run_->activations();
  emit("run_summary", metrics_json(rec), out);
  runs_.push_back(std::move(rec));
  run_.reset();
  if (!pending_runs_.empty()) {
    start_next_run(out);
    return;
  }
  protocol_.advance(ProtocolEvent::run_completed());
  enter_phase_events(out);
}

std::vector<json> LiveSession::tick() {
  std::vector<json> out;
  AttentionState att;
  att.attended_target = attended_;
  att.run_index = protocol_.run_index();
  const std::int64_t k = engine_->current_tick();

  if (cal_) {
    const auto flash = cal_->flash_for(k);
    if (flash) {
      cal_->present(*flash);
      emit("flash", {{"target", flash->target_id}, {"t", flash->t}}, out);
    }
    engine_->advance_tick(flash, att);
    cal_->after_tick(engine_->history());
    if (cal_->done(engine_->current_tick())) {
      CalibrationRecord rec;
      rec.phase = protocol_.phase();
      rec.attempt = protocol_.current_calibration_attempts() + 1;
      rec.cued_target = cal_->cued_target();
      rec.start_tick = cal_->start_tick();
      rec.end_tick = engine_->current_tick();
      rec.cv_seed = derive_seed(cfg_.seed, "cv", calibrations_.size());
      rec.texture = protocol_.texture();
      try {
        CalibrationResult r = cal_->fit(cfg_.engine, rec.cv_seed);
        rec.report = r.report;
        if (r.report.grade != Grade::Red) {
          rec.model_index = models_.size();
          models_.push_back(std::move(r.model));
          active_model_ = *rec.model_index;
          active_calibration_ = calibrations_.size();
        }
      } catch (const Error& e) {
        // Unusable data (e.g. too few epochs) grades as red.
        rec.report.grade = Grade::Red;
        error(std::string("calibration failed: ") + e.what(), out);
      }
      calibrations_.push_back(rec);
      cal_.reset();
      emit("calibration", {{"cv_accuracy", rec.report.cv_accuracy},
                           {"grade", std::string(to_string(rec.report.grade))},
                           {"attempt", rec.attempt}},
           out);
      protocol_.advance(ProtocolEvent::graded(rec.report.grade));
      enter_phase_events(out);
    }
    return out;
  }

  if (run_) {
    const TriggerEvent flash = run_->flash_for(k);
    run_->present(flash);
    emit("flash", {{"target", flash.target_id}, {"t", flash.t}}, out);
    engine_->advance_tick(flash, att);
    const std::size_t correct_before = run_->tally().correct;
    const RunStep step = run_->after_tick(engine_->history(), engine_->now());
    const auto dist = run_->gate().distribution();
    emit("confidence", {{"distribution", std::vector<double>(dist.begin(), dist.end())}, {"t", engine_->now()}},
         out);
    if (step.activation) {
      emit("activation", {{"target", step.activation->target_id},
                          {"t", step.activation->t},
                          {"confidence", step.activation->confidence}},
           out);
      if (step.feedback) {
        emit("feedback", {{"correct", step.feedback->correct},
                          {"selected", step.feedback->selected},
                          {"cue", step.feedback->cue},
                          {"next_cue", opt(step.feedback->next_cue)}},
             out);
      } else {
        emit("feedback", {{"correct", run_->tally().correct > correct_before},
                          {"selected", step.activation->target_id},
                          {"cue", opt(last_cue_)}},
             out);
      }
    }
    if (step.finished) {
      finish_run(out);
    } else {
      const auto cue = run_->intended_target(engine_->now());
      if (cue != last_cue_) {
        emit("cue", {{"target", opt(cue)}, {"t", engine_->now()}}, out);
        last_cue_ = cue;
      }
    }
    return out;
  }

  engine_->advance_tick(std::nullopt, att);
  return out;
}

}  // namespace brainform

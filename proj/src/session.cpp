#include "brainform/session.hpp"

#include <cmath>
#include <string>

namespace brainform {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ h) + index);
}

CalibrationDriver::CalibrationDriver(std::int64_t start_tick, int cued_target, std::size_t positions, std::size_t cycles,
                                     OrderPolicy policy, std::uint64_t schedule_seed)
    : start_tick_(start_tick),
      cued_(cued_target),
      positions_(positions),
      cycles_(cycles),
      schedule_(positions, StimContext::Calibration, tick_time(start_tick), policy, schedule_seed) {
  if (positions < 2) throw ConfigError("calibration needs at least two positions");
  if (cycles == 0) throw ConfigError("calibration needs at least one cycle");
  if (cued_target < 0 || static_cast<std::size_t>(cued_target) >= positions) {
    throw ConfigError("cued calibration position out of range");
  }
}

std::optional<TriggerEvent> CalibrationDriver::flash_for(std::int64_t tick) {
  const std::int64_t k = tick - start_tick_;
  if (k < 0 || k >= static_cast<std::int64_t>(cycles_ * positions_)) return std::nullopt;
  TriggerEvent t = schedule_.flash_at(k);
  t.t = tick_time(tick);
  return t;
}

void CalibrationDriver::after_tick(const FilteredHistory& history) {
  for (Epoch& e : queue_.drain_ready(history)) {
    e.label = e.target_id == cued_ ? Label::Target : Label::NonTarget;
    epochs_.push_back(std::move(e));
  }
}

bool CalibrationDriver::done(std::int64_t next_tick) const {
  return next_tick >= start_tick_ + static_cast<std::int64_t>(cycles_ * positions_) &&
         queue_.pending() == 0;
}

CalibrationResult CalibrationDriver::fit(const EngineConfig& config, std::uint64_t cv_seed) const {
  std::vector<FeatureVector> x;
  std::vector<Label> y;
  x.reserve(epochs_.size());
  for (const Epoch& e : epochs_) {
    x.push_back(featurize(e, config.features.bins_per_channel));
    y.push_back(e.label);
  }
  CalibrationResult r;
  r.report = cross_validate(x, y, config.gamma, config.cv_folds, cv_seed);
  r.model = fit_lda(x, y, config.gamma);
  r.model.features = config.features;
  r.epochs = epochs_;
  return r;
}

std::size_t RunPlan::n_targets() const {
  return task == TaskType::Complex ? complex.n_targets : speller.n_targets;
}

namespace {

std::variant<ComplexTask, SpellerTask> make_task(const RunPlan& plan, double t_start) {
  std::optional<double> deadline;
  if (plan.deadline_s) deadline = t_start + *plan.deadline_s;
  if (plan.task == TaskType::Complex) {
    return ComplexTask(plan.complex, t_start, deadline, plan.texture);
  }
  return SpellerTask(plan.speller, t_start, deadline, plan.texture);
}

}  // namespace

RunDriver::RunDriver(RunPlan plan, const LdaModel& model, const EngineConfig& config,
                     std::int64_t start_tick)
    : plan_(std::move(plan)),
      model_(model),
      start_tick_(start_tick),
      schedule_(plan_.n_targets(), plan_.context, tick_time(start_tick), plan_.policy,
                plan_.schedule_seed),
      decoder_(model_, config.gate_for(plan_.n_targets())),
      task_(make_task(plan_, tick_time(start_tick))) {
  if (plan_.deadline_s && !(*plan_.deadline_s > 0.0)) throw ConfigError("deadline must be positive");
  if (!(plan_.max_run_seconds > 0.0)) throw ConfigError("run cap must be positive");
}

TriggerEvent RunDriver::flash_for(std::int64_t tick) {
  TriggerEvent t = schedule_.flash_at(tick - start_tick_);
  t.t = tick_time(tick);
  return t;
}

RunStep RunDriver::after_tick(const FilteredHistory& history, double t_now) {
  RunStep s;
  if (done()) {
    s.finished = true;
    return s;
  }
  s.activation = decoder_.tick(history, t_now);
  if (s.activation) activations_.push_back(*s.activation);
  if (auto* c = std::get_if<ComplexTask>(&task_)) {
    c->step(s.activation, t_now);
  } else {
    s.feedback = std::get<SpellerTask>(task_).step(s.activation, t_now);
  }
  const double cap = t_start() + plan_.max_run_seconds;
  if (!done() && !plan_.deadline_s && t_now >= cap - kTimeEps) {
    std::visit([cap](auto& task) { task.expire(cap); }, task_);
    capped_ = true;
  }
  s.finished = done();
  return s;
}

std::optional<int> RunDriver::intended_target(double t) const {
  if (done()) return std::nullopt;
  if (const auto* c = std::get_if<ComplexTask>(&task_)) return c->active_color(t);
  return std::get<SpellerTask>(task_).current_cue();
}

std::optional<int> RunDriver::current_cue() const {
  if (const auto* s = std::get_if<SpellerTask>(&task_)) return s->current_cue();
  return std::nullopt;
}

bool RunDriver::done() const {
  return std::visit([](const auto& task) { return task.done(); }, task_);
}

RunTally RunDriver::tally() const {
  return std::visit([](const auto& task) { return task.tally(); }, task_);
}

ScriptedAttention::ScriptedAttention(double compliance, std::uint64_t seed)
    : compliance_(compliance), rng_(seed) {}

AttentionState ScriptedAttention::decide(std::optional<int> intended, std::int64_t flash_index,
                                         std::size_t n_targets, int run_index) {
  if (n_targets > 0 && flash_index % static_cast<std::int64_t>(n_targets) == 0) {
    compliant_ = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < compliance_;
  }
  AttentionState a;
  a.run_index = run_index;
  // A non-compliant player looks away for the whole cycle.
  if (compliant_) a.attended_target = intended;
  return a;
}

void SessionConfig::validate() const {
  profile.validate();
  engine.filter.validate();
  if (!(compliance >= 0.0 && compliance <= 1.0)) throw ConfigError("compliance must lie in [0, 1]");
  if (calibration_cycles == 0) throw ConfigError("calibration needs at least one cycle");
  if (max_calibration_attempts == 0) throw ConfigError("at least one calibration attempt is required");
  if (speller_cues == 0 || tutorial_cues == 0 || tutorial_windows == 0) {
    throw ConfigError("runs need at least one cue or NPC window");
  }
  if (!(timed_deadline_s > 0.0) || !(max_run_seconds > 0.0)) {
    throw ConfigError("deadline and run cap must be positive");
  }
  if (free_play_texture && *free_play_texture > 1) throw ConfigError("free-play texture must be 0 or 1");
}

RunPlan make_run_plan(const SessionConfig& config, Phase phase, const std::string& run_id, TaskType task,
                      std::int64_t start_tick, const TextureSpec& texture) {
  const bool tutorial = phase == Phase::Tutorial;
  const double t0 = tick_time(start_tick);
  const std::uint64_t task_seed = derive_seed(config.seed, run_id);
  RunPlan plan;
  plan.run_id = run_id;
  plan.task = task;
  plan.tutorial = tutorial;
  plan.texture = texture;
  plan.policy = config.order;
  plan.schedule_seed = derive_seed(config.seed, "run_schedule", task_seed);
  plan.max_run_seconds = config.max_run_seconds;
  if (phase == Phase::TimedRun) plan.deadline_s = config.timed_deadline_s;
  if (task == TaskType::Complex) {
    plan.context = tutorial ? StimContext::Tutorial : StimContext::TaskA;
    plan.complex = tutorial ? ComplexTaskConfig::generate(task_seed, t0, 2, config.tutorial_windows)
                            : ComplexTaskConfig::generate(task_seed, t0);
  } else {
    plan.context = tutorial ? StimContext::Tutorial : StimContext::TaskB;
    plan.speller = tutorial ? SpellerTaskConfig::generate(task_seed, 4, config.tutorial_cues)
                            : SpellerTaskConfig::generate(task_seed, 10, config.speller_cues);
  }
  return plan;
}

namespace {

struct RunSlot {
  const char* id;
  TaskType task;
};

class SessionRunner {
 public:
  explicit SessionRunner(const SessionConfig& config, SessionResult& out)
      : cfg_(config),
        out_(out),
        engine_(config.engine, config.profile,
                config.record_eeg ? BciEngine::Sink([&out](const SampleFrame& f, int code) {
                  out.eeg.append(f, code);
                })
                                  : BciEngine::Sink{}),
        attention_(config.compliance, derive_seed(config.seed, "attention")),
        protocol_(config.textures, config.max_calibration_attempts) {
    out_.eeg.fs = config.engine.fs();
    SessionLog& log = out_.log;
    log.session_id = config.session_id;
    log.seed = config.seed;
    log.profile = config.profile;
    log.engine = config.engine;
    log.textures = config.textures;
    log.compliance = config.compliance;
  }

  void run() {
    protocol_.advance(ProtocolEvent::begin());
    while (protocol_.phase() != Phase::Done && protocol_.phase() != Phase::Aborted) {
      const Phase p = protocol_.phase();
      if (is_calibration(p)) {
        protocol_.advance(ProtocolEvent::graded(calibrate()));
      } else if (p == Phase::Tutorial) {
        play({"tutorial_a", TaskType::Complex});
        play({"tutorial_b", TaskType::Speller});
        protocol_.advance(ProtocolEvent::run_completed());
      } else if (is_run(p)) {
        const char* a = p == Phase::Run1 ? "t1a" : p == Phase::Run2 ? "t2a" : p == Phase::TimedRun ? "t3a" : "t4a";
        const char* b = p == Phase::Run1 ? "t1b" : p == Phase::Run2 ? "t2b" : p == Phase::TimedRun ? "t3b" : "t4b";
        play({a, TaskType::Complex});
        play({b, TaskType::Speller});
        protocol_.advance(ProtocolEvent::run_completed());
      } else if (p == Phase::Questionnaire1) {
        protocol_.advance(ProtocolEvent::questionnaire_done());
      } else if (p == Phase::Questionnaire2) {
        if (cfg_.free_play_texture) {
          protocol_.advance(ProtocolEvent::choose_free_play(*cfg_.free_play_texture));
        } else {
          protocol_.advance(ProtocolEvent::decline_free_play());
        }
      } else {
        throw ProtocolError("scripted session cannot handle phase '" + std::string(to_string(p)) + "'");
      }
    }
    out_.log.trace = protocol_.trace();
    out_.log.aborted = protocol_.phase() == Phase::Aborted;
    out_.log.total_ticks = engine_.current_tick();
  }

 private:
  Grade calibrate() {
    const std::size_t n = out_.log.calibrations.size();
    const int cued = static_cast<int>(derive_seed(cfg_.seed, "cue", n) % 10);
    const std::int64_t start = engine_.current_tick();
    CalibrationDriver cd(start, cued, 10, cfg_.calibration_cycles, cfg_.order,
                         derive_seed(cfg_.seed, "calibration_schedule", n));
    const int run_index = protocol_.run_index();
    AttentionState att;
    att.run_index = run_index;
    while (!cd.done(engine_.current_tick())) {
      const std::int64_t k = engine_.current_tick();
      auto flash = cd.flash_for(k);
      if (flash) {
        att = attention_.decide(cued, k - start, 10, run_index);
        cd.present(*flash);
      }
      engine_.advance_tick(flash, att);
      cd.after_tick(engine_.history());
    }
    CalibrationRecord rec;
    rec.phase = protocol_.phase();
    rec.attempt = protocol_.current_calibration_attempts() + 1;
    rec.cued_target = cued;
    rec.start_tick = start;
    rec.end_tick = engine_.current_tick();
    rec.cv_seed = derive_seed(cfg_.seed, "cv", n);
    rec.texture = protocol_.texture();
    CalibrationResult r = cd.fit(cfg_.engine, rec.cv_seed);
    rec.report = r.report;
    if (r.report.grade != Grade::Red) {
      rec.model_index = out_.log.models.size();
      out_.log.models.push_back(std::move(r.model));
      active_model_ = *rec.model_index;
      active_calibration_ = out_.log.calibrations.size();
    }
    out_.log.calibrations.push_back(rec);
    return r.report.grade;
  }

  void play(RunSlot slot) {
    const Phase phase = protocol_.phase();
    const std::int64_t start = engine_.current_tick();
    const RunPlan plan = make_run_plan(cfg_, phase, slot.id, slot.task, start, protocol_.texture());

    RunDriver driver(plan, out_.log.models.at(active_model_), cfg_.engine, start);
    const std::size_t n = plan.n_targets();
    const int run_index = protocol_.run_index();
    for (;;) {
      const std::int64_t k = engine_.current_tick();
      const TriggerEvent flash = driver.flash_for(k);
      const AttentionState att = attention_.decide(driver.intended_target(flash.t), k - start, n, run_index);
      driver.present(flash);
      engine_.advance_tick(flash, att);
      if (driver.after_tick(engine_.history(), engine_.now()).finished) break;
    }

    RunRecord rec;
    rec.plan = plan;
    rec.phase = phase;
    rec.start_tick = start;
    rec.end_tick = engine_.current_tick();
    rec.model_index = active_model_;
    const CalibrationRecord& cal = out_.log.calibrations.at(active_calibration_);
    rec.calibration_attempts = cal.attempt;
    rec.cv_accuracy = cal.report.cv_accuracy;
    rec.capped = driver.capped();
    rec.tally = driver.tally();
    rec.activations = driver.activations();
    out_.log.runs.push_back(std::move(rec));
  }

  const SessionConfig& cfg_;
  SessionResult& out_;
  BciEngine engine_;
  ScriptedAttention attention_;
  ProtocolState protocol_;
  std::size_t active_model_{0};
  std::size_t active_calibration_{0};
};

}  // namespace

SessionResult run_session(const SessionConfig& config) {
  config.validate();
  SessionResult result;
  SessionRunner runner(config, result);
  runner.run();
  return result;
}

}  // namespace brainform

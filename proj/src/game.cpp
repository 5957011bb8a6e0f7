#include "brainform/game.hpp"

#include <random>
#include <string>

namespace brainform {

std::string_view to_string(TaskType t) { return t == TaskType::Complex ? "complex" : "speller"; }

TaskType task_type_from_string(std::string_view s) {
  if (s == "complex") return TaskType::Complex;
  if (s == "speller") return TaskType::Speller;
  throw ParseError("unknown task type '" + std::string(s) + "'");
}

void ComplexTaskConfig::validate() const {
  if (!tutorial && n_targets != 5) throw ConfigError("the complex task uses five colors");
  if (n_targets < 2) throw ConfigError("complex task needs at least two colors");
  if (npc_schedule.empty()) throw ConfigError("complex task needs at least one NPC window");
  for (std::size_t i = 0; i < npc_schedule.size(); ++i) {
    const auto& w = npc_schedule[i];
    if (w.color < 0 || static_cast<std::size_t>(w.color) >= n_targets) {
      throw ConfigError("NPC color out of range");
    }
    if (!(w.end > w.start)) throw ConfigError("NPC window must have positive length");
    for (std::size_t k = 0; k < i; ++k) {
      const auto& o = npc_schedule[k];
      if (o.color == w.color && w.start < o.end && o.start < w.end) {
        throw ConfigError("NPC windows of the same color overlap");
      }
    }
  }
}

ComplexTaskConfig ComplexTaskConfig::generate(std::uint64_t seed, double t_start,
                                              std::size_t n_targets, std::size_t n_windows,
                                              double window_s, double gap_s) {
  ComplexTaskConfig c;
  c.n_targets = n_targets;
  c.tutorial = n_targets != 5;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> color(0, static_cast<int>(n_targets) - 1);
  double t = t_start + gap_s;
  for (std::size_t k = 0; k < n_windows; ++k) {
    c.npc_schedule.push_back({color(rng), t, t + window_s});
    t += window_s + gap_s;
  }
  return c;
}

ComplexTask::ComplexTask(ComplexTaskConfig config, double t_start, std::optional<double> deadline,
                         TextureSpec texture)
    : config_(std::move(config)), deadline_(deadline) {
  config_.validate();
  tally_.t_start = t_start;
  tally_.t_end = t_start;
  tally_.n_classes = config_.n_targets;
  tally_.timed = deadline.has_value();
  tally_.texture = texture;
  resolved_.assign(config_.npc_schedule.size(), false);
}

std::optional<int> ComplexTask::active_color(double t) const {
  for (std::size_t i = 0; i < config_.npc_schedule.size(); ++i) {
    const auto& w = config_.npc_schedule[i];
    if (!resolved_[i] && t >= w.start && t <= w.end) return w.color;
  }
  return std::nullopt;
}

void ComplexTask::finish(double t_end) {
  done_ = true;
  tally_.t_end = t_end;
}

void ComplexTask::expire(double t_end) {
  if (done_) return;
  for (std::size_t i = 0; i < resolved_.size(); ++i) {
    if (!resolved_[i]) {
      resolved_[i] = true;
      ++tally_.incorrect;
    }
  }
  finish(t_end);
}

void ComplexTask::step(const std::optional<Activation>& activation, double t_now) {
  if (done_) return;
  if (activation) {
    if (activation->target_id < 0 || static_cast<std::size_t>(activation->target_id) >= config_.n_targets) {
      throw InputError("activation target out of range for the complex task");
    }
    for (std::size_t i = 0; i < config_.npc_schedule.size(); ++i) {
      const auto& w = config_.npc_schedule[i];
      if (!resolved_[i] && w.color == activation->target_id && activation->t >= w.start &&
          activation->t <= w.end) {
        resolved_[i] = true;
        ++tally_.correct;
        break;
      }
    }
  }
  if (deadline_ && t_now >= *deadline_ - kTimeEps) {
    expire(*deadline_);
    return;
  }
  for (std::size_t i = 0; i < config_.npc_schedule.size(); ++i) {
    if (!resolved_[i] && config_.npc_schedule[i].end < t_now) {
      resolved_[i] = true;
      ++tally_.incorrect;
    }
  }
  bool all = true;
  for (bool r : resolved_) all = all && r;
  if (all) finish(t_now);
}

void SpellerTaskConfig::validate() const {
  if (!tutorial && n_targets != 10) throw ConfigError("the speller task uses ten targets");
  if (n_targets < 2) throw ConfigError("speller needs at least two targets");
  if (n_cues == 0 || cue_sequence.size() < n_cues) throw ConfigError("speller needs n_cues cues");
  for (int c : cue_sequence) {
    if (c < 0 || static_cast<std::size_t>(c) >= n_targets) throw ConfigError("cue out of range");
  }
}

SpellerTaskConfig SpellerTaskConfig::generate(std::uint64_t seed, std::size_t n_targets,
                                              std::size_t n_cues) {
  SpellerTaskConfig c;
  c.n_targets = n_targets;
  c.n_cues = n_cues;
  c.tutorial = n_targets != 10;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(n_targets) - 1);
  for (std::size_t i = 0; i < n_cues; ++i) c.cue_sequence.push_back(pick(rng));
  return c;
}

SpellerTask::SpellerTask(SpellerTaskConfig config, double t_start, std::optional<double> deadline,
                         TextureSpec texture)
    : config_(std::move(config)), deadline_(deadline) {
  config_.validate();
  tally_.t_start = t_start;
  tally_.t_end = t_start;
  tally_.n_classes = config_.n_targets;
  tally_.timed = deadline.has_value();
  tally_.texture = texture;
}

std::optional<int> SpellerTask::current_cue() const {
  if (done_) return std::nullopt;
  return config_.cue_sequence[cue_index_];
}

std::optional<SpellerFeedback> SpellerTask::step(const std::optional<Activation>& activation,
                                                 double t_now) {
  if (done_) return std::nullopt;
  std::optional<SpellerFeedback> fb;
  if (activation) {
    if (activation->target_id < 0 || static_cast<std::size_t>(activation->target_id) >= config_.n_targets) {
      throw InputError("activation target out of range for the speller task");
    }
    const int cue = config_.cue_sequence[cue_index_];
    SpellerFeedback f{activation->target_id == cue, activation->target_id, cue, std::nullopt};
    if (f.correct) {
      ++tally_.correct;
      ++cue_index_;
      if (cue_index_ >= config_.n_cues) {
        done_ = true;
        tally_.t_end = activation->t;
      }
    } else {
      ++tally_.incorrect;
    }
    if (!done_) f.next_cue = config_.cue_sequence[cue_index_];
    fb = f;
  }
  if (!done_ && deadline_ && t_now >= *deadline_ - kTimeEps) expire(*deadline_);
  return fb;
}

void SpellerTask::expire(double t_end) {
  if (done_) return;
  done_ = true;
  tally_.t_end = t_end;
}

void to_json(nlohmann::json& j, const ComplexTaskConfig& c) {
  nlohmann::json windows = nlohmann::json::array();
  for (const auto& w : c.npc_schedule) windows.push_back({w.color, w.start, w.end});
  j = nlohmann::json{{"n_targets", c.n_targets}, {"npc_schedule", windows}, {"tutorial", c.tutorial}};
}

void from_json(const nlohmann::json& j, ComplexTaskConfig& c) {
  try {
    c.n_targets = j.at("n_targets").get<std::size_t>();
    c.tutorial = j.at("tutorial").get<bool>();
    c.npc_schedule.clear();
    for (const auto& w : j.at("npc_schedule")) {
      c.npc_schedule.push_back({w.at(0).get<int>(), w.at(1).get<double>(), w.at(2).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed complex task config: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const SpellerTaskConfig& c) {
  j = nlohmann::json{{"n_targets", c.n_targets},
                     {"n_cues", c.n_cues},
                     {"cue_sequence", c.cue_sequence},
                     {"tutorial", c.tutorial}};
}

void from_json(const nlohmann::json& j, SpellerTaskConfig& c) {
  try {
    c.n_targets = j.at("n_targets").get<std::size_t>();
    c.n_cues = j.at("n_cues").get<std::size_t>();
    c.cue_sequence = j.at("cue_sequence").get<std::vector<int>>();
    c.tutorial = j.at("tutorial").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed speller config: ") + e.what());
  }
}

}  // namespace brainform

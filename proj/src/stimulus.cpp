#include "brainform/stimulus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace brainform {

FlashSchedule::FlashSchedule(std::size_t n_targets, StimContext context, double t_origin,
                             OrderPolicy policy, std::uint64_t seed)
    : n_targets_(n_targets), context_(context), t_origin_(t_origin), policy_(policy), seed_(seed) {
  if (n_targets_ < 2) throw ConfigError("a flash schedule needs at least two targets");
  identity_.resize(n_targets_);
  std::iota(identity_.begin(), identity_.end(), 0);
}

const std::vector<int>& FlashSchedule::cycle_order(std::int64_t cycle) {
  if (policy_ == OrderPolicy::RoundRobin) return identity_;
  while (static_cast<std::int64_t>(shuffled_.size()) <= cycle) {
    // One generator per cycle keeps each permutation a pure function of (seed, cycle).
    const auto c = static_cast<std::uint64_t>(shuffled_.size());
    std::mt19937_64 rng(seed_ ^ (0x9e3779b97f4a7c15ULL * (c + 1)));
    std::vector<int> order = identity_;
    std::shuffle(order.begin(), order.end(), rng);
    if (!shuffled_.empty() && order.front() == shuffled_.back().back()) {
      std::swap(order.front(), order.back());
    }
    shuffled_.push_back(std::move(order));
  }
  return shuffled_[static_cast<std::size_t>(cycle)];
}

TriggerEvent FlashSchedule::flash_at(std::int64_t k) {
  if (k < 0) k = 0;
  const auto n = static_cast<std::int64_t>(n_targets_);
  const std::int64_t cycle = k / n;
  const auto& order = cycle_order(cycle);
  return TriggerEvent{t_origin_ + static_cast<double>(k) * kFlashDuration,
                      order[static_cast<std::size_t>(k % n)], cycle, context_};
}

TriggerEvent FlashSchedule::next_flash(double t_now) {
  const double pos = (t_now - t_origin_) / kFlashDuration;
  return flash_at(static_cast<std::int64_t>(std::floor(pos + 1e-9)));
}

std::string_view to_string(TextureKind k) {
  return k == TextureKind::Checkerboard ? "checkerboard" : "grain";
}

TextureKind texture_kind_from_string(std::string_view s) {
  if (s == "checkerboard" || s == "checker") return TextureKind::Checkerboard;
  if (s == "grain") return TextureKind::Grain;
  throw ParseError("unknown texture kind '" + std::string(s) + "'");
}

TextureSpec TextureSpec::checkerboard(std::size_t n) {
  return TextureSpec{TextureKind::Checkerboard, n, 0.5, 0};
}

TextureSpec TextureSpec::grain(std::size_t n, std::uint64_t seed) {
  return TextureSpec{TextureKind::Grain, n, 0.5, seed};
}

void to_json(nlohmann::json& j, const TextureSpec& t) {
  j = nlohmann::json{{"kind", std::string(to_string(t.kind))},
                     {"grid", t.grid},
                     {"density", t.density},
                     {"seed", t.seed}};
}

void from_json(const nlohmann::json& j, TextureSpec& t) {
  try {
    t.kind = texture_kind_from_string(j.at("kind").get<std::string>());
    t.grid = j.at("grid").get<std::size_t>();
    t.density = j.at("density").get<double>();
    t.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed texture: ") + e.what());
  }
}

std::size_t BitGrid::dark_count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

double BitGrid::density() const {
  return cells.empty() ? 0.0 : static_cast<double>(dark_count()) / static_cast<double>(cells.size());
}

BitGrid gen_texture(const TextureSpec& spec) {
  if (spec.grid < 2) throw ConfigError("texture grid must be at least 2x2");
  if (!(spec.density >= 0.0 && spec.density <= 1.0)) {
    throw ConfigError("texture density must lie in [0, 1]");
  }
  BitGrid g;
  g.n = spec.grid;
  g.cells.assign(g.n * g.n, 0);
  if (spec.kind == TextureKind::Checkerboard) {
    for (std::size_t i = 0; i < g.n; ++i) {
      for (std::size_t j = 0; j < g.n; ++j) g.cells[i * g.n + j] = (i + j) % 2 == 0 ? 1 : 0;
    }
    return g;
  }
  const std::size_t total = g.n * g.n;
  const auto n_dark = static_cast<std::size_t>(std::llround(spec.density * static_cast<double>(total)));
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t k = 0; k < n_dark; ++k) g.cells[idx[k]] = 1;
  return g;
}

}  // namespace brainform

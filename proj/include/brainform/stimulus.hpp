#pragma once

#include "brainform/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace brainform {

enum class OrderPolicy { RoundRobin, PerCycleShuffle };

// Contiguous 100 ms flashes over N targets; each target flashes once per cycle.
class FlashSchedule {
 public:
  FlashSchedule(std::size_t n_targets, StimContext context, double t_origin = 0.0,
                OrderPolicy policy = OrderPolicy::RoundRobin, std::uint64_t seed = 0);

  std::size_t n_targets() const { return n_targets_; }
  double cycle_length() const { return static_cast<double>(n_targets_) * kFlashDuration; }
  double origin() const { return t_origin_; }
  OrderPolicy policy() const { return policy_; }

  // Trigger whose flash window contains t_now. Times before the origin map
  // to the first flash.
  TriggerEvent next_flash(double t_now);

  // Trigger for the k-th flash since the origin.
  TriggerEvent flash_at(std::int64_t k);

 private:
  const std::vector<int>& cycle_order(std::int64_t cycle);

  std::size_t n_targets_;
  StimContext context_;
  double t_origin_;
  OrderPolicy policy_;
  std::uint64_t seed_;
  std::vector<std::vector<int>> shuffled_;
  std::vector<int> identity_;
};

enum class TextureKind { Checkerboard, Grain };

std::string_view to_string(TextureKind k);
TextureKind texture_kind_from_string(std::string_view s);

struct TextureSpec {
  TextureKind kind{TextureKind::Checkerboard};
  std::size_t grid{8};
  double density{0.5};
  std::uint64_t seed{0};

  static TextureSpec checkerboard(std::size_t n = 8);
  static TextureSpec grain(std::size_t n = 8, std::uint64_t seed = 0);
};

void to_json(nlohmann::json& j, const TextureSpec& t);
void from_json(const nlohmann::json& j, TextureSpec& t);

struct BitGrid {
  std::size_t n{0};
  // Row-major, 1 = dark.
  std::vector<std::uint8_t> cells;

  bool dark(std::size_t row, std::size_t col) const { return cells[row * n + col] != 0; }
  std::size_t dark_count() const;
  double density() const;
};

// Checkerboard: cell (i, j) dark iff i + j is even. Grain: exactly
// round(density * n^2) dark cells chosen by a seeded shuffle.
BitGrid gen_texture(const TextureSpec& spec);

}  // namespace brainform

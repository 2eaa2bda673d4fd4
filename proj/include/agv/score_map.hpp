#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agv/classes.hpp"
#include "agv/raster.hpp"

namespace agv {

inline constexpr std::uint32_t kScoreFormatVersion = 1;
inline constexpr double kScoreSumTolerance = 1e-5;

/// Per-pixel class distribution, H x W x 9 floats.
struct ScoreMap {
  std::string tile_id;
  Raster<float> scores;

  ScoreMap() = default;
  ScoreMap(std::string id, int height, int width) : tile_id(std::move(id)), scores(height, width, kNumClasses) {}

  int height() const noexcept { return scores.height(); }
  int width() const noexcept { return scores.width(); }

  friend bool operator==(const ScoreMap&, const ScoreMap&) = default;
};

/// One-hot map of class c everywhere.
ScoreMap one_hot_map(std::string id, int height, int width, int c);

/// Throws InvalidScores when an entry is negative or non-finite, or a pixel
/// sum differs from 1 by more than kScoreSumTolerance.
void validate(const ScoreMap& map);

/// File layout (little-endian): "AGSC", u32 version, u32 H, u32 W, u32 C=9,
/// then H*W*9 f32 in row-major, class-fastest order.
std::vector<std::uint8_t> encode_score_map(const ScoreMap& map);
ScoreMap decode_score_map(std::span<const std::uint8_t> bytes, std::string tile_id);

void write_score_map(const std::filesystem::path& path, const ScoreMap& map);
/// The tile id is taken from the file stem.
ScoreMap read_score_map(const std::filesystem::path& path);

std::filesystem::path score_path(const std::filesystem::path& dir, const std::string& tile_id);

/// Tile ids of every `.agsc` file in `dir`, sorted.
std::vector<std::string> list_score_ids(const std::filesystem::path& dir);

}  // namespace agv

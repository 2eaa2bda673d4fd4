#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "agv/dataset.hpp"

namespace agv {

/// Parameters of a synthetic dataset. Identical configs produce
/// byte-identical trees regardless of thread count.
struct SynthConfig {
  int tile_count = 16;
  int size = 64;
  std::uint64_t seed = 0;
  // Probability that each foreground class paints one region in a tile.
  // Index 0 (Background) is ignored.
  std::array<double, kNumClasses> class_density = {0.0, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3};
  // Probability that a painted region also carries a second, distinct foreground class.
  double overlap_rate = 0.1;
  // Probability that a tile has an off-field corner (boundary = 0).
  double invalid_corner_rate = 0.25;
};

void validate(const SynthConfig& config);

std::string synthetic_tile_id(int index);

/// Renders one tile in memory. Per-tile randomness comes only from
/// (config.seed, index). Foreground regions are axis-aligned rectangles
/// or discs, each confined to its own cell of a 3x3 grid so regions never
/// touch each other.
TileSample render_synthetic_tile(const SynthConfig& config, int index);

/// Writes `tile` in the dataset layout under `root` (PNG everywhere; the
/// boundary raster carries validity and the mask raster is all-valid).
void write_tile(const fs::path& root, const TileSample& tile);

/// Writes config.tile_count tiles under out_root and returns its ingest.
/// out_root must be absent or empty.
Manifest generate_synthetic(const SynthConfig& config, const fs::path& out_root, int threads = 1);

/// Throws OutputNotEmpty when `dir` exists and has entries; creates it otherwise.
void prepare_output_dir(const fs::path& dir);

}  // namespace agv

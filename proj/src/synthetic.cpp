#include "agv/synthetic.hpp"

#include <algorithm>
#include <cstdio>

#include "agv/image_io.hpp"
#include "agv/parallel.hpp"
#include "agv/rng.hpp"

namespace agv {
namespace {

constexpr int kGridCells = 3;

std::uint8_t clamp_u8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

struct Cell {
  int y0, x0, extent;
};

void paint_region(CounterRng& rng, const Cell& cell, ByteRaster& region) {
  if (rng.bernoulli(0.5)) {
    const int y0 = cell.y0 + rng.between(0, cell.extent - 2);
    const int x0 = cell.x0 + rng.between(0, cell.extent - 2);
    const int y1 = rng.between(y0 + 2, cell.y0 + cell.extent);
    const int x1 = rng.between(x0 + 2, cell.x0 + cell.extent);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) region.at(y, x) = 1;
    return;
  }
  const int cy = cell.y0 + cell.extent / 2;
  const int cx = cell.x0 + cell.extent / 2;
  const int radius = rng.between(1, std::max(1, cell.extent / 2 - 1));
  for (int y = cell.y0; y < cell.y0 + cell.extent; ++y) {
    for (int x = cell.x0; x < cell.x0 + cell.extent; ++x) {
      const int dy = y - cy;
      const int dx = x - cx;
      if (dy * dy + dx * dx <= radius * radius) region.at(y, x) = 1;
    }
  }
}

}  // namespace

void validate(const SynthConfig& config) {
  if (config.tile_count < 0) throw Error(ErrorKind::InvalidArgument, "tile_count must be non-negative");
  if (config.size < 3 * kGridCells) {
    throw Error(ErrorKind::InvalidArgument, "synthetic tile size must be at least " + std::to_string(3 * kGridCells));
  }
  auto is_probability = [](double p) { return p >= 0.0 && p <= 1.0; };
  for (double d : config.class_density) {
    if (!is_probability(d)) throw Error(ErrorKind::InvalidArgument, "class_density entries must lie in [0, 1]");
  }
  if (!is_probability(config.overlap_rate)) throw Error(ErrorKind::InvalidArgument, "overlap_rate must lie in [0, 1]");
  if (!is_probability(config.invalid_corner_rate)) {
    throw Error(ErrorKind::InvalidArgument, "invalid_corner_rate must lie in [0, 1]");
  }
}

std::string synthetic_tile_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "tile_%05d", index);
  return buf;
}

TileSample render_synthetic_tile(const SynthConfig& config, int index) {
  const int s = config.size;
  CounterRng rng(config.seed, static_cast<std::uint64_t>(index));

  const int base_r = rng.between(60, 120);
  const int base_g = rng.between(80, 150);
  const int base_b = rng.between(40, 100);
  const int base_n = rng.between(110, 200);
  ByteRaster rgbn(s, s, 4);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      auto px = rgbn.pixel(y, x);
      px[0] = clamp_u8(base_r + rng.between(-8, 8));
      px[1] = clamp_u8(base_g + rng.between(-8, 8));
      px[2] = clamp_u8(base_b + rng.between(-8, 8));
      px[3] = clamp_u8(base_n + rng.between(-8, 8));
    }
  }

  ByteRaster validity(s, s, 1, 1);
  if (rng.bernoulli(config.invalid_corner_rate)) {
    const int corner = rng.between(0, 3);
    const int ch = rng.between(std::max(1, s / 8), s / 4);
    const int cw = rng.between(std::max(1, s / 8), s / 4);
    const int y0 = (corner & 1) ? s - ch : 0;
    const int x0 = (corner & 2) ? s - cw : 0;
    for (int y = y0; y < y0 + ch; ++y)
      for (int x = x0; x < x0 + cw; ++x) validity.at(y, x) = 0;
  }

  const int extent = s / kGridCells;
  std::array<int, kGridCells * kGridCells> cells{};
  for (int i = 0; i < kGridCells * kGridCells; ++i) cells[i] = i;
  seeded_shuffle(std::span<int>(cells), rng);

  std::array<ByteRaster, kNumClasses> foreground;
  for (int c = 1; c < kNumClasses; ++c) foreground[c] = ByteRaster(s, s);

  int next_cell = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    const bool painted = rng.bernoulli(config.class_density[c]);
    const bool doubled = rng.bernoulli(config.overlap_rate);
    if (!painted) continue;
    int partner = 0;
    if (doubled) {
      partner = rng.between(1, kNumClasses - 2);
      if (partner >= c) ++partner;
    }
    const int cell_index = cells[next_cell++];
    const Cell cell{(cell_index / kGridCells) * extent, (cell_index % kGridCells) * extent, extent};
    ByteRaster region(s, s);
    paint_region(rng, cell, region);
    for (std::size_t i = 0; i < region.size(); ++i) {
      if (!region.data()[i]) continue;
      foreground[c].data()[i] = 1;
      if (partner) foreground[partner].data()[i] = 1;
      // Tint so regions are visible in the imagery.
      rgbn.data()[4 * i + 0] = clamp_u8(rgbn.data()[4 * i + 0] + 12 * c);
      rgbn.data()[4 * i + 1] = clamp_u8(rgbn.data()[4 * i + 1] - 6 * c);
      rgbn.data()[4 * i + 3] = clamp_u8(rgbn.data()[4 * i + 3] - 9 * c);
    }
  }

  return make_tile(synthetic_tile_id(index), std::move(rgbn), foreground, std::move(validity));
}

void write_tile(const fs::path& root, const TileSample& tile) {
  const TilePaths paths = layout_paths(root, tile.id);
  const std::size_t n = tile.image.pixel_count();
  ByteRaster rgb(tile.height(), tile.width(), 3);
  ByteRaster nir(tile.height(), tile.width(), 1);
  for (std::size_t i = 0; i < n; ++i) {
    rgb.data()[3 * i + 0] = tile.image.data()[4 * i + 0];
    rgb.data()[3 * i + 1] = tile.image.data()[4 * i + 1];
    rgb.data()[3 * i + 2] = tile.image.data()[4 * i + 2];
    nir.data()[i] = tile.image.data()[4 * i + 3];
  }
  image_io::write_png(paths.rgb, rgb);
  image_io::write_png(paths.nir, nir);
  image_io::write_binary_mask(paths.boundary, tile.validity);
  image_io::write_binary_mask(paths.mask, ByteRaster(tile.height(), tile.width(), 1, 1));
  for (int c = 1; c < kNumClasses; ++c) image_io::write_binary_mask(paths.labels[c], tile.label_raster(c));
}

void prepare_output_dir(const fs::path& dir) {
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir, ec) || !fs::is_empty(dir, ec)) {
      throw Error(ErrorKind::OutputNotEmpty, dir.string());
    }
    return;
  }
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

Manifest generate_synthetic(const SynthConfig& config, const fs::path& out_root, int threads) {
  validate(config);
  prepare_output_dir(out_root);
  create_layout(out_root);
  parallel_for(static_cast<std::size_t>(config.tile_count), threads, [&](std::size_t i) {
    write_tile(out_root, render_synthetic_tile(config, static_cast<int>(i)));
  });
  Manifest manifest = ingest_dataset(out_root, Split::synthetic, threads);
  manifest.provenance = "synthetic: " + std::to_string(config.tile_count) + " tiles of " +
                        std::to_string(config.size) + "px, seed " + std::to_string(config.seed);
  return manifest;
}

}  // namespace agv

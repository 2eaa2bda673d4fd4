#include <doctest.h>

#include <algorithm>

#include "agv/mosaic.hpp"
#include "agv/rng.hpp"
#include "agv/synthetic.hpp"
#include "test_support.hpp"

using namespace agv;
using agv::testing::TempDir;

namespace {

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an agv::Error");
  return ErrorKind::InvalidArgument;
}

TileSample uniform_tile(std::string id, int h, int w, std::uint8_t value) {
  std::array<ByteRaster, kNumClasses> fg;
  for (int c = 1; c < kNumClasses; ++c) fg[c] = ByteRaster(h, w);
  return make_tile(std::move(id), ByteRaster(h, w, 4, value), fg, ByteRaster(h, w, 1, 1));
}

// Source pixel of the concatenated canvas at canvas coordinates (y, x).
const TileSample& source_at(const std::vector<TileSample>& tiles, int k, int y, int x, int& sy, int& sx) {
  const int h = tiles[0].height();
  const int w = tiles[0].width();
  sy = y % h;
  sx = x % w;
  return tiles[static_cast<std::size_t>((y / h) * k + (x / w))];
}

// Independent per-block scan: class c at output (oy, ox) iff some covered
// source pixel is valid and carries c as a foreground label.
bool oracle_foreground(const std::vector<TileSample>& tiles, int k, int c, int oy, int ox) {
  for (int dy = 0; dy < k; ++dy) {
    for (int dx = 0; dx < k; ++dx) {
      int sy = 0;
      int sx = 0;
      const auto& t = source_at(tiles, k, oy * k + dy, ox * k + dx, sy, sx);
      if (t.validity.at(sy, sx) && t.label_raster(c).at(sy, sx)) return true;
    }
  }
  return false;
}

std::vector<TileSample> random_grid(int k, int size, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.size = size;
  cfg.seed = seed;
  cfg.overlap_rate = 0.3;
  cfg.invalid_corner_rate = 0.5;
  std::vector<TileSample> tiles;
  for (int i = 0; i < k * k; ++i) tiles.push_back(render_synthetic_tile(cfg, i));
  return tiles;
}

}  // namespace

TEST_CASE("uniform tiles keep their value") {
  std::vector<TileSample> tiles;
  for (int i = 0; i < 4; ++i) tiles.push_back(uniform_tile("u" + std::to_string(i), 6, 6, 77));
  const auto out = mosaic_grid(tiles, 2);
  for (auto v : out.image.values()) CHECK(v == 77);
  CHECK(out.id == "u0+u1+u2+u3");
}

TEST_CASE("block {100, 50, 150, 200} averages to 125") {
  // 2x2 tiles on a 2x2 grid: output pixel (0, 0) covers all of tile 0.
  std::vector<TileSample> tiles;
  for (int i = 0; i < 4; ++i) tiles.push_back(uniform_tile("t" + std::to_string(i), 2, 2, 0));
  tiles[0].image.at(0, 0, 0) = 100;
  tiles[0].image.at(0, 1, 0) = 50;
  tiles[0].image.at(1, 0, 0) = 150;
  tiles[0].image.at(1, 1, 0) = 200;
  const auto out = mosaic_grid(tiles, 2);
  CHECK(out.height() == 2);
  CHECK(out.image.at(0, 0, 0) == 125);
  CHECK(out.image.at(0, 1, 0) == 0);
}

TEST_CASE("hand-built 4x4 canvas fixtures for the block mean") {
  // 2x2 grid of 2x2 tiles: the canvas is 4x4 and each output pixel is the
  // mean of exactly one source tile.
  const std::uint8_t values[4][4] = {{10, 11, 12, 13}, {0, 0, 1, 1}, {255, 254, 255, 254}, {3, 4, 5, 6}};
  std::vector<TileSample> tiles;
  for (int i = 0; i < 4; ++i) {
    auto t = uniform_tile("t" + std::to_string(i), 2, 2, 0);
    for (int p = 0; p < 4; ++p) {
      for (int ch = 0; ch < 4; ++ch) t.image.at(p / 2, p % 2, ch) = values[i][p];
    }
    tiles.push_back(t);
  }
  const auto out = mosaic_grid(tiles, 2);
  // 46/4 = 11.5 -> 12; 2/4 = 0.5 -> 1; 1018/4 = 254.5 -> 255; 18/4 = 4.5 -> 5
  CHECK(out.image.at(0, 0, 0) == 12);
  CHECK(out.image.at(0, 1, 2) == 1);
  CHECK(out.image.at(1, 0, 3) == 255);
  CHECK(out.image.at(1, 1, 1) == 5);
}

TEST_CASE("3x3 block mean fixture") {
  std::vector<TileSample> tiles;
  for (int i = 0; i < 9; ++i) tiles.push_back(uniform_tile("t" + std::to_string(i), 3, 3, static_cast<std::uint8_t>(i)));
  tiles[4].image.at(1, 1, 0) = 9;  // block sum 4*8 + 9 = 41 -> 41/9 = 4.56 -> 5
  const auto out = mosaic_grid(tiles, 3);
  CHECK(out.image.at(1, 1, 0) == 5);
  CHECK(out.image.at(1, 1, 1) == 4);
  CHECK(out.image.at(2, 2, 0) == 8);
}

TEST_CASE("class 5 on a 10x10 patch of one source survives on the halved footprint") {
  std::vector<TileSample> tiles;
  for (int i = 0; i < 4; ++i) tiles.push_back(uniform_tile("t" + std::to_string(i), 20, 20, 50));
  // Tile 3 sits at the bottom-right of the canvas; patch at rows/cols 3..12.
  std::array<ByteRaster, kNumClasses> fg;
  for (int c = 1; c < kNumClasses; ++c) fg[c] = ByteRaster(20, 20);
  for (int y = 3; y < 13; ++y)
    for (int x = 3; x < 13; ++x) fg[5].at(y, x) = 1;
  tiles[3] = make_tile("t3", ByteRaster(20, 20, 4, 50), fg, ByteRaster(20, 20, 1, 1));
  const auto out = mosaic_grid(tiles, 2);
  REQUIRE(out.height() == 20);
  std::size_t count = 0;
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) {
      const bool has = out.has_label(5, y, x);
      CHECK(has == oracle_foreground(tiles, 2, 5, y, x));
      count += has;
    }
  }
  // canvas rows/cols 23..32 -> output rows/cols 11..16: a 6x6 footprint
  CHECK(count == 36);
  CHECK(out.has_label(5, 11, 11));
  CHECK(out.has_label(5, 16, 16));
  CHECK_FALSE(out.has_label(5, 10, 11));
}

TEST_CASE("label OR matches the per-block brute force on 20 random grids") {
  for (int g = 0; g < 20; ++g) {
    const int k = g % 2 == 0 ? 2 : 3;
    const auto tiles = random_grid(k, 18, 1000 + g);
    const auto out = mosaic_grid(tiles, k);
    REQUIRE(out.height() == 18);
    REQUIRE(out.width() == 18);
    for (int y = 0; y < 18; ++y) {
      for (int x = 0; x < 18; ++x) {
        for (int c = 1; c < kNumClasses; ++c) CHECK(out.has_label(c, y, x) == oracle_foreground(tiles, k, c, y, x));
      }
    }
  }
}

TEST_CASE("mosaic invariants: shape, validity OR, conservation and value bounds") {
  for (int k : {2, 3}) {
    const auto tiles = random_grid(k, 24, 77 + k);
    const auto out = mosaic_grid(tiles, k);
    CHECK(out.height() == 24);
    CHECK(out.width() == 24);
    std::array<bool, kNumClasses> any_source{};
    for (const auto& t : tiles) {
      const auto p = t.presence();
      for (int c = 0; c < kNumClasses; ++c) any_source[c] = any_source[c] || p[c];
    }
    const auto p = out.presence();
    for (int c = 1; c < kNumClasses; ++c) {
      if (p[c]) CHECK(any_source[c]);
      if (!any_source[c]) CHECK_FALSE(p[c]);
    }
    for (int y = 0; y < 24; ++y) {
      for (int x = 0; x < 24; ++x) {
        bool any_valid = false;
        for (int ch = 0; ch < 4; ++ch) {
          int lo = 255;
          int hi = 0;
          for (int dy = 0; dy < k; ++dy) {
            for (int dx = 0; dx < k; ++dx) {
              int sy = 0;
              int sx = 0;
              const auto& t = source_at(tiles, k, y * k + dy, x * k + dx, sy, sx);
              lo = std::min<int>(lo, t.image.at(sy, sx, ch));
              hi = std::max<int>(hi, t.image.at(sy, sx, ch));
              any_valid = any_valid || t.validity.at(sy, sx);
            }
          }
          CHECK(out.image.at(y, x, ch) >= lo);
          CHECK(out.image.at(y, x, ch) <= hi);
        }
        CHECK(bool(out.validity.at(y, x)) == any_valid);
        const LabelSet l = out.labels.at(y, x);
        if (out.validity.at(y, x)) {
          CHECK(bool(l & class_bit(0)) == !(l & kForegroundBits));
        } else {
          CHECK(l == 0);
        }
      }
    }
  }
}

TEST_CASE("mosaic_grid errors") {
  std::vector<TileSample> tiles;
  for (int i = 0; i < 4; ++i) tiles.push_back(uniform_tile("t", 4, 4, 1));
  CHECK(kind_of([&] { mosaic_grid(tiles, 4); }) == ErrorKind::BadFactor);
  CHECK(kind_of([&] { mosaic_grid(std::span(tiles).first(3), 2); }) == ErrorKind::InvalidArgument);
  tiles[2] = uniform_tile("odd", 4, 6, 1);
  CHECK(kind_of([&] { mosaic_grid(tiles, 2); }) == ErrorKind::DimensionMismatch);
  // odd tile sides are fine: the canvas is always a multiple of k
  std::vector<TileSample> odd;
  for (int i = 0; i < 4; ++i) odd.push_back(uniform_tile("t", 5, 5, 1));
  CHECK(mosaic_grid(odd, 2).height() == 5);
}

TEST_CASE("dataset mosaics: group arithmetic and leftovers") {
  TempDir dir;
  SynthConfig cfg;
  cfg.tile_count = 10;
  cfg.size = 18;
  cfg.seed = 5;
  const auto m = generate_synthetic(cfg, dir / "ds");
  const auto two = build_mosaic_dataset(m, MosaicSpec{2, 1}, dir / "m2");
  CHECK(two.records.size() == 2);
  CHECK(two.provenance.find("2 leftover") != std::string::npos);
  auto nine = m;
  nine.records.resize(9);
  const auto three = build_mosaic_dataset(nine, MosaicSpec{3, 1}, dir / "m3");
  CHECK(three.records.size() == 1);
  CHECK(std::count(three.records[0].id.begin(), three.records[0].id.end(), '+') == 8);
  CHECK(load_tile(three.records[0]).height() == 18);
}

TEST_CASE("16-tile mosaic counts match a brute-force recount and are deterministic") {
  TempDir dir;
  SynthConfig cfg;
  cfg.tile_count = 16;
  cfg.size = 32;
  cfg.seed = 12;
  const auto m = generate_synthetic(cfg, dir / "ds");
  const auto a = build_mosaic_dataset(m, MosaicSpec{2, 9}, dir / "a");
  const auto b = build_mosaic_dataset(m, MosaicSpec{2, 9}, dir / "b", 4);
  REQUIRE(a.records.size() == 4);
  CHECK(class_counts(a) == agv::testing::brute_force_tree_counts(dir / "a"));
  CHECK(agv::testing::sha256_tree(dir / "a") == agv::testing::sha256_tree(dir / "b"));
  CHECK(std::is_sorted(a.records.begin(), a.records.end(),
                       [](const TileRecord& x, const TileRecord& y) { return x.id < y.id; }));

  // grouping follows the seeded permutation in consecutive chunks
  const auto order = seeded_permutation(16, 9, 0);
  std::vector<std::string> expected;
  for (int g = 0; g < 4; ++g) {
    std::string id;
    for (int j = 0; j < 4; ++j) id += (j ? "+" : "") + m.records[order[g * 4 + j]].id;
    expected.push_back(id);
  }
  std::sort(expected.begin(), expected.end());
  for (int g = 0; g < 4; ++g) CHECK(a.records[g].id == expected[g]);

  // each written tile equals the in-memory fusion of its sources
  for (const auto& rec : a.records) {
    std::vector<TileSample> sources;
    std::size_t start = 0;
    for (;;) {
      const auto plus = rec.id.find('+', start);
      const std::string sid = rec.id.substr(start, plus - start);
      for (const auto& r : m.records) {
        if (r.id == sid) sources.push_back(load_tile(r));
      }
      if (plus == std::string::npos) break;
      start = plus + 1;
    }
    const auto fused = mosaic_grid(sources, 2);
    const auto loaded = load_tile(rec);
    CHECK(loaded.image == fused.image);
    CHECK(loaded.labels == fused.labels);
    CHECK(loaded.validity == fused.validity);
  }
}

TEST_CASE("dataset mosaic errors") {
  TempDir dir;
  SynthConfig cfg;
  cfg.tile_count = 3;
  cfg.size = 18;
  const auto m = generate_synthetic(cfg, dir / "ds");
  CHECK(kind_of([&] { build_mosaic_dataset(m, MosaicSpec{2, 0}, dir / "o"); }) == ErrorKind::TooFewTiles);
  CHECK(kind_of([&] { build_mosaic_dataset(m, MosaicSpec{5, 0}, dir / "o"); }) == ErrorKind::BadFactor);
}

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agv/dataset.hpp"
#include "agv/predictor.hpp"
#include "agv/score_map.hpp"

namespace agv {

/// Test-time transform: horizontal flip (optional), then `rotation`
/// counter-clockwise quarter turns, then a 1/scale_divisor reduction.
struct TtaTransform {
  int rotation = 0;        // quarter turns, 0..3
  bool hflip = false;
  int scale_divisor = 1;   // 1, 2 or 3

  bool is_identity() const noexcept { return rotation == 0 && !hflip && scale_divisor == 1; }
  std::string name() const;

  friend bool operator==(const TtaTransform&, const TtaTransform&) = default;
};

void validate(const TtaTransform& t);

/// The eight elements of D4, identity first.
std::vector<TtaTransform> d4_transforms();

/// Non-empty, duplicate-free transform list. Aggregation is the arithmetic
/// mean with pairwise summation in list order.
class TtaConfig {
 public:
  explicit TtaConfig(std::vector<TtaTransform> transforms);

  /// Comma-separated tokens: rot90, rot180, rot270, hflip, hflip_rot90,
  /// hflip_rot180, hflip_rot270, scale2, scale3, and `d4` for all eight D4
  /// elements. The identity is always included first.
  static TtaConfig parse(std::string_view list);
  static TtaConfig identity() { return TtaConfig({TtaTransform{}}); }

  const std::vector<TtaTransform>& transforms() const noexcept { return transforms_; }

 private:
  std::vector<TtaTransform> transforms_;
};

template <typename T>
Raster<T> apply_geometry(const Raster<T>& r, const TtaTransform& t) {
  return rotate_quarter(t.hflip ? flip_horizontal(r) : r, t.rotation);
}

template <typename T>
Raster<T> invert_geometry(const Raster<T>& r, const TtaTransform& t) {
  Raster<T> back = rotate_quarter(r, 4 - t.rotation);
  return t.hflip ? flip_horizontal(back) : back;
}

/// Transforms every raster of a tile consistently. Scale reduction uses the
/// mosaic rules: image block mean, labels/validity block OR.
TileSample apply_transform(const TileSample& tile, const TtaTransform& t);

/// Applies t to a score map (rotation/flip only; scale reduction of scores
/// is not defined). Used to build inverse checks.
ScoreMap transform_scores(const ScoreMap& scores, const TtaTransform& t);

/// Maps scores predicted on apply_transform(tile, t) back to the tile frame
/// of size target_height x target_width. Scale is undone by nearest-neighbour
/// replication.
ScoreMap invert_scores(const ScoreMap& scores, const TtaTransform& t, int target_height, int target_width);

/// Sum of values in pairwise (recursive halving) order.
double pairwise_sum(std::span<const double> values);

/// Per-entry arithmetic mean of equally shaped maps using pairwise summation.
ScoreMap mean_scores(std::span<const ScoreMap> maps);

ScoreMap tta_predict(const PredictorSpec& spec, const TileSample& tile, const TtaConfig& config, int threads = 1);

}  // namespace agv

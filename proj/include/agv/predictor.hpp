#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "agv/dataset.hpp"
#include "agv/score_map.hpp"

namespace agv {

enum class PredictorKind { oracle, constant, noisy_oracle, external };

/// Reference predictors stand in for a trained segmentation network; the
/// `external` kind reads scores produced elsewhere.
struct PredictorSpec {
  PredictorKind kind = PredictorKind::oracle;
  int constant_class = 0;
  double flip_probability = 0.0;
  std::uint64_t seed = 0;
  std::filesystem::path score_dir;

  static PredictorSpec oracle() { return {}; }
  static PredictorSpec constant(ClassId c);
  static PredictorSpec noisy_oracle(double p, std::uint64_t seed);
  static PredictorSpec external(std::filesystem::path dir);

  /// Parses `oracle`, `constant:K`, `noisy-oracle:P:SEED` or `external:DIR`.
  static PredictorSpec parse(std::string_view text);
  std::string to_string() const;
};

/// Scores for one tile.
///  oracle        one-hot on the lowest-index ground-truth class of each valid
///                pixel, one-hot Background on invalid pixels;
///  constant:K    one-hot K everywhere;
///  noisy-oracle  oracle, but each valid pixel is replaced with probability p
///                by a uniformly drawn one-hot class; the draw for pixel
///                (y, x) uses stream y*W+x of seed ^ fnv1a64(tile id);
///  external      `<dir>/<tile id>.agsc`, validated.
ScoreMap predict(const PredictorSpec& spec, const TileSample& tile);

}  // namespace agv

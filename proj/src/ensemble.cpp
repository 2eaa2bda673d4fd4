#include "agv/ensemble.hpp"

#include <cmath>

namespace agv {

std::vector<float> normalize_weights(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw Error(ErrorKind::InvalidArgument, "ensemble weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorKind::AllZeroWeights, "at least one ensemble weight must be positive");
  std::vector<float> out;
  out.reserve(weights.size());
  for (double w : weights) out.push_back(static_cast<float>(w / total));
  return out;
}

ScoreMap ensemble_scores(std::span<const ScoreMap> maps, std::span<const double> weights) {
  if (maps.empty()) throw Error(ErrorKind::InvalidArgument, "ensemble needs at least one score map");
  std::vector<double> uniform;
  if (weights.empty()) {
    uniform.assign(maps.size(), 1.0);
    weights = uniform;
  }
  if (weights.size() != maps.size()) {
    throw Error(ErrorKind::InvalidArgument, std::to_string(weights.size()) + " weights for " +
                                                std::to_string(maps.size()) + " score maps");
  }
  for (const auto& m : maps) {
    if (m.tile_id != maps[0].tile_id) {
      throw Error(ErrorKind::TileIdMismatch, "'" + m.tile_id + "' vs '" + maps[0].tile_id + "'");
    }
    if (m.height() != maps[0].height() || m.width() != maps[0].width() ||
        m.scores.channels() != maps[0].scores.channels()) {
      throw Error(ErrorKind::DimensionMismatch, "score maps for " + m.tile_id + " differ in shape");
    }
  }

  const std::vector<float> w = normalize_weights(weights);
  double w_total = 0.0;
  for (float v : w) w_total += v;

  ScoreMap out;
  out.tile_id = maps[0].tile_id;
  out.scores = Raster<float>(maps[0].height(), maps[0].width(), maps[0].scores.channels());
  for (std::size_t i = 0; i < out.scores.size(); ++i) {
    double acc = 0.0;
    for (std::size_t m = 0; m < maps.size(); ++m) {
      if (w[m] == 0.0f) continue;
      acc += static_cast<double>(w[m]) * maps[m].scores.data()[i];
    }
    out.scores.data()[i] = static_cast<float>(acc / w_total);
  }
  return out;
}

LabelRaster argmax_labels(const ScoreMap& scores, const ByteRaster& validity) {
  const bool all_valid = validity.empty();
  if (!all_valid && !validity.same_extent(scores.scores)) {
    throw Error(ErrorKind::DimensionMismatch, scores.tile_id + ": validity extent differs from scores");
  }
  LabelRaster out(scores.height(), scores.width());
  const int classes = scores.scores.channels();
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (!all_valid && !validity.data()[p]) continue;
    const float* px = scores.scores.data() + p * classes;
    int best = 0;
    for (int c = 1; c < classes; ++c) {
      if (px[c] > px[best]) best = c;
    }
    out.data()[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace agv

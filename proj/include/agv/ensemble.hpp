#pragma once

#include <span>
#include <vector>

#include "agv/raster.hpp"
#include "agv/score_map.hpp"

namespace agv {

/// Per-pixel class indices; invalid pixels carry Background.
using LabelRaster = ByteRaster;

/// Normalizes non-negative weights to sum 1 and rounds them to float
/// precision, so scaling every weight by the same factor yields the same
/// normalized weights. Throws AllZeroWeights / InvalidArgument.
std::vector<float> normalize_weights(std::span<const double> weights);

/// Weighted per-entry mean: sum_i w_i s_i / sum_i w_i over normalized
/// weights, accumulated in double. Each output entry lies in the
/// [min, max] of its inputs. Empty `weights` means uniform.
ScoreMap ensemble_scores(std::span<const ScoreMap> maps, std::span<const double> weights = {});

/// Smallest class index attaining the per-pixel maximum; invalid pixels
/// become Background. An empty validity raster marks every pixel valid.
LabelRaster argmax_labels(const ScoreMap& scores, const ByteRaster& validity);

}  // namespace agv

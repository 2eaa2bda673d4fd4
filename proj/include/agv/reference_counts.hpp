#pragma once

#include "agv/dataset.hpp"

namespace agv::reference {

// Per-class image counts of the Agriculture-Vision 2022 splits
// (tiles containing each class) and the rebalanced counts used for training.
inline constexpr ClassCounts kOriginalTrain = {56944, 6234, 16806, 4481, 13308, 2599, 2155, 3899, 11111};
inline constexpr ClassCounts kOriginalVal = {18334, 2322, 5800, 1755, 3883, 1197, 987, 696, 2834};
inline constexpr ClassCounts kResampledTrain = {75121, 10961, 19320, 8544, 14859, 5361, 4132, 6024, 14423};
inline constexpr ClassCounts kResampledVal = {13642, 2294, 3383, 1858, 2610, 1015, 721, 1109, 2773};

inline constexpr int kTileSize = 512;
inline constexpr int kCorpusTiles = 94986;

}  // namespace agv::reference

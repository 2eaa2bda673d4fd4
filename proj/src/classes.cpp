#include "agv/classes.hpp"

#include <bit>

#include "agv/error.hpp"

namespace agv {

bool is_valid_class(int index) noexcept { return index >= 0 && index < kNumClasses; }

int lowest_class(LabelSet set) noexcept {
  if ((set & kAllClassBits) == 0) return -1;
  return std::countr_zero(static_cast<unsigned>(set & kAllClassBits));
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MissingCompanionFile: return "MissingCompanionFile";
    case ErrorKind::CorruptRaster: return "CorruptRaster";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::OutputNotEmpty: return "OutputNotEmpty";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::BadFormat: return "BadFormat";
    case ErrorKind::UnreachableTarget: return "UnreachableTarget";
    case ErrorKind::EmptyManifest: return "EmptyManifest";
    case ErrorKind::UnknownTileId: return "UnknownTileId";
    case ErrorKind::BadFactor: return "BadFactor";
    case ErrorKind::TooFewTiles: return "TooFewTiles";
    case ErrorKind::MissingScoreFile: return "MissingScoreFile";
    case ErrorKind::InvalidScores: return "InvalidScores";
    case ErrorKind::IndivisibleSize: return "IndivisibleSize";
    case ErrorKind::TileIdMismatch: return "TileIdMismatch";
    case ErrorKind::AllZeroWeights: return "AllZeroWeights";
    case ErrorKind::NoDefinedClasses: return "NoDefinedClasses";
    case ErrorKind::ArithmeticOverflow: return "ArithmeticOverflow";
  }
  return "Unknown";
}

UnreachableTargetError::UnreachableTargetError(int class_index, std::uint64_t best_achievable,
                                               std::uint64_t target)
    : Error(ErrorKind::UnreachableTarget,
            "class " + std::to_string(class_index) + " target " + std::to_string(target) +
                " cannot be approached; best achievable count is " + std::to_string(best_achievable)),
      class_index_(class_index),
      best_achievable_(best_achievable),
      target_(target) {}

}  // namespace agv

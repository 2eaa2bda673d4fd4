#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace agv {

enum class ErrorKind {
  InvalidArgument,
  MissingCompanionFile,
  CorruptRaster,
  EmptyDataset,
  DimensionMismatch,
  OutputNotEmpty,
  IoFailure,
  BadFormat,
  UnreachableTarget,
  EmptyManifest,
  UnknownTileId,
  BadFactor,
  TooFewTiles,
  MissingScoreFile,
  InvalidScores,
  IndivisibleSize,
  TileIdMismatch,
  AllZeroWeights,
  NoDefinedClasses,
  ArithmeticOverflow,
};

std::string_view to_string(ErrorKind kind);

// All library failures surface as agv::Error; kind() is stable and tested.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UnreachableTargetError : public Error {
 public:
  UnreachableTargetError(int class_index, std::uint64_t best_achievable, std::uint64_t target);

  int class_index() const noexcept { return class_index_; }
  std::uint64_t best_achievable() const noexcept { return best_achievable_; }
  std::uint64_t target() const noexcept { return target_; }

 private:
  int class_index_;
  std::uint64_t best_achievable_;
  std::uint64_t target_;
};

}  // namespace agv

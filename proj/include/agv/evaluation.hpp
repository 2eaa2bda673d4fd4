#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "agv/classes.hpp"
#include "agv/dataset.hpp"
#include "agv/ensemble.hpp"

namespace agv {

/// 9x9 event counts, counts[t][p] for ground truth t and prediction p.
/// Merging is entrywise addition, so any tile partition evaluates to the
/// same matrix.
class ConfusionMatrix {
 public:
  using Counts = std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses>;

  const Counts& counts() const noexcept { return counts_; }
  std::uint64_t at(int truth, int predicted) const noexcept { return counts_[truth][predicted]; }
  std::uint64_t valid_pixels() const noexcept { return valid_pixels_; }

  /// Overlap rule for one valid pixel with ground-truth label set `truth`:
  /// a prediction inside the set adds one true positive for that class only;
  /// a prediction outside it adds one (l, predicted) event per l in the set.
  void record_pixel(LabelSet truth, int predicted);

  /// Adds every valid pixel of `gt`. Invalid pixels contribute nothing.
  void accumulate(const LabelRaster& predicted, const TileSample& gt);

  /// Entrywise sum; throws ArithmeticOverflow on 64-bit wrap.
  static ConfusionMatrix merge(const ConfusionMatrix& a, const ConfusionMatrix& b);

  static ConfusionMatrix from_counts(const Counts& counts, std::uint64_t valid_pixels);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  Counts counts_{};
  std::uint64_t valid_pixels_ = 0;
};

inline ConfusionMatrix merge(const ConfusionMatrix& a, const ConfusionMatrix& b) { return ConfusionMatrix::merge(a, b); }

struct MetricsReport {
  // nullopt when the class never occurs in truth or prediction.
  std::array<std::optional<double>, kNumClasses> iou{};
  double miou = 0.0;
  ConfusionMatrix confusion;

  std::size_t defined_classes() const;
};

/// IoU_c = tp / (row_c + col_c - tp); mIoU over the defined classes.
/// Throws NoDefinedClasses when every denominator is zero.
MetricsReport metrics(const ConfusionMatrix& conf);

/// Produces the predicted labels for record i of a manifest.
using PredictionSource = std::function<LabelRaster(const TileSample& tile, std::size_t index)>;

/// Loads each tile, obtains its prediction and accumulates. Tiles are split
/// into `partitions` contiguous ranges, each reduced on its own worker and
/// merged in range order.
ConfusionMatrix evaluate_manifest(const Manifest& manifest, const PredictionSource& source, int partitions = 1);

/// Report JSON: {"miou", "iou", "class_names", "confusion", "valid_pixels"}.
std::string report_to_json(const MetricsReport& report);

/// One header line and one row, columns in class-index order:
/// `Model | mIoU | BG(0) | DP(1) | ... | WC(8)`.
std::string report_to_table(const MetricsReport& report, std::string_view row_label);

}  // namespace agv

#include "agv/evaluation.hpp"

#include <cstdio>
#include <limits>
#include <vector>

#include <json.hpp>

#include "agv/parallel.hpp"

namespace agv {

void ConfusionMatrix::record_pixel(LabelSet truth, int predicted) {
  if (!is_valid_class(predicted)) {
    throw Error(ErrorKind::InvalidArgument, "predicted class " + std::to_string(predicted) + " out of range");
  }
  truth &= kAllClassBits;
  if (truth == 0) return;
  ++valid_pixels_;
  if ((truth >> predicted) & 1u) {
    ++counts_[predicted][predicted];
    return;
  }
  for (int l = 0; l < kNumClasses; ++l) {
    if ((truth >> l) & 1u) ++counts_[l][predicted];
  }
}

void ConfusionMatrix::accumulate(const LabelRaster& predicted, const TileSample& gt) {
  if (!predicted.same_extent(gt.labels) || !gt.validity.same_extent(gt.labels)) {
    throw Error(ErrorKind::DimensionMismatch, gt.id + ": prediction is " + std::to_string(predicted.height()) + "x" +
                                                  std::to_string(predicted.width()) + ", ground truth is " +
                                                  std::to_string(gt.labels.height()) + "x" +
                                                  std::to_string(gt.labels.width()));
  }
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    if (!gt.validity.data()[p]) continue;
    const int pred = predicted.data()[p];
    LabelSet truth = gt.labels.data()[p];
    // A valid pixel always carries a label; Background when nothing else.
    if ((truth & kAllClassBits) == 0) truth = class_bit(kBackground);
    record_pixel(truth, pred);
  }
}

ConfusionMatrix ConfusionMatrix::merge(const ConfusionMatrix& a, const ConfusionMatrix& b) {
  ConfusionMatrix out;
  auto add = [](std::uint64_t x, std::uint64_t y) {
    std::uint64_t sum = 0;
    if (__builtin_add_overflow(x, y, &sum)) throw Error(ErrorKind::ArithmeticOverflow, "confusion count overflow");
    return sum;
  };
  for (int t = 0; t < kNumClasses; ++t) {
    for (int p = 0; p < kNumClasses; ++p) out.counts_[t][p] = add(a.counts_[t][p], b.counts_[t][p]);
  }
  out.valid_pixels_ = add(a.valid_pixels_, b.valid_pixels_);
  return out;
}

ConfusionMatrix ConfusionMatrix::from_counts(const Counts& counts, std::uint64_t valid_pixels) {
  ConfusionMatrix out;
  out.counts_ = counts;
  out.valid_pixels_ = valid_pixels;
  return out;
}

std::size_t MetricsReport::defined_classes() const {
  std::size_t n = 0;
  for (const auto& v : iou) n += v.has_value() ? 1 : 0;
  return n;
}

MetricsReport metrics(const ConfusionMatrix& conf) {
  MetricsReport report;
  report.confusion = conf;
  double sum = 0.0;
  std::size_t defined = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (int k = 0; k < kNumClasses; ++k) {
      row += conf.at(c, k);
      col += conf.at(k, c);
    }
    const std::uint64_t tp = conf.at(c, c);
    const std::uint64_t uni = row + col - tp;
    if (uni == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    report.iou[c] = iou;
    sum += iou;
    ++defined;
  }
  if (defined == 0) throw Error(ErrorKind::NoDefinedClasses, "no class occurs in truth or prediction");
  report.miou = sum / static_cast<double>(defined);
  return report;
}

ConfusionMatrix evaluate_manifest(const Manifest& manifest, const PredictionSource& source, int partitions) {
  const auto ranges = partition_ranges(manifest.records.size(), static_cast<std::size_t>(std::max(1, partitions)));
  std::vector<ConfusionMatrix> partial(ranges.size());
  parallel_for(ranges.size(), static_cast<int>(ranges.size()), [&](std::size_t r) {
    for (std::size_t i = ranges[r].first; i < ranges[r].second; ++i) {
      const TileSample tile = load_tile(manifest.records[i]);
      partial[r].accumulate(source(tile, i), tile);
    }
  });
  ConfusionMatrix total;
  for (const auto& m : partial) total = merge(total, m);
  return total;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["miou"] = report.miou;
  nlohmann::ordered_json iou = nlohmann::ordered_json::array();
  for (const auto& v : report.iou) {
    if (v) {
      iou.push_back(*v);
    } else {
      iou.push_back(nullptr);
    }
  }
  j["iou"] = std::move(iou);
  nlohmann::ordered_json names = nlohmann::ordered_json::array();
  for (auto n : kClassNames) names.push_back(std::string(n));
  j["class_names"] = std::move(names);
  j["confusion"] = report.confusion.counts();
  j["valid_pixels"] = report.confusion.valid_pixels();
  return j.dump(2) + "\n";
}

std::string report_to_table(const MetricsReport& report, std::string_view row_label) {
  std::string header = "Model | mIoU";
  for (int c = 0; c < kNumClasses; ++c) {
    header += " | " + std::string(kClassAbbrev[c]) + "(" + std::to_string(c) + ")";
  }
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return std::string(buf);
  };
  std::string row = std::string(row_label) + " | " + fmt(report.miou);
  for (const auto& v : report.iou) row += " | " + (v ? fmt(*v) : std::string("-"));
  return header + "\n" + row + "\n";
}

}  // namespace agv

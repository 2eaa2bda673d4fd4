#include "agv/tta.hpp"

#include <algorithm>
#include <map>

#include "agv/parallel.hpp"

namespace agv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string TtaTransform::name() const {
  if (is_identity()) return "identity";
  std::string out;
  auto add = [&](const std::string& part) {
    if (!out.empty()) out += '_';
    out += part;
  };
  if (hflip) add("hflip");
  if (rotation) add("rot" + std::to_string(90 * rotation));
  if (scale_divisor != 1) add("scale" + std::to_string(scale_divisor));
  return out;
}

void validate(const TtaTransform& t) {
  if (t.rotation < 0 || t.rotation > 3) throw Error(ErrorKind::InvalidArgument, "rotation must be 0..3 quarter turns");
  if (t.scale_divisor < 1 || t.scale_divisor > 3) {
    throw Error(ErrorKind::InvalidArgument, "scale must be 1, 1/2 or 1/3");
  }
}

std::vector<TtaTransform> d4_transforms() {
  std::vector<TtaTransform> out;
  for (bool flip : {false, true}) {
    for (int r = 0; r < 4; ++r) out.push_back({r, flip, 1});
  }
  return out;
}

TtaConfig::TtaConfig(std::vector<TtaTransform> transforms) : transforms_(std::move(transforms)) {
  if (transforms_.empty()) throw Error(ErrorKind::InvalidArgument, "TTA needs at least one transform");
  for (std::size_t i = 0; i < transforms_.size(); ++i) {
    validate(transforms_[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (transforms_[i] == transforms_[j]) {
        throw Error(ErrorKind::InvalidArgument, "duplicate TTA transform " + transforms_[i].name());
      }
    }
  }
}

TtaConfig TtaConfig::parse(std::string_view list) {
  static const std::map<std::string, TtaTransform, std::less<>> kTokens = {
      {"rot90", {1, false, 1}},        {"rot180", {2, false, 1}},       {"rot270", {3, false, 1}},
      {"hflip", {0, true, 1}},         {"hflip_rot90", {1, true, 1}},   {"hflip_rot180", {2, true, 1}},
      {"hflip_rot270", {3, true, 1}},  {"scale2", {0, false, 2}},       {"scale3", {0, false, 3}},
  };
  std::vector<TtaTransform> transforms{TtaTransform{}};
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const std::string_view token = trim(list.substr(pos, comma == std::string_view::npos ? list.npos : comma - pos));
    pos = comma == std::string_view::npos ? list.size() + 1 : comma + 1;
    if (token.empty()) continue;
    if (token == "d4") {
      const auto group = d4_transforms();
      transforms.insert(transforms.end(), group.begin() + 1, group.end());
      continue;
    }
    auto it = kTokens.find(token);
    if (it == kTokens.end()) throw Error(ErrorKind::InvalidArgument, "unknown TTA token '" + std::string(token) + "'");
    transforms.push_back(it->second);
  }
  return TtaConfig(std::move(transforms));
}

TileSample apply_transform(const TileSample& tile, const TtaTransform& t) {
  validate(t);
  TileSample out;
  out.id = tile.id;
  out.image = apply_geometry(tile.image, t);
  out.labels = apply_geometry(tile.labels, t);
  out.validity = apply_geometry(tile.validity, t);
  if (t.scale_divisor > 1) {
    const int k = t.scale_divisor;
    out.image = block_mean(out.image, k);
    out.labels = block_or(out.labels, k);
    out.validity = block_or(out.validity, k);
    out.normalize_labels();
  }
  return out;
}

ScoreMap transform_scores(const ScoreMap& scores, const TtaTransform& t) {
  validate(t);
  if (t.scale_divisor != 1) throw Error(ErrorKind::InvalidArgument, "score maps can only be transformed geometrically");
  ScoreMap out;
  out.tile_id = scores.tile_id;
  out.scores = apply_geometry(scores.scores, t);
  return out;
}

ScoreMap invert_scores(const ScoreMap& scores, const TtaTransform& t, int target_height, int target_width) {
  validate(t);
  const int k = t.scale_divisor;
  const bool swapped = t.rotation % 2 == 1;
  const int expect_h = (swapped ? target_width : target_height) / k;
  const int expect_w = (swapped ? target_height : target_width) / k;
  if (target_height % k != 0 || target_width % k != 0 || scores.height() != expect_h ||
      scores.width() != expect_w) {
    throw Error(ErrorKind::DimensionMismatch,
                "scores " + std::to_string(scores.height()) + "x" + std::to_string(scores.width()) +
                    " do not match " + t.name() + " of " + std::to_string(target_height) + "x" +
                    std::to_string(target_width));
  }
  ScoreMap out;
  out.tile_id = scores.tile_id;
  out.scores = invert_geometry(k > 1 ? replicate(scores.scores, k) : scores.scores, t);
  return out;
}

double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() == 1) return values[0];
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

ScoreMap mean_scores(std::span<const ScoreMap> maps) {
  if (maps.empty()) throw Error(ErrorKind::InvalidArgument, "cannot average zero score maps");
  for (const auto& m : maps) {
    if (m.height() != maps[0].height() || m.width() != maps[0].width() ||
        m.scores.channels() != maps[0].scores.channels()) {
      throw Error(ErrorKind::DimensionMismatch, "score maps to average differ in shape");
    }
  }
  ScoreMap out;
  out.tile_id = maps[0].tile_id;
  out.scores = Raster<float>(maps[0].height(), maps[0].width(), maps[0].scores.channels());
  const double n = static_cast<double>(maps.size());
  std::vector<double> column(maps.size());
  for (std::size_t i = 0; i < out.scores.size(); ++i) {
    for (std::size_t m = 0; m < maps.size(); ++m) column[m] = maps[m].scores.data()[i];
    out.scores.data()[i] = static_cast<float>(pairwise_sum(column) / n);
  }
  return out;
}

ScoreMap tta_predict(const PredictorSpec& spec, const TileSample& tile, const TtaConfig& config, int threads) {
  const auto& transforms = config.transforms();
  std::vector<ScoreMap> branches(transforms.size());
  parallel_for(transforms.size(), threads, [&](std::size_t i) {
    const TtaTransform& t = transforms[i];
    const ScoreMap raw = predict(spec, apply_transform(tile, t));
    branches[i] = invert_scores(raw, t, tile.height(), tile.width());
  });
  ScoreMap out = mean_scores(branches);
  out.tile_id = tile.id;
  validate(out);
  return out;
}

}  // namespace agv

#include "agv/predictor.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "agv/rng.hpp"

namespace agv {
namespace {

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw Error(ErrorKind::InvalidArgument, "invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

ScoreMap oracle_scores(const TileSample& tile) {
  ScoreMap map(tile.id, tile.height(), tile.width());
  for (std::size_t p = 0; p < tile.labels.size(); ++p) {
    int c = kBackground;
    if (tile.validity.data()[p]) {
      const int lowest = lowest_class(tile.labels.data()[p]);
      c = lowest < 0 ? kBackground : lowest;
    }
    map.scores.data()[p * kNumClasses + c] = 1.0f;
  }
  return map;
}

}  // namespace

PredictorSpec PredictorSpec::constant(ClassId c) {
  PredictorSpec s;
  s.kind = PredictorKind::constant;
  s.constant_class = c.index();
  return s;
}

PredictorSpec PredictorSpec::noisy_oracle(double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidArgument, "noisy-oracle probability must lie in [0, 1)");
  PredictorSpec s;
  s.kind = PredictorKind::noisy_oracle;
  s.flip_probability = p;
  s.seed = seed;
  return s;
}

PredictorSpec PredictorSpec::external(std::filesystem::path dir) {
  PredictorSpec s;
  s.kind = PredictorKind::external;
  s.score_dir = std::move(dir);
  return s;
}

PredictorSpec PredictorSpec::parse(std::string_view text) {
  if (text == "oracle") return oracle();
  if (text.starts_with("constant:")) {
    const int k = parse_number<int>(text.substr(9), "class index");
    if (!is_valid_class(k)) throw Error(ErrorKind::InvalidArgument, "constant class must lie in [0, 8]");
    return constant(ClassId(k));
  }
  if (text.starts_with("noisy-oracle:")) {
    const std::string_view rest = text.substr(13);
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorKind::InvalidArgument, "expected noisy-oracle:P:SEED");
    }
    return noisy_oracle(parse_number<double>(rest.substr(0, colon), "flip probability"),
                        parse_number<std::uint64_t>(rest.substr(colon + 1), "seed"));
  }
  if (text.starts_with("external:")) {
    if (text.size() == 9) throw Error(ErrorKind::InvalidArgument, "external predictor needs a directory");
    return external(std::filesystem::path(std::string(text.substr(9))));
  }
  throw Error(ErrorKind::InvalidArgument, "unknown predictor '" + std::string(text) + "'");
}

std::string PredictorSpec::to_string() const {
  switch (kind) {
    case PredictorKind::oracle: return "oracle";
    case PredictorKind::constant: return "constant:" + std::to_string(constant_class);
    case PredictorKind::noisy_oracle: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", flip_probability);
      return "noisy-oracle:" + std::string(buf) + ":" + std::to_string(seed);
    }
    case PredictorKind::external: return "external:" + score_dir.string();
  }
  return "oracle";
}

ScoreMap predict(const PredictorSpec& spec, const TileSample& tile) {
  switch (spec.kind) {
    case PredictorKind::oracle: return oracle_scores(tile);
    case PredictorKind::constant: return one_hot_map(tile.id, tile.height(), tile.width(), spec.constant_class);
    case PredictorKind::noisy_oracle: {
      ScoreMap map = oracle_scores(tile);
      const std::uint64_t tile_seed = spec.seed ^ fnv1a64(tile.id);
      for (std::size_t p = 0; p < tile.labels.size(); ++p) {
        if (!tile.validity.data()[p]) continue;
        CounterRng rng(tile_seed, p);
        if (!rng.bernoulli(spec.flip_probability)) continue;
        const int c = static_cast<int>(rng.below(kNumClasses));
        float* px = map.scores.data() + p * kNumClasses;
        std::fill(px, px + kNumClasses, 0.0f);
        px[c] = 1.0f;
      }
      return map;
    }
    case PredictorKind::external: {
      const auto path = score_path(spec.score_dir, tile.id);
      if (!std::filesystem::is_regular_file(path)) throw Error(ErrorKind::MissingScoreFile, path.string());
      ScoreMap map = read_score_map(path);
      if (map.height() != tile.height() || map.width() != tile.width()) {
        throw Error(ErrorKind::DimensionMismatch, path.string() + " does not match tile " + tile.id);
      }
      validate(map);
      return map;
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown predictor kind");
}

}  // namespace agv

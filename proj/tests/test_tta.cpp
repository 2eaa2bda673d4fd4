#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "agv/rng.hpp"
#include "agv/synthetic.hpp"
#include "agv/tta.hpp"
#include "test_support.hpp"

using namespace agv;

namespace {

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an agv::Error");
  return ErrorKind::InvalidArgument;
}

TileSample sample_tile(int size, std::uint64_t seed, int index = 0) {
  SynthConfig cfg;
  cfg.size = size;
  cfg.seed = seed;
  cfg.overlap_rate = 0.4;
  cfg.invalid_corner_rate = 0.8;
  return render_synthetic_tile(cfg, index);
}

bool same_tile(const TileSample& a, const TileSample& b) {
  return a.id == b.id && a.image == b.image && a.labels == b.labels && a.validity == b.validity;
}

}  // namespace

TEST_CASE("D4 has eight distinct elements with identity first") {
  const auto g = d4_transforms();
  REQUIRE(g.size() == 8);
  CHECK(g[0].is_identity());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) CHECK_FALSE(g[i] == g[j]);
}

TEST_CASE("identity transform leaves a tile bit-exact") {
  const auto t = sample_tile(18, 1);
  CHECK(same_tile(apply_transform(t, TtaTransform{}), t));
}

TEST_CASE("rotation applied four times returns the tile") {
  const auto t = sample_tile(18, 2);
  auto r = t;
  for (int i = 0; i < 4; ++i) r = apply_transform(r, TtaTransform{1, false, 1});
  CHECK(same_tile(r, t));
  const auto once = apply_transform(t, TtaTransform{1, false, 1});
  CHECK_FALSE(same_tile(once, t));
}

TEST_CASE("non-square tiles swap extent under quarter turns") {
  std::array<ByteRaster, kNumClasses> fg;
  for (int c = 1; c < kNumClasses; ++c) fg[c] = ByteRaster(4, 6);
  fg[2].at(0, 5) = 1;
  const auto t = make_tile("r", ByteRaster(4, 6, 4), fg, ByteRaster(4, 6, 1, 1));
  const auto r = apply_transform(t, TtaTransform{1, false, 1});
  CHECK(r.height() == 6);
  CHECK(r.width() == 4);
  // numpy rot90: top-right corner moves to top-left
  CHECK(r.has_label(2, 0, 0));
}

TEST_CASE("hflip then rotation ordering") {
  ByteRaster r(2, 2, 1);
  r.at(0, 0) = 1;
  r.at(0, 1) = 2;
  r.at(1, 0) = 3;
  r.at(1, 1) = 4;
  // hflip: [[2,1],[4,3]]; rot90 of that: [[1,3],[2,4]]
  const auto out = apply_geometry(r, TtaTransform{1, true, 1});
  CHECK(out.at(0, 0) == 1);
  CHECK(out.at(0, 1) == 3);
  CHECK(out.at(1, 0) == 2);
  CHECK(out.at(1, 1) == 4);
  CHECK(invert_geometry(out, TtaTransform{1, true, 1}) == r);
}

TEST_CASE("scale 1/2 on a 4x4 image gives 2x2 block means") {
  std::array<ByteRaster, kNumClasses> fg;
  for (int c = 1; c < kNumClasses; ++c) fg[c] = ByteRaster(4, 4);
  fg[7].at(3, 3) = 1;
  ByteRaster img(4, 4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 4; ++c) img.at(y, x, c) = static_cast<std::uint8_t>(10 * y + x + c);
  ByteRaster valid(4, 4, 1, 0);
  valid.at(0, 1) = 1;
  valid.at(3, 3) = 1;
  const auto t = make_tile("s", img, fg, valid);
  const auto s = apply_transform(t, TtaTransform{0, false, 2});
  REQUIRE(s.height() == 2);
  // block (0,0): values 0,1,10,11 -> 22/4 = 5.5 -> 6
  CHECK(s.image.at(0, 0, 0) == 6);
  // block (1,1): 22,23,32,33 -> 110/4 = 27.5 -> 28; channel 3 adds 3 each -> 31
  CHECK(s.image.at(1, 1, 0) == 28);
  CHECK(s.image.at(1, 1, 3) == 31);
  CHECK(s.validity.at(0, 0) == 1);
  CHECK(s.validity.at(0, 1) == 0);
  CHECK(s.validity.at(1, 1) == 1);
  CHECK(s.has_label(7, 1, 1));
  CHECK(s.labels.at(0, 0) == class_bit(0));
  CHECK(s.labels.at(1, 0) == 0);
}

TEST_CASE("scaling requires divisible extents") {
  const auto t = sample_tile(20, 3);
  CHECK(kind_of([&] { apply_transform(t, TtaTransform{0, false, 3}); }) == ErrorKind::IndivisibleSize);
}

TEST_CASE("invert_scores: identity and every D4 element round trip bit-exactly") {
  const auto s = agv::testing::random_score_map("x", 7, 7, 11);
  CHECK(invert_scores(s, TtaTransform{}, 7, 7) == s);
  for (const auto& g : d4_transforms()) CHECK(invert_scores(transform_scores(s, g), g, 7, 7).scores == s.scores);
  const auto rect = agv::testing::random_score_map("y", 3, 5, 12);
  for (const auto& g : d4_transforms()) CHECK(invert_scores(transform_scores(rect, g), g, 3, 5).scores == rect.scores);
}

TEST_CASE("invert_scores replicates scaled scores into constant blocks") {
  const auto small = agv::testing::random_score_map("x", 2, 2, 5);
  const auto big = invert_scores(small, TtaTransform{0, false, 2}, 4, 4);
  REQUIRE(big.height() == 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < kNumClasses; ++c) CHECK(big.scores.at(y, x, c) == small.scores.at(y / 2, x / 2, c));
  CHECK_NOTHROW(validate(big));
}

TEST_CASE("invert_scores checks dimensions") {
  const auto s = agv::testing::random_score_map("x", 3, 5, 1);
  CHECK(kind_of([&] { invert_scores(s, TtaTransform{}, 5, 3); }) == ErrorKind::DimensionMismatch);
  CHECK_NOTHROW(invert_scores(s, TtaTransform{1, false, 1}, 5, 3));
  CHECK(kind_of([&] { invert_scores(s, TtaTransform{0, false, 2}, 6, 9); }) == ErrorKind::DimensionMismatch);
  CHECK_NOTHROW(invert_scores(s, TtaTransform{0, false, 2}, 6, 10));
}

TEST_CASE("config parsing") {
  const auto d4 = TtaConfig::parse("d4");
  CHECK(d4.transforms() == d4_transforms());
  const auto list = TtaConfig::parse("rot90, hflip,scale2");
  REQUIRE(list.transforms().size() == 4);
  CHECK(list.transforms()[0].is_identity());
  CHECK(list.transforms()[1] == TtaTransform{1, false, 1});
  CHECK(list.transforms()[2] == TtaTransform{0, true, 1});
  CHECK(list.transforms()[3] == TtaTransform{0, false, 2});
  CHECK(TtaConfig::parse("").transforms().size() == 1);
  CHECK(kind_of([] { TtaConfig::parse("rot45"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { TtaConfig::parse("rot90,rot90"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { TtaConfig::parse("d4,hflip"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { TtaConfig(std::vector<TtaTransform>{}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { validate(TtaTransform{4, false, 1}); }) == ErrorKind::InvalidArgument);
  CHECK(TtaTransform{3, true, 1}.name() == "hflip_rot270");
  CHECK(TtaTransform{0, false, 3}.name() == "scale3");
}

TEST_CASE("identity config equals plain predict bit-exactly") {
  const auto t = sample_tile(18, 4);
  for (const auto& spec : {PredictorSpec::oracle(), PredictorSpec::noisy_oracle(0.5, 2)}) {
    CHECK(tta_predict(spec, t, TtaConfig::identity()).scores == predict(spec, t).scores);
  }
}

TEST_CASE("oracle with full D4 equals single-pass oracle exactly") {
  for (int i = 0; i < 6; ++i) {
    const auto t = sample_tile(21, 40, i);
    CHECK(tta_predict(PredictorSpec::oracle(), t, TtaConfig(d4_transforms())).scores ==
          predict(PredictorSpec::oracle(), t).scores);
  }
}

TEST_CASE("constant predictor stays one-hot under any config") {
  const auto t = sample_tile(18, 5);
  const auto cfg = TtaConfig::parse("d4,scale2,scale3");
  const auto s = tta_predict(PredictorSpec::constant(ClassId(4)), t, cfg);
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) {
      for (int c = 0; c < kNumClasses; ++c) CHECK(s.scores.at(y, x, c) == (c == 4 ? 1.0f : 0.0f));
    }
  }
}

TEST_CASE("tta output is a valid score map and thread-count independent") {
  const auto t = sample_tile(24, 6);
  const auto cfg = TtaConfig::parse("d4,scale2,scale3");
  const auto a = tta_predict(PredictorSpec::noisy_oracle(0.3, 8), t, cfg, 1);
  const auto b = tta_predict(PredictorSpec::noisy_oracle(0.3, 8), t, cfg, 4);
  CHECK_NOTHROW(validate(a));
  CHECK(a == b);
}

TEST_CASE("permuting the transform list changes the mean by at most 1e-6") {
  const auto t = sample_tile(24, 7);
  auto transforms = TtaConfig::parse("d4,scale2,scale3").transforms();
  const auto spec = PredictorSpec::noisy_oracle(0.6, 1);
  const auto base = tta_predict(spec, t, TtaConfig(transforms));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CounterRng rng(seed, 0);
    seeded_shuffle(std::span<TtaTransform>(transforms), rng);
    const auto permuted = tta_predict(spec, t, TtaConfig(transforms));
    for (std::size_t i = 0; i < base.scores.size(); ++i) {
      CHECK(std::abs(base.scores.data()[i] - permuted.scores.data()[i]) <= 1e-6);
    }
  }
}

TEST_CASE("pairwise summation order") {
  const std::vector<double> v = {1e16, 1.0, -1e16, 1.0};
  // ((1e16 + 1) + (-1e16 + 1)) = 1e16 + -1e16 = 0 in double
  CHECK(pairwise_sum(v) == (v[0] + v[1]) + (v[2] + v[3]));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  CHECK(pairwise_sum(std::vector<double>{2.5}) == 2.5);
  const std::vector<double> five = {1, 2, 3, 4, 5};
  CHECK(pairwise_sum(five) == (1.0 + 2.0) + (3.0 + (4.0 + 5.0)));
}

TEST_CASE("mean of valid score maps is valid") {
  std::vector<ScoreMap> maps;
  for (int i = 0; i < 5; ++i) maps.push_back(agv::testing::random_score_map("m", 6, 6, 100 + i));
  const auto mean = mean_scores(maps);
  CHECK_NOTHROW(validate(mean));
  CHECK(kind_of([] { mean_scores(std::span<const ScoreMap>{}); }) == ErrorKind::InvalidArgument);
  maps.push_back(agv::testing::random_score_map("m", 6, 5, 1));
  CHECK(kind_of([&] { mean_scores(maps); }) == ErrorKind::DimensionMismatch);
}

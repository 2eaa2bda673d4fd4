#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>

#include <json.hpp>

#include "agv/evaluation.hpp"
#include "agv/predictor.hpp"
#include "agv/synthetic.hpp"
#include "test_support.hpp"

using namespace agv;
using agv::testing::single_label_tile;
using agv::testing::TempDir;

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

LabelRaster label_raster(const std::vector<int>& v, int h, int w) {
  LabelRaster r(h, w);
  for (std::size_t i = 0; i < v.size(); ++i) r.data()[i] = static_cast<std::uint8_t>(v[i]);
  return r;
}

TileSample multi_label_tile(const std::vector<LabelSet>& sets, int h, int w) {
  std::array<ByteRaster, kNumClasses> fg;
  for (int c = 1; c < kNumClasses; ++c) fg[c] = ByteRaster(h, w);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (int c = 1; c < kNumClasses; ++c) {
      if (sets[i] & class_bit(c)) fg[c].data()[i] = 1;
    }
  }
  return make_tile("m", ByteRaster(h, w, 4), fg, ByteRaster(h, w, 1, 1));
}

ConfusionMatrix random_matrix(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  ConfusionMatrix::Counts counts{};
  std::uint64_t total = 0;
  for (auto& row : counts) {
    for (auto& v : row) {
      v = gen() % 1000;
      total += v;
    }
  }
  return ConfusionMatrix::from_counts(counts, total);
}

}  // namespace

TEST_CASE("perfect single-label prediction puts N on the diagonal") {
  const std::vector<int> gt = {0, 1, 2, 3, 4, 5, 6, 7, 8, 0, 1, 2};
  const auto tile = single_label_tile("t", gt, 3, 4);
  ConfusionMatrix conf;
  conf.accumulate(label_raster(gt, 3, 4), tile);
  std::uint64_t diag = 0;
  std::uint64_t total = 0;
  for (int t = 0; t < kNumClasses; ++t) {
    for (int p = 0; p < kNumClasses; ++p) {
      total += conf.at(t, p);
      if (t == p) diag += conf.at(t, p);
    }
  }
  CHECK(diag == 12);
  CHECK(total == 12);
  CHECK(conf.valid_pixels() == 12);
  const auto report = metrics(conf);
  for (int c = 0; c < kNumClasses; ++c) CHECK(report.iou[c] == 1.0);
  CHECK(report.miou == 1.0);
}

TEST_CASE("overlap rule: prediction inside the label set") {
  ConfusionMatrix conf;
  conf.record_pixel(class_bit(1) | class_bit(2), 2);
  for (int t = 0; t < kNumClasses; ++t)
    for (int p = 0; p < kNumClasses; ++p) CHECK(conf.at(t, p) == (t == 2 && p == 2 ? 1u : 0u));
}

TEST_CASE("overlap rule: full miss adds one event per ground-truth label") {
  ConfusionMatrix conf;
  conf.record_pixel(class_bit(1) | class_bit(2), 5);
  CHECK(conf.at(1, 5) == 1);
  CHECK(conf.at(2, 5) == 1);
  std::uint64_t total = 0;
  for (const auto& row : conf.counts())
    for (auto v : row) total += v;
  CHECK(total == 2);
  CHECK(conf.valid_pixels() == 1);
}

TEST_CASE("overlap rule on a 3-pixel raster, enumerated by hand") {
  // pixel 0: {1,2} predicted 2 -> [2][2]
  // pixel 1: {1,2} predicted 5 -> [1][5], [2][5]
  // pixel 2: {0}   predicted 0 -> [0][0]
  const auto tile = multi_label_tile({class_bit(1) | class_bit(2), class_bit(1) | class_bit(2), 0}, 1, 3);
  ConfusionMatrix conf;
  conf.accumulate(label_raster({2, 5, 0}, 1, 3), tile);
  ConfusionMatrix::Counts expected{};
  expected[2][2] = 1;
  expected[1][5] = 1;
  expected[2][5] = 1;
  expected[0][0] = 1;
  CHECK(conf.counts() == expected);
  CHECK(conf.valid_pixels() == 3);
}

TEST_CASE("invalid pixels contribute nothing") {
  const auto tile = single_label_tile("t", {1, 1, 2, 2}, 2, 2, {1, 0, 0, 1});
  ConfusionMatrix conf;
  conf.accumulate(label_raster({1, 8, 8, 3}, 2, 2), tile);
  CHECK(conf.valid_pixels() == 2);
  CHECK(conf.at(1, 1) == 1);
  CHECK(conf.at(2, 3) == 1);
  CHECK(conf.at(1, 8) == 0);
}

TEST_CASE("accumulate checks dimensions and class range") {
  const auto tile = single_label_tile("t", {0, 1, 2, 3}, 2, 2);
  ConfusionMatrix conf;
  CHECK(kind_of([&] { conf.accumulate(LabelRaster(2, 3), tile); }) == ErrorKind::DimensionMismatch);
  CHECK(kind_of([&] { conf.accumulate(label_raster({0, 9, 0, 0}, 2, 2), tile); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("hand-counted GT=[0,0,1,1], pred=[0,1,1,1] gives mIoU 7/12") {
  const auto tile = single_label_tile("t", {0, 0, 1, 1}, 1, 4);
  ConfusionMatrix conf;
  conf.accumulate(label_raster({0, 1, 1, 1}, 1, 4), tile);
  const auto r = metrics(conf);
  CHECK(r.iou[0] == 1.0 / 2.0);
  CHECK(r.iou[1] == 2.0 / 3.0);
  for (int c = 2; c < kNumClasses; ++c) CHECK_FALSE(r.iou[c].has_value());
  CHECK(r.defined_classes() == 2);
  CHECK(r.miou == (1.0 / 2.0 + 2.0 / 3.0) / 2.0);
  CHECK(std::abs(r.miou - 7.0 / 12.0) < 1e-15);
}

TEST_CASE("empty matrix has no defined classes") {
  CHECK(kind_of([] { metrics(ConfusionMatrix{}); }) == ErrorKind::NoDefinedClasses);
}

TEST_CASE("metrics agree with a brute-force intersection/union count") {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 50; ++trial) {
    const int h = 1 + static_cast<int>(gen() % 16);
    const int w = 1 + static_cast<int>(gen() % 16);
    std::vector<int> gt(h * w);
    std::vector<int> pred(h * w);
    std::vector<std::uint8_t> valid(h * w);
    for (int i = 0; i < h * w; ++i) {
      gt[i] = static_cast<int>(gen() % 9);
      pred[i] = static_cast<int>(gen() % 9);
      valid[i] = gen() % 5 != 0;
    }
    if (std::count(valid.begin(), valid.end(), 1) == 0) valid[0] = 1;
    ConfusionMatrix conf;
    conf.accumulate(label_raster(pred, h, w), single_label_tile("t", gt, h, w, valid));
    const auto oracle = agv::testing::brute_force_iou(gt, pred, valid);
    const auto r = metrics(conf);
    for (int c = 0; c < kNumClasses; ++c) {
      CHECK(conf.at(c, c) == oracle.intersection[c]);
      if (oracle.union_[c] == 0) {
        CHECK_FALSE(r.iou[c].has_value());
      } else {
        REQUIRE(r.iou[c].has_value());
        CHECK(*r.iou[c] == static_cast<double>(oracle.intersection[c]) / static_cast<double>(oracle.union_[c]));
      }
    }
  }
}

TEST_CASE("metric bounds and relabeling invariance") {
  std::array<int, kNumClasses> perm = {3, 0, 8, 1, 7, 2, 6, 4, 5};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto conf = random_matrix(seed);
    const auto r = metrics(conf);
    double lo = 1.0;
    double hi = 0.0;
    for (const auto& v : r.iou) {
      if (!v) continue;
      CHECK(*v >= 0.0);
      CHECK(*v <= 1.0);
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
    CHECK(r.miou >= lo);
    CHECK(r.miou <= hi);
    ConfusionMatrix::Counts permuted{};
    for (int t = 0; t < kNumClasses; ++t)
      for (int p = 0; p < kNumClasses; ++p) permuted[perm[t]][perm[p]] = conf.at(t, p);
    const auto rp = metrics(ConfusionMatrix::from_counts(permuted, conf.valid_pixels()));
    for (int c = 0; c < kNumClasses; ++c) CHECK(rp.iou[perm[c]] == r.iou[c]);
    CHECK(std::abs(rp.miou - r.miou) < 1e-12);
  }
}

TEST_CASE("merge laws") {
  const auto a = random_matrix(1);
  const auto b = random_matrix(2);
  const auto c = random_matrix(3);
  CHECK(merge(a, ConfusionMatrix{}) == a);
  CHECK(merge(ConfusionMatrix{}, a) == a);
  CHECK(merge(a, b) == merge(b, a));
  CHECK(merge(merge(a, b), c) == merge(a, merge(b, c)));
  CHECK(merge(a, b).at(4, 5) == a.at(4, 5) + b.at(4, 5));
  CHECK(merge(a, b).valid_pixels() == a.valid_pixels() + b.valid_pixels());
}

TEST_CASE("merge guards against 64-bit overflow") {
  ConfusionMatrix::Counts big{};
  big[3][3] = std::numeric_limits<std::uint64_t>::max() - 1;
  const auto x = ConfusionMatrix::from_counts(big, 1);
  ConfusionMatrix::Counts two{};
  two[3][3] = 2;
  const auto y = ConfusionMatrix::from_counts(two, 1);
  CHECK(kind_of([&] { merge(x, y); }) == ErrorKind::ArithmeticOverflow);
  ConfusionMatrix::Counts one{};
  one[3][3] = 1;
  CHECK(merge(x, ConfusionMatrix::from_counts(one, 1)).at(3, 3) == std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("10-tile set: one pass equals ten merged single-tile matrices") {
  TempDir dir;
  SynthConfig cfg;
  cfg.tile_count = 10;
  cfg.size = 24;
  cfg.seed = 31;
  cfg.overlap_rate = 0.4;
  const auto m = generate_synthetic(cfg, dir / "ds");
  const auto spec = PredictorSpec::noisy_oracle(0.3, 4);
  const PredictionSource source = [&](const TileSample& t, std::size_t) {
    return argmax_labels(predict(spec, t), t.validity);
  };
  const auto batch = evaluate_manifest(m, source, 1);
  ConfusionMatrix streamed;
  for (const auto& rec : m.records) {
    const auto t = load_tile(rec);
    ConfusionMatrix one;
    one.accumulate(source(t, 0), t);
    streamed = merge(streamed, one);
  }
  CHECK(batch == streamed);
  for (int parts : {2, 3, 4, 10, 16}) CHECK(evaluate_manifest(m, source, parts) == batch);
}

TEST_CASE("oracle predictions score mIoU 1 on overlapping synthetic labels") {
  TempDir dir;
  SynthConfig cfg;
  cfg.tile_count = 6;
  cfg.size = 24;
  cfg.seed = 8;
  cfg.overlap_rate = 1.0;
  const auto m = generate_synthetic(cfg, dir / "ds");
  const auto conf = evaluate_manifest(m, [](const TileSample& t, std::size_t) {
    return argmax_labels(predict(PredictorSpec::oracle(), t), t.validity);
  });
  const auto r = metrics(conf);
  CHECK(r.miou == 1.0);
  for (const auto& v : r.iou)
    if (v) CHECK(*v == 1.0);
}

TEST_CASE("report JSON layout") {
  const auto tile = single_label_tile("t", {0, 0, 1, 1}, 1, 4);
  ConfusionMatrix conf;
  conf.accumulate(label_raster({0, 1, 1, 1}, 1, 4), tile);
  const auto j = nlohmann::json::parse(report_to_json(metrics(conf)));
  CHECK(j.at("miou").get<double>() == doctest::Approx(7.0 / 12.0));
  REQUIRE(j.at("iou").size() == 9);
  CHECK(j.at("iou")[0].get<double>() == 0.5);
  CHECK(j.at("iou")[5].is_null());
  CHECK(j.at("class_names")[8] == "Weed Cluster");
  CHECK(j.at("confusion")[0][1] == 1);
  CHECK(j.at("confusion").size() == 9);
  CHECK(j.at("valid_pixels") == 4);
  const std::string text = report_to_json(metrics(conf));
  CHECK(text.find("\"miou\"") < text.find("\"iou\""));
  CHECK(text.find("\"iou\"") < text.find("\"class_names\""));
  CHECK(text.find("\"confusion\"") < text.find("\"valid_pixels\""));
}

TEST_CASE("table format with a fixed ensemble row") {
  const std::array<double, kNumClasses> row_iou = {0.777, 0.485, 0.646, 0.481, 0.573, 0.471, 0.779, 0.547, 0.479};
  MetricsReport report;
  double sum = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    report.iou[c] = row_iou[c];
    sum += row_iou[c];
  }
  report.miou = sum / kNumClasses;
  const std::string table = report_to_table(report, "Model Ensemble");
  const auto nl = table.find('\n');
  CHECK(table.substr(0, nl) ==
        "Model | mIoU | BG(0) | DP(1) | D(2) | E(3) | ND(4) | PS(5) | W(6) | WW(7) | WC(8)");
  CHECK(table.substr(nl + 1) ==
        "Model Ensemble | 0.582 | 0.777 | 0.485 | 0.646 | 0.481 | 0.573 | 0.471 | 0.779 | 0.547 | 0.479\n");
  report.iou[5].reset();
  CHECK(report_to_table(report, "x").find("| - |") != std::string::npos);
}

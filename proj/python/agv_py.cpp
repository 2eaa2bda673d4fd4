#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "agv/dataset.hpp"
#include "agv/ensemble.hpp"
#include "agv/evaluation.hpp"
#include "agv/mosaic.hpp"
#include "agv/predictor.hpp"
#include "agv/resampler.hpp"
#include "agv/score_map.hpp"
#include "agv/synthetic.hpp"
#include "agv/tta.hpp"

namespace py = pybind11;
using namespace agv;

namespace {

template <typename T>
py::array_t<T> to_numpy(const Raster<T>& r, bool squeeze) {
  std::vector<py::ssize_t> shape = {r.height(), r.width()};
  if (!squeeze || r.channels() != 1) shape.push_back(r.channels());
  py::array_t<T> out(shape);
  std::copy(r.data(), r.data() + r.size(), out.mutable_data());
  return out;
}

template <typename T>
Raster<T> from_numpy(const py::array_t<T, py::array::c_style | py::array::forcecast>& a, int channels) {
  if (a.ndim() == 2 && channels == 1) {
    Raster<T> r(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), 1);
    std::copy(a.data(), a.data() + a.size(), r.data());
    return r;
  }
  if (a.ndim() != 3 || a.shape(2) != channels) {
    throw Error(ErrorKind::DimensionMismatch, "expected an H x W x " + std::to_string(channels) + " array");
  }
  Raster<T> r(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), channels);
  std::copy(a.data(), a.data() + a.size(), r.data());
  return r;
}

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

ScoreMap score_map_from(const FloatArray& a, const std::string& id) {
  ScoreMap m;
  m.tile_id = id;
  m.scores = from_numpy<float>(a, kNumClasses);
  return m;
}

py::dict plan_to_dict(const SamplePlan& plan) {
  py::list entries;
  for (const auto& e : plan.entries) entries.append(py::make_tuple(e.id, e.multiplicity));
  py::dict d;
  d["seed"] = plan.seed;
  d["entries"] = entries;
  d["realized"] = plan.realized;
  return d;
}

SamplePlan plan_from_dict(const py::dict& d) {
  SamplePlan plan;
  plan.seed = d["seed"].cast<std::uint64_t>();
  for (auto item : d["entries"]) {
    const auto t = item.cast<py::tuple>();
    plan.entries.push_back({t[0].cast<std::string>(), t[1].cast<int>()});
  }
  plan.realized = d["realized"].cast<ClassCounts>();
  return plan;
}

py::dict report_to_dict(const MetricsReport& r) {
  py::list iou;
  for (const auto& v : r.iou) {
    if (v) {
      iou.append(*v);
    } else {
      iou.append(py::none());
    }
  }
  py::dict d;
  d["miou"] = r.miou;
  d["iou"] = iou;
  d["valid_pixels"] = r.confusion.valid_pixels();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Agricultural pattern recognition pipeline core";

  static py::exception<Error> agv_error(m, "AgvError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(agv_error.ptr())(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(agv_error.ptr(), exc.ptr());
    }
  });

  m.attr("NUM_CLASSES") = kNumClasses;
  m.attr("CLASS_NAMES") = std::vector<std::string>(kClassNames.begin(), kClassNames.end());

  py::class_<TileSample>(m, "Tile")
      .def_readwrite("id", &TileSample::id)
      .def_property_readonly("image", [](const TileSample& t) { return to_numpy(t.image, false); })
      .def_property_readonly("labels", [](const TileSample& t) { return to_numpy(t.labels, true); })
      .def_property_readonly("validity", [](const TileSample& t) { return to_numpy(t.validity, true); })
      .def_property_readonly("height", &TileSample::height)
      .def_property_readonly("width", &TileSample::width)
      .def("label_mask", [](const TileSample& t, int c) { return to_numpy(t.label_raster(ClassId(c).index()), true); })
      .def("presence", &TileSample::presence)
      .def("__repr__", [](const TileSample& t) {
        return "<Tile " + t.id + " " + std::to_string(t.height()) + "x" + std::to_string(t.width()) + ">";
      });

  m.def(
      "make_tile",
      [](std::string id, const ByteArray& rgbn, const std::vector<ByteArray>& foreground, const ByteArray& validity) {
        if (foreground.size() != kNumClasses - 1) {
          throw Error(ErrorKind::InvalidArgument, "expected 8 foreground masks (classes 1..8)");
        }
        std::array<ByteRaster, kNumClasses> fg;
        for (int c = 1; c < kNumClasses; ++c) fg[c] = from_numpy<std::uint8_t>(foreground[c - 1], 1);
        return make_tile(std::move(id), from_numpy<std::uint8_t>(rgbn, 4), fg, from_numpy<std::uint8_t>(validity, 1));
      },
      py::arg("id"), py::arg("rgbn"), py::arg("foreground"), py::arg("validity"));

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("tile_count", &SynthConfig::tile_count)
      .def_readwrite("size", &SynthConfig::size)
      .def_readwrite("seed", &SynthConfig::seed)
      .def_readwrite("class_density", &SynthConfig::class_density)
      .def_readwrite("overlap_rate", &SynthConfig::overlap_rate)
      .def_readwrite("invalid_corner_rate", &SynthConfig::invalid_corner_rate);

  m.def("render_synthetic_tile", &render_synthetic_tile, py::arg("config"), py::arg("index"));
  m.def("generate_synthetic", &generate_synthetic, py::arg("config"), py::arg("out_root"), py::arg("threads") = 1);

  py::class_<TileRecord>(m, "TileRecord")
      .def_readonly("id", &TileRecord::id)
      .def_readonly("presence", &TileRecord::presence)
      .def_readonly("occurrence", &TileRecord::occurrence);

  py::class_<Manifest>(m, "Manifest")
      .def_readonly("records", &Manifest::records)
      .def_readonly("provenance", &Manifest::provenance)
      .def_property_readonly("split", [](const Manifest& man) { return std::string(to_string(man.split)); })
      .def("__len__", [](const Manifest& man) { return man.records.size(); });

  m.def(
      "ingest",
      [](const fs::path& root, const std::string& split, int threads) {
        return ingest_dataset(root, parse_split(split), threads);
      },
      py::arg("root"), py::arg("split") = "train", py::arg("threads") = 1);
  m.def("read_manifest", &read_manifest, py::arg("path"));
  m.def("write_manifest", &write_manifest, py::arg("path"), py::arg("manifest"));
  m.def("class_counts", &class_counts, py::arg("manifest"));
  m.def("load_tile", &load_tile, py::arg("record"));

  m.def(
      "plan_resample",
      [](const Manifest& man, const ClassCounts& targets, std::uint64_t seed) {
        return plan_to_dict(plan_resample(man, TargetCounts{targets}, seed));
      },
      py::arg("manifest"), py::arg("targets"), py::arg("seed"));
  m.def(
      "apply_plan", [](const Manifest& man, const py::dict& plan) { return apply_plan(man, plan_from_dict(plan)); },
      py::arg("manifest"), py::arg("plan"));

  m.def(
      "mosaic_grid", [](const std::vector<TileSample>& tiles, int factor) { return mosaic_grid(tiles, factor); },
      py::arg("tiles"), py::arg("factor"));
  m.def(
      "build_mosaic",
      [](const Manifest& man, int factor, std::uint64_t seed, const fs::path& out_root, int threads) {
        return build_mosaic_dataset(man, MosaicSpec{factor, seed}, out_root, threads);
      },
      py::arg("manifest"), py::arg("factor"), py::arg("seed"), py::arg("out_root"), py::arg("threads") = 1);

  m.def(
      "predict",
      [](const std::string& spec, const TileSample& tile, const std::string& tta) {
        const auto p = PredictorSpec::parse(spec);
        const ScoreMap s = tta.empty() ? predict(p, tile) : tta_predict(p, tile, TtaConfig::parse(tta));
        return to_numpy(s.scores, false);
      },
      py::arg("predictor"), py::arg("tile"), py::arg("tta") = "");
  m.def(
      "apply_transform",
      [](const TileSample& tile, const std::string& name) {
        const auto transforms = TtaConfig::parse(name).transforms();
        return apply_transform(tile, transforms.back());
      },
      py::arg("tile"), py::arg("transform"));

  m.def(
      "ensemble",
      [](const std::vector<FloatArray>& maps, const std::vector<double>& weights) {
        std::vector<ScoreMap> in;
        for (const auto& a : maps) in.push_back(score_map_from(a, "array"));
        return to_numpy(ensemble_scores(in, weights).scores, false);
      },
      py::arg("maps"), py::arg("weights") = std::vector<double>{});
  m.def(
      "argmax",
      [](const FloatArray& scores, std::optional<ByteArray> validity) {
        const ByteRaster v = validity ? from_numpy<std::uint8_t>(*validity, 1) : ByteRaster{};
        return to_numpy(argmax_labels(score_map_from(scores, "array"), v), true);
      },
      py::arg("scores"), py::arg("validity") = py::none());

  m.def(
      "read_scores", [](const fs::path& path) { return to_numpy(read_score_map(path).scores, false); },
      py::arg("path"));
  m.def(
      "write_scores",
      [](const fs::path& path, const FloatArray& scores) {
        write_score_map(path, score_map_from(scores, path.stem().string()));
      },
      py::arg("path"), py::arg("scores"));

  py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
      .def(py::init<>())
      .def(
          "accumulate",
          [](ConfusionMatrix& c, const ByteArray& pred, const TileSample& tile) {
            c.accumulate(from_numpy<std::uint8_t>(pred, 1), tile);
          },
          py::arg("pred"), py::arg("tile"))
      .def("merge", [](const ConfusionMatrix& a, const ConfusionMatrix& b) { return merge(a, b); })
      .def_property_readonly("counts",
                             [](const ConfusionMatrix& c) {
                               py::array_t<std::uint64_t> out({kNumClasses, kNumClasses});
                               auto v = out.mutable_unchecked<2>();
                               for (int t = 0; t < kNumClasses; ++t)
                                 for (int p = 0; p < kNumClasses; ++p) v(t, p) = c.at(t, p);
                               return out;
                             })
      .def_property_readonly("valid_pixels", &ConfusionMatrix::valid_pixels)
      .def("metrics", [](const ConfusionMatrix& c) { return report_to_dict(metrics(c)); })
      .def(py::self == py::self);

  m.def(
      "evaluate",
      [](const Manifest& man, const fs::path& pred_dir, int partitions) {
        const ConfusionMatrix conf = evaluate_manifest(
            man,
            [&](const TileSample& tile, std::size_t) {
              return argmax_labels(read_score_map(score_path(pred_dir, tile.id)), tile.validity);
            },
            partitions);
        return report_to_dict(metrics(conf));
      },
      py::arg("manifest"), py::arg("score_dir"), py::arg("partitions") = 1);
}

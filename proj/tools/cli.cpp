#include "agv/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "agv/dataset.hpp"
#include "agv/ensemble.hpp"
#include "agv/evaluation.hpp"
#include "agv/image_io.hpp"
#include "agv/mosaic.hpp"
#include "agv/parallel.hpp"
#include "agv/predictor.hpp"
#include "agv/resampler.hpp"
#include "agv/score_map.hpp"
#include "agv/synthetic.hpp"
#include "agv/tta.hpp"

namespace agv::cli {
namespace {

using ordered_json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::shared_ptr<spdlog::logger> logger() {
  static auto log = [] {
    auto l = spdlog::get("agv");
    if (!l) l = spdlog::stderr_logger_mt("agv");
    l->set_pattern("[%l] %v");
    return l;
  }();
  return log;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    double v = 0.0;
    const auto* end = item.data() + item.size();
    auto [ptr, ec] = std::from_chars(item.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw UsageError(flag + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

ordered_json counts_json(const ClassCounts& counts) { return ordered_json(counts); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << text;
}

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string log_level = "warn";
};

std::uint64_t require_seed(const std::optional<std::uint64_t>& local, const Globals& g, const std::string& command) {
  if (local) return *local;
  if (g.seed) return *g.seed;
  throw UsageError(command + ": --seed is required (no implicit seeding)");
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  int tiles = 0;
  int size = 64;
  std::optional<std::uint64_t> seed;
  double overlap_rate = 0.1;
  double invalid_corner_rate = 0.25;
  std::string density;
  std::string out;
  std::string manifest_out;
};

int cmd_synth(const SynthArgs& a, const Globals& g, std::ostream& out) {
  SynthConfig config;
  config.tile_count = a.tiles;
  config.size = a.size;
  config.seed = require_seed(a.seed, g, "synth");
  config.overlap_rate = a.overlap_rate;
  config.invalid_corner_rate = a.invalid_corner_rate;
  if (!a.density.empty()) {
    const auto d = parse_doubles(a.density, "--density");
    if (d.size() == 8) {
      std::copy(d.begin(), d.end(), config.class_density.begin() + 1);
    } else if (d.size() == kNumClasses) {
      std::copy(d.begin(), d.end(), config.class_density.begin());
    } else {
      throw UsageError("--density: expected 8 foreground (or 9) probabilities");
    }
  }
  try {
    validate(config);
  } catch (const Error& e) {
    throw UsageError(std::string("synth: ") + e.what());
  }
  const Manifest manifest = generate_synthetic(config, a.out, g.threads);
  const fs::path manifest_path = a.manifest_out.empty() ? fs::path(a.out) / "manifest.jsonl" : fs::path(a.manifest_out);
  write_manifest(manifest_path, manifest);
  ordered_json j;
  j["manifest"] = manifest_path.string();
  j["records"] = manifest.records.size();
  j["counts"] = counts_json(class_counts(manifest));
  out << j.dump() << "\n";
  logger()->info("synth: wrote {} tiles to {}", manifest.records.size(), a.out);
  return kExitOk;
}

// ---------------------------------------------------------------- ingest / stats

struct IngestArgs {
  std::string root;
  std::string split = "train";
  std::string out;
};

int cmd_ingest(const IngestArgs& a, const Globals& g, std::ostream& out) {
  Split split{};
  try {
    split = parse_split(a.split);
  } catch (const Error& e) {
    throw UsageError(std::string("--split: ") + e.what());
  }
  const Manifest manifest = ingest_dataset(a.root, split, g.threads);
  write_manifest(a.out, manifest);
  ordered_json j;
  j["manifest"] = a.out;
  j["records"] = manifest.records.size();
  j["counts"] = counts_json(class_counts(manifest));
  out << j.dump() << "\n";
  return kExitOk;
}

struct StatsArgs {
  std::string manifest;
};

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  const Manifest manifest = read_manifest(a.manifest);
  ordered_json j;
  j["split"] = std::string(to_string(manifest.split));
  j["records"] = manifest.records.size();
  j["counts"] = counts_json(class_counts(manifest));
  ordered_json names = ordered_json::array();
  for (auto n : kClassNames) names.push_back(std::string(n));
  j["class_names"] = std::move(names);
  out << j.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- resample

struct ResampleArgs {
  std::string manifest;
  std::string targets;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string plan_out;
};

int cmd_resample(const ResampleArgs& a, const Globals& g, std::ostream& out) {
  const std::uint64_t seed = require_seed(a.seed, g, "resample");
  const Manifest manifest = read_manifest(a.manifest);
  const TargetCounts targets = read_targets(a.targets);
  const SamplePlan plan = plan_resample(manifest, targets, seed);
  const Manifest resampled = apply_plan(manifest, plan);
  write_manifest(a.out, resampled);
  if (!a.plan_out.empty()) write_plan(a.plan_out, plan);
  const ClassCounts original = class_counts(manifest);
  ordered_json j;
  j["records_in"] = manifest.records.size();
  j["records_out"] = resampled.records.size();
  j["original"] = counts_json(original);
  j["targets"] = counts_json(targets.targets);
  j["realized"] = counts_json(plan.realized);
  j["monotone"] = satisfies_monotone_goal(original, plan.realized, targets);
  out << j.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- mosaic

struct MosaicArgs {
  std::string manifest;
  int factor = 2;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string manifest_out;
};

int cmd_mosaic(const MosaicArgs& a, const Globals& g, std::ostream& out) {
  MosaicSpec spec;
  spec.factor = a.factor;
  spec.seed = require_seed(a.seed, g, "mosaic");
  const Manifest manifest = read_manifest(a.manifest);
  const Manifest mosaic = build_mosaic_dataset(manifest, spec, a.out, g.threads);
  const fs::path manifest_path = a.manifest_out.empty() ? fs::path(a.out) / "manifest.jsonl" : fs::path(a.manifest_out);
  write_manifest(manifest_path, mosaic);
  ordered_json j;
  j["manifest"] = manifest_path.string();
  j["records"] = mosaic.records.size();
  j["dropped"] = manifest.records.size() % (static_cast<std::size_t>(a.factor) * a.factor);
  j["counts"] = counts_json(class_counts(mosaic));
  out << j.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string manifest;
  std::string predictor = "oracle";
  std::string tta;
  std::string out;
};

std::vector<std::size_t> unique_record_indices(const Manifest& manifest) {
  std::map<std::string, std::size_t> first;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) first.emplace(manifest.records[i].id, i);
  std::vector<std::size_t> out;
  out.reserve(first.size());
  for (const auto& [id, i] : first) out.push_back(i);
  return out;
}

int cmd_predict(const PredictArgs& a, const Globals& g, std::ostream& out) {
  PredictorSpec spec;
  std::optional<TtaConfig> tta;
  try {
    spec = PredictorSpec::parse(a.predictor);
  } catch (const Error& e) {
    throw UsageError(std::string("--predictor: ") + e.what());
  }
  if (!a.tta.empty()) {
    try {
      tta = TtaConfig::parse(a.tta);
    } catch (const Error& e) {
      throw UsageError(std::string("--tta: ") + e.what());
    }
  }
  const Manifest manifest = read_manifest(a.manifest);
  const auto indices = unique_record_indices(manifest);
  prepare_output_dir(a.out);
  parallel_for(indices.size(), g.threads, [&](std::size_t k) {
    const TileSample tile = load_tile(manifest.records[indices[k]]);
    const ScoreMap scores = tta ? tta_predict(spec, tile, *tta) : predict(spec, tile);
    write_score_map(score_path(a.out, tile.id), scores);
  });
  ordered_json j;
  j["out"] = a.out;
  j["tiles"] = indices.size();
  j["predictor"] = spec.to_string();
  ordered_json transforms = ordered_json::array();
  if (tta) {
    for (const auto& t : tta->transforms()) transforms.push_back(t.name());
  }
  j["tta"] = std::move(transforms);
  out << j.dump() << "\n";
  logger()->info("predict: wrote {} score maps", indices.size());
  return kExitOk;
}

// ---------------------------------------------------------------- ensemble / labels

struct EnsembleArgs {
  std::string inputs;
  std::string weights;
  std::string out;
};

int cmd_ensemble(const EnsembleArgs& a, const Globals& g, std::ostream& out) {
  const auto dirs = split_list(a.inputs);
  if (dirs.empty()) throw UsageError("--inputs: at least one directory is required");
  std::vector<double> weights;
  if (!a.weights.empty()) {
    weights = parse_doubles(a.weights, "--weights");
    if (weights.size() != dirs.size()) {
      throw UsageError("--weights: expected " + std::to_string(dirs.size()) + " values");
    }
    try {
      normalize_weights(weights);
    } catch (const Error& e) {
      throw UsageError(std::string("--weights: ") + e.what());
    }
  }
  const auto ids = list_score_ids(dirs.front());
  prepare_output_dir(a.out);
  parallel_for(ids.size(), g.threads, [&](std::size_t k) {
    std::vector<ScoreMap> maps;
    maps.reserve(dirs.size());
    for (const auto& d : dirs) {
      const fs::path p = score_path(d, ids[k]);
      if (!fs::is_regular_file(p)) throw Error(ErrorKind::MissingScoreFile, p.string());
      maps.push_back(read_score_map(p));
    }
    write_score_map(score_path(a.out, ids[k]), ensemble_scores(maps, weights));
  });
  ordered_json j;
  j["out"] = a.out;
  j["tiles"] = ids.size();
  j["inputs"] = dirs;
  out << j.dump() << "\n";
  return kExitOk;
}

struct LabelsArgs {
  std::string scores;
  std::string manifest;
  std::string out;
};

int cmd_labels(const LabelsArgs& a, const Globals& g, std::ostream& out) {
  prepare_output_dir(a.out);
  std::size_t written = 0;
  if (!a.manifest.empty()) {
    const Manifest manifest = read_manifest(a.manifest);
    const auto indices = unique_record_indices(manifest);
    parallel_for(indices.size(), g.threads, [&](std::size_t k) {
      const TileSample tile = load_tile(manifest.records[indices[k]]);
      const ScoreMap scores = read_score_map(score_path(a.scores, tile.id));
      image_io::write_png(fs::path(a.out) / (tile.id + ".png"), argmax_labels(scores, tile.validity));
    });
    written = indices.size();
  } else {
    const auto ids = list_score_ids(a.scores);
    parallel_for(ids.size(), g.threads, [&](std::size_t k) {
      const ScoreMap scores = read_score_map(score_path(a.scores, ids[k]));
      image_io::write_png(fs::path(a.out) / (ids[k] + ".png"), argmax_labels(scores, ByteRaster{}));
    });
    written = ids.size();
  }
  ordered_json j;
  j["out"] = a.out;
  j["tiles"] = written;
  out << j.dump() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string manifest;
  std::string pred;
  std::string report;
  std::string format = "json";
  std::string model = "prediction";
};

LabelRaster load_prediction(const fs::path& dir, const TileSample& tile) {
  const fs::path scores = score_path(dir, tile.id);
  if (fs::is_regular_file(scores)) {
    const ScoreMap map = read_score_map(scores);
    if (map.height() != tile.height() || map.width() != tile.width()) {
      throw Error(ErrorKind::DimensionMismatch, scores.string() + " does not match tile " + tile.id);
    }
    return argmax_labels(map, tile.validity);
  }
  const fs::path png = dir / (tile.id + ".png");
  if (!fs::is_regular_file(png)) throw Error(ErrorKind::MissingScoreFile, "no prediction for " + tile.id + " in " + dir.string());
  LabelRaster labels = image_io::read_image(png, 1);
  for (auto v : labels.values()) {
    if (!is_valid_class(v)) throw Error(ErrorKind::CorruptRaster, png.string() + ": label value out of range");
  }
  return labels;
}

int cmd_evaluate(const EvaluateArgs& a, const Globals& g, std::ostream& out) {
  if (a.format != "json" && a.format != "table") throw UsageError("--format: expected json or table");
  const Manifest manifest = read_manifest(a.manifest);
  const fs::path pred_dir = a.pred;
  const ConfusionMatrix conf = evaluate_manifest(
      manifest, [&](const TileSample& tile, std::size_t) { return load_prediction(pred_dir, tile); },
      resolve_threads(g.threads));
  const MetricsReport report = metrics(conf);
  const std::string json = report_to_json(report);
  if (!a.report.empty()) write_text(a.report, json);
  out << (a.format == "table" ? report_to_table(report, a.model) : json);
  return kExitOk;
}

}  // namespace

std::string version_string() {
  return "agv 1.0.0 (scoremap format v" + std::to_string(kScoreFormatVersion) + ", manifest format v" +
         std::to_string(kManifestFormatVersion) + ")";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Agricultural pattern recognition data pipeline and evaluation", "agv"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "Default seed for randomized subcommands");
  app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset in the standard layout");
  s->add_option("--tiles", synth.tiles, "Number of tiles")->required()->check(CLI::NonNegativeNumber);
  s->add_option("--size", synth.size, "Tile side in pixels");
  s->add_option("--seed", synth.seed, "Generator seed");
  s->add_option("--overlap-rate", synth.overlap_rate, "Probability a region carries two labels")
      ->check(CLI::Range(0.0, 1.0));
  s->add_option("--invalid-corner-rate", synth.invalid_corner_rate, "Probability of an off-field corner")
      ->check(CLI::Range(0.0, 1.0));
  s->add_option("--density", synth.density, "Comma list of 8 foreground class probabilities");
  s->add_option("--out", synth.out, "Output dataset root (absent or empty)")->required();
  s->add_option("--manifest-out", synth.manifest_out, "Manifest path (default OUT/manifest.jsonl)");

  IngestArgs ingest;
  auto* in = app.add_subcommand("ingest", "Scan a dataset tree into a manifest");
  in->add_option("--root", ingest.root, "Dataset root")->required();
  in->add_option("--split", ingest.split, "train|val|test|synthetic");
  in->add_option("--out", ingest.out, "Manifest output path")->required();

  StatsArgs stats;
  auto* st = app.add_subcommand("stats", "Per-class tile counts of a manifest");
  st->add_option("--manifest", stats.manifest, "Manifest path")->required();

  ResampleArgs resample;
  auto* rs = app.add_subcommand("resample", "Rebalance a manifest towards per-class targets");
  rs->add_option("--manifest", resample.manifest, "Input manifest")->required();
  rs->add_option("--targets", resample.targets, "Targets JSON {\"targets\": [9 ints]}")->required();
  rs->add_option("--seed", resample.seed, "Planner seed");
  rs->add_option("--out", resample.out, "Resampled manifest output")->required();
  rs->add_option("--plan-out", resample.plan_out, "Plan JSON output");

  MosaicArgs mosaic;
  auto* mo = app.add_subcommand("mosaic", "Build a 2X or 3X mosaic dataset");
  mo->add_option("--manifest", mosaic.manifest, "Input manifest")->required();
  mo->add_option("--factor", mosaic.factor, "Grid factor")->check(CLI::IsMember({2, 3}));
  mo->add_option("--seed", mosaic.seed, "Grouping seed");
  mo->add_option("--out", mosaic.out, "Output dataset root (absent or empty)")->required();
  mo->add_option("--manifest-out", mosaic.manifest_out, "Manifest path (default OUT/manifest.jsonl)");

  PredictArgs predict_args;
  auto* pr = app.add_subcommand("predict", "Write score maps for every tile of a manifest");
  pr->add_option("--manifest", predict_args.manifest, "Input manifest")->required();
  pr->add_option("--predictor", predict_args.predictor,
                 "oracle | constant:K | noisy-oracle:P:SEED | external:DIR");
  pr->add_option("--tta", predict_args.tta,
                 "Comma list of rot90,rot180,rot270,hflip,hflip_rot90,hflip_rot180,hflip_rot270,scale2,scale3,d4");
  pr->add_option("--out", predict_args.out, "Score map directory (absent or empty)")->required();

  EnsembleArgs ensemble;
  auto* en = app.add_subcommand("ensemble", "Weighted average of score map directories");
  en->add_option("--inputs", ensemble.inputs, "Comma list of score directories")->required();
  en->add_option("--weights", ensemble.weights, "Comma list of non-negative weights (default uniform)");
  en->add_option("--out", ensemble.out, "Output directory (absent or empty)")->required();

  LabelsArgs labels;
  auto* lb = app.add_subcommand("labels", "Convert score maps to class-index PNGs");
  lb->add_option("--scores", labels.scores, "Score map directory")->required();
  lb->add_option("--manifest", labels.manifest, "Manifest supplying validity (optional)");
  lb->add_option("--out", labels.out, "Output directory (absent or empty)")->required();

  EvaluateArgs evaluate;
  auto* ev = app.add_subcommand("evaluate", "Per-class IoU and mIoU report");
  ev->add_option("--manifest", evaluate.manifest, "Ground-truth manifest")->required();
  ev->add_option("--pred", evaluate.pred, "Directory of .agsc score maps or label PNGs")->required();
  ev->add_option("--report", evaluate.report, "Report JSON output path");
  ev->add_option("--format", evaluate.format, "Standard output format: json|table");
  ev->add_option("--model", evaluate.model, "Row label for the table format");

  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) sub->fallthrough();

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("agv");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "agv: " << e.what() << "\n";
    return kExitUsage;
  }

  logger()->set_level(spdlog::level::from_str(g.log_level));

  try {
    if (s->parsed()) return cmd_synth(synth, g, out);
    if (in->parsed()) return cmd_ingest(ingest, g, out);
    if (st->parsed()) return cmd_stats(stats, out);
    if (rs->parsed()) return cmd_resample(resample, g, out);
    if (mo->parsed()) return cmd_mosaic(mosaic, g, out);
    if (pr->parsed()) return cmd_predict(predict_args, g, out);
    if (en->parsed()) return cmd_ensemble(ensemble, g, out);
    if (lb->parsed()) return cmd_labels(labels, g, out);
    if (ev->parsed()) return cmd_evaluate(evaluate, g, out);
  } catch (const UsageError& e) {
    err << "agv: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    logger()->error("IoFailure: {}", e.what());
    return kExitData;
  }
  err << "agv: no subcommand\n";
  return kExitUsage;
}

}  // namespace agv::cli

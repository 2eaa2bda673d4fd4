#include "agv/mosaic.hpp"

#include <set>
#include <vector>

#include "agv/parallel.hpp"
#include "agv/rng.hpp"
#include "agv/synthetic.hpp"

namespace agv {
namespace {

void check_factor(int factor) {
  if (factor != 2 && factor != 3) {
    throw Error(ErrorKind::BadFactor, "mosaic factor must be 2 or 3, got " + std::to_string(factor));
  }
}

}  // namespace

TileSample mosaic_grid(std::span<const TileSample> tiles, int factor) {
  check_factor(factor);
  const std::size_t cells = static_cast<std::size_t>(factor) * factor;
  if (tiles.size() != cells) {
    throw Error(ErrorKind::InvalidArgument,
                "mosaic of factor " + std::to_string(factor) + " needs " + std::to_string(cells) + " tiles");
  }
  const int h = tiles[0].height();
  const int w = tiles[0].width();
  for (const auto& t : tiles) {
    if (t.height() != h || t.width() != w || !t.labels.same_extent(t.image) || !t.validity.same_extent(t.image)) {
      throw Error(ErrorKind::DimensionMismatch, "mosaic sources must share one extent (" + t.id + ")");
    }
  }

  ByteRaster image(h * factor, w * factor, 4);
  Raster<LabelSet> labels(h * factor, w * factor);
  ByteRaster validity(h * factor, w * factor);
  std::string id;
  for (std::size_t i = 0; i < cells; ++i) {
    const int gy = static_cast<int>(i) / factor;
    const int gx = static_cast<int>(i) % factor;
    paste(image, tiles[i].image, gy * h, gx * w);
    paste(labels, tiles[i].labels, gy * h, gx * w);
    paste(validity, tiles[i].validity, gy * h, gx * w);
    if (i) id += '+';
    id += tiles[i].id;
  }

  TileSample out;
  out.id = std::move(id);
  out.image = block_mean(image, factor);
  out.labels = block_or(labels, factor);
  out.validity = block_or(validity, factor);
  out.normalize_labels();
  return out;
}

Manifest build_mosaic_dataset(const Manifest& manifest, const MosaicSpec& spec, const fs::path& out_root,
                              int threads) {
  check_factor(spec.factor);
  const std::size_t group = static_cast<std::size_t>(spec.factor) * spec.factor;
  if (manifest.records.size() < group) {
    throw Error(ErrorKind::TooFewTiles, "factor " + std::to_string(spec.factor) + " needs at least " +
                                            std::to_string(group) + " tiles, manifest has " +
                                            std::to_string(manifest.records.size()));
  }
  const std::vector<std::size_t> order = seeded_permutation(manifest.records.size(), spec.seed, 0);
  const std::size_t groups = order.size() / group;

  std::vector<std::string> ids(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t j = 0; j < group; ++j) {
      if (j) ids[g] += '+';
      ids[g] += manifest.records[order[g * group + j]].id;
    }
  }
  if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size()) {
    throw Error(ErrorKind::InvalidArgument, "mosaic grouping produced duplicate output ids; choose another seed");
  }

  prepare_output_dir(out_root);
  create_layout(out_root);
  parallel_for(groups, threads, [&](std::size_t g) {
    std::vector<TileSample> sources;
    sources.reserve(group);
    for (std::size_t j = 0; j < group; ++j) sources.push_back(load_tile(manifest.records[order[g * group + j]]));
    write_tile(out_root, mosaic_grid(sources, spec.factor));
  });

  Manifest out = ingest_dataset(out_root, manifest.split, threads);
  out.provenance = "mosaic " + std::to_string(spec.factor) + "X of [" + manifest.provenance + "] with seed " +
                   std::to_string(spec.seed) + "; " + std::to_string(order.size() - groups * group) +
                   " leftover tiles dropped";
  return out;
}

}  // namespace agv

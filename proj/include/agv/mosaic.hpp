#pragma once

#include <cstdint>
#include <span>

#include "agv/dataset.hpp"

namespace agv {

struct MosaicSpec {
  int factor = 2;  // 2 or 3
  std::uint64_t seed = 0;
};

/// Fuses k*k equally sized tiles (row-major) into a (kH)x(kW) canvas and
/// reduces it back to HxW: image by k x k block mean (half-up), labels and
/// validity by block OR, Background recomputed. Output id joins the source
/// ids with '+'.
TileSample mosaic_grid(std::span<const TileSample> tiles, int factor);

/// Shuffles the records with `spec.seed`, fuses consecutive groups of k*k,
/// drops the remainder and writes the results under `out_root`. Returns the
/// ingest of the written tree.
Manifest build_mosaic_dataset(const Manifest& manifest, const MosaicSpec& spec, const fs::path& out_root,
                              int threads = 1);

}  // namespace agv

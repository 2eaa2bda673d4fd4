#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "agv/classes.hpp"
#include "agv/raster.hpp"

namespace agv {

namespace fs = std::filesystem;

/// One raster sample. Channel order of `image` is R, G, B, NIR.
struct TileSample {
  std::string id;
  ByteRaster image;            // H x W x 4
  Raster<LabelSet> labels;     // H x W, bit c set when class c is labelled
  ByteRaster validity;         // H x W, {0, 1}

  int height() const noexcept { return image.height(); }
  int width() const noexcept { return image.width(); }

  bool has_label(int c, int y, int x) const noexcept { return (labels.at(y, x) >> c) & 1u; }

  /// Binary {0, 1} raster for one class.
  ByteRaster label_raster(int c) const;

  /// Clears labels off validity and recomputes Background from foreground.
  void normalize_labels();

  /// Class present on at least one valid pixel.
  std::array<bool, kNumClasses> presence() const;

  std::size_t valid_pixel_count() const;
};

/// Builds a tile from its parts and normalizes labels. `foreground[c]` for
/// c in 1..8 is a {0, 1} raster; index 0 is ignored.
TileSample make_tile(std::string id, ByteRaster rgbn, const std::array<ByteRaster, kNumClasses>& foreground,
                     ByteRaster validity);

enum class Split { train, val, test, synthetic };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct TilePaths {
  fs::path rgb;
  fs::path nir;
  fs::path boundary;
  fs::path mask;
  std::array<fs::path, kNumClasses> labels;  // [0] unused

  friend bool operator==(const TilePaths&, const TilePaths&) = default;
};

struct TileRecord {
  std::string id;
  TilePaths paths;
  std::array<bool, kNumClasses> presence{};
  // 1-based occurrence ordinal for repeated records after resampling; 0 if untagged.
  int occurrence = 0;

  friend bool operator==(const TileRecord&, const TileRecord&) = default;
};

struct Manifest {
  Split split = Split::synthetic;
  std::string provenance;
  std::vector<TileRecord> records;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

using ClassCounts = std::array<std::uint64_t, kNumClasses>;

inline constexpr int kManifestFormatVersion = 1;

/// Standard layout paths for one tile id under `root`. The image extension
/// is resolved at ingest; this helper returns the PNG variants.
TilePaths layout_paths(const fs::path& root, const std::string& id);

/// Creates the directory skeleton of the dataset layout.
void create_layout(const fs::path& root);

/// Scans `root`, validates companions and computes class presence.
/// Tiles without any valid pixel are dropped. Records are sorted by id.
Manifest ingest_dataset(const fs::path& root, Split split, int threads = 1);

/// Decodes every raster of a record. validity = boundary AND mask.
TileSample load_tile(const TileRecord& record);

ClassCounts class_counts(const Manifest& manifest);

/// JSON-lines serialization. Paths are written relative to `base_dir`.
std::string manifest_to_jsonl(const Manifest& manifest, const fs::path& base_dir);
Manifest manifest_from_jsonl(std::string_view text, const fs::path& base_dir);

/// File variants; paths are stored relative to the manifest's directory.
void write_manifest(const fs::path& path, const Manifest& manifest);
Manifest read_manifest(const fs::path& path);

}  // namespace agv

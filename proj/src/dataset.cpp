#include "agv/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "agv/image_io.hpp"
#include "agv/parallel.hpp"

namespace agv {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 3> kImageExtensions = {".png", ".jpg", ".jpeg"};

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool is_image_extension(const fs::path& p) {
  const std::string ext = lowercase(p.extension().string());
  return std::find(kImageExtensions.begin(), kImageExtensions.end(), ext) != kImageExtensions.end();
}

std::optional<fs::path> find_image(const fs::path& dir, const std::string& id) {
  for (auto ext : kImageExtensions) {
    fs::path candidate = dir / (id + std::string(ext));
    if (fs::is_regular_file(candidate)) return candidate;
  }
  return std::nullopt;
}

fs::path relative_to(const fs::path& p, const fs::path& base) {
  if (base.empty()) return p;
  const fs::path abs = fs::absolute(p).lexically_normal();
  const fs::path rel = abs.lexically_relative(fs::absolute(base).lexically_normal());
  return rel.empty() ? abs : rel;
}

fs::path resolve_from(const fs::path& p, const fs::path& base) {
  if (p.is_absolute() || base.empty()) return p.lexically_normal();
  return (base / p).lexically_normal();
}

}  // namespace

ByteRaster TileSample::label_raster(int c) const {
  ByteRaster out(labels.height(), labels.width());
  for (std::size_t i = 0; i < labels.size(); ++i) out.data()[i] = (labels.data()[i] >> c) & 1u;
  return out;
}

void TileSample::normalize_labels() {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    LabelSet& set = labels.data()[i];
    if (!validity.data()[i]) {
      set = 0;
      continue;
    }
    const LabelSet fg = set & kForegroundBits;
    set = fg ? fg : class_bit(kBackground);
  }
}

std::array<bool, kNumClasses> TileSample::presence() const {
  LabelSet seen = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (validity.data()[i]) seen |= labels.data()[i];
  }
  std::array<bool, kNumClasses> out{};
  for (int c = 0; c < kNumClasses; ++c) out[c] = (seen >> c) & 1u;
  return out;
}

std::size_t TileSample::valid_pixel_count() const {
  return static_cast<std::size_t>(std::count_if(validity.values().begin(), validity.values().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

TileSample make_tile(std::string id, ByteRaster rgbn, const std::array<ByteRaster, kNumClasses>& foreground,
                     ByteRaster validity) {
  if (rgbn.channels() != 4) throw Error(ErrorKind::InvalidArgument, "tile image must have 4 channels");
  if (!rgbn.same_extent(validity)) throw Error(ErrorKind::DimensionMismatch, "validity extent differs from image");
  TileSample tile;
  tile.id = std::move(id);
  tile.labels = Raster<LabelSet>(rgbn.height(), rgbn.width());
  for (int c = 1; c < kNumClasses; ++c) {
    const ByteRaster& fg = foreground[c];
    if (fg.empty()) continue;
    if (!fg.same_extent(rgbn)) {
      throw Error(ErrorKind::DimensionMismatch, "label raster for class " + std::to_string(c) + " differs from image");
    }
    for (std::size_t i = 0; i < fg.size(); ++i) {
      if (fg.data()[i]) tile.labels.data()[i] |= class_bit(c);
    }
  }
  tile.image = std::move(rgbn);
  tile.validity = std::move(validity);
  tile.normalize_labels();
  return tile;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::synthetic: return "synthetic";
  }
  return "synthetic";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  if (name == "synthetic") return Split::synthetic;
  throw Error(ErrorKind::InvalidArgument, "unknown split '" + std::string(name) + "'");
}

TilePaths layout_paths(const fs::path& root, const std::string& id) {
  TilePaths p;
  const std::string file = id + ".png";
  p.rgb = root / "images" / "rgb" / file;
  p.nir = root / "images" / "nir" / file;
  p.boundary = root / "boundaries" / file;
  p.mask = root / "masks" / file;
  for (int c = 1; c < kNumClasses; ++c) p.labels[c] = root / "labels" / std::string(kClassDirNames[c]) / file;
  return p;
}

void create_layout(const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root / "images" / "rgb", ec);
  fs::create_directories(root / "images" / "nir", ec);
  fs::create_directories(root / "boundaries", ec);
  fs::create_directories(root / "masks", ec);
  for (int c = 1; c < kNumClasses; ++c) fs::create_directories(root / "labels" / std::string(kClassDirNames[c]), ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create dataset layout under " + root.string() + ": " + ec.message());
}

TileSample load_tile(const TileRecord& record) {
  const ByteRaster rgb = image_io::read_image(record.paths.rgb, 3);
  const ByteRaster nir = image_io::read_image(record.paths.nir, 1);
  const ByteRaster boundary = image_io::read_binary_mask(record.paths.boundary);
  const ByteRaster mask = image_io::read_binary_mask(record.paths.mask);

  auto check = [&](const ByteRaster& r, const fs::path& p) {
    if (!r.same_extent(rgb)) {
      throw Error(ErrorKind::DimensionMismatch, record.id + ": " + p.string() + " is " + std::to_string(r.height()) +
                                                    "x" + std::to_string(r.width()) + ", expected " +
                                                    std::to_string(rgb.height()) + "x" + std::to_string(rgb.width()));
    }
  };
  check(nir, record.paths.nir);
  check(boundary, record.paths.boundary);
  check(mask, record.paths.mask);

  ByteRaster rgbn(rgb.height(), rgb.width(), 4);
  ByteRaster validity(rgb.height(), rgb.width());
  for (std::size_t i = 0; i < rgb.pixel_count(); ++i) {
    rgbn.data()[4 * i + 0] = rgb.data()[3 * i + 0];
    rgbn.data()[4 * i + 1] = rgb.data()[3 * i + 1];
    rgbn.data()[4 * i + 2] = rgb.data()[3 * i + 2];
    rgbn.data()[4 * i + 3] = nir.data()[i];
    validity.data()[i] = boundary.data()[i] & mask.data()[i];
  }

  std::array<ByteRaster, kNumClasses> foreground;
  for (int c = 1; c < kNumClasses; ++c) {
    foreground[c] = image_io::read_binary_mask(record.paths.labels[c]);
    check(foreground[c], record.paths.labels[c]);
  }
  return make_tile(record.id, std::move(rgbn), foreground, std::move(validity));
}

Manifest ingest_dataset(const fs::path& root, Split split, int threads) {
  const fs::path rgb_dir = root / "images" / "rgb";
  if (!fs::is_directory(rgb_dir)) {
    throw Error(ErrorKind::EmptyDataset, root.string() + " has no images/rgb directory");
  }

  std::map<std::string, fs::path> rgb_by_id;
  for (const auto& entry : fs::directory_iterator(rgb_dir)) {
    if (!entry.is_regular_file() || !is_image_extension(entry.path())) continue;
    const std::string id = entry.path().stem().string();
    if (!rgb_by_id.emplace(id, entry.path()).second) {
      throw Error(ErrorKind::CorruptRaster, "tile id '" + id + "' has more than one rgb image");
    }
  }
  if (rgb_by_id.empty()) throw Error(ErrorKind::EmptyDataset, root.string() + " contains no tiles");

  std::vector<TileRecord> records;
  records.reserve(rgb_by_id.size());
  for (const auto& [id, rgb_path] : rgb_by_id) {
    TileRecord rec;
    rec.id = id;
    rec.paths = layout_paths(root, id);
    rec.paths.rgb = rgb_path;
    auto missing = [&](const fs::path& p) {
      throw Error(ErrorKind::MissingCompanionFile, id + " (expected " + p.string() + ")");
    };
    if (auto nir = find_image(root / "images" / "nir", id)) {
      rec.paths.nir = *nir;
    } else {
      missing(root / "images" / "nir" / (id + ".jpg|png"));
    }
    if (!fs::is_regular_file(rec.paths.boundary)) missing(rec.paths.boundary);
    if (!fs::is_regular_file(rec.paths.mask)) missing(rec.paths.mask);
    for (int c = 1; c < kNumClasses; ++c) {
      if (!fs::is_regular_file(rec.paths.labels[c])) missing(rec.paths.labels[c]);
    }
    records.push_back(std::move(rec));
  }

  std::vector<char> keep(records.size(), 0);
  parallel_for(records.size(), threads, [&](std::size_t i) {
    TileSample tile;
    try {
      tile = load_tile(records[i]);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::DimensionMismatch) throw Error(ErrorKind::CorruptRaster, e.what());
      throw;
    }
    records[i].presence = tile.presence();
    keep[i] = tile.valid_pixel_count() > 0;
  });

  Manifest manifest;
  manifest.split = split;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) {
      manifest.records.push_back(std::move(records[i]));
    } else {
      ++dropped;
    }
  }
  if (manifest.records.empty()) throw Error(ErrorKind::EmptyDataset, root.string() + " has no tile with valid pixels");
  manifest.provenance = "ingested from " + fs::absolute(root).lexically_normal().string();
  if (dropped > 0) manifest.provenance += "; dropped " + std::to_string(dropped) + " tiles without valid pixels";
  return manifest;
}

ClassCounts class_counts(const Manifest& manifest) {
  ClassCounts counts{};
  for (const auto& rec : manifest.records) {
    for (int c = 0; c < kNumClasses; ++c) counts[c] += rec.presence[c] ? 1 : 0;
  }
  return counts;
}

std::string manifest_to_jsonl(const Manifest& manifest, const fs::path& base_dir) {
  std::string out;
  ordered_json header;
  header["split"] = std::string(to_string(manifest.split));
  header["provenance"] = manifest.provenance;
  header["format_version"] = kManifestFormatVersion;
  out += header.dump() + "\n";
  for (const auto& rec : manifest.records) {
    ordered_json paths;
    paths["rgb"] = relative_to(rec.paths.rgb, base_dir).generic_string();
    paths["nir"] = relative_to(rec.paths.nir, base_dir).generic_string();
    paths["boundary"] = relative_to(rec.paths.boundary, base_dir).generic_string();
    paths["mask"] = relative_to(rec.paths.mask, base_dir).generic_string();
    for (int c = 1; c < kNumClasses; ++c) {
      paths[std::string(kClassDirNames[c])] = relative_to(rec.paths.labels[c], base_dir).generic_string();
    }
    ordered_json line;
    line["id"] = rec.id;
    line["paths"] = std::move(paths);
    line["presence"] = rec.presence;
    if (rec.occurrence > 0) line["occurrence"] = rec.id + "#" + std::to_string(rec.occurrence);
    out += line.dump() + "\n";
  }
  return out;
}

Manifest manifest_from_jsonl(std::string_view text, const fs::path& base_dir) {
  Manifest manifest;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      if (!header_seen) {
        if (j.at("format_version").get<int>() != kManifestFormatVersion) {
          throw Error(ErrorKind::BadFormat, "unsupported manifest format_version");
        }
        manifest.split = parse_split(j.at("split").get<std::string>());
        manifest.provenance = j.at("provenance").get<std::string>();
        header_seen = true;
        continue;
      }
      TileRecord rec;
      rec.id = j.at("id").get<std::string>();
      const auto& paths = j.at("paths");
      auto path_of = [&](std::string_view key) {
        return resolve_from(fs::path(paths.at(std::string(key)).get<std::string>()), base_dir);
      };
      rec.paths.rgb = path_of("rgb");
      rec.paths.nir = path_of("nir");
      rec.paths.boundary = path_of("boundary");
      rec.paths.mask = path_of("mask");
      for (int c = 1; c < kNumClasses; ++c) rec.paths.labels[c] = path_of(kClassDirNames[c]);
      rec.presence = j.at("presence").get<std::array<bool, kNumClasses>>();
      if (j.contains("occurrence")) {
        const std::string tag = j.at("occurrence").get<std::string>();
        const auto hash = tag.rfind('#');
        if (hash == std::string::npos) throw Error(ErrorKind::BadFormat, "occurrence tag without '#'");
        const std::string ordinal = tag.substr(hash + 1);
        const auto [end, ec] = std::from_chars(ordinal.data(), ordinal.data() + ordinal.size(), rec.occurrence);
        if (ec != std::errc{} || end != ordinal.data() + ordinal.size() || rec.occurrence <= 0) {
          throw Error(ErrorKind::BadFormat, "bad occurrence tag '" + tag + "'");
        }
      }
      manifest.records.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadFormat, "manifest line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!header_seen) throw Error(ErrorKind::BadFormat, "manifest has no header line");
  return manifest;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  const fs::path dir = fs::absolute(path).parent_path();
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << manifest_to_jsonl(manifest, dir);
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return manifest_from_jsonl(buf.str(), fs::absolute(path).parent_path());
}

}  // namespace agv

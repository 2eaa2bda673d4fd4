#include "agv/score_map.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace agv {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'A', 'G', 'S', 'C'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

ScoreMap one_hot_map(std::string id, int height, int width, int c) {
  ScoreMap map(std::move(id), height, width);
  for (std::size_t p = 0; p < map.scores.pixel_count(); ++p) map.scores.data()[p * kNumClasses + c] = 1.0f;
  return map;
}

void validate(const ScoreMap& map) {
  if (map.scores.channels() != kNumClasses) {
    throw Error(ErrorKind::InvalidScores, map.tile_id + ": expected 9 class channels");
  }
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      double sum = 0.0;
      for (float v : map.scores.pixel(y, x)) {
        if (!std::isfinite(v) || v < 0.0f) {
          throw Error(ErrorKind::InvalidScores, map.tile_id + ": invalid score at (" + std::to_string(y) + ", " +
                                                    std::to_string(x) + ")");
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > kScoreSumTolerance) {
        throw Error(ErrorKind::InvalidScores, map.tile_id + ": scores at (" + std::to_string(y) + ", " +
                                                  std::to_string(x) + ") sum to " + std::to_string(sum));
      }
    }
  }
}

std::vector<std::uint8_t> encode_score_map(const ScoreMap& map) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + map.scores.size() * 4);
  for (std::uint8_t b : kMagic) out.push_back(b);
  put_u32(out, kScoreFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  put_u32(out, kNumClasses);
  for (float v : map.scores.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

ScoreMap decode_score_map(std::span<const std::uint8_t> bytes, std::string tile_id) {
  if (bytes.size() < kHeaderBytes || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(ErrorKind::BadFormat, tile_id + ": missing AGSC header");
  }
  const std::uint32_t version = get_u32(bytes.data() + 4);
  const std::uint32_t h = get_u32(bytes.data() + 8);
  const std::uint32_t w = get_u32(bytes.data() + 12);
  const std::uint32_t c = get_u32(bytes.data() + 16);
  if (version != kScoreFormatVersion) {
    throw Error(ErrorKind::BadFormat, tile_id + ": unsupported score format version " + std::to_string(version));
  }
  if (c != kNumClasses) throw Error(ErrorKind::BadFormat, tile_id + ": expected 9 classes, got " + std::to_string(c));
  const std::uint64_t count = static_cast<std::uint64_t>(h) * w * c;
  if (bytes.size() != kHeaderBytes + count * 4) {
    throw Error(ErrorKind::BadFormat, tile_id + ": payload size does not match " + std::to_string(h) + "x" +
                                          std::to_string(w));
  }
  ScoreMap map(std::move(tile_id), static_cast<int>(h), static_cast<int>(w));
  const std::uint8_t* p = bytes.data() + kHeaderBytes;
  for (std::size_t i = 0; i < count; ++i, p += 4) map.scores.data()[i] = std::bit_cast<float>(get_u32(p));
  return map;
}

void write_score_map(const std::filesystem::path& path, const ScoreMap& map) {
  const auto bytes = encode_score_map(map);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

ScoreMap read_score_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingScoreFile, path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_score_map(bytes, path.stem().string());
}

std::filesystem::path score_path(const std::filesystem::path& dir, const std::string& tile_id) {
  return dir / (tile_id + ".agsc");
}

std::vector<std::string> list_score_ids(const std::filesystem::path& dir) {
  std::vector<std::string> ids;
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::IoFailure, dir.string() + " is not a directory");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".agsc") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace agv

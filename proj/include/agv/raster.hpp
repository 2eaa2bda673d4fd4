#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "agv/error.hpp"

namespace agv {

/// Dense row-major raster with interleaved channels (channel fastest).
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int height, int width, int channels = 1, T fill = T{})
      : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels <= 0) {
      throw Error(ErrorKind::InvalidArgument, "raster dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t offset(int y, int x, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  T& at(int y, int x, int c = 0) noexcept { return data_[offset(y, x, c)]; }
  const T& at(int y, int x, int c = 0) const noexcept { return data_[offset(y, x, c)]; }

  std::span<T> pixel(int y, int x) noexcept {
    return {data_.data() + offset(y, x), static_cast<std::size_t>(channels_)};
  }
  std::span<const T> pixel(int y, int x) const noexcept {
    return {data_.data() + offset(y, x), static_cast<std::size_t>(channels_)};
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  template <typename U>
  bool same_extent(const Raster<U>& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using ByteRaster = Raster<std::uint8_t>;

/// Counter-clockwise rotation by quarter turns (numpy rot90 convention:
/// out[i][j] = in[j][W-1-i] for one turn).
template <typename T>
Raster<T> rotate_quarter(const Raster<T>& in, int quarter_turns) {
  const int turns = ((quarter_turns % 4) + 4) % 4;
  const int h = in.height();
  const int w = in.width();
  const int ch = in.channels();
  if (turns == 0) return in;
  Raster<T> out = (turns == 2) ? Raster<T>(h, w, ch) : Raster<T>(w, h, ch);
  for (int i = 0; i < out.height(); ++i) {
    for (int j = 0; j < out.width(); ++j) {
      int sy = 0;
      int sx = 0;
      switch (turns) {
        case 1: sy = j; sx = w - 1 - i; break;
        case 2: sy = h - 1 - i; sx = w - 1 - j; break;
        default: sy = h - 1 - j; sx = i; break;
      }
      auto src = in.pixel(sy, sx);
      auto dst = out.pixel(i, j);
      for (int c = 0; c < ch; ++c) dst[c] = src[c];
    }
  }
  return out;
}

/// Mirror left-right.
template <typename T>
Raster<T> flip_horizontal(const Raster<T>& in) {
  Raster<T> out(in.height(), in.width(), in.channels());
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      auto src = in.pixel(y, in.width() - 1 - x);
      auto dst = out.pixel(y, x);
      for (int c = 0; c < in.channels(); ++c) dst[c] = src[c];
    }
  }
  return out;
}

inline void require_divisible(int height, int width, int k) {
  if (k <= 0 || height % k != 0 || width % k != 0) {
    throw Error(ErrorKind::IndivisibleSize, std::to_string(height) + "x" + std::to_string(width) +
                                                " is not divisible by " + std::to_string(k));
  }
}

/// k x k block mean per channel, rounded half-up.
inline ByteRaster block_mean(const ByteRaster& in, int k) {
  require_divisible(in.height(), in.width(), k);
  const int oh = in.height() / k;
  const int ow = in.width() / k;
  const std::uint32_t n = static_cast<std::uint32_t>(k) * k;
  ByteRaster out(oh, ow, in.channels());
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      for (int c = 0; c < in.channels(); ++c) {
        std::uint32_t sum = 0;
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx) sum += in.at(y * k + dy, x * k + dx, c);
        out.at(y, x, c) = static_cast<std::uint8_t>((2 * sum + n) / (2 * n));
      }
    }
  }
  return out;
}

/// k x k block bitwise OR per channel. On 0/1 rasters this is max pooling.
template <typename T>
Raster<T> block_or(const Raster<T>& in, int k) {
  require_divisible(in.height(), in.width(), k);
  const int oh = in.height() / k;
  const int ow = in.width() / k;
  Raster<T> out(oh, ow, in.channels());
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      for (int c = 0; c < in.channels(); ++c) {
        T acc{};
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx) acc = static_cast<T>(acc | in.at(y * k + dy, x * k + dx, c));
        out.at(y, x, c) = acc;
      }
    }
  }
  return out;
}

/// Nearest-neighbour upscale: every pixel becomes a k x k block.
template <typename T>
Raster<T> replicate(const Raster<T>& in, int k) {
  if (k <= 0) throw Error(ErrorKind::InvalidArgument, "replication factor must be positive");
  Raster<T> out(in.height() * k, in.width() * k, in.channels());
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      auto src = in.pixel(y / k, x / k);
      auto dst = out.pixel(y, x);
      for (int c = 0; c < in.channels(); ++c) dst[c] = src[c];
    }
  }
  return out;
}

/// Copy `src` into `dst` with its top-left corner at (y0, x0).
template <typename T>
void paste(Raster<T>& dst, const Raster<T>& src, int y0, int x0) {
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      auto s = src.pixel(y, x);
      auto d = dst.pixel(y0 + y, x0 + x);
      for (int c = 0; c < src.channels(); ++c) d[c] = s[c];
    }
  }
}

}  // namespace agv

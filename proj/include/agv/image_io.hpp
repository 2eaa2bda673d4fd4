#pragma once

#include <filesystem>

#include "agv/raster.hpp"

namespace agv::image_io {

/// Decodes a PNG or JPEG (detected by signature, not extension) into an
/// 8-bit raster with `channels` channels (1 = gray, 3 = RGB). Colour
/// sources read as gray keep their first channel. Throws CorruptRaster.
ByteRaster read_image(const std::filesystem::path& path, int channels);

/// Reads a single-channel mask and thresholds it at 128 to {0, 1}.
ByteRaster read_binary_mask(const std::filesystem::path& path);

/// Writes an 8-bit PNG with 1 or 3 channels. Output bytes depend only on
/// the raster contents.
void write_png(const std::filesystem::path& path, const ByteRaster& raster);

/// Writes a {0, 1} raster as a {0, 255} PNG.
void write_binary_mask(const std::filesystem::path& path, const ByteRaster& mask);

/// Baseline JPEG writer; only used to exercise the JPEG decode path.
void write_jpeg(const std::filesystem::path& path, const ByteRaster& raster, int quality = 95);

}  // namespace agv::image_io

#include "agv/image_io.hpp"

#include <png.h>

#include <array>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

// jpeglib.h needs size_t and FILE declared first.
#include <jpeglib.h>

namespace agv::image_io {
namespace {

namespace fs = std::filesystem;

enum class Format { png, jpeg, unknown };

Format sniff(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::CorruptRaster, "cannot open " + path.string());
  std::array<unsigned char, 8> head{};
  in.read(reinterpret_cast<char*>(head.data()), head.size());
  const auto got = in.gcount();
  static constexpr std::array<unsigned char, 8> kPng = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (got == 8 && head == kPng) return Format::png;
  if (got >= 3 && head[0] == 0xFF && head[1] == 0xD8 && head[2] == 0xFF) return Format::jpeg;
  return Format::unknown;
}

ByteRaster read_png(const fs::path& path, int channels) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorKind::CorruptRaster, path.string() + ": " + image.message);
  }
  const bool source_is_colour = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  if (channels == 1 && source_is_colour) {
    // Read as RGB and keep the first channel rather than luminance-converting.
    image.format = PNG_FORMAT_RGB;
    ByteRaster rgb(static_cast<int>(image.height), static_cast<int>(image.width), 3);
    if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
      png_image_free(&image);
      throw Error(ErrorKind::CorruptRaster, path.string() + ": " + image.message);
    }
    ByteRaster gray(rgb.height(), rgb.width(), 1);
    for (std::size_t i = 0; i < gray.size(); ++i) gray.data()[i] = rgb.data()[3 * i];
    return gray;
  }
  image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  ByteRaster out(static_cast<int>(image.height), static_cast<int>(image.width), channels);
  if (!png_image_finish_read(&image, nullptr, out.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorKind::CorruptRaster, path.string() + ": " + image.message);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  std::array<char, JMSG_LENGTH_MAX> message;
};

void jpeg_error_exit(j_common_ptr info) {
  auto* manager = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, manager->message.data());
  std::longjmp(manager->jump, 1);
}

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

ByteRaster read_jpeg(const fs::path& path, int channels) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorKind::CorruptRaster, "cannot open " + path.string());

  jpeg_decompress_struct info;
  JpegErrorManager err;
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  // Everything that must be destroyed across the longjmp is declared above.
  ByteRaster decoded;
  ByteRaster out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&info);
    throw Error(ErrorKind::CorruptRaster, path.string() + ": " + err.message.data());
  }
  jpeg_create_decompress(&info);
  jpeg_stdio_src(&info, file.get());
  jpeg_read_header(&info, TRUE);
  const bool colour_source = info.num_components >= 3;
  info.out_color_space = colour_source ? JCS_RGB : JCS_GRAYSCALE;
  jpeg_start_decompress(&info);
  const int decoded_channels = static_cast<int>(info.output_components);
  decoded = ByteRaster(static_cast<int>(info.output_height), static_cast<int>(info.output_width),
                       decoded_channels);
  while (info.output_scanline < info.output_height) {
    JSAMPROW row = decoded.data() + decoded.offset(static_cast<int>(info.output_scanline), 0);
    jpeg_read_scanlines(&info, &row, 1);
  }
  jpeg_finish_decompress(&info);
  jpeg_destroy_decompress(&info);

  if (decoded_channels == channels) return decoded;
  out = ByteRaster(decoded.height(), decoded.width(), channels);
  for (std::size_t p = 0; p < decoded.pixel_count(); ++p) {
    for (int c = 0; c < channels; ++c) {
      const int src = decoded_channels == 1 ? 0 : c;
      out.data()[p * channels + c] = decoded.data()[p * decoded_channels + src];
    }
  }
  return out;
}

}  // namespace

ByteRaster read_image(const fs::path& path, int channels) {
  if (channels != 1 && channels != 3) {
    throw Error(ErrorKind::InvalidArgument, "read_image supports 1 or 3 channels");
  }
  switch (sniff(path)) {
    case Format::png: return read_png(path, channels);
    case Format::jpeg: return read_jpeg(path, channels);
    case Format::unknown: break;
  }
  throw Error(ErrorKind::CorruptRaster, path.string() + ": not a PNG or JPEG file");
}

ByteRaster read_binary_mask(const fs::path& path) {
  ByteRaster mask = read_image(path, 1);
  for (auto& v : mask.values()) v = v >= 128 ? 1 : 0;
  return mask;
}

void write_png(const fs::path& path, const ByteRaster& raster) {
  if (raster.channels() != 1 && raster.channels() != 3) {
    throw Error(ErrorKind::InvalidArgument, "write_png supports 1 or 3 channels");
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width());
  image.height = static_cast<png_uint_32>(raster.height());
  image.format = raster.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, raster.data(), 0, nullptr)) {
    throw Error(ErrorKind::IoFailure, path.string() + ": " + image.message);
  }
}

void write_binary_mask(const fs::path& path, const ByteRaster& mask) {
  ByteRaster scaled = mask;
  for (auto& v : scaled.values()) v = v ? 255 : 0;
  write_png(path, scaled);
}

void write_jpeg(const fs::path& path, const ByteRaster& raster, int quality) {
  if (raster.channels() != 1 && raster.channels() != 3) {
    throw Error(ErrorKind::InvalidArgument, "write_jpeg supports 1 or 3 channels");
  }
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorKind::IoFailure, "cannot create " + path.string());
  jpeg_compress_struct info;
  JpegErrorManager err;
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&info);
    throw Error(ErrorKind::IoFailure, path.string() + ": " + err.message.data());
  }
  jpeg_create_compress(&info);
  jpeg_stdio_dest(&info, file.get());
  info.image_width = static_cast<JDIMENSION>(raster.width());
  info.image_height = static_cast<JDIMENSION>(raster.height());
  info.input_components = raster.channels();
  info.in_color_space = raster.channels() == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&info);
  jpeg_set_quality(&info, quality, TRUE);
  jpeg_start_compress(&info, TRUE);
  while (info.next_scanline < info.image_height) {
    auto* row = const_cast<JSAMPLE*>(raster.data() + raster.offset(static_cast<int>(info.next_scanline), 0));
    jpeg_write_scanlines(&info, &row, 1);
  }
  jpeg_finish_compress(&info);
  jpeg_destroy_compress(&info);
}

}  // namespace agv::image_io

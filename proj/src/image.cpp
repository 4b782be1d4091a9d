// Copyright 2026 The tumorloc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tumorloc/image.hpp"

#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>

#include "tumorloc/error.hpp"

namespace tumorloc {

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::kInvalidArgument, "negative image dimensions");
  }
  data_.resize(pixel_count() * 3);
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    data_[3 * i] = fill.r;
    data_[3 * i + 1] = fill.g;
    data_[3 * i + 2] = fill.b;
  }
}

RgbImage RgbImage::crop(int x, int y, int w, int h) const {
  RgbImage out(w, h);
  const std::size_t row_bytes = static_cast<std::size_t>(w) * 3;
  for (int r = 0; r < h; ++r) {
    std::memcpy(out.data_.data() + out.offset(0, r), data_.data() + offset(x, y + r), row_bytes);
  }
  return out;
}

void RgbImage::paste(const RgbImage& src, int x, int y) {
  const std::size_t row_bytes = static_cast<std::size_t>(src.width_) * 3;
  for (int r = 0; r < src.height_; ++r) {
    std::memcpy(data_.data() + offset(x, y + r), src.data_.data() + src.offset(0, r), row_bytes);
  }
}

namespace {

bool HasMagic(const std::filesystem::path& path, std::span<const unsigned char> magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return false;
  }
  std::array<char, 8> buf{};
  in.read(buf.data(), static_cast<std::streamsize>(magic.size()));
  if (in.gcount() != static_cast<std::streamsize>(magic.size())) {
    return false;
  }
  return std::memcmp(buf.data(), magic.data(), magic.size()) == 0;
}

void SilenceLibtiff() {
  static std::once_flag once;
  std::call_once(once, [] {
    TIFFSetWarningHandler(nullptr);
    TIFFSetErrorHandler(nullptr);
  });
}

struct TiffCloser {
  void operator()(TIFF* t) const noexcept {
    if (t != nullptr) {
      TIFFClose(t);
    }
  }
};
using TiffHandle = std::unique_ptr<TIFF, TiffCloser>;

TiffHandle OpenTiff(const std::filesystem::path& path, const char* mode) {
  SilenceLibtiff();
  TiffHandle tif(TIFFOpen(path.c_str(), mode));
  if (!tif) {
    throw Error(ErrorCode::kCorruptImage, "cannot open TIFF " + path.string());
  }
  return tif;
}

// Validates the current directory and returns its dimensions.
TiffPageInfo CheckPage(TIFF* tif, int index, const std::filesystem::path& path) {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t bits = 0;
  std::uint16_t samples = 0;
  std::uint16_t photometric = 0;
  std::uint16_t planar = PLANARCONFIG_CONTIG;
  TIFFGetField(tif, TIFFTAG_IMAGEWIDTH, &width);
  TIFFGetField(tif, TIFFTAG_IMAGELENGTH, &height);
  TIFFGetFieldDefaulted(tif, TIFFTAG_BITSPERSAMPLE, &bits);
  TIFFGetFieldDefaulted(tif, TIFFTAG_SAMPLESPERPIXEL, &samples);
  TIFFGetFieldDefaulted(tif, TIFFTAG_PLANARCONFIG, &planar);
  if (TIFFGetField(tif, TIFFTAG_PHOTOMETRIC, &photometric) == 0) {
    throw Error(ErrorCode::kCorruptImage, "TIFF page without photometric tag: " + path.string());
  }
  if (bits != 8 || samples != 3 || photometric != PHOTOMETRIC_RGB ||
      planar != PLANARCONFIG_CONTIG) {
    throw Error(ErrorCode::kUnsupportedFormat,
                path.string() + " page " + std::to_string(index) + " is not 8-bit chunky RGB (bits=" +
                    std::to_string(bits) + ", samples=" + std::to_string(samples) + ")");
  }
  if (width == 0 || height == 0) {
    throw Error(ErrorCode::kEmptyImage, path.string() + " page " + std::to_string(index));
  }
  return {index, static_cast<int>(width), static_cast<int>(height)};
}

}  // namespace

bool LooksLikePng(const std::filesystem::path& path) {
  static constexpr std::array<unsigned char, 8> kMagic{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return HasMagic(path, kMagic);
}

bool LooksLikeTiff(const std::filesystem::path& path) {
  static constexpr std::array<unsigned char, 4> kLittle{'I', 'I', 42, 0};
  static constexpr std::array<unsigned char, 4> kBig{'M', 'M', 0, 42};
  static constexpr std::array<unsigned char, 4> kBigLittle{'I', 'I', 43, 0};
  static constexpr std::array<unsigned char, 4> kBigBig{'M', 'M', 0, 43};
  return HasMagic(path, kLittle) || HasMagic(path, kBig) || HasMagic(path, kBigLittle) ||
         HasMagic(path, kBigBig);
}

RgbImage ReadPng(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&img, path.c_str()) == 0) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::kCorruptImage, path.string() + ": " + msg);
  }
  const bool linear = (img.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  if (linear || !color) {
    png_image_free(&img);
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + " is not 8-bit RGB(A)");
  }
  if (img.width == 0 || img.height == 0) {
    png_image_free(&img);
    throw Error(ErrorCode::kEmptyImage, path.string());
  }
  img.format = PNG_FORMAT_RGB;
  RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (png_image_finish_read(&img, nullptr, out.bytes().data(), 0, nullptr) == 0) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::kCorruptImage, path.string() + ": " + msg);
  }
  return out;
}

GrayImage ReadGrayPng(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&img, path.c_str()) == 0) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::kCorruptImage, path.string() + ": " + msg);
  }
  if ((img.format & PNG_FORMAT_FLAG_LINEAR) != 0) {
    png_image_free(&img);
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + " is not 8-bit");
  }
  if (img.width == 0 || img.height == 0) {
    png_image_free(&img);
    throw Error(ErrorCode::kEmptyImage, path.string());
  }
  img.format = PNG_FORMAT_GRAY;
  GrayImage out{static_cast<int>(img.width), static_cast<int>(img.height),
                std::vector<std::uint8_t>(static_cast<std::size_t>(img.width) * img.height)};
  if (png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr) == 0) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::kCorruptImage, path.string() + ": " + msg);
  }
  return out;
}

namespace {

void WritePngRaw(const std::filesystem::path& path, int width, int height, png_uint_32 format,
                 const void* data) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  if (png_image_write_to_file(&img, path.c_str(), 0, data, 0, nullptr) == 0) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::kIoError, "writing " + path.string() + ": " + msg);
  }
}

}  // namespace

void WritePng(const std::filesystem::path& path, const RgbImage& image) {
  WritePngRaw(path, image.width(), image.height(), PNG_FORMAT_RGB, image.bytes().data());
}

void WritePng(const std::filesystem::path& path, const GrayImage& image) {
  WritePngRaw(path, image.width, image.height, PNG_FORMAT_GRAY, image.data.data());
}

std::vector<TiffPageInfo> ProbeTiff(const std::filesystem::path& path) {
  TiffHandle tif = OpenTiff(path, "r");
  std::vector<TiffPageInfo> pages;
  int index = 0;
  do {
    pages.push_back(CheckPage(tif.get(), index, path));
    ++index;
  } while (TIFFReadDirectory(tif.get()) != 0);
  return pages;
}

RgbImage ReadTiffPage(const std::filesystem::path& path, int page_index) {
  TiffHandle tif = OpenTiff(path, "r");
  if (TIFFSetDirectory(tif.get(), static_cast<tdir_t>(page_index)) == 0) {
    throw Error(ErrorCode::kOutOfBounds, path.string() + " has no page " + std::to_string(page_index));
  }
  const TiffPageInfo info = CheckPage(tif.get(), page_index, path);
  RgbImage out(info.width, info.height);

  if (TIFFIsTiled(tif.get()) != 0) {
    std::uint32_t tw = 0;
    std::uint32_t th = 0;
    TIFFGetField(tif.get(), TIFFTAG_TILEWIDTH, &tw);
    TIFFGetField(tif.get(), TIFFTAG_TILELENGTH, &th);
    if (tw == 0 || th == 0) {
      throw Error(ErrorCode::kCorruptImage, path.string() + ": zero tile size");
    }
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(TIFFTileSize(tif.get())));
    for (std::uint32_t ty = 0; ty < static_cast<std::uint32_t>(info.height); ty += th) {
      for (std::uint32_t tx = 0; tx < static_cast<std::uint32_t>(info.width); tx += tw) {
        if (TIFFReadTile(tif.get(), buf.data(), tx, ty, 0, 0) < 0) {
          throw Error(ErrorCode::kCorruptImage, path.string() + ": tile decode failed");
        }
        const std::uint32_t copy_w = std::min(tw, static_cast<std::uint32_t>(info.width) - tx);
        const std::uint32_t copy_h = std::min(th, static_cast<std::uint32_t>(info.height) - ty);
        for (std::uint32_t r = 0; r < copy_h; ++r) {
          std::memcpy(out.row(static_cast<int>(ty + r)).data() + 3 * tx, buf.data() + 3 * r * tw,
                      3 * copy_w);
        }
      }
    }
  } else {
    for (int y = 0; y < info.height; ++y) {
      if (TIFFReadScanline(tif.get(), out.row(y).data(), static_cast<std::uint32_t>(y), 0) < 0) {
        throw Error(ErrorCode::kCorruptImage, path.string() + ": scanline decode failed");
      }
    }
  }
  return out;
}

void WriteTiff(const std::filesystem::path& path, std::span<const RgbImage> pages, int tile_size) {
  TiffHandle tif = OpenTiff(path, "w");
  for (const RgbImage& page : pages) {
    TIFF* t = tif.get();
    TIFFSetField(t, TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(page.width()));
    TIFFSetField(t, TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(page.height()));
    TIFFSetField(t, TIFFTAG_BITSPERSAMPLE, 8);
    TIFFSetField(t, TIFFTAG_SAMPLESPERPIXEL, 3);
    TIFFSetField(t, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_RGB);
    TIFFSetField(t, TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
    TIFFSetField(t, TIFFTAG_COMPRESSION, COMPRESSION_ADOBE_DEFLATE);
    bool ok = true;
    if (tile_size > 0) {
      const auto ts = static_cast<std::uint32_t>(tile_size);
      TIFFSetField(t, TIFFTAG_TILEWIDTH, ts);
      TIFFSetField(t, TIFFTAG_TILELENGTH, ts);
      std::vector<std::uint8_t> buf(static_cast<std::size_t>(ts) * ts * 3, 0);
      for (int ty = 0; ty < page.height() && ok; ty += tile_size) {
        for (int tx = 0; tx < page.width() && ok; tx += tile_size) {
          std::fill(buf.begin(), buf.end(), 0);
          const int w = std::min(tile_size, page.width() - tx);
          const int h = std::min(tile_size, page.height() - ty);
          for (int r = 0; r < h; ++r) {
            std::memcpy(buf.data() + static_cast<std::size_t>(3 * r) * ts,
                        page.row(ty + r).data() + 3 * tx, static_cast<std::size_t>(3 * w));
          }
          ok = TIFFWriteTile(t, buf.data(), static_cast<std::uint32_t>(tx),
                             static_cast<std::uint32_t>(ty), 0, 0) >= 0;
        }
      }
    } else {
      TIFFSetField(t, TIFFTAG_ROWSPERSTRIP, TIFFDefaultStripSize(t, 0));
      std::vector<std::uint8_t> line;
      for (int y = 0; y < page.height() && ok; ++y) {
        auto row = page.row(y);
        line.assign(row.begin(), row.end());
        ok = TIFFWriteScanline(t, line.data(), static_cast<std::uint32_t>(y), 0) >= 0;
      }
    }
    if (!ok || TIFFWriteDirectory(t) == 0) {
      throw Error(ErrorCode::kIoError, "writing TIFF " + path.string());
    }
  }
}

}  // namespace tumorloc

// Copyright 2026 The emprobe Authors.
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

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include <jpeglib.h>
#include <png.h>

#include "emprobe/error.hpp"
#include "emprobe/image.hpp"

namespace emprobe {

std::size_t Mask::count() const {
  std::size_t n = 0;
  for (auto b : bits) n += b != 0;
  return n;
}

PixelBox bounds(const Mask& mask) {
  PixelBox box{mask.width, mask.height, -1, -1};
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.get(x, y)) continue;
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x);
      box.y1 = std::max(box.y1, y);
    }
  }
  if (box.x1 < 0) return PixelBox{};
  return box;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::kIo, "cannot open image '" + path + "'");
  return f;
}

bool has_png_signature(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

RgbImage read_png_rgb(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorCode::kIo, "unreadable PNG '" + path + "': " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  RgbImage out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::kIo, "unreadable PNG '" + path + "': " + image.message);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

RgbImage read_jpeg_rgb(const std::string& path) {
  FilePtr file = open_file(path, "rb");
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  // Nothing with a non-trivial destructor may be live across setjmp.
  RgbImage* result = new RgbImage();
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    delete result;
    throw Error(ErrorCode::kIo, "unreadable JPEG '" + path + "': " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  *result = RgbImage(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height));
  const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = result->pixels.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  RgbImage out = std::move(*result);
  delete result;
  return out;
}

void write_png_raw(const std::string& path, int width, int height, png_uint_32 format,
                   const std::uint8_t* data) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
    throw Error(ErrorCode::kIo, "cannot write PNG '" + path + "': " + image.message);
  }
}

template <class Image>
Image resize_impl(const Image& src, int width, int height, std::size_t channels,
                  const std::vector<std::uint8_t>& in, Image out,
                  std::vector<std::uint8_t> Image::*field) {
  if (src.width <= 0 || src.height <= 0 || width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "resize of empty image");
  }
  auto& dst = out.*field;
  for (int y = 0; y < height; ++y) {
    const std::size_t sy = static_cast<std::size_t>(y) * src.height / height;
    for (int x = 0; x < width; ++x) {
      const std::size_t sx = static_cast<std::size_t>(x) * src.width / width;
      const std::size_t s = (sy * src.width + sx) * channels;
      const std::size_t d = (static_cast<std::size_t>(y) * width + x) * channels;
      for (std::size_t c = 0; c < channels; ++c) dst[d + c] = in[s + c];
    }
  }
  return out;
}

}  // namespace

RgbImage read_rgb(const std::string& path) {
  { open_file(path, "rb"); }
  return has_png_signature(path) ? read_png_rgb(path) : read_jpeg_rgb(path);
}

IndexImage read_index_png(const std::string& path) {
  FilePtr file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "libpng init failed");
  }
  IndexImage* out = new IndexImage();
  std::vector<png_bytep>* rows = new std::vector<png_bytep>();
  bool rgb_mask = false;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    delete out;
    delete rows;
    throw Error(ErrorCode::kIo, "unreadable mask PNG '" + path + "'");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE || color_type == PNG_COLOR_TYPE_GRAY) {
    if (bit_depth < 8) png_set_packing(png);
    if (bit_depth == 16) png_set_strip_16(png);
  } else {
    rgb_mask = true;
  }
  if (!rgb_mask) {
    png_read_update_info(png, info);
    out->width = static_cast<int>(png_get_image_width(png, info));
    out->height = static_cast<int>(png_get_image_height(png, info));
    out->index.assign(static_cast<std::size_t>(out->width) * out->height, 0);
    rows->resize(out->height);
    for (int y = 0; y < out->height; ++y) {
      (*rows)[y] = out->index.data() + static_cast<std::size_t>(y) * out->width;
    }
    png_read_image(png, rows->data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  delete rows;
  IndexImage result = std::move(*out);
  delete out;
  if (rgb_mask) {
    throw Error(ErrorCode::kUnsupported,
                "mask '" + path + "' must be a palette or grayscale index PNG");
  }
  return result;
}

void write_png(const std::string& path, const RgbImage& image) {
  write_png_raw(path, image.width, image.height, PNG_FORMAT_RGB, image.pixels.data());
}

void write_png(const std::string& path, const GrayImage& image) {
  write_png_raw(path, image.width, image.height, PNG_FORMAT_GRAY, image.pixels.data());
}

void write_png(const std::string& path, const Mask& mask) {
  GrayImage g(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) g.pixels[i] = mask.bits[i] ? 255 : 0;
  write_png(path, g);
}

RgbImage resize_nearest(const RgbImage& src, int width, int height) {
  return resize_impl(src, width, height, 3, src.pixels, RgbImage(width, height),
                     &RgbImage::pixels);
}

GrayImage resize_nearest(const GrayImage& src, int width, int height) {
  return resize_impl(src, width, height, 1, src.pixels, GrayImage(width, height),
                     &GrayImage::pixels);
}

Mask resize_nearest(const Mask& src, int width, int height) {
  return resize_impl(src, width, height, 1, src.bits, Mask(width, height), &Mask::bits);
}

}  // namespace emprobe

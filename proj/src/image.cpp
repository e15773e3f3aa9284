/* Copyright 2026 The Retina Report Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "retina/image.hpp"

#include <array>
#include <cmath>
#include <cstring>

#include <zlib.h>

#include "retina/checkpoint.hpp"
#include "retina/error.hpp"

namespace retina {

std::string to_string(Modality m) { return m == Modality::FA ? "FA" : "CFP"; }

Modality parse_modality(std::string_view text) {
  if (text == "FA" || text == "fa") return Modality::FA;
  if (text == "CFP" || text == "cfp") return Modality::CFP;
  throw DataError("unknown modality '" + std::string(text) + "' (expected FA or CFP)");
}

RetinalImage::RetinalImage(int w, int h, int c)
    : width(w), height(h), channels(c), modality(c == 1 ? Modality::FA : Modality::CFP),
      pixels(static_cast<std::size_t>(w) * h * c, 0) {
  validate();
}

void RetinalImage::validate() const {
  if (width <= 0 || height <= 0) throw DataError("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw DataError("image must have 1 or 3 channels");
  if (pixels.size() != static_cast<std::size_t>(width) * height * channels) {
    throw DataError("image buffer holds " + std::to_string(pixels.size()) + " bytes, expected " +
                    std::to_string(static_cast<std::size_t>(width) * height * channels));
  }
  if ((modality == Modality::FA) != (channels == 1)) {
    throw DataError("modality " + to_string(modality) + " is inconsistent with " + std::to_string(channels) +
                    " channels");
  }
}

namespace {

// ---- PNM ----------------------------------------------------------------

class PnmReader {
 public:
  explicit PnmReader(std::string_view bytes) : bytes_(bytes) {}

  int read_int() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) throw DataError("PNM header value too large at offset " + std::to_string(start));
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ >= bytes_.size()) throw DataError("truncated PNM header at offset " + std::to_string(pos_));
      throw DataError("malformed PNM header at offset " + std::to_string(pos_));
    }
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size()) throw DataError("truncated PNM header at offset " + std::to_string(pos_));
    if (!std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw DataError("malformed PNM header at offset " + std::to_string(pos_));
    }
    return pos_ + 1;
  }

  void seek(std::size_t p) { pos_ = p; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char ch = bytes_[pos_];
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

RetinalImage decode_pnm(std::string_view bytes) {
  const int channels = bytes[1] == '5' ? 1 : 3;
  PnmReader reader(bytes);
  reader.seek(2);
  const int w = reader.read_int();
  const int h = reader.read_int();
  const int maxval = reader.read_int();
  if (w <= 0 || h <= 0) throw DataError("PNM image has zero extent");
  if (maxval != 255) throw DataError("unsupported PNM maxval " + std::to_string(maxval) + " (only 8-bit)");
  const std::size_t start = reader.raster_start();
  const std::size_t need = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() < start + need) {
    throw DataError("truncated PNM raster: need " + std::to_string(need) + " bytes at offset " + std::to_string(start) +
                    ", file has " + std::to_string(bytes.size()));
  }
  RetinalImage img(w, h, channels);
  std::memcpy(img.pixels.data(), bytes.data() + start, need);
  return img;
}

// ---- PNG ----------------------------------------------------------------

constexpr std::array<unsigned char, 8> kPngSignature = {137, 80, 78, 71, 13, 10, 26, 10};

std::uint32_t be32(std::string_view b, std::size_t at) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3]));
}

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

std::string inflate_all(std::string_view data, std::size_t expected) {
  std::string out(expected, '\0');
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw Error("zlib inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) {
    throw DataError("PNG image data is corrupt or truncated (decompressed " + std::to_string(produced) + " of " +
                    std::to_string(expected) + " bytes)");
  }
  return out;
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

RetinalImage decode_png(std::string_view bytes) {
  std::size_t pos = 8;
  int w = 0, h = 0, channels = 0;
  bool have_header = false;
  std::string idat;
  bool ended = false;
  while (!ended) {
    if (pos + 8 > bytes.size()) throw DataError("truncated PNG chunk header at offset " + std::to_string(pos));
    const std::uint32_t len = be32(bytes, pos);
    const std::string_view type = bytes.substr(pos + 4, 4);
    if (pos + 12 + static_cast<std::size_t>(len) > bytes.size()) {
      throw DataError("truncated PNG chunk '" + std::string(type) + "' at offset " + std::to_string(pos));
    }
    const std::string_view body = bytes.substr(pos + 8, len);
    const std::uint32_t crc = be32(bytes, pos + 8 + len);
    const auto actual = static_cast<std::uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(bytes.data() + pos + 4), static_cast<uInt>(len + 4)));
    if (crc != actual) throw DataError("PNG chunk '" + std::string(type) + "' at offset " + std::to_string(pos) + " fails CRC");
    if (type == "IHDR") {
      if (len != 13) throw DataError("PNG IHDR has wrong length");
      w = static_cast<int>(be32(body, 0));
      h = static_cast<int>(be32(body, 4));
      const int depth = static_cast<unsigned char>(body[8]);
      const int color = static_cast<unsigned char>(body[9]);
      const int interlace = static_cast<unsigned char>(body[12]);
      if (depth != 8) throw DataError("unsupported PNG bit depth " + std::to_string(depth) + " (only 8)");
      if (color == 0) {
        channels = 1;
      } else if (color == 2) {
        channels = 3;
      } else {
        throw DataError("unsupported PNG color type " + std::to_string(color) + " (only gray or RGB)");
      }
      if (interlace != 0) throw DataError("interlaced PNG is not supported");
      if (w <= 0 || h <= 0 || w > 1 << 16 || h > 1 << 16) throw DataError("PNG has invalid dimensions");
      have_header = true;
    } else if (type == "IDAT") {
      idat.append(body);
    } else if (type == "IEND") {
      ended = true;
    }
    pos += 12 + len;
  }
  if (!have_header) throw DataError("PNG has no IHDR chunk");
  const std::size_t stride = static_cast<std::size_t>(w) * channels;
  const std::string raw = inflate_all(idat, (stride + 1) * h);
  RetinalImage img(w, h, channels);
  const int bpp = channels;
  for (int y = 0; y < h; ++y) {
    const auto* src = reinterpret_cast<const unsigned char*>(raw.data()) + y * (stride + 1);
    const int filter = src[0];
    ++src;
    std::uint8_t* dst = img.pixels.data() + y * stride;
    const std::uint8_t* prev = y > 0 ? dst - stride : nullptr;
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= static_cast<std::size_t>(bpp) ? dst[i - bpp] : 0;
      const int b = prev ? prev[i] : 0;
      const int c = (prev && i >= static_cast<std::size_t>(bpp)) ? prev[i - bpp] : 0;
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw DataError("PNG row " + std::to_string(y) + " uses unknown filter " + std::to_string(filter));
      }
      dst[i] = static_cast<std::uint8_t>(v & 0xff);
    }
  }
  return img;
}

void append_chunk(std::string& out, const char* type, std::string_view body) {
  put_be32(out, static_cast<std::uint32_t>(body.size()));
  const std::size_t crc_from = out.size();
  out.append(type, 4);
  out.append(body);
  const auto crc = crc32(0, reinterpret_cast<const Bytef*>(out.data() + crc_from), static_cast<uInt>(body.size() + 4));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

RetinalImage decode_image(std::string_view bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) return decode_pnm(bytes);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature.data(), 8) == 0) return decode_png(bytes);
  if (bytes.size() < 2) throw DataError("truncated image header at offset " + std::to_string(bytes.size()));
  throw DataError("unsupported image format (expected binary PGM, PPM or PNG)");
}

RetinalImage load_image(const std::filesystem::path& path) {
  try {
    return decode_image(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string encode_pnm(const RetinalImage& image) {
  image.validate();
  std::string out = (image.channels == 1 ? "P5\n" : "P6\n") + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

std::string encode_png(const RetinalImage& image) {
  image.validate();
  std::string out(reinterpret_cast<const char*>(kPngSignature.data()), kPngSignature.size());
  std::string ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(image.width));
  put_be32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.push_back(8);
  ihdr.push_back(image.channels == 1 ? 0 : 2);
  ihdr.append(3, '\0');
  append_chunk(out, "IHDR", ihdr);

  const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
  std::string raw;
  raw.reserve((stride + 1) * image.height);
  for (int y = 0; y < image.height; ++y) {
    raw.push_back('\0');
    raw.append(reinterpret_cast<const char*>(image.pixels.data() + y * stride), stride);
  }
  uLongf packed_len = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(packed_len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_len, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw Error("zlib compression failed");
  }
  packed.resize(packed_len);
  append_chunk(out, "IDAT", packed);
  append_chunk(out, "IEND", {});
  return out;
}

void save_image(const std::filesystem::path& path, const RetinalImage& image) {
  const auto ext = path.extension().string();
  if (ext == ".png") {
    write_file_atomic(path, encode_png(image));
  } else if (ext == ".pgm" || ext == ".ppm") {
    if ((ext == ".pgm") != (image.channels == 1)) throw DataError(path.string() + ": extension does not match channel count");
    write_file_atomic(path, encode_pnm(image));
  } else {
    throw DataError(path.string() + ": unsupported image extension");
  }
}

RetinalImage to_grayscale(const RetinalImage& image) {
  if (image.channels == 1) return image;
  RetinalImage out(image.width, image.height, 1);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double v = 0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) + 0.114 * image.at(x, y, 2);
      out.at(x, y, 0) = static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return out;
}

}  // namespace retina

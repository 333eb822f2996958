#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <zlib.h>

#include "ivz/core/error.hpp"
#include "ivz/eval/protocol.hpp"

namespace ivz::io {

/// 8-bit indexed image over the fixed palette below.
struct IndexedImage {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
};

// 6x6x6 colour cube followed by 40 greys.
inline const std::array<std::array<std::uint8_t, 3>, 256>& palette() {
  static const auto table = [] {
    std::array<std::array<std::uint8_t, 3>, 256> p{};
    for (int i = 0; i < 216; ++i)
      p[i] = {static_cast<std::uint8_t>(51 * (i / 36)), static_cast<std::uint8_t>(51 * ((i / 6) % 6)),
              static_cast<std::uint8_t>(51 * (i % 6))};
    for (int i = 216; i < 256; ++i) {
      const auto g = static_cast<std::uint8_t>((i - 216) * 255 / 39);
      p[i] = {g, g, g};
    }
    return p;
  }();
  return table;
}

inline std::uint8_t cube(int r, int g, int b) { return static_cast<std::uint8_t>(36 * r + 6 * g + b); }

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline constexpr std::size_t kFrameWidth = 96, kFrameHeight = 64, kGifFrames = 6;

/// One frame of a shot: a seeded two-tone background and one 5x5 mirrored glyph per tag, coloured
/// by the tag name. `frame` slides the glyph row and the background stripe for the animation.
inline IndexedImage render_shot_frame(std::uint64_t thumbnail_seed, std::size_t shot, const eval::TagSet& tags,
                                      std::size_t frame = 0) {
  IndexedImage img{kFrameWidth, kFrameHeight, std::vector<std::uint8_t>(kFrameWidth * kFrameHeight)};
  const std::uint64_t h = mix64(thumbnail_seed ^ mix64(shot));
  const std::uint8_t bg1 = cube(static_cast<int>(h % 3), static_cast<int>((h >> 8) % 3), static_cast<int>((h >> 16) % 3) + 1);
  const std::uint8_t bg2 = static_cast<std::uint8_t>(216 + (h >> 24) % 12);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) img.at(x, y) = ((x + 4 * frame + y / 2) / 12) % 2 ? bg1 : bg2;

  const std::size_t cell = 3, glyph = 5 * cell, gap = 4;
  std::size_t gx = 4 + (frame * 3) % 12;
  const std::size_t gy = (img.height - glyph) / 2;
  for (const auto& tag : tags) {
    if (gx + glyph > img.width) break;
    const std::uint64_t t = mix64(fnv1a(tag));
    const std::uint8_t fg = cube(2 + static_cast<int>(t % 4), 2 + static_cast<int>((t >> 4) % 4), 2 + static_cast<int>((t >> 8) % 4));
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t c = 0; c < 3; ++c) {
        if (!((t >> (12 + r * 3 + c)) & 1u)) continue;
        for (std::size_t dy = 0; dy < cell; ++dy)
          for (std::size_t dx = 0; dx < cell; ++dx) {
            img.at(gx + c * cell + dx, gy + r * cell + dy) = fg;
            img.at(gx + (4 - c) * cell + dx, gy + r * cell + dy) = fg;
          }
      }
    gx += glyph + gap;
  }
  // Shot index tick marks along the bottom edge.
  for (std::size_t b = 0; b < 12 && (b + 1) * 8 <= img.width; ++b)
    if ((shot >> b) & 1u)
      for (std::size_t x = b * 8 + 1; x < b * 8 + 7; ++x) img.at(x, img.height - 3) = 255;
  return img;
}

namespace detail {

inline void put_be32(std::string& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>((v >> s) & 0xffu));
}

inline void png_chunk(std::string& out, const char* type, const std::string& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  put_be32(out, static_cast<std::uint32_t>(
                    crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

inline void put_le16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xffu));
  out.push_back(static_cast<char>(v >> 8));
}

// Variable-width LZW packed LSB-first into 255-byte sub-blocks.
inline std::string gif_lzw(const std::vector<std::uint8_t>& pixels) {
  constexpr int kMinCode = 8;
  constexpr std::uint32_t kClear = 1u << kMinCode, kEnd = kClear + 1;
  std::string packed;
  std::uint32_t acc = 0;
  int bits = 0, width = kMinCode + 1;
  auto emit = [&](std::uint32_t code) {
    acc |= code << bits;
    bits += width;
    while (bits >= 8) {
      packed.push_back(static_cast<char>(acc & 0xffu));
      acc >>= 8;
      bits -= 8;
    }
  };
  std::vector<std::int32_t> table(4096 * 256, -1);  // (prefix code, byte) -> code
  std::uint32_t max_code = kEnd;
  emit(kClear);
  std::uint32_t prefix = pixels.empty() ? 0 : pixels[0];
  for (std::size_t i = 1; i < pixels.size(); ++i) {
    const std::uint8_t c = pixels[i];
    const std::int32_t found = table[prefix * 256 + c];
    if (found >= 0) {
      prefix = static_cast<std::uint32_t>(found);
      continue;
    }
    emit(prefix);
    table[prefix * 256 + c] = static_cast<std::int32_t>(++max_code);
    if (max_code >= (1u << width)) ++width;
    if (max_code == 4095) {
      emit(kClear);
      std::fill(table.begin(), table.end(), -1);
      max_code = kEnd;
      width = kMinCode + 1;
    }
    prefix = c;
  }
  if (!pixels.empty()) emit(prefix);
  emit(kEnd);
  if (bits > 0) packed.push_back(static_cast<char>(acc & 0xffu));

  std::string out(1, static_cast<char>(kMinCode));
  for (std::size_t i = 0; i < packed.size(); i += 255) {
    const std::size_t n = std::min<std::size_t>(255, packed.size() - i);
    out.push_back(static_cast<char>(n));
    out.append(packed, i, n);
  }
  out.push_back('\0');
  return out;
}

}  // namespace detail

inline std::string encode_png(const IndexedImage& img) {
  std::string raw;
  raw.reserve(img.height * (1 + 3 * img.width));
  for (std::size_t y = 0; y < img.height; ++y) {
    raw.push_back('\0');  // filter: none
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::uint8_t c : palette()[img.pixels[y * img.width + x]]) raw.push_back(static_cast<char>(c));
  }
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::string z(len, '\0');
  require(compress2(reinterpret_cast<Bytef*>(z.data()), &len, reinterpret_cast<const Bytef*>(raw.data()),
                    static_cast<uLong>(raw.size()), 9) == Z_OK,
          ErrorCode::Io, "zlib compression failed");
  z.resize(len);

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB
  detail::png_chunk(out, "IHDR", ihdr);
  detail::png_chunk(out, "IDAT", z);
  detail::png_chunk(out, "IEND", "");
  return out;
}

/// Looping GIF89a, `delay_cs` hundredths of a second per frame.
inline std::string encode_gif(const std::vector<IndexedImage>& frames, std::uint16_t delay_cs = 20) {
  require(!frames.empty(), ErrorCode::Input, "gif needs at least one frame");
  const auto w = static_cast<std::uint16_t>(frames[0].width), h = static_cast<std::uint16_t>(frames[0].height);
  std::string out = "GIF89a";
  detail::put_le16(out, w);
  detail::put_le16(out, h);
  out += std::string("\xF7\x00\x00", 3);  // global table, 256 entries
  for (const auto& c : palette())
    for (std::uint8_t v : c) out.push_back(static_cast<char>(v));
  out += std::string("\x21\xFF\x0BNETSCAPE2.0\x03\x01\x00\x00\x00", 19);
  for (const auto& f : frames) {
    require(f.width == w && f.height == h, ErrorCode::Dimension, "gif frames differ in size");
    out += std::string("\x21\xF9\x04\x04", 4);
    detail::put_le16(out, delay_cs);
    out += std::string("\x00\x00", 2);
    out.push_back('\x2C');
    detail::put_le16(out, 0);
    detail::put_le16(out, 0);
    detail::put_le16(out, w);
    detail::put_le16(out, h);
    out.push_back('\0');
    out += detail::gif_lzw(f.pixels);
  }
  out.push_back('\x3B');
  return out;
}

inline std::string shot_png(std::uint64_t seed, std::size_t shot, const eval::TagSet& tags) {
  return encode_png(render_shot_frame(seed, shot, tags, 0));
}

inline std::string shot_gif(std::uint64_t seed, std::size_t shot, const eval::TagSet& tags) {
  std::vector<IndexedImage> frames;
  for (std::size_t f = 0; f < kGifFrames; ++f) frames.push_back(render_shot_frame(seed, shot, tags, f));
  return encode_gif(frames);
}

}  // namespace ivz::io

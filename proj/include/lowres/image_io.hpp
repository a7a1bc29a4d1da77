#pragma once

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lowres/depth_frame.hpp"

namespace lowres {

// ---- 16-bit binary PGM (P5, maxval 65535, big-endian samples) ----

inline void write_pgm16(const std::filesystem::path& path,
                        const DepthFrame& frame) {
  require(!frame.raw.empty(), "bad-frame", "write_pgm16: frame must be raw");
  std::ofstream f(path, std::ios::binary);
  require(bool(f), "io-error", "cannot open " + path.string() + " for write");
  f << "P5\n" << frame.width << " " << frame.height << "\n65535\n";
  std::vector<unsigned char> row(size_t(frame.width) * 2);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const uint16_t v = frame.raw[size_t(y) * frame.width + x];
      row[size_t(x) * 2] = (unsigned char)(v >> 8);
      row[size_t(x) * 2 + 1] = (unsigned char)(v & 0xff);
    }
    f.write(reinterpret_cast<const char*>(row.data()),
            std::streamsize(row.size()));
  }
  require(bool(f), "io-error", "short write to " + path.string());
}

namespace detail {

inline int pgm_next_token(std::istream& in, std::string& tok) {
  tok.clear();
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!isspace(c)) break;
  }
  if (c == EOF) return -1;
  while (c != EOF && !isspace(c)) {
    tok.push_back(char(c));
    c = in.get();
  }
  return 0;
}

}  // namespace detail

struct FrameHeader {
  int width = 0;
  int height = 0;
};

inline FrameHeader read_pgm16_header(std::istream& in,
                                     const std::string& name) {
  std::string tok;
  require(detail::pgm_next_token(in, tok) == 0 && tok == "P5", "bad-pgm",
          name + ": not a binary PGM");
  FrameHeader h;
  require(detail::pgm_next_token(in, tok) == 0, "bad-pgm", name + ": no width");
  h.width = std::stoi(tok);
  require(detail::pgm_next_token(in, tok) == 0, "bad-pgm", name + ": no height");
  h.height = std::stoi(tok);
  require(detail::pgm_next_token(in, tok) == 0, "bad-pgm", name + ": no maxval");
  require(std::stoi(tok) == 65535, "bad-pgm",
          name + ": expected 16-bit maxval 65535, got " + tok);
  require(h.width > 0 && h.height > 0, "bad-pgm", name + ": bad dims");
  return h;
}

inline DepthFrame read_pgm16(const std::filesystem::path& path,
                             DepthRange range = {},
                             Provenance prov = Provenance::Synthetic) {
  std::ifstream f(path, std::ios::binary);
  require(bool(f), "io-error", "cannot open " + path.string());
  const FrameHeader h = read_pgm16_header(f, path.string());
  std::vector<uint16_t> data(size_t(h.width) * h.height);
  std::vector<unsigned char> bytes(data.size() * 2);
  f.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
  require(size_t(f.gcount()) == bytes.size(), "bad-pgm",
          path.string() + ": truncated pixel data");
  for (size_t i = 0; i < data.size(); ++i)
    data[i] = uint16_t(bytes[i * 2] << 8 | bytes[i * 2 + 1]);
  return make_raw_frame(h.width, h.height, std::move(data), range, prov);
}

// ---- 16-bit grayscale PNG via libpng ----

inline void write_png16(const std::filesystem::path& path,
                        const DepthFrame& frame) {
  require(!frame.raw.empty(), "bad-frame", "write_png16: frame must be raw");
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  require(fp != nullptr, "io-error", "cannot open " + path.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail("io-error", "libpng failure writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(frame.width), png_uint_32(frame.height),
               16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(size_t(frame.width) * 2);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const uint16_t v = frame.raw[size_t(y) * frame.width + x];
      row[size_t(x) * 2] = (unsigned char)(v >> 8);
      row[size_t(x) * 2 + 1] = (unsigned char)(v & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

inline DepthFrame read_png16(const std::filesystem::path& path,
                             DepthRange range = {},
                             Provenance prov = Provenance::Synthetic) {
  FILE* fp = std::fopen(path.string().c_str(), "rb");
  require(fp != nullptr, "io-error", "cannot open " + path.string());
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail("bad-png", "libpng failure reading " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const int width = int(png_get_image_width(png, info));
  const int height = int(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth != 16 || color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail("bad-png", path.string() + ": expected 16-bit grayscale");
  }
  std::vector<uint16_t> data(size_t(width) * height);
  std::vector<unsigned char> row(size_t(width) * 2);
  for (int y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < width; ++x)
      data[size_t(y) * width + x] =
          uint16_t(row[size_t(x) * 2] << 8 | row[size_t(x) * 2 + 1]);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return make_raw_frame(width, height, std::move(data), range, prov);
}

// ---- extension dispatch ----

inline bool has_extension(const std::filesystem::path& path,
                          const char* ext) {
  auto e = path.extension().string();
  for (auto& c : e) c = char(tolower(c));
  return e == ext;
}

inline DepthFrame read_frame(const std::filesystem::path& path,
                             DepthRange range = {},
                             Provenance prov = Provenance::Synthetic) {
  if (has_extension(path, ".pgm")) return read_pgm16(path, range, prov);
  if (has_extension(path, ".png")) return read_png16(path, range, prov);
  fail("bad-frame", "unsupported frame format: " + path.string());
}

inline void write_frame(const std::filesystem::path& path,
                        const DepthFrame& frame) {
  if (has_extension(path, ".pgm")) return write_pgm16(path, frame);
  if (has_extension(path, ".png")) return write_png16(path, frame);
  fail("bad-frame", "unsupported frame format: " + path.string());
}

// Dimensions only, without decoding pixels (manifest validation).
inline FrameHeader read_frame_header(const std::filesystem::path& path) {
  if (has_extension(path, ".pgm")) {
    std::ifstream f(path, std::ios::binary);
    require(bool(f), "io-error", "cannot open " + path.string());
    return read_pgm16_header(f, path.string());
  }
  if (has_extension(path, ".png")) {
    // PNG header decode is cheap enough to do via libpng
    auto frame = read_png16(path);
    return {frame.width, frame.height};
  }
  fail("bad-frame", "unsupported frame format: " + path.string());
}

}  // namespace lowres

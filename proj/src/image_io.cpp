#include "relumo/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "relumo/color.hpp"
#include "relumo/error.hpp"

namespace relumo {

namespace {

constexpr std::array<std::uint8_t, 8> kPngMagic = {0x89, 'P', 'N', 'G',
                                                   '\r', '\n', 0x1a, '\n'};

double to_single(double v) { return static_cast<double>(static_cast<float>(v)); }

// ---------------------------------------------------------------------------
// PNG via libpng (classic API, memory buffers)

struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;  // after stripping alpha: 1 or 3
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;
};

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_callback(png_structp png, png_bytep out, png_size_t n) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + n > cursor->bytes.size())
    png_error(png, "truncated PNG stream");
  std::memcpy(out, cursor->bytes.data() + cursor->offset, n);
  cursor->offset += n;
}

void png_error_callback(png_structp png, png_const_charp msg) {
  auto* message = static_cast<std::string*>(png_get_error_ptr(png));
  if (message) *message = msg;
  png_longjmp(png, 1);
}

void png_warning_callback(png_structp, png_const_charp) {}

RawPng decode_png_samples(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || !std::equal(kPngMagic.begin(), kPngMagic.end(),
                                      bytes.begin()))
    throw IoError("not a PNG stream");
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message,
                                           png_error_callback,
                                           png_warning_callback);
  if (!png) throw IoError("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes, 0};
  RawPng raw;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG decode failed: " + message);
  }
  png_set_read_fn(png, &cursor, png_read_callback);
  png_read_info(png, info);
  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (width == 0 || height == 0 || width > (1u << 15) || height > (1u << 15)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG dimension overflow");
  }
  if (color_type != PNG_COLOR_TYPE_PALETTE && depth != 8 && depth != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported PNG bit depth " + std::to_string(depth));
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  raw.width = static_cast<int>(width);
  raw.height = static_cast<int>(height);
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (raw.channels != 1 && raw.channels != 3)
    throw IoError("unsupported PNG channel layout");
  const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height *
                        raw.channels;
  raw.samples.resize(n);
  if (raw.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i)
      raw.samples[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) |
                                                  buffer[2 * i + 1]);
  } else {
    for (std::size_t i = 0; i < n; ++i) raw.samples[i] = buffer[i];
  }
  return raw;
}

void png_write_callback(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void png_flush_callback(png_structp) {}

Bytes encode_png_samples(int width, int height, int channels, int bit_depth,
                         const std::vector<std::uint16_t>& samples) {
  Bytes out;
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message,
                                            png_error_callback,
                                            png_warning_callback);
  if (!png) throw IoError("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  const std::size_t rowbytes =
      static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  std::vector<std::uint8_t> buffer(rowbytes * height);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (bit_depth == 16) {
      buffer[2 * i] = static_cast<std::uint8_t>(samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<std::uint8_t>(samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<std::uint8_t>(samples[i]);
    }
  }
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed: " + message);
  }
  png_set_write_fn(png, &out, png_write_callback, png_flush_callback);
  png_set_IHDR(png, info, width, height, bit_depth,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_sRGB(png, info, PNG_sRGB_INTENT_PERCEPTUAL);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

// ---------------------------------------------------------------------------
// Header tokenising shared by PFM and HDR.

struct TextCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;

  std::string line() {
    std::string s;
    while (offset < bytes.size() && bytes[offset] != '\n')
      s.push_back(static_cast<char>(bytes[offset++]));
    if (offset >= bytes.size()) throw IoError("truncated header");
    ++offset;
    return s;
  }

  std::string token() {
    while (offset < bytes.size() && std::isspace(bytes[offset])) ++offset;
    std::string s;
    while (offset < bytes.size() && !std::isspace(bytes[offset]))
      s.push_back(static_cast<char>(bytes[offset++]));
    if (s.empty()) throw IoError("truncated header");
    return s;
  }
};

int parse_dimension(const std::string& s) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    throw IoError("malformed image dimension '" + s + "'");
  }
  if (used != s.size() || v <= 0 || v > (1 << 15))
    throw IoError("image dimension overflow or invalid: '" + s + "'");
  return static_cast<int>(v);
}

float read_float(const std::uint8_t* p, bool little_endian) {
  std::array<std::uint8_t, 4> b;
  std::memcpy(b.data(), p, 4);
  if (little_endian != (std::endian::native == std::endian::little))
    std::reverse(b.begin(), b.end());
  float v;
  std::memcpy(&v, b.data(), 4);
  return v;
}

void append_float_le(Bytes& out, float v) {
  std::array<std::uint8_t, 4> b;
  std::memcpy(b.data(), &v, 4);
  if (std::endian::native != std::endian::little)
    std::reverse(b.begin(), b.end());
  out.insert(out.end(), b.begin(), b.end());
}

void append_text(Bytes& out, const std::string& s) {
  out.insert(out.end(), s.begin(), s.end());
}

// Radiance RGBE <-> float, stb_image convention (no half-step offset).
std::array<double, 3> rgbe_to_rgb(const std::uint8_t* rgbe) {
  if (rgbe[3] == 0) return {0.0, 0.0, 0.0};
  const double f = std::ldexp(1.0, static_cast<int>(rgbe[3]) - 136);
  return {rgbe[0] * f, rgbe[1] * f, rgbe[2] * f};
}

std::array<std::uint8_t, 4> rgb_to_rgbe(double r, double g, double b) {
  const double m = std::max({r, g, b});
  if (m < 1e-32) return {0, 0, 0, 0};
  int e = 0;
  const double scale = std::frexp(m, &e) * 256.0 / m;
  return {static_cast<std::uint8_t>(std::clamp(r * scale, 0.0, 255.0)),
          static_cast<std::uint8_t>(std::clamp(g * scale, 0.0, 255.0)),
          static_cast<std::uint8_t>(std::clamp(b * scale, 0.0, 255.0)),
          static_cast<std::uint8_t>(e + 128)};
}

}  // namespace

ImageFormat sniff_format(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 &&
      std::equal(kPngMagic.begin(), kPngMagic.end(), bytes.begin()))
    return ImageFormat::PNG;
  if (bytes.size() >= 3 && bytes[0] == 'P' &&
      (bytes[1] == 'F' || bytes[1] == 'f') && std::isspace(bytes[2]))
    return ImageFormat::PFM;
  if (bytes.size() >= 2 && bytes[0] == '#' && bytes[1] == '?')
    return ImageFormat::HDR;
  throw IoError("unrecognised image container");
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read file '" + path.string() + "'");
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

Image decode_image(std::span<const std::uint8_t> bytes, ImageFormat format) {
  if (format == ImageFormat::Auto) format = sniff_format(bytes);
  switch (format) {
    case ImageFormat::PFM: return decode_pfm(bytes);
    case ImageFormat::HDR: return decode_hdr(bytes);
    case ImageFormat::PNG: break;
    case ImageFormat::Auto: break;
  }
  const RawPng raw = decode_png_samples(bytes);
  const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
  // One EOTF evaluation per code value.
  std::vector<double> lut(raw.bit_depth == 16 ? 65536 : 256);
  for (std::size_t k = 0; k < lut.size(); ++k)
    lut[k] = to_single(srgb_to_linear(static_cast<double>(k) / scale));
  Image out(raw.width, raw.height, 3, ColorSpace::LinearRGB);
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    auto px = out.pixel(p);
    for (int c = 0; c < 3; ++c) {
      const int src_c = raw.channels == 1 ? 0 : c;
      px[c] = lut[raw.samples[p * raw.channels + src_c]];
    }
  }
  return out;
}

Image load_image(const std::filesystem::path& path, ImageFormat format) {
  try {
    return decode_image(read_file(path), format);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Image decode_png_raw(std::span<const std::uint8_t> bytes) {
  const RawPng raw = decode_png_samples(bytes);
  const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
  Image out(raw.width, raw.height, raw.channels, ColorSpace::Scalar);
  for (std::size_t i = 0; i < raw.samples.size(); ++i)
    out.data()[i] = to_single(raw.samples[i] / scale);
  return out;
}

Image load_png_raw(const std::filesystem::path& path) {
  try {
    return decode_png_raw(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Mask decode_mask(std::span<const std::uint8_t> bytes) {
  const RawPng raw = decode_png_samples(bytes);
  const unsigned threshold = raw.bit_depth == 16 ? 128u * 257u : 128u;
  Mask out(raw.width, raw.height);
  for (std::size_t p = 0; p < out.pixel_count(); ++p)
    out.set(p, raw.samples[p * raw.channels] >= threshold);
  return out;
}

Mask load_mask(const std::filesystem::path& path) {
  try {
    return decode_mask(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Bytes encode_mask(const Mask& mask) {
  std::vector<std::uint16_t> samples(mask.pixel_count());
  for (std::size_t p = 0; p < samples.size(); ++p)
    samples[p] = mask[p] ? 255 : 0;
  return encode_png_samples(mask.width(), mask.height(), 1, 8, samples);
}

void save_mask(const Mask& mask, const std::filesystem::path& path) {
  write_file(path, encode_mask(mask));
}

Bytes encode_png(const Image& img, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16)
    throw Error("PNG bit depth must be 8 or 16");
  if (img.empty()) throw Error("cannot encode an empty image");
  if (img.channels() == 2) throw Error("PNG output needs 1 or 3 channels");
  const double scale = bit_depth == 16 ? 65535.0 : 255.0;
  const bool encode_srgb = img.space() == ColorSpace::LinearRGB;
  std::vector<std::uint16_t> samples(img.data().size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double v = std::clamp(img.data()[i], 0.0, 1.0);
    if (encode_srgb) v = std::clamp(linear_to_srgb(v), 0.0, 1.0);
    samples[i] = static_cast<std::uint16_t>(std::lround(v * scale));
  }
  return encode_png_samples(img.width(), img.height(), img.channels(),
                            bit_depth, samples);
}

void save_png(const Image& img, const std::filesystem::path& path,
              int bit_depth) {
  write_file(path, encode_png(img, bit_depth));
}

Bytes encode_pfm(const Image& img) {
  if (img.empty()) throw Error("cannot encode an empty image");
  if (img.channels() == 2) throw Error("PFM output needs 1 or 3 channels");
  Bytes out;
  append_text(out, img.channels() == 3 ? "PF\n" : "Pf\n");
  append_text(out, std::to_string(img.width()) + " " +
                       std::to_string(img.height()) + "\n-1.0\n");
  out.reserve(out.size() + img.data().size() * 4);
  for (int y = img.height() - 1; y >= 0; --y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c)
        append_float_le(out, static_cast<float>(img.at(x, y, c)));
  return out;
}

void save_pfm(const Image& img, const std::filesystem::path& path) {
  write_file(path, encode_pfm(img));
}

Image decode_pfm(std::span<const std::uint8_t> bytes) {
  TextCursor cursor{bytes};
  const std::string magic = cursor.token();
  int channels = 0;
  if (magic == "PF") channels = 3;
  else if (magic == "Pf") channels = 1;
  else throw IoError("not a PFM stream");
  const int width = parse_dimension(cursor.token());
  const int height = parse_dimension(cursor.token());
  const std::string scale_token = cursor.token();
  double scale = 0.0;
  try {
    scale = std::stod(scale_token);
  } catch (const std::exception&) {
    throw IoError("malformed PFM scale '" + scale_token + "'");
  }
  if (scale == 0.0) throw IoError("PFM scale must be non-zero");
  // Exactly one whitespace byte separates the header from the samples.
  ++cursor.offset;
  const bool little = scale < 0.0;
  const std::size_t needed =
      static_cast<std::size_t>(width) * height * channels * 4;
  if (bytes.size() < cursor.offset + needed)
    throw IoError("truncated PFM payload");
  // PFM payloads are linear radiance; colour images are tagged accordingly,
  // one-channel ones (depth, masks) stay Scalar.
  Image out(width, height, channels,
            channels == 3 ? ColorSpace::LinearRGB : ColorSpace::Scalar);
  const std::uint8_t* p = bytes.data() + cursor.offset;
  for (int y = height - 1; y >= 0; --y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c, p += 4)
        out.at(x, y, c) = read_float(p, little);
  return out;
}

Bytes encode_hdr(const Image& img) {
  if (img.channels() != 3) throw Error("Radiance HDR needs 3 channels");
  Bytes out;
  append_text(out, "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n");
  append_text(out, "-Y " + std::to_string(img.height()) + " +X " +
                       std::to_string(img.width()) + "\n");
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const auto rgbe = rgb_to_rgbe(img.at(x, y, 0), img.at(x, y, 1),
                                    img.at(x, y, 2));
      out.insert(out.end(), rgbe.begin(), rgbe.end());
    }
  return out;
}

void save_hdr(const Image& img, const std::filesystem::path& path) {
  write_file(path, encode_hdr(img));
}

Image decode_hdr(std::span<const std::uint8_t> bytes) {
  TextCursor cursor{bytes};
  const std::string magic = cursor.line();
  if (magic.rfind("#?", 0) != 0) throw IoError("not a Radiance HDR stream");
  for (;;) {
    const std::string line = cursor.line();
    if (line.empty()) break;
    if (line.rfind("FORMAT=", 0) == 0 && line != "FORMAT=32-bit_rle_rgbe")
      throw IoError("unsupported HDR pixel format: " + line);
  }
  std::istringstream res(cursor.line());
  std::string ylabel, xlabel, hs, ws;
  res >> ylabel >> hs >> xlabel >> ws;
  if (ylabel != "-Y" || xlabel != "+X")
    throw IoError("unsupported HDR orientation (need -Y H +X W)");
  const int height = parse_dimension(hs);
  const int width = parse_dimension(ws);
  Image out(width, height, 3, ColorSpace::LinearRGB);

  std::vector<std::uint8_t> scan(static_cast<std::size_t>(width) * 4);
  auto need = [&](std::size_t n) {
    if (cursor.offset + n > bytes.size()) throw IoError("truncated HDR payload");
  };
  for (int y = 0; y < height; ++y) {
    need(4);
    const std::uint8_t* p = bytes.data() + cursor.offset;
    const bool rle = width >= 8 && width < 32768 && p[0] == 2 && p[1] == 2 &&
                     ((p[2] << 8) | p[3]) == width && !(p[2] & 0x80);
    if (rle) {
      cursor.offset += 4;
      // Four planes (R, G, B, E), each run-length coded separately.
      for (int c = 0; c < 4; ++c) {
        int x = 0;
        while (x < width) {
          need(1);
          int count = bytes[cursor.offset++];
          if (count > 128) {
            count -= 128;
            need(1);
            const std::uint8_t value = bytes[cursor.offset++];
            if (x + count > width) throw IoError("corrupt HDR run");
            for (int k = 0; k < count; ++k) scan[(x++) * 4 + c] = value;
          } else {
            if (count == 0 || x + count > width)
              throw IoError("corrupt HDR literal run");
            need(static_cast<std::size_t>(count));
            for (int k = 0; k < count; ++k)
              scan[(x++) * 4 + c] = bytes[cursor.offset++];
          }
        }
      }
    } else {
      need(scan.size());
      std::memcpy(scan.data(), p, scan.size());
      cursor.offset += scan.size();
    }
    for (int x = 0; x < width; ++x) {
      const auto rgb = rgbe_to_rgb(&scan[static_cast<std::size_t>(x) * 4]);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = to_single(rgb[c]);
    }
  }
  return out;
}

void save_image(const Image& img, const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png") save_png(img, path, 16);
  else if (ext == ".pfm") save_pfm(img, path);
  else if (ext == ".hdr") save_hdr(img, path);
  else throw Error("unsupported output extension '" + ext + "'");
}

}  // namespace relumo

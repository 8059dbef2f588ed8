#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "relumo/image.hpp"

namespace relumo {

enum class ImageFormat { Auto, PNG, PFM, HDR };

using Bytes = std::vector<std::uint8_t>;

// Guesses the container from magic bytes; throws when unrecognised.
ImageFormat sniff_format(std::span<const std::uint8_t> bytes);

// Photographic load: PNG samples are sRGB-decoded to LinearRGB (gray PNGs
// are expanded to three channels, alpha is dropped); PFM and Radiance-HDR
// are already linear. Loaded values are rounded to single precision.
Image load_image(const std::filesystem::path& path,
                 ImageFormat format = ImageFormat::Auto);
Image decode_image(std::span<const std::uint8_t> bytes,
                   ImageFormat format = ImageFormat::Auto);

// PNG samples normalised to [0,1] without any transfer function; tagged
// Scalar. Used for shadow maps and other non-colour layers.
Image load_png_raw(const std::filesystem::path& path);
Image decode_png_raw(std::span<const std::uint8_t> bytes);

// Masks: 8-bit PNG, first channel thresholded at 128 (16-bit: 128*257).
Mask load_mask(const std::filesystem::path& path);
Mask decode_mask(std::span<const std::uint8_t> bytes);
Bytes encode_mask(const Mask& mask);
void save_mask(const Mask& mask, const std::filesystem::path& path);

// PNG writer. LinearRGB is sRGB-encoded, SRGB written as-is, Scalar written
// raw; values are clamped to [0,1] and rounded to the nearest code.
Bytes encode_png(const Image& img, int bit_depth = 16);
void save_png(const Image& img, const std::filesystem::path& path,
              int bit_depth = 16);

// PFM: little-endian (scale -1.0), rows stored bottom-to-top on disk.
Bytes encode_pfm(const Image& img);
void save_pfm(const Image& img, const std::filesystem::path& path);
Image decode_pfm(std::span<const std::uint8_t> bytes);

// Radiance RGBE, flat (uncompressed) scanlines on write; flat and
// new-style RLE scanlines on read.
Bytes encode_hdr(const Image& img);
void save_hdr(const Image& img, const std::filesystem::path& path);
Image decode_hdr(std::span<const std::uint8_t> bytes);

// Writes by extension: .png (16-bit), .pfm, .hdr.
void save_image(const Image& img, const std::filesystem::path& path);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);

}  // namespace relumo

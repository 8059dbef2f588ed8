#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace relumo {

enum class ColorSpace { LinearRGB, SRGB, LAB, Scalar };

std::string_view to_string(ColorSpace space);

// Row-major interleaved raster. Values are stored in double precision;
// every loader produces single-precision-representable values, which is
// what makes residual composition exact (see compose() in decomposition.hpp).
// 1, 2 or 3 channels; two-channel rasters only hold optimiser state.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, ColorSpace space,
        double fill = 0.0);
  Image(int width, int height, int channels, ColorSpace space,
        std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  ColorSpace space() const { return space_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c = 0) {
    return data_[index(x, y) + c];
  }
  double at(int x, int y, int c = 0) const {
    return data_[index(x, y) + c];
  }
  std::span<double> pixel(int x, int y) {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<const double> pixel(int x, int y) const {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<double> pixel(std::size_t p) {
    return {data_.data() + p * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<const double> pixel(std::size_t p) const {
    return {data_.data() + p * channels_, static_cast<std::size_t>(channels_)};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  // Same geometry as *this, new tag and channel count, zero filled.
  Image like(int channels, ColorSpace space, double fill = 0.0) const {
    return Image(width_, height_, channels, space, fill);
  }
  Image with_space(ColorSpace space) const;

  bool same_size(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  ColorSpace space_ = ColorSpace::Scalar;
  std::vector<double> data_;
};

// Binary foreground mask (1 = foreground / valid).
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, bool fill = false);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  bool empty() const { return values_.empty(); }

  bool operator()(int x, int y) const {
    return values_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  bool operator[](std::size_t p) const { return values_[p] != 0; }
  void set(int x, int y, bool v) {
    values_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }
  void set(std::size_t p, bool v) { values_[p] = v ? 1 : 0; }

  std::size_t count() const;
  bool same_size(const Image& img) const {
    return width_ == img.width() && height_ == img.height();
  }
  bool same_size(const Mask& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  Mask operator&(const Mask& other) const;
  Mask operator|(const Mask& other) const;
  // True when every set pixel of *this is also set in other.
  bool subset_of(const Mask& other) const;

  std::span<const std::uint8_t> values() const { return values_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> values_;
};

Mask full_mask(const Image& img);
Image mask_to_image(const Mask& mask);
// Thresholds a scalar image at `threshold` (inclusive).
Mask image_to_mask(const Image& img, double threshold = 0.5);

// Throws relumo::Error when the image violates the invariants of its tag:
// finite everywhere, non-negative for LinearRGB/SRGB, [0,1] for
// single-channel Scalar images flagged as masks.
void validate(const Image& img, bool is_mask = false);

void require_same_size(const Image& a, const Image& b, std::string_view what);
void require_same_size(const Image& a, const Mask& m, std::string_view what);

}  // namespace relumo

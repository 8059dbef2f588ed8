#include "relumo/image.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "relumo/error.hpp"

namespace relumo {

namespace {

// 2^28 samples is ~2 GiB of doubles; anything beyond is a corrupt header
// rather than a real photograph.
constexpr std::size_t kMaxSamples = std::size_t{1} << 28;

std::size_t checked_size(int width, int height, int channels) {
  if (width < 0 || height < 0)
    throw Error("image dimensions must be non-negative");
  if (channels < 1 || channels > 3)
    throw Error("image channel count must be 1, 2 or 3, got " +
                std::to_string(channels));
  const auto n = static_cast<std::size_t>(width) *
                 static_cast<std::size_t>(height) *
                 static_cast<std::size_t>(channels);
  if (width != 0 && n / static_cast<std::size_t>(width) !=
                        static_cast<std::size_t>(height) * channels)
    throw Error("image dimension overflow");
  if (n > kMaxSamples)
    throw Error("image dimension overflow: " + std::to_string(width) + "x" +
                std::to_string(height));
  return n;
}

}  // namespace

std::string_view to_string(ColorSpace space) {
  switch (space) {
    case ColorSpace::LinearRGB: return "linear-rgb";
    case ColorSpace::SRGB: return "srgb";
    case ColorSpace::LAB: return "lab";
    case ColorSpace::Scalar: return "scalar";
  }
  return "unknown";
}

Image::Image(int width, int height, int channels, ColorSpace space,
             double fill)
    : width_(width),
      height_(height),
      channels_(channels),
      space_(space),
      data_(checked_size(width, height, channels), fill) {}

Image::Image(int width, int height, int channels, ColorSpace space,
             std::vector<double> data)
    : width_(width), height_(height), channels_(channels), space_(space) {
  if (checked_size(width, height, channels) != data.size())
    throw Error("image data length does not match width*height*channels");
  data_ = std::move(data);
}

Image Image::with_space(ColorSpace space) const {
  Image out = *this;
  out.space_ = space;
  return out;
}

Mask::Mask(int width, int height, bool fill)
    : width_(width),
      height_(height),
      values_(checked_size(width, height, 1), fill ? 1 : 0) {}

std::size_t Mask::count() const {
  std::size_t n = 0;
  for (auto v : values_) n += v;
  return n;
}

Mask Mask::operator&(const Mask& other) const {
  if (!same_size(other)) throw Error("mask size mismatch");
  Mask out(width_, height_);
  for (std::size_t i = 0; i < values_.size(); ++i)
    out.values_[i] = values_[i] & other.values_[i];
  return out;
}

Mask Mask::operator|(const Mask& other) const {
  if (!same_size(other)) throw Error("mask size mismatch");
  Mask out(width_, height_);
  for (std::size_t i = 0; i < values_.size(); ++i)
    out.values_[i] = values_[i] | other.values_[i];
  return out;
}

bool Mask::subset_of(const Mask& other) const {
  if (!same_size(other)) return false;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] && !other.values_[i]) return false;
  return true;
}

Mask full_mask(const Image& img) {
  return Mask(img.width(), img.height(), true);
}

Image mask_to_image(const Mask& mask) {
  Image out(mask.width(), mask.height(), 1, ColorSpace::Scalar);
  for (std::size_t p = 0; p < mask.pixel_count(); ++p)
    out.data()[p] = mask[p] ? 1.0 : 0.0;
  return out;
}

Mask image_to_mask(const Image& img, double threshold) {
  Mask out(img.width(), img.height());
  for (std::size_t p = 0; p < img.pixel_count(); ++p)
    out.set(p, img.pixel(p)[0] >= threshold);
  return out;
}

void validate(const Image& img, bool is_mask) {
  const bool nonneg = img.space() == ColorSpace::LinearRGB ||
                      img.space() == ColorSpace::SRGB;
  for (double v : img.data()) {
    if (!std::isfinite(v)) throw Error("image contains non-finite values");
    if (nonneg && v < 0.0)
      throw Error("image tagged " + std::string(to_string(img.space())) +
                  " contains negative values");
    if (is_mask && (v < 0.0 || v > 1.0))
      throw Error("mask values must lie in [0,1]");
  }
}

void require_same_size(const Image& a, const Image& b, std::string_view what) {
  if (!a.same_size(b))
    throw Error(std::string(what) + ": dimension mismatch (" +
                std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                " vs " + std::to_string(b.width()) + "x" +
                std::to_string(b.height()) + ")");
}

void require_same_size(const Image& a, const Mask& m, std::string_view what) {
  if (!m.same_size(a))
    throw Error(std::string(what) + ": mask dimension mismatch");
}

}  // namespace relumo

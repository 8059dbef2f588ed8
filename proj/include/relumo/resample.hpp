#pragma once

#include <span>

#include "relumo/image.hpp"

namespace relumo {

// Box-filter average over factor x factor blocks. Dimensions that are not a
// multiple of `factor` are cropped to the largest multiple (trailing rows and
// columns are dropped). factor == 1 returns the input unchanged.
Image downscale(const Image& img, int factor);

struct MaskedImage {
  Image image;
  Mask mask;
};

// Masked variant: each block averages only its valid pixels; a block is
// valid when it contains at least one valid pixel (invalid blocks are 0).
MaskedImage downscale(const Image& img, const Mask& mask, int factor);

// Bilinear sample at continuous pixel coordinates (pixel centres at integer
// coordinates). Returns false, leaving `out` untouched, when the 2x2
// footprint leaves the raster.
bool sample_bilinear(const Image& img, double x, double y,
                     std::span<double> out);

}  // namespace relumo

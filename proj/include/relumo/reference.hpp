#pragma once

// Serial, unoptimised versions of the data-parallel kernels. They share no
// code with the production kernels and are used by the tests and the
// benchmark as a baseline.

#include "relumo/camera.hpp"
#include "relumo/decomposition.hpp"
#include "relumo/image.hpp"
#include "relumo/metrics.hpp"
#include "relumo/resample.hpp"
#include "relumo/sh.hpp"

namespace relumo::reference {

Image shade(const Image& normals, const ShLighting& lighting);
Image downscale(const Image& img, int factor);
MaskedImage downscale(const Image& img, const Mask& mask, int factor);
double appearance_loss(const Image& img, const Decomposition& d);
// Direct 2-D windowed sums per centre, no separable filtering.
double ssim(const Image& a, const Image& b, const Mask& mask,
            const SsimOptions& options = {});
Projection cross_project(const Image& src, const CameraView& src_cam,
                         const CameraView& dst_cam,
                         const CrossProjectOptions& options = {});

}  // namespace relumo::reference

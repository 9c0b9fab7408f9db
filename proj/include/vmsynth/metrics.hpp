#pragma once

#include <limits>

#include "vmsynth/image.hpp"

namespace vmsynth::metrics {

// Returned by psnr() for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;
};

double mse(const RgbImage& reference, const RgbImage& candidate);

// 20 log10(255 / sqrt(MSE)) over all pixels and channels.
double psnr(const RgbImage& reference, const RgbImage& candidate);

// Mean of the local SSIM map over every window fully inside the image,
// Gaussian-weighted, averaged over the three channels.
double ssim(const RgbImage& reference, const RgbImage& candidate, const SsimOptions& options = {});

}  // namespace vmsynth::metrics

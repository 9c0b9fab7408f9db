#pragma once

#include <filesystem>

#include "vmsynth/image.hpp"

namespace vmsynth::io {

// 8-bit RGB. Gray, gray+alpha and RGBA inputs are converted; 16-bit inputs
// are reduced to 8 bits.
RgbImage read_rgb_png(const std::filesystem::path& path);
void write_rgb_png(const RgbImage& image, const std::filesystem::path& path);

// 16-bit single-channel millimeters; 0 is invalid.
DepthMap read_depth_png(const std::filesystem::path& path);
void write_depth_png(const DepthMap& depth, const std::filesystem::path& path);

// Any non-zero sample (first channel) is set.
Mask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const Mask& mask, const std::filesystem::path& path);

}  // namespace vmsynth::io

#pragma once

#include <filesystem>

#include "vmsynth/point_cloud.hpp"

namespace vmsynth::io {

enum class PlyFormat { ascii, binary_little_endian };

// Reads the vertex element's x,y,z and optional red,green,blue properties.
// Other vertex properties and elements are skipped. Missing colors read as white.
PointCloud read_ply(const std::filesystem::path& path);

// x,y,z as double, red,green,blue as uchar.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path,
               PlyFormat format = PlyFormat::binary_little_endian);

}  // namespace vmsynth::io

#pragma once

#include <cstddef>
#include <vector>

#include "vmsynth/geometry.hpp"
#include "vmsynth/image.hpp"

namespace vmsynth {

// Colored points as parallel arrays; positions in meters.
struct PointCloud {
    std::vector<Vec3> positions;
    std::vector<Rgb> colors;

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }

    void reserve(std::size_t n) {
        positions.reserve(n);
        colors.reserve(n);
    }
    void push_back(const Vec3& p, Rgb c) {
        positions.push_back(p);
        colors.push_back(c);
    }
    void append(const PointCloud& other);

    PointCloud transformed(const Pose& pose) const;
    Vec3 centroid() const;
};

struct Pixel {
    int u = 0;
    int v = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
};

// A cloud lifted from an image; pixels[i] is the source pixel of point i.
struct ImageCloud {
    PointCloud cloud;
    std::vector<Pixel> pixels;
};

// One point per valid-depth pixel, in row-major scan order.
ImageCloud back_project_indexed(const RgbImage& rgb, const DepthMap& depth, const CameraModel& cam);
PointCloud back_project(const RgbImage& rgb, const DepthMap& depth, const CameraModel& cam);

}  // namespace vmsynth

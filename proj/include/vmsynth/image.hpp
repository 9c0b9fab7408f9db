#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace vmsynth {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Interleaved 8-bit RGB, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    RgbImage() = default;
    RgbImage(int w, int h, Rgb fill = {})
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
        for (std::size_t i = 0; i < data.size(); i += 3) {
            data[i] = fill.r;
            data[i + 1] = fill.g;
            data[i + 2] = fill.b;
        }
    }

    Rgb at(int u, int v) const {
        const auto i = index(u, v);
        return {data[i], data[i + 1], data[i + 2]};
    }
    void set(int u, int v, Rgb c) {
        const auto i = index(u, v);
        data[i] = c.r;
        data[i + 1] = c.g;
        data[i + 2] = c.b;
    }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    std::size_t index(int u, int v) const {
        return (static_cast<std::size_t>(v) * width + u) * 3;
    }
};

// Per-pixel depth in meters. Invalid pixels hold NaN.
struct DepthMap {
    static constexpr float kInvalid = std::numeric_limits<float>::quiet_NaN();

    int width = 0;
    int height = 0;
    std::vector<float> values;

    DepthMap() = default;
    DepthMap(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, kInvalid) {}

    static bool valid(float d) { return std::isfinite(d) && d > 0.0f; }

    float at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
    void set(int u, int v, float d) { values[static_cast<std::size_t>(v) * width + u] = d; }
    bool valid_at(int u, int v) const { return valid(at(u, v)); }
};

// Binary mask, row-major.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    Mask() = default;
    Mask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

    bool at(int u, int v) const { return bits[static_cast<std::size_t>(v) * width + u] != 0; }
    void set(int u, int v, bool on) { bits[static_cast<std::size_t>(v) * width + u] = on ? 1 : 0; }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : bits) n += b != 0;
        return n;
    }
};

}  // namespace vmsynth

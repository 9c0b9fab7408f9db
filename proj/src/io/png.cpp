#include "vmsynth/io/png.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "vmsynth/error.hpp"

namespace vmsynth::io {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string());
    return f;
}

// Decoded image with 1..4 channels of 8 or 16 bits, samples widened to 16 bits.
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint16_t> samples;
};

RawImage decode(const std::filesystem::path& path) {
    auto file = open_file(path, "rb");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw IoError(path.string() + ": not a PNG file");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }

    RawImage out;
    std::vector<png_bytep> rows;
    std::vector<png_byte> buffer;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path.string() + ": corrupt PNG data");
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) png_set_swap(png);  // host little-endian order
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    buffer.resize(rowbytes * out.height);
    rows.resize(out.height);
    for (int y = 0; y < out.height; ++y) rows[y] = buffer.data() + rowbytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
    out.samples.resize(n);
    if (out.bit_depth == 16) {
        for (std::size_t i = 0; i < n; ++i) {
            out.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) out.samples[i] = buffer[i];
    }
    return out;
}

void encode(const std::filesystem::path& path, int width, int height, int color_type, int bit_depth,
            const std::vector<png_byte>& data) {
    auto file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(data.data()) + rowbytes * y;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);

    if (std::fflush(file.get()) != 0 || std::ferror(file.get())) {
        throw IoError("failed writing " + path.string());
    }
}

std::uint8_t to8(std::uint16_t s, int bit_depth) {
    return bit_depth == 16 ? static_cast<std::uint8_t>(s >> 8) : static_cast<std::uint8_t>(s);
}

}  // namespace

RgbImage read_rgb_png(const std::filesystem::path& path) {
    const RawImage raw = decode(path);
    RgbImage img(raw.width, raw.height);
    for (int v = 0; v < raw.height; ++v) {
        for (int u = 0; u < raw.width; ++u) {
            const std::size_t i = (static_cast<std::size_t>(v) * raw.width + u) * raw.channels;
            Rgb c;
            if (raw.channels >= 3) {
                c = {to8(raw.samples[i], raw.bit_depth), to8(raw.samples[i + 1], raw.bit_depth),
                     to8(raw.samples[i + 2], raw.bit_depth)};
            } else {
                const auto g = to8(raw.samples[i], raw.bit_depth);
                c = {g, g, g};
            }
            img.set(u, v, c);
        }
    }
    return img;
}

void write_rgb_png(const RgbImage& image, const std::filesystem::path& path) {
    std::vector<png_byte> data(image.data.begin(), image.data.end());
    encode(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, data);
}

DepthMap read_depth_png(const std::filesystem::path& path) {
    const RawImage raw = decode(path);
    if (raw.channels != 1 || raw.bit_depth != 16) {
        throw IoError(path.string() + ": depth must be a 16-bit single-channel PNG");
    }
    DepthMap depth(raw.width, raw.height);
    for (std::size_t i = 0; i < raw.samples.size(); ++i) {
        const auto mm = raw.samples[i];
        depth.values[i] = mm == 0 ? DepthMap::kInvalid : static_cast<float>(mm / 1000.0);
    }
    return depth;
}

void write_depth_png(const DepthMap& depth, const std::filesystem::path& path) {
    std::vector<png_byte> data(depth.values.size() * 2);
    for (std::size_t i = 0; i < depth.values.size(); ++i) {
        const float d = depth.values[i];
        std::uint16_t mm = 0;
        if (DepthMap::valid(d)) {
            const double r = std::round(static_cast<double>(d) * 1000.0);
            if (r > 65535.0) throw InputError("depth beyond 65.535 m cannot be stored");
            mm = static_cast<std::uint16_t>(r);
        }
        data[2 * i] = static_cast<png_byte>(mm >> 8);  // PNG is big-endian
        data[2 * i + 1] = static_cast<png_byte>(mm & 0xff);
    }
    encode(path, depth.width, depth.height, PNG_COLOR_TYPE_GRAY, 16, data);
}

Mask read_mask_png(const std::filesystem::path& path) {
    const RawImage raw = decode(path);
    Mask mask(raw.width, raw.height);
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        mask.bits[i] = raw.samples[i * raw.channels] != 0 ? 1 : 0;
    }
    return mask;
}

void write_mask_png(const Mask& mask, const std::filesystem::path& path) {
    std::vector<png_byte> data(mask.bits.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = mask.bits[i] ? 255 : 0;
    encode(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, 8, data);
}

}  // namespace vmsynth::io

#include "vmsynth/io/ply.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vmsynth/error.hpp"

namespace vmsynth::io {
namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

std::size_t scalar_size(Scalar s) {
    switch (s) {
        case Scalar::i8:
        case Scalar::u8: return 1;
        case Scalar::i16:
        case Scalar::u16: return 2;
        case Scalar::i32:
        case Scalar::u32:
        case Scalar::f32: return 4;
        case Scalar::f64: return 8;
    }
    return 0;
}

bool parse_scalar(const std::string& name, Scalar& out) {
    static const std::pair<const char*, Scalar> table[] = {
        {"char", Scalar::i8},    {"int8", Scalar::i8},     {"uchar", Scalar::u8},   {"uint8", Scalar::u8},
        {"short", Scalar::i16},  {"int16", Scalar::i16},   {"ushort", Scalar::u16}, {"uint16", Scalar::u16},
        {"int", Scalar::i32},    {"int32", Scalar::i32},   {"uint", Scalar::u32},   {"uint32", Scalar::u32},
        {"float", Scalar::f32},  {"float32", Scalar::f32}, {"double", Scalar::f64}, {"float64", Scalar::f64},
    };
    for (const auto& [n, s] : table) {
        if (name == n) {
            out = s;
            return true;
        }
    }
    return false;
}

struct Property {
    std::string name;
    Scalar type = Scalar::f32;
    bool is_list = false;
    Scalar count_type = Scalar::u8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
};

template <typename T>
T load(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

double decode_binary(Scalar s, const char* p) {
    switch (s) {
        case Scalar::i8: return load<std::int8_t>(p);
        case Scalar::u8: return load<std::uint8_t>(p);
        case Scalar::i16: return load<std::int16_t>(p);
        case Scalar::u16: return load<std::uint16_t>(p);
        case Scalar::i32: return load<std::int32_t>(p);
        case Scalar::u32: return load<std::uint32_t>(p);
        case Scalar::f32: return load<float>(p);
        case Scalar::f64: return load<double>(p);
    }
    return 0.0;
}

class BinaryReader {
public:
    BinaryReader(std::istream& in, const std::string& file) : in_(in), file_(file) {}

    double read(Scalar s) {
        char buf[8];
        const auto n = scalar_size(s);
        if (!in_.read(buf, static_cast<std::streamsize>(n))) {
            throw LoadError(file_, "vertex", "unexpected end of binary data");
        }
        return decode_binary(s, buf);
    }

private:
    std::istream& in_;
    const std::string& file_;
};

class AsciiReader {
public:
    AsciiReader(std::istream& in, const std::string& file) : in_(in), file_(file) {}

    double read(Scalar) {
        std::string tok;
        if (!(in_ >> tok)) throw LoadError(file_, "vertex", "unexpected end of ascii data");
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
            throw LoadError(file_, "vertex", "malformed number '" + tok + "'");
        }
        return v;
    }

private:
    std::istream& in_;
    const std::string& file_;
};

template <typename Reader>
PointCloud read_body(Reader& reader, const std::vector<Element>& elements, const std::string& file) {
    PointCloud cloud;
    for (const auto& el : elements) {
        const bool is_vertex = el.name == "vertex";
        int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
        for (int i = 0; i < static_cast<int>(el.properties.size()); ++i) {
            const auto& n = el.properties[i].name;
            if (el.properties[i].is_list) continue;
            if (n == "x") ix = i;
            else if (n == "y") iy = i;
            else if (n == "z") iz = i;
            else if (n == "red" || n == "r") ir = i;
            else if (n == "green" || n == "g") ig = i;
            else if (n == "blue" || n == "b") ib = i;
        }
        if (is_vertex && (ix < 0 || iy < 0 || iz < 0)) {
            throw LoadError(file, "vertex", "missing x/y/z properties");
        }
        const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;
        if (is_vertex) cloud.reserve(el.count);

        std::vector<double> values(el.properties.size());
        for (std::size_t k = 0; k < el.count; ++k) {
            for (std::size_t i = 0; i < el.properties.size(); ++i) {
                const auto& prop = el.properties[i];
                if (prop.is_list) {
                    const auto n = static_cast<std::size_t>(reader.read(prop.count_type));
                    for (std::size_t j = 0; j < n; ++j) reader.read(prop.type);
                } else {
                    values[i] = reader.read(prop.type);
                }
            }
            if (!is_vertex) continue;
            const Vec3 p(values[ix], values[iy], values[iz]);
            if (!p.allFinite()) {
                throw LoadError(file, "vertex " + std::to_string(k), "non-finite coordinate");
            }
            Rgb c{255, 255, 255};
            if (has_color) {
                auto channel = [&](int idx) {
                    const auto& prop = el.properties[idx];
                    double v = values[idx];
                    if (prop.type == Scalar::f32 || prop.type == Scalar::f64) v *= 255.0;
                    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
                };
                c = {channel(ir), channel(ig), channel(ib)};
            }
            cloud.push_back(p, c);
        }
    }
    return cloud;
}

}  // namespace

PointCloud read_ply(const std::filesystem::path& path) {
    const std::string file = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(file, "", "cannot open file");

    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply") {
        throw LoadError(file, "header", "missing 'ply' magic");
    }
    std::string format;
    std::vector<Element> elements;
    bool ended = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "format") {
            ls >> format;
        } else if (kw == "element") {
            Element el;
            ls >> el.name >> el.count;
            if (!ls) throw LoadError(file, "header", "malformed element line");
            elements.push_back(std::move(el));
        } else if (kw == "property") {
            if (elements.empty()) throw LoadError(file, "header", "property before element");
            Property prop;
            std::string type;
            ls >> type;
            if (type == "list") {
                std::string ct, it;
                ls >> ct >> it >> prop.name;
                prop.is_list = true;
                if (!parse_scalar(ct, prop.count_type) || !parse_scalar(it, prop.type)) {
                    throw LoadError(file, "header", "unknown list property type");
                }
            } else {
                ls >> prop.name;
                if (!parse_scalar(type, prop.type)) {
                    throw LoadError(file, "header", "unknown property type '" + type + "'");
                }
            }
            elements.back().properties.push_back(prop);
        } else if (kw == "end_header") {
            ended = true;
            break;
        }
        // comment / obj_info lines are ignored
    }
    if (!ended) throw LoadError(file, "header", "missing end_header");

    bool has_vertex = false;
    for (const auto& el : elements) has_vertex |= el.name == "vertex";
    if (!has_vertex) throw LoadError(file, "header", "no vertex element");

    if (format == "ascii") {
        AsciiReader reader(in, file);
        return read_body(reader, elements, file);
    }
    if (format == "binary_little_endian") {
        BinaryReader reader(in, file);
        return read_body(reader, elements, file);
    }
    throw LoadError(file, "format", "unsupported PLY format '" + format + "'");
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "ply\nformat " << (format == PlyFormat::ascii ? "ascii" : "binary_little_endian")
        << " 1.0\nelement vertex " << cloud.size()
        << "\nproperty double x\nproperty double y\nproperty double z\n"
           "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.positions[i];
        const auto& c = cloud.colors[i];
        if (format == PlyFormat::ascii) {
            char buf[32];
            for (int k = 0; k < 3; ++k) {
                auto res = std::to_chars(buf, buf + sizeof(buf), p[k]);
                out.write(buf, res.ptr - buf);
                out << ' ';
            }
            out << int(c.r) << ' ' << int(c.g) << ' ' << int(c.b) << '\n';
        } else {
            const double xyz[3] = {p.x(), p.y(), p.z()};
            out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
            const std::uint8_t rgb[3] = {c.r, c.g, c.b};
            out.write(reinterpret_cast<const char*>(rgb), sizeof(rgb));
        }
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace vmsynth::io

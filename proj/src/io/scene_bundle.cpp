#include "vmsynth/io/scene_bundle.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "vmsynth/error.hpp"
#include "vmsynth/io/png.hpp"
#include "vmsynth/io/ply.hpp"

namespace vmsynth::io {

namespace fs = std::filesystem;
using nlohmann::json;

nlohmann::json pose_to_json(const Pose& p) {
    const auto& q = p.rotation();
    const auto& t = p.translation();
    return {{"qw", q.w()}, {"qx", q.x()}, {"qy", q.y()}, {"qz", q.z()},
            {"x", t.x()},  {"y", t.y()},  {"z", t.z()}};
}

Pose pose_from_json(const nlohmann::json& j) {
    auto num = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_number()) {
            throw InputError(std::string("pose field '") + key + "' missing or not a number");
        }
        return j.at(key).get<double>();
    };
    const Eigen::Quaterniond q(num("qw"), num("qx"), num("qy"), num("qz"));
    return {q, Vec3(num("x"), num("y"), num("z"))};
}

namespace {

class Manifest {
public:
    Manifest(json root, std::string file) : root_(std::move(root)), file_(std::move(file)) {}

    const json& root() const { return root_; }
    const std::string& file() const { return file_; }

    [[noreturn]] void fail(const std::string& field, const std::string& what) const {
        throw LoadError(file_, field, what);
    }

    const json& require(const json& obj, const std::string& key, const std::string& field) const {
        if (!obj.is_object() || !obj.contains(key)) fail(field, "missing field '" + key + "'");
        return obj.at(key);
    }

    double number(const json& obj, const std::string& key, const std::string& field) const {
        const json& v = require(obj, key, field);
        if (!v.is_number()) fail(field + "." + key, "expected a number");
        return v.get<double>();
    }

    int integer(const json& obj, const std::string& key, const std::string& field) const {
        const json& v = require(obj, key, field);
        if (!v.is_number_integer()) fail(field + "." + key, "expected an integer");
        return v.get<int>();
    }

    std::string string(const json& obj, const std::string& key, const std::string& field) const {
        const json& v = require(obj, key, field);
        if (!v.is_string()) fail(field + "." + key, "expected a string");
        return v.get<std::string>();
    }

    Pose pose(const json& v, const std::string& field) const {
        try {
            return pose_from_json(v);
        } catch (const InputError& e) {
            fail(field, e.what());
        }
    }

    Vec3 vec3(const json& v, const std::string& field) const {
        if (!v.is_array() || v.size() != 3) fail(field, "expected an array of 3 numbers");
        Vec3 out;
        for (int i = 0; i < 3; ++i) {
            if (!v[i].is_number()) fail(field, "expected an array of 3 numbers");
            out[i] = v[i].get<double>();
        }
        return out;
    }

    PixelRect rect(const json& v, const std::string& field) const {
        PixelRect r{integer(v, "u0", field), integer(v, "v0", field), integer(v, "width", field),
                    integer(v, "height", field)};
        if (r.width <= 0 || r.height <= 0) fail(field, "rectangle must have positive size");
        return r;
    }

private:
    json root_;
    std::string file_;
};

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(path.string(), "", "cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw LoadError(path.string(), "", std::string("malformed JSON: ") + e.what());
    }
}

template <typename F>
auto load_file(const fs::path& path, const std::string& field, F&& reader) {
    if (!fs::exists(path)) throw LoadError(path.string(), field, "file not found");
    try {
        return reader(path);
    } catch (const LoadError&) {
        throw;
    } catch (const Error& e) {
        throw LoadError(path.string(), field, e.what());
    }
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::vector<Keypoint> read_keypoints(const fs::path& path) {
    const Manifest m(read_json(path), path.string());
    const json& arr = m.require(m.root(), "keypoints", "");
    if (!arr.is_array()) m.fail("keypoints", "expected an array");
    std::vector<Keypoint> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string field = "keypoints[" + std::to_string(i) + "]";
        Keypoint k;
        k.index = m.integer(arr[i], "index", field);
        k.position = m.vec3(m.require(arr[i], "position", field), field + ".position");
        if (arr[i].contains("attachment")) {
            const std::string a = m.string(arr[i], "attachment", field);
            if (a != "background") k.attachment = a;
        }
        out.push_back(std::move(k));
    }
    return out;
}

void write_keypoints(const std::vector<Keypoint>& keypoints, const fs::path& path) {
    json arr = json::array();
    for (const auto& k : keypoints) {
        arr.push_back({{"index", k.index},
                       {"position", {k.position.x(), k.position.y(), k.position.z()}},
                       {"attachment", k.movable() ? k.attachment : "background"}});
    }
    write_json({{"keypoints", arr}}, path);
}

FeatureMap read_features(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path.string(), "", "cannot open file");
    std::uint32_t header[3];
    if (!in.read(reinterpret_cast<char*>(header), sizeof(header))) {
        throw LoadError(path.string(), "header", "truncated header");
    }
    FeatureMap f;
    f.width = static_cast<int>(header[0]);
    f.height = static_cast<int>(header[1]);
    f.dim = static_cast<int>(header[2]);
    if (f.width <= 0 || f.height <= 0 || f.dim <= 0) throw LoadError(path.string(), "header", "zero dimension");
    f.values.resize(static_cast<std::size_t>(f.width) * f.height * f.dim);
    if (!in.read(reinterpret_cast<char*>(f.values.data()),
                 static_cast<std::streamsize>(f.values.size() * sizeof(float)))) {
        throw LoadError(path.string(), "values", "truncated feature data");
    }
    for (float v : f.values) {
        if (!std::isfinite(v)) throw LoadError(path.string(), "values", "non-finite feature value");
    }
    return f;
}

void write_features(const FeatureMap& f, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const std::uint32_t header[3] = {static_cast<std::uint32_t>(f.width), static_cast<std::uint32_t>(f.height),
                                     static_cast<std::uint32_t>(f.dim)};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(float)));
    if (!out) throw IoError("failed writing " + path.string());
}

SceneBundle load_scene_bundle(const fs::path& dir) {
    const fs::path manifest_path = dir / "scene.json";
    if (!fs::exists(manifest_path)) throw LoadError(manifest_path.string(), "", "file not found");
    const Manifest m(read_json(manifest_path), manifest_path.string());
    const json& root = m.root();

    const int version = m.integer(root, "schema_version", "");
    if (version != kSceneSchemaVersion) {
        m.fail("schema_version", "unsupported schema version " + std::to_string(version));
    }

    SceneBundle scene;
    scene.id = fs::absolute(dir).lexically_normal().filename().string();
    if (scene.id.empty()) scene.id = fs::absolute(dir).lexically_normal().parent_path().filename().string();
    if (root.contains("id")) {
        if (!root.at("id").is_string()) m.fail("id", "expected a string");
        scene.id = root.at("id").get<std::string>();
    }

    const json& cam = m.require(root, "camera", "");
    const int width = m.integer(cam, "width", "camera");
    const int height = m.integer(cam, "height", "camera");
    try {
        if (cam.contains("fx")) {
            scene.camera = CameraModel(m.number(cam, "fx", "camera"), m.number(cam, "fy", "camera"),
                                       m.number(cam, "cx", "camera"), m.number(cam, "cy", "camera"), width, height);
        } else {
            scene.camera = CameraModel::with_default_intrinsics(width, height);
        }
    } catch (const InputError& e) {
        m.fail("camera", e.what());
    }

    if (root.contains("robot_base")) scene.robot_base = m.pose(root.at("robot_base"), "robot_base");

    scene.rgb = load_file(dir / "rgb.png", "rgb", read_rgb_png);
    scene.depth = load_file(dir / "depth.png", "depth", read_depth_png);
    if (scene.rgb.width != width || scene.rgb.height != height) {
        throw LoadError((dir / "rgb.png").string(), "dimensions", "image does not match camera size");
    }
    if (scene.depth.width != width || scene.depth.height != height) {
        throw LoadError((dir / "depth.png").string(), "dimensions", "depth does not match camera size");
    }
    scene.background = back_project_indexed(scene.rgb, scene.depth, scene.camera);
    if (scene.background.cloud.empty()) {
        throw LoadError((dir / "depth.png").string(), "values", "no valid depth pixels");
    }

    const json& support = m.require(root, "support", "");
    const auto n_bg = scene.background.cloud.size();
    if (support.contains("indices")) {
        const json& idx = support.at("indices");
        if (!idx.is_array()) m.fail("support.indices", "expected an array");
        for (const auto& v : idx) {
            if (!v.is_number_unsigned() || v.get<std::size_t>() >= n_bg) {
                m.fail("support.indices", "index out of range");
            }
            scene.support.push_back(v.get<std::size_t>());
        }
    } else if (support.contains("mask")) {
        const fs::path p = dir / m.string(support, "mask", "support");
        const Mask mask = load_file(p, "support.mask", read_mask_png);
        if (mask.width != width || mask.height != height) {
            throw LoadError(p.string(), "dimensions", "support mask does not match camera size");
        }
        for (std::size_t i = 0; i < n_bg; ++i) {
            const Pixel px = scene.background.pixels[i];
            if (mask.at(px.u, px.v)) scene.support.push_back(i);
        }
    } else if (support.contains("rect")) {
        const PixelRect r = m.rect(support.at("rect"), "support.rect");
        for (std::size_t i = 0; i < n_bg; ++i) {
            if (r.contains(scene.background.pixels[i])) scene.support.push_back(i);
        }
    } else {
        m.fail("support", "expected one of 'indices', 'mask', 'rect'");
    }
    if (scene.support.empty()) m.fail("support", "support region contains no valid points");
    if (support.contains("normal")) {
        const Vec3 n = m.vec3(support.at("normal"), "support.normal");
        if (!(n.norm() > 0.0)) m.fail("support.normal", "zero-length normal");
        scene.support_normal = n.normalized();
    } else {
        try {
            scene.support_normal = estimate_support_normal(scene);
        } catch (const DegenerateGeometry& e) {
            m.fail("support", e.what());
        }
    }

    if (root.contains("objects")) {
        const json& objs = root.at("objects");
        if (!objs.is_array()) m.fail("objects", "expected an array");
        for (std::size_t i = 0; i < objs.size(); ++i) {
            const std::string field = "objects[" + std::to_string(i) + "]";
            SceneObject o;
            o.name = m.string(objs[i], "name", field);
            const fs::path cloud_path = dir / m.string(objs[i], "cloud", field);
            o.cloud = load_file(cloud_path, field + ".cloud", read_ply);
            if (o.cloud.empty()) throw LoadError(cloud_path.string(), "vertex", "object cloud is empty");
            const fs::path mask_path = dir / m.string(objs[i], "mask", field);
            o.mask = load_file(mask_path, field + ".mask", read_mask_png);
            if (o.mask.width != width || o.mask.height != height) {
                throw LoadError(mask_path.string(), "dimensions", "mask does not match camera size");
            }
            if (objs[i].contains("pose")) o.pose = m.pose(objs[i].at("pose"), field + ".pose");
            if (objs[i].contains("grasp")) o.grasp = m.pose(objs[i].at("grasp"), field + ".grasp");
            scene.objects.push_back(std::move(o));
        }
    }

    if (root.contains("features")) {
        const fs::path p = dir / m.string(root, "features", "");
        scene.features = load_file(p, "features", read_features);
        if (scene.features->width != width || scene.features->height != height) {
            throw LoadError(p.string(), "header", "feature map does not match camera size");
        }
    }

    fs::path kp_path;
    if (root.contains("keypoints")) kp_path = dir / m.string(root, "keypoints", "");
    else if (fs::exists(dir / "keypoints.json")) kp_path = dir / "keypoints.json";
    if (!kp_path.empty()) scene.keypoints = load_file(kp_path, "keypoints", read_keypoints);

    if (root.contains("randomization")) {
        const json& r = root.at("randomization");
        RandomizationConfig cfg;
        cfg.region = m.rect(m.require(r, "region", "randomization"), "randomization.region");
        if (r.contains("min_clearance")) cfg.min_clearance = m.number(r, "min_clearance", "randomization");
        if (cfg.min_clearance < 0.0) m.fail("randomization.min_clearance", "must be non-negative");
        if (r.contains("objects")) {
            for (const auto& name : r.at("objects")) {
                if (!name.is_string()) m.fail("randomization.objects", "expected object names");
                cfg.objects.push_back(name.get<std::string>());
            }
        }
        scene.randomization = cfg;
    }

    try {
        validate_scene(scene);
    } catch (const InputError& e) {
        m.fail("", e.what());
    }
    if (scene.randomization) {
        for (const auto& name : scene.randomization->objects) {
            if (!scene.find_object(name)) m.fail("randomization.objects", "unknown object '" + name + "'");
        }
    }
    return scene;
}

void write_scene_bundle(const SceneBundle& scene, const fs::path& dir) {
    fs::create_directories(dir / "masks");
    fs::create_directories(dir / "objects");
    write_rgb_png(scene.rgb, dir / "rgb.png");
    write_depth_png(scene.depth, dir / "depth.png");

    Mask support(scene.camera.width(), scene.camera.height());
    for (auto i : scene.support) {
        const Pixel p = scene.background.pixels[i];
        support.set(p.u, p.v, true);
    }
    write_mask_png(support, dir / "support.png");

    const auto& cam = scene.camera;
    json root;
    root["schema_version"] = kSceneSchemaVersion;
    if (!scene.id.empty()) root["id"] = scene.id;
    root["camera"] = {{"width", cam.width()}, {"height", cam.height()}, {"fx", cam.fx()},
                      {"fy", cam.fy()},       {"cx", cam.cx()},         {"cy", cam.cy()}};
    root["robot_base"] = pose_to_json(scene.robot_base);
    root["support"] = {{"mask", "support.png"}};
    if (!scene.support_normal.isZero()) {
        root["support"]["normal"] = {scene.support_normal.x(), scene.support_normal.y(), scene.support_normal.z()};
    }
    json objects = json::array();
    for (const auto& o : scene.objects) {
        write_ply(o.cloud, dir / "objects" / (o.name + ".ply"));
        write_mask_png(o.mask, dir / "masks" / (o.name + ".png"));
        json entry = {{"name", o.name},
                      {"cloud", "objects/" + o.name + ".ply"},
                      {"mask", "masks/" + o.name + ".png"},
                      {"pose", pose_to_json(o.pose)}};
        if (o.grasp) entry["grasp"] = pose_to_json(*o.grasp);
        objects.push_back(entry);
    }
    root["objects"] = objects;
    if (scene.features) {
        write_features(*scene.features, dir / "features.bin");
        root["features"] = "features.bin";
    }
    if (!scene.keypoints.empty()) {
        write_keypoints(scene.keypoints, dir / "keypoints.json");
        root["keypoints"] = "keypoints.json";
    }
    if (scene.randomization) {
        const auto& r = *scene.randomization;
        root["randomization"] = {
            {"region", {{"u0", r.region.u0}, {"v0", r.region.v0}, {"width", r.region.width}, {"height", r.region.height}}},
            {"min_clearance", r.min_clearance},
            {"objects", r.objects}};
    }
    write_json(root, dir / "scene.json");
}

}  // namespace vmsynth::io

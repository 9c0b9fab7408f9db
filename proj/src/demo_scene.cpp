#include "vmsynth/demo_scene.hpp"

#include <algorithm>
#include <cmath>

#include "vmsynth/error.hpp"

namespace vmsynth {

const char* const kDemoPickPlacePlan = R"(# Pick the box and put it on the green marker.
stage reach {
  move to k[1] - [0, 0, 0.06] rot face-down
}
stage pick {
  grasp "box" width auto approach [0, 0, 0.04]
}
stage lift {
  move to k[1] - [0, 0, 0.08]
}
stage carry {
  move to k[2] - [0, 0, 0.1]
}
stage place {
  move to k[2] - [0, 0, 0.035]
  release retreat [0, 0, 0.05]
}
)";

namespace {

Rgb table_color(double x, double y) {
    // Soft plank pattern so the table is not featureless.
    const double plank = std::floor((y + 1.0) / 0.025);
    const double grain = 0.5 + 0.5 * std::sin(x * 180.0 + plank * 1.7);
    const int base = (static_cast<long>(plank) % 2 == 0) ? 150 : 135;
    const auto c = [&](double scale, double g) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(base * scale + 18.0 * g, 0.0, 255.0)));
    };
    return {c(1.0, grain), c(0.78, grain), c(0.55, grain)};
}

const Rgb kBoxTop{200, 40, 35};
const Rgb kBoxSide{160, 30, 28};
const Rgb kMarker{40, 170, 60};

void add_face(PointCloud& cloud, const Vec3& origin, const Vec3& du, const Vec3& dv, double spacing, Rgb c) {
    const int nu = std::max(1, static_cast<int>(std::ceil(du.norm() / spacing - 1e-9)));
    const int nv = std::max(1, static_cast<int>(std::ceil(dv.norm() / spacing - 1e-9)));
    for (int i = 0; i <= nu; ++i) {
        for (int j = 0; j <= nv; ++j) cloud.push_back(origin + du * i / nu + dv * j / nv, c);
    }
}

}  // namespace

SceneBundle make_demo_scene(const DemoSceneOptions& o) {
    if (o.width < 16 || o.height < 16) throw InputError("demo scene needs at least 16x16 pixels");
    SceneBundle s;
    s.id = "demo";
    // Focal length grows with the width so the table covers the same field of
    // view at any resolution; 320 px wide gives the default focal length.
    const double f = kDefaultFocalLength * o.width / 320.0;
    s.camera = CameraModel(f, f, o.width / 2.0, o.height / 2.0, o.width, o.height);
    s.rgb = RgbImage(o.width, o.height);
    s.depth = DepthMap(o.width, o.height);
    s.support_normal = Vec3(0, 0, -1);

    const double hx = o.box_size.x() / 2;
    const double hy = o.box_size.y() / 2;
    const double top = o.table_depth - o.box_size.z();
    const double mh = o.marker_size / 2;
    Mask box_mask(o.width, o.height);

    for (int v = 0; v < o.height; ++v) {
        for (int u = 0; u < o.width; ++u) {
            const Vec3 ray = s.camera.unproject(u, v, 1.0);
            const Vec3 on_top = ray * top;
            const Vec3 on_table = ray * o.table_depth;
            const bool hits_top = std::abs(on_top.x() - o.box_x) <= hx && std::abs(on_top.y() - o.box_y) <= hy;
            const bool hits_base =
                std::abs(on_table.x() - o.box_x) <= hx && std::abs(on_table.y() - o.box_y) <= hy;
            if (hits_top) {
                s.rgb.set(u, v, kBoxTop);
                s.depth.set(u, v, static_cast<float>(top));
            } else if (hits_base) {
                s.rgb.set(u, v, kBoxSide);
                s.depth.set(u, v, static_cast<float>(o.table_depth));
            } else {
                const bool marker =
                    std::abs(on_table.x() - o.marker_x) <= mh && std::abs(on_table.y() - o.marker_y) <= mh;
                s.rgb.set(u, v, marker ? kMarker : table_color(on_table.x(), on_table.y()));
                s.depth.set(u, v, static_cast<float>(o.table_depth));
            }
            // The outline between top and base rectangles is box side.
            const bool side = !hits_top && !hits_base && [&] {
                for (double f = 0.0; f <= 1.0; f += 0.125) {
                    const Vec3 p = ray * (top + f * o.box_size.z());
                    if (std::abs(p.x() - o.box_x) <= hx && std::abs(p.y() - o.box_y) <= hy) return true;
                }
                return false;
            }();
            if (side) s.rgb.set(u, v, kBoxSide);
            box_mask.set(u, v, hits_top || hits_base || side);
        }
    }

    // Depth is stored in whole millimeters on disk; quantize now so the bundle
    // survives a write/load round trip unchanged.
    for (auto& d : s.depth.values) d = static_cast<float>(std::round(static_cast<double>(d) * 1000.0) / 1000.0);

    s.background = back_project_indexed(s.rgb, s.depth, s.camera);
    for (std::size_t i = 0; i < s.background.pixels.size(); ++i) {
        const Pixel p = s.background.pixels[i];
        if (!box_mask.at(p.u, p.v)) s.support.push_back(i);
    }

    // Box local frame: origin at the bottom center, +z up out of the table.
    SceneObject box;
    box.name = "box";
    box.mask = box_mask;
    const double h = o.box_size.z();
    const double sp = o.object_spacing;
    add_face(box.cloud, {-hx, -hy, h}, {2 * hx, 0, 0}, {0, 2 * hy, 0}, sp, kBoxTop);
    add_face(box.cloud, {-hx, -hy, 0}, {2 * hx, 0, 0}, {0, 0, h}, sp, kBoxSide);
    add_face(box.cloud, {-hx, hy, 0}, {2 * hx, 0, 0}, {0, 0, h}, sp, kBoxSide);
    add_face(box.cloud, {-hx, -hy, 0}, {0, 2 * hy, 0}, {0, 0, h}, sp, kBoxSide);
    add_face(box.cloud, {hx, -hy, 0}, {0, 2 * hy, 0}, {0, 0, h}, sp, kBoxSide);
    // Local +z maps to camera -z (toward the camera).
    box.pose = Pose::from_axis_angle(Vec3::UnitX(), M_PI, Vec3(o.box_x, o.box_y, o.table_depth));
    s.objects.push_back(std::move(box));

    s.keypoints = {{1, Vec3(o.box_x, o.box_y, top), "box"},
                   {2, Vec3(o.marker_x, o.marker_y, o.table_depth), ""}};

    RandomizationConfig r;
    r.region = {o.width / 10, o.height / 5, o.width * 2 / 5, o.height * 3 / 5};
    r.min_clearance = 0.0;
    r.objects = {"box"};
    s.randomization = r;

    validate_scene(s);
    return s;
}

}  // namespace vmsynth

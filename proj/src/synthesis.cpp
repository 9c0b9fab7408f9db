#include "vmsynth/synthesis.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "vmsynth/error.hpp"
#include "vmsynth/io/png.hpp"

namespace vmsynth {

namespace {

// Grid samples on the surface of an axis-aligned box.
void sample_box(PointCloud& out, const Vec3& lo, const Vec3& hi, double spacing, Rgb color) {
    int n[3];
    for (int i = 0; i < 3; ++i) n[i] = std::max(1, static_cast<int>(std::ceil((hi[i] - lo[i]) / spacing - 1e-9)));
    for (int a = 0; a <= n[0]; ++a) {
        for (int b = 0; b <= n[1]; ++b) {
            for (int c = 0; c <= n[2]; ++c) {
                const bool surface = a == 0 || a == n[0] || b == 0 || b == n[1] || c == 0 || c == n[2];
                if (!surface) continue;
                const Vec3 p(lo.x() + (hi.x() - lo.x()) * a / n[0], lo.y() + (hi.y() - lo.y()) * b / n[1],
                             lo.z() + (hi.z() - lo.z()) * c / n[2]);
                out.push_back(p, color);
            }
        }
    }
}

}  // namespace

PointCloud build_gripper_cloud(const GripperModel& m, const Pose& pose, double width) {
    if (!(m.spacing > 0.0)) throw InputError("gripper point spacing must be positive");
    if (!(width >= 0.0 && width <= m.max_width + 1e-12)) throw InputError("gripper width outside [0, max_width]");
    PointCloud local;
    const double half = width / 2.0;
    const double bx = m.finger_breadth / 2.0;
    // Fingers: inner faces at +-width/2.
    sample_box(local, {-bx, half, -m.finger_length}, {bx, half + m.finger_thickness, 0.0}, m.spacing, m.color);
    sample_box(local, {-bx, -half - m.finger_thickness, -m.finger_length}, {bx, -half, 0.0}, m.spacing, m.color);
    // Palm spans the fully open fingers.
    const double py = m.max_width / 2.0 + m.finger_thickness;
    const double px = m.palm_breadth / 2.0;
    sample_box(local, {-px, -py, -m.finger_length - m.palm_thickness}, {px, py, -m.finger_length}, m.spacing,
               m.color);
    return local.transformed(pose);
}

std::size_t FrameCloud::size() const {
    std::size_t n = robot.size() + (background ? background->size() : 0);
    for (const auto& o : objects) n += o.cloud.size();
    return n;
}

Pose object_pose_at(const SceneObject& object, const Trajectory& trajectory, int t) {
    const GraspInterval* settled = nullptr;
    for (const auto& g : trajectory.grasp_intervals) {
        if (g.object != object.name || g.start > t) continue;
        if (t <= g.end) {
            return attach_transform(g.object_at_grasp, g.ee_at_grasp, trajectory.records[t].pose);
        }
        if (!settled || g.end > settled->end) settled = &g;
    }
    if (settled) {
        return attach_transform(settled->object_at_grasp, settled->ee_at_grasp,
                                trajectory.records[settled->end].pose);
    }
    return object.pose;
}

namespace {

std::string frame_name(int t) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d.png", t);
    return buf;
}

PointCloud external_robot_cloud(const std::filesystem::path& dir, const CameraModel& camera, int t) {
    const auto rgb = io::read_rgb_png(dir / "rgb" / frame_name(t));
    const auto depth = io::read_depth_png(dir / "depth" / frame_name(t));
    return back_project(rgb, depth, camera);
}

}  // namespace

FrameCloud compose_frame(const SceneBundle& scene, std::shared_ptr<const PointCloud> background,
                         const Trajectory& trajectory, int t, const RobotSource& robot) {
    if (t < 0 || t >= trajectory.size()) throw InputError("frame index outside the trajectory");
    FrameCloud frame;
    frame.background = std::move(background);
    std::map<std::string, Pose> poses;
    for (const auto& o : scene.objects) {
        const Pose p = object_pose_at(o, trajectory, t);
        poses[o.name] = p;
        frame.objects.push_back({o.name, p, o.cloud.transformed(p)});
    }
    for (const auto& k : scene.keypoints) {
        if (!k.movable()) {
            frame.keypoints.push_back(k.position);
        } else {
            const SceneObject* o = scene.find_object(k.attachment);
            frame.keypoints.push_back(poses.at(o->name) * (invert(o->pose) * k.position));
        }
    }
    const auto& rec = trajectory.records[t];
    if (robot.frames_dir) {
        frame.robot = external_robot_cloud(*robot.frames_dir, scene.camera, t);
    } else {
        frame.robot = build_gripper_cloud(robot.gripper, rec.pose, std::min(rec.gripper_width, robot.gripper.max_width));
    }
    return frame;
}

Renderer::Renderer(const CameraModel& camera, double splat_radius, Rgb background_color)
    : camera_(camera), background_color_(background_color) {
    if (!(splat_radius >= 0.0)) throw InputError("splat radius must be non-negative");
    const int r = static_cast<int>(std::floor(splat_radius));
    const double r2 = splat_radius * splat_radius;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            if (dx * dx + dy * dy <= r2) disc_.emplace_back(dx, dy);
        }
    }
}

RenderedFrame Renderer::blank() const {
    return {RgbImage(camera_.width(), camera_.height(), background_color_),
            DepthMap(camera_.width(), camera_.height()),
            std::vector<double>(static_cast<std::size_t>(camera_.width()) * camera_.height(),
                                std::numeric_limits<double>::infinity())};
}

void Renderer::splat(RenderedFrame& target, const PointCloud& cloud) const {
    const int w = camera_.width();
    const int h = camera_.height();
    auto& zbuf = target.zbuffer;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto proj = camera_.project(cloud.positions[i]);
        if (!proj) continue;
        const int cu = static_cast<int>(std::floor(proj->u + 0.5));
        const int cv = static_cast<int>(std::floor(proj->v + 0.5));
        const double d = proj->depth;
        const Rgb c = cloud.colors[i];
        for (const auto& [dx, dy] : disc_) {
            const int u = cu + dx;
            const int v = cv + dy;
            if (u < 0 || u >= w || v < 0 || v >= h) continue;
            const std::size_t idx = static_cast<std::size_t>(v) * w + u;
            // Strict less keeps the earlier point on exact ties.
            if (d < zbuf[idx]) {
                zbuf[idx] = d;
                target.depth.values[idx] = static_cast<float>(d);
                target.rgb.set(u, v, c);
            }
        }
    }
}

RenderedFrame Renderer::render(const FrameCloud& frame) const {
    RenderedFrame out = blank();
    if (frame.background) splat(out, *frame.background);
    for (const auto& o : frame.objects) splat(out, o.cloud);
    splat(out, frame.robot);
    return out;
}

RenderedFrame render_frame(const FrameCloud& cloud, const CameraModel& camera, double splat_radius,
                           Rgb background_color) {
    return Renderer(camera, splat_radius, background_color).render(cloud);
}

Pose default_home_pose(const SceneBundle& scene) {
    const Plane plane = support_plane(scene);
    const Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), -plane.normal);
    return {q, plane.point + 0.25 * plane.normal};
}

PreparedScene prepare_scene(const SceneBundle& scene) {
    PreparedScene p{scene, nullptr};
    p.static_background = std::make_shared<const PointCloud>(remove_all_objects(scene).cloud);
    return p;
}

Episode synthesize_episode(const PreparedScene& prepared, const dsl::ControlProgram& program,
                           const std::map<std::string, Pose>& placements, std::uint64_t seed,
                           const SynthesisConfig& config) {
    const SceneBundle scene = apply_placements(prepared.scene, placements);
    dsl::validate_program(program, scene);
    const Pose x0 = config.x0.value_or(default_home_pose(scene));
    const Trajectory traj = plan_trajectory(program, scene, x0, config.trajectory);

    const auto& rc = config.render;
    const CameraModel camera = (rc.width > 0 && rc.height > 0) ? scene.camera.resized(rc.width, rc.height)
                                                                : scene.camera;
    const Renderer renderer(camera, rc.splat_radius, rc.background_color);

    // Background splats first and never changes, so every frame starts from
    // one pre-rendered buffer; later points only win on strictly nearer depth.
    RenderedFrame base = renderer.blank();
    renderer.splat(base, *prepared.static_background);

    Episode ep;
    ep.meta = {traj.fps, seed, dsl::program_hash(program), camera, scene.id, placements};
    ep.actions = traj.records;
    ep.frames.reserve(traj.records.size());
    for (int t = 0; t < traj.size(); ++t) {
        try {
            const FrameCloud frame = compose_frame(scene, prepared.static_background, traj, t, rc.robot);
            RenderedFrame out = base;
            for (const auto& o : frame.objects) renderer.splat(out, o.cloud);
            renderer.splat(out, frame.robot);
            ep.frames.push_back(std::move(out.rgb));
        } catch (const Error& e) {
            throw Error("frame " + std::to_string(t) + " (stage '" + traj.records[t].stage + "'): " + e.what());
        }
    }
    return ep;
}

Episode synthesize_episode(const SceneBundle& scene, const dsl::ControlProgram& program,
                           const std::map<std::string, Pose>& placements, std::uint64_t seed,
                           const SynthesisConfig& config) {
    return synthesize_episode(prepare_scene(scene), program, placements, seed, config);
}

}  // namespace vmsynth

#include <doctest.h>

#include "scene_fixtures.hpp"
#include "test_support.hpp"
#include "vmsynth/demo_scene.hpp"
#include "vmsynth/error.hpp"
#include "vmsynth/synthesis.hpp"

using namespace vmsynth;

namespace {

struct Fixture {
    SceneBundle scene = testsupport::small_demo_scene();
    dsl::ControlProgram program = dsl::parse_program(kDemoPickPlacePlan);
    Pose x0 = Pose::from_translation(0, 0, 1.5);
    Trajectory traj = plan_trajectory(program, scene, x0);
};

}  // namespace

TEST_CASE("object poses: unchanged outside grasps, attached inside, frozen after release") {
    Fixture f;
    const SceneObject& box = f.scene.objects[0];
    REQUIRE(f.traj.grasp_intervals.size() == 1);
    const auto& g = f.traj.grasp_intervals[0];

    for (int t = 0; t < g.start; ++t) CHECK(object_pose_at(box, f.traj, t) == box.pose);
    const Mat4 at_onset = testsupport::homogeneous(object_pose_at(box, f.traj, g.start));
    CHECK(testsupport::max_abs_diff(at_onset, testsupport::homogeneous(g.object_at_grasp)) < 1e-12);

    for (int t = g.start; t <= g.end; ++t) {
        const Mat4 expected = testsupport::homogeneous(f.traj.records[t].pose) *
                              testsupport::rigid_inverse(testsupport::homogeneous(g.ee_at_grasp)) *
                              testsupport::homogeneous(g.object_at_grasp);
        CHECK(testsupport::max_abs_diff(testsupport::homogeneous(object_pose_at(box, f.traj, t)), expected) < 1e-12);
    }
    const Pose released = object_pose_at(box, f.traj, g.end);
    for (int t = g.end + 1; t < f.traj.size(); ++t) CHECK(object_pose_at(box, f.traj, t) == released);
    // Lifted and carried: the resting pose differs from the start.
    CHECK((released.translation() - box.pose.translation()).norm() > 0.05);
}

TEST_CASE("the placed box rests on the marker") {
    Fixture f;
    const auto& g = f.traj.grasp_intervals[0];
    const Pose released = object_pose_at(f.scene.objects[0], f.traj, g.end);
    const Plane plane = support_plane(f.scene);
    // Box bottom (local origin) back on the table plane, centered on keypoint 2.
    // The plane is fitted to single-precision depth.
    CHECK(std::abs(plane.signed_distance(released.translation())) < 1e-6);
    const Vec3 marker = f.scene.keypoints[1].position;
    CHECK((released.translation() - marker).norm() < 1e-9);
}

TEST_CASE("held objects move rigidly") {
    Fixture f;
    const auto frame0 = compose_frame(f.scene, nullptr, f.traj, 0);
    const auto& ref = frame0.objects[0].cloud;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < ref.size(); i += 37) pairs.push_back({i, (i * 7 + 13) % ref.size()});
    for (int t = 0; t < f.traj.size(); ++t) {
        const auto& c = compose_frame(f.scene, nullptr, f.traj, t).objects[0].cloud;
        for (auto [i, j] : pairs) {
            const double d0 = (ref.positions[i] - ref.positions[j]).norm();
            CHECK(std::abs((c.positions[i] - c.positions[j]).norm() - d0) < 1e-9);
        }
    }
}

TEST_CASE("composed keypoints follow their object") {
    Fixture f;
    const auto& g = f.traj.grasp_intervals[0];
    const auto frame = compose_frame(f.scene, nullptr, f.traj, g.end);
    const Pose obj = object_pose_at(f.scene.objects[0], f.traj, g.end);
    const Vec3 expected = obj * (invert(f.scene.objects[0].pose) * f.scene.keypoints[0].position);
    CHECK((frame.keypoints[0] - expected).norm() < 1e-12);
    CHECK(frame.keypoints[1] == f.scene.keypoints[1].position);
}

TEST_CASE("gripper cloud geometry") {
    GripperModel m;
    const PointCloud c = build_gripper_cloud(m, Pose{}, 0.03);
    double inner = 1.0;
    double zmax = -1.0;
    for (const auto& p : c.positions) {
        if (p.z() > -m.finger_length) inner = std::min(inner, std::abs(p.y()));
        zmax = std::max(zmax, p.z());
    }
    CHECK(inner == doctest::Approx(0.015));
    CHECK(zmax == doctest::Approx(0.0));  // fingertips at the tool point
    const Pose p = Pose::from_axis_angle(Vec3::UnitX(), 1.0, Vec3(1, 2, 3));
    const PointCloud moved = build_gripper_cloud(m, p, 0.03);
    REQUIRE(moved.size() == c.size());
    CHECK((moved.positions[5] - p * c.positions[5]).norm() < 1e-12);
    CHECK_THROWS_AS(build_gripper_cloud(m, Pose{}, 0.2), InputError);
}

TEST_CASE("renderer: nearest point wins and exact ties keep the first") {
    const auto cam = CameraModel::with_default_intrinsics(9, 9);
    const Renderer r(cam, 0.0, {1, 2, 3});
    // cx = 4.5: the optical axis lands on pixel 5 (pixel centers are integers).
    RenderedFrame img = r.blank();
    CHECK(img.rgb.at(5, 5) == Rgb{1, 2, 3});
    CHECK(std::isnan(img.depth.at(5, 5)));

    PointCloud far, near, tie;
    far.push_back(Vec3(0, 0, 2.0), {10, 0, 0});
    near.push_back(Vec3(0, 0, 1.0), {0, 10, 0});
    tie.push_back(Vec3(0, 0, 1.0), {0, 0, 10});
    r.splat(img, far);
    CHECK(img.rgb.at(5, 5) == Rgb{10, 0, 0});
    r.splat(img, near);
    CHECK(img.rgb.at(5, 5) == Rgb{0, 10, 0});
    r.splat(img, tie);
    CHECK(img.rgb.at(5, 5) == Rgb{0, 10, 0});
    r.splat(img, far);
    CHECK(img.rgb.at(5, 5) == Rgb{0, 10, 0});
    CHECK(img.depth.at(5, 5) == 1.0f);
    CHECK(img.rgb.at(3, 5) == Rgb{1, 2, 3});
}

TEST_CASE("renderer: splat footprint is the pixel disc of the radius") {
    const auto cam = CameraModel::with_default_intrinsics(21, 21);
    PointCloud one;
    one.push_back(Vec3(0, 0, 1), {200, 200, 200});
    for (double radius : {0.0, 1.0, 1.5, 2.0, 3.0}) {
        const auto img = Renderer(cam, radius, {}).render(FrameCloud{nullptr, {}, one, {}});
        int covered = 0, expected = 0;
        for (int v = 0; v < 21; ++v) {
            for (int u = 0; u < 21; ++u) {
                covered += img.rgb.at(u, v) == Rgb{200, 200, 200};
                const double du = u - 10.0, dv = v - 10.0;
                expected += du * du + dv * dv <= radius * radius;
            }
        }
        CAPTURE(radius);
        CHECK(covered == expected);
    }
    CHECK_THROWS_AS(Renderer(cam, -1.0, {}), InputError);
}

TEST_CASE("episode frames match a full per-frame render") {
    Fixture f;
    SynthesisConfig cfg;
    cfg.x0 = f.x0;
    const PreparedScene prepared = prepare_scene(f.scene);
    const Episode ep = synthesize_episode(prepared, f.program, {}, 1, cfg);
    REQUIRE(ep.frames.size() == ep.actions.size());
    REQUIRE(static_cast<int>(ep.frames.size()) == f.traj.size());
    CHECK(ep.actions == f.traj.records);
    for (int t : {0, f.traj.size() / 2, f.traj.size() - 1}) {
        const auto frame = compose_frame(f.scene, prepared.static_background, f.traj, t);
        const auto full = render_frame(frame, f.scene.camera, cfg.render.splat_radius, cfg.render.background_color);
        CHECK(full.rgb.data == ep.frames[t].data);
    }
}

TEST_CASE("episodes are deterministic and record their metadata") {
    Fixture f;
    SynthesisConfig cfg;
    cfg.render.width = 48;
    cfg.render.height = 36;
    const Vec3 target = f.scene.background.cloud.positions[f.scene.support[50]];
    const std::map<std::string, Pose> placements{{"box", Pose::from_axis_angle(Vec3(0, 0, -1), 1.0, target)}};
    const Episode a = synthesize_episode(f.scene, f.program, placements, 42, cfg);
    const Episode b = synthesize_episode(f.scene, f.program, placements, 42, cfg);
    REQUIRE(a.frames.size() == b.frames.size());
    for (std::size_t i = 0; i < a.frames.size(); ++i) CHECK(a.frames[i].data == b.frames[i].data);
    CHECK(a.actions == b.actions);
    CHECK(a.meta == b.meta);
    CHECK(a.meta.seed == 42);
    CHECK(a.meta.camera.width() == 48);
    CHECK(a.meta.program_hash == dsl::program_hash(f.program));
    CHECK(a.meta.placements == placements);
    CHECK(a.frames[0].width == 48);
    // The placement changes the scene.
    const Episode c = synthesize_episode(f.scene, f.program, {}, 42, cfg);
    CHECK(c.frames[0].data != a.frames[0].data);
}

TEST_CASE("the default start pose hovers above the table facing down") {
    Fixture f;
    const Pose home = default_home_pose(f.scene);
    const Plane plane = support_plane(f.scene);
    CHECK(plane.signed_distance(home.translation()) == doctest::Approx(0.25));
    CHECK((home.rotation_matrix().col(2) + plane.normal).norm() < 1e-12);
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vmsynth/attachment.hpp"
#include "vmsynth/dsl.hpp"
#include "vmsynth/point_cloud.hpp"
#include "vmsynth/scene.hpp"
#include "vmsynth/trajectory.hpp"

namespace vmsynth {

// Parametric two-finger gripper standing in for the robot cloud. Gripper
// frame: origin between the fingertips, +z approach, +y closing axis.
struct GripperModel {
    double finger_length = 0.045;     // along z
    double finger_thickness = 0.008;  // along y
    double finger_breadth = 0.02;     // along x
    double palm_thickness = 0.02;     // along z
    double palm_breadth = 0.04;       // along x
    double max_width = kDefaultMaxGripperWidth;
    double spacing = 0.0012;
    Rgb color{60, 62, 70};
};

// Fingers `width` apart (inner faces), palm behind them, posed by `pose`.
PointCloud build_gripper_cloud(const GripperModel& model, const Pose& pose, double width);

struct FrameObject {
    std::string name;
    Pose pose;
    PointCloud cloud;  // world frame
};

// Composite cloud for one frame: static background, posed objects, robot.
struct FrameCloud {
    std::shared_ptr<const PointCloud> background;
    std::vector<FrameObject> objects;
    PointCloud robot;
    std::vector<Vec3> keypoints;  // current keypoint positions, index order

    std::size_t size() const;
};

// Object pose at frame t: initial before any grasp, rigidly attached inside a
// grasp interval, frozen at the release pose afterwards.
Pose object_pose_at(const SceneObject& object, const Trajectory& trajectory, int t);

struct RobotSource {
    GripperModel gripper;
    // Externally rendered robot RGB-D (rgb/%06d.png, depth/%06d.png at the
    // scene camera resolution). Replaces the gripper model when set.
    std::optional<std::filesystem::path> frames_dir;
};

FrameCloud compose_frame(const SceneBundle& scene, std::shared_ptr<const PointCloud> background,
                         const Trajectory& trajectory, int t, const RobotSource& robot = {});

struct RenderedFrame {
    RgbImage rgb;
    DepthMap depth;
    std::vector<double> zbuffer;  // full-precision depth; +inf where empty
};

// Point splatting with a z-buffer. Each point covers the pixels within
// `splat_radius` of its rounded projection; nearest depth wins and exact ties
// keep the earlier point (background, then objects, then robot).
class Renderer {
public:
    Renderer(const CameraModel& camera, double splat_radius, Rgb background_color);

    RenderedFrame blank() const;
    void splat(RenderedFrame& target, const PointCloud& cloud) const;
    RenderedFrame render(const FrameCloud& frame) const;

    const CameraModel& camera() const { return camera_; }

private:
    CameraModel camera_;
    std::vector<std::pair<int, int>> disc_;
    Rgb background_color_;
};

RenderedFrame render_frame(const FrameCloud& cloud, const CameraModel& camera, double splat_radius,
                           Rgb background_color);

struct RenderConfig {
    int width = 0;   // 0: source resolution
    int height = 0;
    double splat_radius = 1.0;
    Rgb background_color{0, 0, 0};
    RobotSource robot;
};

struct SynthesisConfig {
    TrajectoryConfig trajectory;
    RenderConfig render;
    std::optional<Pose> x0;  // initial end-effector pose; default_home_pose when unset
};

// Hovers 0.25 m above the support centroid, approach axis facing the support.
Pose default_home_pose(const SceneBundle& scene);

struct EpisodeMeta {
    double fps = 30.0;
    std::uint64_t seed = 0;
    std::string program_hash;
    CameraModel camera = CameraModel::with_default_intrinsics(1, 1);
    std::string scene_id;
    std::map<std::string, Pose> placements;

    friend bool operator==(const EpisodeMeta&, const EpisodeMeta&) = default;
};

struct Episode {
    std::vector<RgbImage> frames;
    std::vector<ActionRecord> actions;
    EpisodeMeta meta;
};

// Scene plus its background with every object footprint removed; computed
// once and shared by all episodes.
struct PreparedScene {
    SceneBundle scene;
    std::shared_ptr<const PointCloud> static_background;
};

PreparedScene prepare_scene(const SceneBundle& scene);

Episode synthesize_episode(const PreparedScene& prepared, const dsl::ControlProgram& program,
                           const std::map<std::string, Pose>& placements, std::uint64_t seed,
                           const SynthesisConfig& config = {});

Episode synthesize_episode(const SceneBundle& scene, const dsl::ControlProgram& program,
                           const std::map<std::string, Pose>& placements, std::uint64_t seed,
                           const SynthesisConfig& config = {});

}  // namespace vmsynth

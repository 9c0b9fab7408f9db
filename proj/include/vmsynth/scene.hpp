#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vmsynth/geometry.hpp"
#include "vmsynth/image.hpp"
#include "vmsynth/point_cloud.hpp"

namespace vmsynth {

inline constexpr double kDefaultMaxGripperWidth = 0.08;

struct SceneObject {
    std::string name;
    PointCloud cloud;           // object-local frame
    Pose pose;                  // local -> world at t = 0
    Mask mask;                  // footprint in the source view
    std::optional<Pose> grasp;  // end-effector pose in the object-local frame

    PointCloud world_cloud() const { return cloud.transformed(pose); }
};

struct Keypoint {
    int index = 0;  // 1-based
    Vec3 position = Vec3::Zero();
    std::string attachment;  // empty: static background anchor; otherwise an object name

    bool movable() const { return !attachment.empty(); }
};

// Opaque per-pixel feature vectors, row-major, dim floats per pixel.
struct FeatureMap {
    int width = 0;
    int height = 0;
    int dim = 0;
    std::vector<float> values;

    const float* at(int u, int v) const {
        return values.data() + (static_cast<std::size_t>(v) * width + u) * dim;
    }
};

// Axis-aligned rectangle in source-image pixels: [u0, u0+width) x [v0, v0+height).
struct PixelRect {
    int u0 = 0;
    int v0 = 0;
    int width = 0;
    int height = 0;

    bool contains(Pixel p) const {
        return p.u >= u0 && p.u < u0 + width && p.v >= v0 && p.v < v0 + height;
    }
};

struct RandomizationConfig {
    PixelRect region;
    double min_clearance = 0.0;
    std::vector<std::string> objects;  // empty: every object
};

struct Plane {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();  // unit, pointing to the camera side

    double signed_distance(const Vec3& p) const { return normal.dot(p - point); }
};

struct SceneBundle {
    std::string id;
    RgbImage rgb;
    DepthMap depth;
    CameraModel camera = CameraModel::with_default_intrinsics(1, 1);
    Pose robot_base;
    ImageCloud background;                  // lifted source view, scan order
    std::vector<std::size_t> support;       // indices into background
    Vec3 support_normal = Vec3::Zero();     // unit; filled at load when not given
    std::vector<SceneObject> objects;
    std::vector<Keypoint> keypoints;
    std::optional<FeatureMap> features;
    std::optional<RandomizationConfig> randomization;

    const SceneObject* find_object(const std::string& name) const;
    const Keypoint* find_keypoint(int index) const;
};

// Checks every bundle invariant; throws InputError naming the offender.
void validate_scene(const SceneBundle& scene);

// Least-squares plane through the support points; normal oriented toward the
// camera (origin). Uses `support_normal` when already set.
Plane support_plane(const SceneBundle& scene);
Vec3 estimate_support_normal(const SceneBundle& scene);

// Keypoints from k-means over [L2-normalized feature, position / bbox diagonal].
// `pixels` maps points to feature-map pixels and is required when features
// are given; without features the point color scaled to [0,1] is used.
std::vector<Keypoint> extract_keypoints(const PointCloud& cloud, const FeatureMap* features,
                                        const std::vector<Pixel>& pixels, int k, std::uint64_t seed);

// Clusters the background cloud; a keypoint whose source pixel lies inside an
// object mask is attached to that object.
std::vector<Keypoint> extract_scene_keypoints(const SceneBundle& scene, int k, std::uint64_t seed);

// Placement poses: translation at a support point inside `region`, rotation
// about the support normal. See apply_placements for how they move objects.
std::vector<Pose> sample_placements(const SceneBundle& scene, const PixelRect& region, std::size_t n,
                                    double min_clearance, std::uint64_t seed);

// Re-poses objects: the object's footprint on the support plane is moved onto
// the placement translation and the object is turned about the support normal
// by the placement rotation. Attached keypoints follow their object.
SceneBundle apply_placements(const SceneBundle& scene, const std::map<std::string, Pose>& placements);

// Background without the object's mask footprint; the hole is refilled on the
// plane fitted to surrounding support points, colored by the nearest support pixel.
ImageCloud remove_object_points(const SceneBundle& scene, const std::string& object);

// Same, for the union of every object mask.
ImageCloud remove_all_objects(const SceneBundle& scene);

// Extent of the world-frame object cloud along `closing_axis`, clamped to
// [0, max_width].
double grasp_width(const SceneObject& object, const Vec3& closing_axis,
                   double max_width = kDefaultMaxGripperWidth);

// Top-down grasp in world frame. Gripper frame: +z approach, +y closing axis.
Pose heuristic_grasp(const SceneObject& object, const Vec3& up);

// Stored grasp (object frame) mapped to world, else heuristic_grasp.
Pose grasp_pose(const SceneObject& object, const Vec3& up);

}  // namespace vmsynth

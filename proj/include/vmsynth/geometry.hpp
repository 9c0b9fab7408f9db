#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <vector>

#include "vmsynth/image.hpp"

namespace vmsynth {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Rigid transform in SE(3). The rotation is a unit quaternion stored with
// w >= 0, so each rotation has exactly one representative.
class Pose {
public:
    Pose() = default;
    Pose(const Eigen::Quaterniond& rotation, const Vec3& translation);

    static Pose identity() { return {}; }
    static Pose from_translation(double x, double y, double z);
    static Pose from_translation(const Vec3& t);
    static Pose from_axis_angle(const Vec3& axis, double angle, const Vec3& t = Vec3::Zero());
    static Pose from_matrix(const Mat3& rotation, const Vec3& translation);

    const Eigen::Quaterniond& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }
    Mat3 rotation_matrix() const { return rotation_.toRotationMatrix(); }
    Mat4 matrix() const;

    Vec3 operator*(const Vec3& v) const { return rotation_ * v + translation_; }

    friend bool operator==(const Pose& a, const Pose& b) {
        return a.rotation_.coeffs() == b.rotation_.coeffs() && a.translation_ == b.translation_;
    }

private:
    Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
    Vec3 translation_ = Vec3::Zero();
};

// a * b: applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);
Vec3 transform_point(const Pose& p, const Vec3& v);

inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

// Translation lerp plus shortest-arc slerp. s == 0 and s == 1 return the
// endpoints bit-exactly.
Pose interp_pose(const Pose& a, const Pose& b, double s);

// Angle in radians of the relative rotation a^-1 b, in [0, pi].
double rotation_angle_between(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

// Normalizes and flips to the w >= 0 hemisphere.
Eigen::Quaterniond canonical_quaternion(Eigen::Quaterniond q);

inline constexpr double kDefaultFocalLength = 1000.0;

struct Projection {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
};

// Ideal pinhole camera. Pixel (u, v) has its center at integer coordinates.
class CameraModel {
public:
    CameraModel(double fx, double fy, double cx, double cy, int width, int height);

    // Open-world default: focal length 1000 px, principal point at the image center.
    static CameraModel with_default_intrinsics(int width, int height);

    double fx() const { return fx_; }
    double fy() const { return fy_; }
    double cx() const { return cx_; }
    double cy() const { return cy_; }
    int width() const { return width_; }
    int height() const { return height_; }

    // Same field of view at a different resolution.
    CameraModel resized(int width, int height) const;

    // Continuous pixel coordinates and depth; nullopt when behind the camera
    // or outside [0,width) x [0,height).
    std::optional<Projection> project(const Vec3& p) const;
    Vec3 unproject(double u, double v, double depth) const;

    friend bool operator==(const CameraModel&, const CameraModel&) = default;

private:
    double fx_, fy_, cx_, cy_;
    int width_, height_;
};

std::optional<Projection> project_point(const CameraModel& cam, const Vec3& p);

}  // namespace vmsynth

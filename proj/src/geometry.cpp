#include "vmsynth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vmsynth/error.hpp"
#include "vmsynth/point_cloud.hpp"

namespace vmsynth {

Eigen::Quaterniond canonical_quaternion(Eigen::Quaterniond q) {
    const double n = q.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw InputError("quaternion must be finite and non-zero");
    }
    // Already unit to rounding: leave the bits alone so canonicalization is idempotent.
    if (std::abs(n - 1.0) > 4 * std::numeric_limits<double>::epsilon()) q.coeffs() /= n;
    bool flip = q.w() < 0.0;
    if (q.w() == 0.0) {
        // First non-zero vector component positive.
        if (q.x() != 0.0) flip = q.x() < 0.0;
        else if (q.y() != 0.0) flip = q.y() < 0.0;
        else flip = q.z() < 0.0;
    }
    if (flip) q.coeffs() = -q.coeffs();
    q.coeffs().array() += 0.0;  // -0.0 -> +0.0
    return q;
}

Pose::Pose(const Eigen::Quaterniond& rotation, const Vec3& translation)
    : rotation_(canonical_quaternion(rotation)), translation_(translation) {
    if (!translation.allFinite()) {
        throw InputError("pose translation must be finite");
    }
}

Pose Pose::from_translation(double x, double y, double z) { return from_translation(Vec3(x, y, z)); }

Pose Pose::from_translation(const Vec3& t) { return {Eigen::Quaterniond::Identity(), t}; }

Pose Pose::from_axis_angle(const Vec3& axis, double angle, const Vec3& t) {
    const double n = axis.norm();
    if (!(n > 0.0)) throw InputError("rotation axis must be non-zero");
    return {Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis / n)), t};
}

Pose Pose::from_matrix(const Mat3& rotation, const Vec3& translation) {
    return {Eigen::Quaterniond(rotation), translation};
}

Mat4 Pose::matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation_matrix();
    m.topRightCorner<3, 1>() = translation_;
    return m;
}

Pose compose(const Pose& a, const Pose& b) {
    return {a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation()};
}

Pose invert(const Pose& p) {
    const Eigen::Quaterniond inv = p.rotation().conjugate();
    return {inv, -(inv * p.translation())};
}

Vec3 transform_point(const Pose& p, const Vec3& v) { return p * v; }

double rotation_angle_between(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
    const double d = std::min(1.0, std::abs(a.dot(b)));
    return 2.0 * std::acos(d);
}

Pose interp_pose(const Pose& a, const Pose& b, double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw InputError("interpolation parameter outside [0,1]");
    if (s == 0.0) return a;
    if (s == 1.0) return b;

    const Vec3 t = (1.0 - s) * a.translation() + s * b.translation();

    const Eigen::Quaterniond& qa = a.rotation();
    Eigen::Quaterniond qb = b.rotation();
    double d = qa.dot(qb);
    if (d < 0.0) {
        qb.coeffs() = -qb.coeffs();
        d = -d;
    }
    Eigen::Quaterniond q;
    if (d > 1.0 - 1e-12) {
        q.coeffs() = (1.0 - s) * qa.coeffs() + s * qb.coeffs();
    } else {
        const double theta = std::acos(d);
        const double sin_theta = std::sin(theta);
        const double wa = std::sin((1.0 - s) * theta) / sin_theta;
        const double wb = std::sin(s * theta) / sin_theta;
        q.coeffs() = wa * qa.coeffs() + wb * qb.coeffs();
    }
    return {q, t};
}

CameraModel::CameraModel(double fx, double fy, double cx, double cy, int width, int height)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw InputError("camera dimensions must be positive");
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
        throw InputError("camera focal lengths must be positive");
    }
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
        throw InputError("camera principal point outside the image");
    }
}

CameraModel CameraModel::with_default_intrinsics(int width, int height) {
    return {kDefaultFocalLength, kDefaultFocalLength, width / 2.0, height / 2.0, width, height};
}

CameraModel CameraModel::resized(int width, int height) const {
    const double sx = static_cast<double>(width) / width_;
    const double sy = static_cast<double>(height) / height_;
    return {fx_ * sx, fy_ * sy, cx_ * sx, cy_ * sy, width, height};
}

std::optional<Projection> CameraModel::project(const Vec3& p) const {
    if (!(p.z() > 0.0)) return std::nullopt;
    const double u = fx_ * p.x() / p.z() + cx_;
    const double v = fy_ * p.y() / p.z() + cy_;
    if (!(u >= 0.0 && u < width_ && v >= 0.0 && v < height_)) return std::nullopt;
    return Projection{u, v, p.z()};
}

Vec3 CameraModel::unproject(double u, double v, double depth) const {
    return {(u - cx_) * depth / fx_, (v - cy_) * depth / fy_, depth};
}

std::optional<Projection> project_point(const CameraModel& cam, const Vec3& p) { return cam.project(p); }

void PointCloud::append(const PointCloud& other) {
    positions.insert(positions.end(), other.positions.begin(), other.positions.end());
    colors.insert(colors.end(), other.colors.begin(), other.colors.end());
}

PointCloud PointCloud::transformed(const Pose& pose) const {
    PointCloud out;
    out.positions.reserve(size());
    const Mat3 r = pose.rotation_matrix();
    const Vec3& t = pose.translation();
    for (const auto& p : positions) out.positions.push_back(r * p + t);
    out.colors = colors;
    return out;
}

Vec3 PointCloud::centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& p : positions) c += p;
    return positions.empty() ? c : Vec3(c / static_cast<double>(positions.size()));
}

ImageCloud back_project_indexed(const RgbImage& rgb, const DepthMap& depth, const CameraModel& cam) {
    if (rgb.width != depth.width || rgb.height != depth.height) {
        throw InputError("rgb and depth dimensions differ");
    }
    if (rgb.width != cam.width() || rgb.height != cam.height()) {
        throw InputError("image dimensions do not match the camera");
    }
    ImageCloud out;
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            const float d = depth.at(u, v);
            if (!DepthMap::valid(d)) continue;
            out.cloud.push_back(cam.unproject(u, v, d), rgb.at(u, v));
            out.pixels.push_back({u, v});
        }
    }
    return out;
}

PointCloud back_project(const RgbImage& rgb, const DepthMap& depth, const CameraModel& cam) {
    return back_project_indexed(rgb, depth, cam).cloud;
}

}  // namespace vmsynth

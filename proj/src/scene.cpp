#include "vmsynth/scene.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "vmsynth/error.hpp"
#include "vmsynth/kmeans.hpp"
#include "vmsynth/random.hpp"

namespace vmsynth {

const SceneObject* SceneBundle::find_object(const std::string& name) const {
    for (const auto& o : objects) {
        if (o.name == name) return &o;
    }
    return nullptr;
}

const Keypoint* SceneBundle::find_keypoint(int index) const {
    for (const auto& k : keypoints) {
        if (k.index == index) return &k;
    }
    return nullptr;
}

void validate_scene(const SceneBundle& scene) {
    const auto& cam = scene.camera;
    if (scene.rgb.width != cam.width() || scene.rgb.height != cam.height()) {
        throw InputError("rgb image dimensions do not match the camera");
    }
    if (scene.depth.width != cam.width() || scene.depth.height != cam.height()) {
        throw InputError("depth map dimensions do not match the camera");
    }
    if (scene.background.cloud.empty()) throw InputError("background cloud is empty");
    if (scene.background.pixels.size() != scene.background.cloud.size()) {
        throw InputError("background pixel map does not match the cloud");
    }
    for (auto i : scene.support) {
        if (i >= scene.background.cloud.size()) {
            throw InputError("support index " + std::to_string(i) + " out of range");
        }
    }
    if (!scene.support_normal.isZero() && std::abs(scene.support_normal.norm() - 1.0) > 1e-9) {
        throw InputError("support normal must be unit length");
    }

    std::set<std::string> names;
    for (const auto& o : scene.objects) {
        if (o.name.empty()) throw InputError("object with empty name");
        if (!names.insert(o.name).second) throw InputError("duplicate object name '" + o.name + "'");
        if (o.cloud.empty()) throw InputError("object '" + o.name + "' has an empty cloud");
        if (o.mask.width != cam.width() || o.mask.height != cam.height()) {
            throw InputError("object '" + o.name + "' mask dimensions do not match the camera");
        }
    }

    for (std::size_t i = 0; i < scene.keypoints.size(); ++i) {
        const auto& k = scene.keypoints[i];
        if (k.index != static_cast<int>(i) + 1) throw InputError("keypoint indices must be contiguous from 1");
        if (!k.position.allFinite()) throw InputError("keypoint " + std::to_string(k.index) + " is not finite");
        if (k.movable() && !names.count(k.attachment)) {
            throw InputError("keypoint " + std::to_string(k.index) + " attached to unknown object '" +
                             k.attachment + "'");
        }
    }

    if (scene.features) {
        const auto& f = *scene.features;
        if (f.width != cam.width() || f.height != cam.height()) {
            throw InputError("feature map dimensions do not match the camera");
        }
        if (f.dim <= 0 || f.values.size() != static_cast<std::size_t>(f.width) * f.height * f.dim) {
            throw InputError("feature map size is inconsistent");
        }
    }
}

namespace {

struct PlaneFit {
    Vec3 centroid;
    Vec3 normal;
};

PlaneFit fit_plane(const std::vector<Vec3>& pts) {
    if (pts.size() < 3) throw DegenerateGeometry("plane fit needs at least 3 points");
    Vec3 c = Vec3::Zero();
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : pts) {
        const Vec3 d = p - c;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    if (es.eigenvalues()(1) <= 1e-18) throw DegenerateGeometry("plane fit points are collinear");
    Vec3 n = es.eigenvectors().col(0).normalized();
    if (n.dot(-c) < 0.0) n = -n;
    return {c, n};
}

}  // namespace

Vec3 estimate_support_normal(const SceneBundle& scene) {
    std::vector<Vec3> pts;
    pts.reserve(scene.support.size());
    for (auto i : scene.support) pts.push_back(scene.background.cloud.positions[i]);
    return fit_plane(pts).normal;
}

Plane support_plane(const SceneBundle& scene) {
    if (scene.support.empty()) throw DegenerateGeometry("scene has no support points");
    Vec3 c = Vec3::Zero();
    for (auto i : scene.support) c += scene.background.cloud.positions[i];
    c /= static_cast<double>(scene.support.size());
    const Vec3 n = scene.support_normal.isZero() ? estimate_support_normal(scene) : scene.support_normal;
    return {c, n};
}

namespace {

// Index of the point chosen for each cluster.
std::vector<Eigen::Index> keypoint_sources(const PointCloud& cloud, const FeatureMap* features,
                                           const std::vector<Pixel>& pixels, int k, std::uint64_t seed) {
    const auto n = static_cast<Eigen::Index>(cloud.size());
    if (k < 1) throw InputError("keypoint count must be at least 1");
    if (k > n) throw InputError("keypoint count exceeds the number of points");
    if (features && pixels.size() != cloud.size()) {
        throw InputError("features require a pixel for every point");
    }

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& p : cloud.positions) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    double diag = (hi - lo).norm();
    if (!(diag > 0.0)) diag = 1.0;

    const int fdim = features ? features->dim : 3;
    RowMatrix x(n, fdim + 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (features) {
            const float* f = features->at(pixels[i].u, pixels[i].v);
            double norm2 = 0.0;
            for (int d = 0; d < fdim; ++d) norm2 += static_cast<double>(f[d]) * f[d];
            const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
            for (int d = 0; d < fdim; ++d) x(i, d) = f[d] * inv;
        } else {
            const Rgb c = cloud.colors[i];
            x(i, 0) = c.r / 255.0;
            x(i, 1) = c.g / 255.0;
            x(i, 2) = c.b / 255.0;
        }
        for (int d = 0; d < 3; ++d) x(i, fdim + d) = cloud.positions[i][d] / diag;
    }

    const KMeansResult km = kmeans(x, k, seed);

    std::vector<Eigen::Index> medoid(k, -1);
    std::vector<double> best(k, std::numeric_limits<double>::infinity());
    for (Eigen::Index i = 0; i < n; ++i) {
        const int c = km.assignment[i];
        const double d = squared_distance(x, i, km.centers, c);
        if (d < best[c]) {
            best[c] = d;
            medoid[c] = i;
        }
    }
    for (int c = 0; c < k; ++c) {
        if (medoid[c] < 0) {
            // Empty cluster: nearest sample overall.
            for (Eigen::Index i = 0; i < n; ++i) {
                const double d = squared_distance(x, i, km.centers, c);
                if (d < best[c]) {
                    best[c] = d;
                    medoid[c] = i;
                }
            }
        }
    }
    return medoid;
}

}  // namespace

std::vector<Keypoint> extract_keypoints(const PointCloud& cloud, const FeatureMap* features,
                                        const std::vector<Pixel>& pixels, int k, std::uint64_t seed) {
    std::vector<Keypoint> out;
    int index = 1;
    for (auto i : keypoint_sources(cloud, features, pixels, k, seed)) {
        out.push_back({index++, cloud.positions[i], {}});
    }
    return out;
}

std::vector<Keypoint> extract_scene_keypoints(const SceneBundle& scene, int k, std::uint64_t seed) {
    const auto& bg = scene.background;
    const FeatureMap* features = scene.features ? &*scene.features : nullptr;
    std::vector<Keypoint> kps;
    int index = 1;
    for (auto i : keypoint_sources(bg.cloud, features, bg.pixels, k, seed)) {
        Keypoint kp{index++, bg.cloud.positions[i], {}};
        const Pixel px = bg.pixels[i];
        for (const auto& o : scene.objects) {
            if (o.mask.at(px.u, px.v)) {
                kp.attachment = o.name;
                break;
            }
        }
        kps.push_back(std::move(kp));
    }
    return kps;
}

std::vector<Pose> sample_placements(const SceneBundle& scene, const PixelRect& region, std::size_t n,
                                    double min_clearance, std::uint64_t seed) {
    if (n < 1) throw InputError("placement count must be at least 1");
    std::vector<std::size_t> candidates;
    for (auto i : scene.support) {
        if (region.contains(scene.background.pixels[i])) candidates.push_back(i);
    }
    std::sort(candidates.begin(), candidates.end());
    if (candidates.empty()) throw SamplingExhausted(0, n);

    const Vec3 normal = support_plane(scene).normal;
    const std::size_t budget = std::max<std::size_t>(1000, 100 * n);

    Rng rng(seed);
    std::vector<Pose> out;
    std::vector<Vec3> accepted;
    out.reserve(n);
    const double clearance2 = min_clearance * min_clearance;
    for (std::size_t attempt = 0; attempt < budget && out.size() < n; ++attempt) {
        const Vec3& p = scene.background.cloud.positions[candidates[rng.below(candidates.size())]];
        const double angle = 2.0 * M_PI * rng.uniform();
        bool ok = true;
        for (const auto& q : accepted) {
            if ((p - q).squaredNorm() < clearance2) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        accepted.push_back(p);
        out.push_back(Pose::from_axis_angle(normal, angle, p));
    }
    if (out.size() < n) throw SamplingExhausted(out.size(), n);
    return out;
}

SceneBundle apply_placements(const SceneBundle& scene, const std::map<std::string, Pose>& placements) {
    SceneBundle out = scene;
    if (placements.empty()) return out;
    const Plane plane = support_plane(scene);
    for (const auto& [name, placement] : placements) {
        auto it = std::find_if(out.objects.begin(), out.objects.end(),
                               [&](const SceneObject& o) { return o.name == name; });
        if (it == out.objects.end()) throw InputError("placement for unknown object '" + name + "'");

        const Vec3 c = it->world_cloud().centroid();
        const Vec3 foot = c - plane.signed_distance(c) * plane.normal;
        const Pose move = compose(placement, Pose::from_translation(-foot));
        it->pose = compose(move, it->pose);
        for (auto& kp : out.keypoints) {
            if (kp.attachment == name) kp.position = move * kp.position;
        }
    }
    return out;
}

namespace {

ImageCloud remove_masked_points(const SceneBundle& scene, const Mask& mask) {
    const int w = scene.camera.width();
    const int h = scene.camera.height();
    const auto& bg = scene.background;
    if (mask.count() == 0) return bg;

    std::vector<int> point_at(static_cast<std::size_t>(w) * h, -1);
    for (std::size_t i = 0; i < bg.pixels.size(); ++i) {
        point_at[static_cast<std::size_t>(bg.pixels[i].v) * w + bg.pixels[i].u] = static_cast<int>(i);
    }
    // Support pixels outside the mask.
    std::vector<std::uint8_t> anchor(static_cast<std::size_t>(w) * h, 0);
    for (auto i : scene.support) {
        const Pixel p = bg.pixels[i];
        if (!mask.at(p.u, p.v)) anchor[static_cast<std::size_t>(p.v) * w + p.u] = 1;
    }

    int u_min = w, u_max = -1, v_min = h, v_max = -1;
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            if (!mask.at(u, v)) continue;
            u_min = std::min(u_min, u);
            u_max = std::max(u_max, u);
            v_min = std::min(v_min, v);
            v_max = std::max(v_max, v);
        }
    }
    const int margin = std::max(10, std::max(u_max - u_min, v_max - v_min) / 2);
    auto gather = [&](int m) {
        std::vector<Vec3> pts;
        for (int v = std::max(0, v_min - m); v <= std::min(h - 1, v_max + m); ++v) {
            for (int u = std::max(0, u_min - m); u <= std::min(w - 1, u_max + m); ++u) {
                const auto idx = static_cast<std::size_t>(v) * w + u;
                if (anchor[idx]) pts.push_back(bg.cloud.positions[point_at[idx]]);
            }
        }
        return pts;
    };

    std::optional<PlaneFit> plane;
    for (int m : {margin, std::max(w, h)}) {
        try {
            plane = fit_plane(gather(m));
            break;
        } catch (const DegenerateGeometry&) {
        }
    }

    // Nearest anchor pixel by squared pixel distance, lowest scan index on ties.
    auto nearest_anchor = [&](int u0, int v0) -> int {
        long best_d = std::numeric_limits<long>::max();
        long best_idx = -1;
        const int rmax = std::max(w, h);
        for (int r = 1; r <= rmax; ++r) {
            if (best_idx >= 0 && static_cast<long>(r - 1) * (r - 1) > best_d) break;
            for (int dv = -r; dv <= r; ++dv) {
                const int v = v0 + dv;
                if (v < 0 || v >= h) continue;
                const bool edge_row = dv == -r || dv == r;
                for (int du = -r; du <= r; du += edge_row ? 1 : 2 * r) {
                    const int u = u0 + du;
                    if (u < 0 || u >= w) continue;
                    const long idx = static_cast<long>(v) * w + u;
                    if (!anchor[idx]) continue;
                    const long d = static_cast<long>(du) * du + static_cast<long>(dv) * dv;
                    if (d < best_d || (d == best_d && idx < best_idx)) {
                        best_d = d;
                        best_idx = idx;
                    }
                }
            }
        }
        return best_idx >= 0 ? point_at[best_idx] : -1;
    };

    ImageCloud out;
    out.cloud.reserve(bg.cloud.size());
    out.pixels.reserve(bg.cloud.size());
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            const auto idx = static_cast<std::size_t>(v) * w + u;
            if (!mask.at(u, v)) {
                if (point_at[idx] >= 0) {
                    out.cloud.push_back(bg.cloud.positions[point_at[idx]], bg.cloud.colors[point_at[idx]]);
                    out.pixels.push_back({u, v});
                }
                continue;
            }
            if (!plane) continue;
            const Vec3 ray = scene.camera.unproject(u, v, 1.0);
            const double denom = plane->normal.dot(ray);
            if (std::abs(denom) < 1e-12) continue;
            const double depth = plane->normal.dot(plane->centroid) / denom;
            if (!(depth > 0.0)) continue;
            const int src = nearest_anchor(u, v);
            if (src < 0) continue;
            out.cloud.push_back(ray * depth, bg.cloud.colors[src]);
            out.pixels.push_back({u, v});
        }
    }
    return out;
}

}  // namespace

ImageCloud remove_object_points(const SceneBundle& scene, const std::string& object) {
    const SceneObject* o = scene.find_object(object);
    if (!o) throw InputError("unknown object '" + object + "'");
    return remove_masked_points(scene, o->mask);
}

ImageCloud remove_all_objects(const SceneBundle& scene) {
    Mask all(scene.camera.width(), scene.camera.height());
    for (const auto& o : scene.objects) {
        for (std::size_t i = 0; i < all.bits.size(); ++i) all.bits[i] |= o.mask.bits[i];
    }
    return remove_masked_points(scene, all);
}

double grasp_width(const SceneObject& object, const Vec3& closing_axis, double max_width) {
    const double n = closing_axis.norm();
    if (!(n > 1e-12)) throw InputError("closing axis has zero norm");
    if (std::abs(n - 1.0) > 1e-6) throw InputError("closing axis must be unit length");
    if (object.cloud.empty()) throw InputError("object '" + object.name + "' has an empty cloud");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const Mat3 r = object.pose.rotation_matrix();
    const Vec3& t = object.pose.translation();
    for (const auto& p : object.cloud.positions) {
        const double s = closing_axis.dot(r * p + t);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    return std::clamp(hi - lo, 0.0, max_width);
}

Pose heuristic_grasp(const SceneObject& object, const Vec3& up_in) {
    if (object.cloud.empty()) throw InputError("object '" + object.name + "' has an empty cloud");
    if (!(up_in.norm() > 0.0)) throw InputError("support normal has zero norm");
    const Vec3 up = up_in.normalized();
    const PointCloud world = object.world_cloud();

    double spread = 0.0;
    for (const auto& p : world.positions) spread = std::max(spread, (p - world.positions[0]).norm());
    if (!(spread > 0.0)) throw DegenerateGeometry("object '" + object.name + "' collapses to a single point");

    const Vec3 c = world.centroid();
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& p : world.positions) top = std::max(top, p.dot(up));
    const Vec3 translation = c + (top - c.dot(up)) * up;

    // Deterministic basis of the horizontal plane.
    Eigen::Index least = 0;
    up.cwiseAbs().minCoeff(&least);
    const Vec3 a = Vec3::Unit(least);
    const Vec3 e1 = (a - a.dot(up) * up).normalized();
    const Vec3 e2 = up.cross(e1);

    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : world.positions) {
        const Eigen::Vector2d d((p - c).dot(e1), (p - c).dot(e2));
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    const Eigen::Vector2d minor = es.eigenvectors().col(0);
    Vec3 closing = (minor(0) * e1 + minor(1) * e2).normalized();
    for (int i = 0; i < 3; ++i) {
        if (std::abs(closing(i)) > 1e-12) {
            if (closing(i) < 0.0) closing = -closing;
            break;
        }
    }

    const Vec3 z = -up;
    const Vec3 y = closing;
    const Vec3 x = y.cross(z);
    Mat3 r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    return Pose::from_matrix(r, translation);
}

Pose grasp_pose(const SceneObject& object, const Vec3& up) {
    if (object.grasp) return compose(object.pose, *object.grasp);
    return heuristic_grasp(object, up);
}

}  // namespace vmsynth

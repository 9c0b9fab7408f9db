// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include <json.hpp>

#include "scene_fixtures.hpp"
#include "test_support.hpp"
#include "vmsynth/attachment.hpp"
#include "vmsynth/demo_scene.hpp"
#include "vmsynth/dsl.hpp"
#include "vmsynth/error.hpp"
#include "vmsynth/io/episode.hpp"
#include "vmsynth/io/scene_bundle.hpp"
#include "vmsynth/kmeans.hpp"
#include "vmsynth/metrics.hpp"
#include "vmsynth/random.hpp"
#include "vmsynth/synthesis.hpp"

using namespace vmsynth;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

int run(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string cli() { return VMSYNTH_CLI; }

// FNV-1a over every relative path and file content under `root`, in sorted order.
std::uint64_t tree_hash(const fs::path& root, std::size_t* files = nullptr) {
    std::vector<fs::path> paths;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) paths.push_back(fs::relative(e.path(), root));
    }
    std::sort(paths.begin(), paths.end());
    std::string all;
    for (const auto& p : paths) {
        all += p.generic_string();
        all.push_back('\0');
        all += testsupport::slurp(root / p);
        all.push_back('\0');
    }
    if (files) *files = paths.size();
    return fnv1a64(all);
}

// ---------------------------------------------------------------------------

Outcome attachment_oracle() {
    std::mt19937_64 rng(20240601);
    std::vector<std::array<Pose, 3>> triples;
    for (int i = 0; i < 10000; ++i) {
        triples.push_back({testsupport::random_pose(rng, 2.0), testsupport::random_pose(rng, 2.0),
                           testsupport::random_pose(rng, 2.0)});
    }
    const auto t0 = Clock::now();
    std::vector<Pose> results;
    results.reserve(triples.size());
    for (const auto& [obj, ee_g, ee_t] : triples) results.push_back(attach_transform(obj, ee_g, ee_t));
    const double secs = seconds_since(t0);

    double worst = 0.0;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        const auto& [obj, ee_g, ee_t] = triples[i];
        const Mat4 expected = testsupport::homogeneous(ee_t) *
                              testsupport::rigid_inverse(testsupport::homogeneous(ee_g)) *
                              testsupport::homogeneous(obj);
        worst = std::max(worst, testsupport::max_abs_diff(testsupport::homogeneous(results[i]), expected));
    }
    return {worst < 1e-9 && secs < 1.0,
            "10000 triples, max element error " + fmt("%.3g", worst) + ", " + fmt("%.4f", secs) + " s"};
}

// Plan of exactly 90 frames at 30 fps and 0.1 m/s on the demo scene.
const char* const kNinetyFramePlan = R"(stage reach { move to k[1] - [0, 0, 0.05] rot face-down }
stage pick { grasp "box" width auto }
stage lift { move to k[1] - [0, 0, 0.05] }
stage carry { move to k[1] + [0.05, 0, 0] }
stage place {
  move to k[1] + [0, 0, 0.05]
  release
}
stage settle { wait 0.15 }
)";

struct PickPlace {
    SceneBundle scene = make_demo_scene();
    dsl::ControlProgram program = dsl::parse_program(kNinetyFramePlan);
    Pose x0{Eigen::Quaterniond::Identity(), scene.keypoints[0].position - Vec3(0, 0, 0.1)};
    Trajectory traj = plan_trajectory(program, scene, x0);
};

Outcome grasp_branches() {
    const PickPlace pp;
    const SceneObject& box = pp.scene.objects[0];
    if (pp.traj.grasp_intervals.size() != 1) return {false, "expected one grasp interval"};
    const auto& g = pp.traj.grasp_intervals[0];
    int outside = 0;
    bool unchanged = true;
    Pose previous = box.pose;
    for (int t = 0; t < pp.traj.size(); ++t) {
        const Pose p = object_pose_at(box, pp.traj, t);
        if (t < g.start || t > g.end) {
            ++outside;
            unchanged &= (p == previous);
        }
        previous = p;
    }
    const Mat4 at_tg = testsupport::homogeneous(object_pose_at(box, pp.traj, g.start));
    const double err = testsupport::max_abs_diff(at_tg, testsupport::homogeneous(g.object_at_grasp));
    const bool initial_ok = g.object_at_grasp == box.pose;
    return {unchanged && err < 1e-12 && initial_ok && outside > 0,
            std::to_string(outside) + " frames outside the grasp bit-unchanged: " + (unchanged ? "yes" : "no") +
                "; error at t_g " + fmt("%.3g", err)};
}

Outcome projection_roundtrip() {
    const auto cam = CameraModel::with_default_intrinsics(640, 480);
    if (cam.fx() != 1000.0 || cam.fy() != 1000.0) return {false, "default focal length is not 1000"};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 639.999), v(0.0, 479.999), z(0.05, 20.0);
    double worst = 0.0;
    int projected = 0;
    for (int i = 0; i < 10000; ++i) {
        const double depth = z(rng);
        const Vec3 p((u(rng) - 320.0) * depth / 1000.0, (v(rng) - 240.0) * depth / 1000.0, depth);
        const auto proj = cam.project(p);
        if (!proj) continue;
        ++projected;
        const Vec3 back = cam.unproject(proj->u, proj->v, proj->depth);
        worst = std::max(worst, (back - p).cwiseAbs().maxCoeff());
    }
    return {projected == 10000 && worst < 1e-6,
            std::to_string(projected) + " points, max component error " + fmt("%.3g", worst) + " m"};
}

Outcome rigidity() {
    const PickPlace pp;
    if (pp.traj.size() != 90) return {false, "episode has " + std::to_string(pp.traj.size()) + " frames, not 90"};
    const auto ref = compose_frame(pp.scene, nullptr, pp.traj, 0).objects[0].cloud;
    const std::size_t n = ref.size();
    std::vector<double> d0;
    d0.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) d0.push_back((ref.positions[i] - ref.positions[j]).norm());
    }
    double worst = 0.0;
    double travelled = 0.0;
    for (int t = 1; t < pp.traj.size(); ++t) {
        const auto c = compose_frame(pp.scene, nullptr, pp.traj, t).objects[0].cloud;
        travelled = std::max(travelled, (c.positions[0] - ref.positions[0]).norm());
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                worst = std::max(worst, std::abs((c.positions[i] - c.positions[j]).norm() - d0[k++]));
            }
        }
    }
    return {worst < 1e-9 && travelled > 0.04,
            "90 frames, " + std::to_string(d0.size()) + " pairs, max drift " + fmt("%.3g", worst) +
                " m, object moved " + fmt("%.3f", travelled) + " m"};
}

Outcome determinism(const fs::path& work) {
    const fs::path scene = work / "determinism_scene";
    if (run(cli() + " make-demo --out " + scene.string() + " > /dev/null") != 0) return {false, "make-demo failed"};
    const std::string base = cli() + " synth --scene " + scene.string() + " --plan " +
                             (scene / "pick_place.plan").string() + " --episodes 10 --seed 7 --out ";
    if (run(base + (work / "run_a").string() + " --jobs 1 > /dev/null") != 0) return {false, "first run failed"};
    if (run(base + (work / "run_b").string() + " --jobs 3 > /dev/null") != 0) return {false, "second run failed"};
    std::size_t fa = 0, fb = 0;
    const auto ha = tree_hash(work / "run_a", &fa);
    const auto hb = tree_hash(work / "run_b", &fb);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%zu files, tree hashes %016llx / %016llx (1 vs 3 workers)", fa,
                  static_cast<unsigned long long>(ha), static_cast<unsigned long long>(hb));
    return {ha == hb && fa == fb && fa > 10 * 3, buf};
}

Outcome trajectory_contract() {
    const SceneBundle scene = testsupport::flat_scene(32, 24);
    const auto straight = plan_trajectory(
        dsl::parse_program("stage go { move to pose([0.3, 0, 0], [1, 0, 0, 0]) speed 0.1 }"), scene, Pose{});
    const bool ninety = straight.size() == 90;

    const PickPlace pp;
    TrajectoryConfig cfg;
    bool goals_exact = true;
    dsl::ExecState state = dsl::ExecState::initial(pp.scene, pp.x0, cfg.max_gripper_width);
    for (std::size_t s = 0; s < pp.program.stages.size(); ++s) {
        dsl::SubGoal goal;
        for (const auto& cmd : pp.program.stages[s].commands) {
            goal = dsl::resolve_command(cmd, pp.scene, state);
            dsl::advance(state, cmd, goal);
        }
        goals_exact &= pp.traj.records[pp.traj.stages[s].last].pose == goal.pose;
    }

    bool closed_iff = true;
    for (int t = 0; t < pp.traj.size(); ++t) {
        bool inside = false;
        for (const auto& g : pp.traj.grasp_intervals) inside |= t >= g.start && t <= g.end;
        closed_iff &= pp.traj.records[t].gripper_closed == inside;
    }
    return {ninety && goals_exact && closed_iff,
            "0.3 m move -> " + std::to_string(straight.size()) + " frames; stage goals bit-equal: " +
                (goals_exact ? "yes" : "no") + "; closed iff grasped: " + (closed_iff ? "yes" : "no")};
}

Outcome metrics_contract() {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> px(0, 255);
    auto random_image = [&](int w, int h) {
        RgbImage img(w, h);
        for (auto& b : img.data) b = static_cast<std::uint8_t>(px(rng));
        return img;
    };
    double self_err = 0.0, asym = 0.0;
    for (int i = 0; i < 100; ++i) {
        const RgbImage a = random_image(48, 40);
        const RgbImage b = random_image(48, 40);
        self_err = std::max(self_err, std::abs(metrics::ssim(a, a) - 1.0));
        asym = std::max(asym, std::abs(metrics::ssim(a, b) - metrics::ssim(b, a)));
    }
    const double p = metrics::psnr(RgbImage(64, 64, {10, 20, 30}), RgbImage(64, 64, {11, 21, 31}));
    return {self_err <= 1e-9 && std::abs(p - 48.1308) <= 0.001 && asym <= 1e-12,
            "max |ssim(a,a)-1| " + fmt("%.3g", self_err) + ", uniform-1 PSNR " + fmt("%.4f", p) +
                " dB, max ssim asymmetry " + fmt("%.3g", asym)};
}

Outcome kmeans_contract() {
    bool monotone = true;
    int runs = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0.0, 1.0);
        RowMatrix x(1000, 3);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (int d = 0; d < 3; ++d) x(i, d) = g(rng) + 4.0 * static_cast<double>(i % 5);
        }
        for (int k : {3, 10, 32}) {
            const auto r = kmeans(x, k, seed);
            for (std::size_t i = 1; i < r.wcss_history.size(); ++i) {
                monotone &= r.wcss_history[i] <= r.wcss_history[i - 1];
            }
            const auto again = kmeans(x, k, seed);
            monotone &= again.assignment == r.assignment && again.centers == r.centers;
            ++runs;
        }
    }
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    RowMatrix x(1000, 3);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (int d = 0; d < 3; ++d) x(i, d) = u(rng);
    }
    const double full = kmeans(x, 1000, 11).wcss();
    return {monotone && full == 0.0,
            std::to_string(runs) + " runs monotone and reproducible: " + (monotone ? "yes" : "no") +
                "; K = N = 1000 WCSS " + fmt("%.3g", full)};
}

Outcome dsl_corpus() {
    const fs::path dir = fs::path(VMSYNTH_GOLDEN_DIR) / "dsl";
    int valid = 0, malformed = 0, ok = 0;
    std::set<std::string> seen;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() != ".plan") continue;
        const std::string text = testsupport::slurp(e.path());
        const char kind = e.path().filename().string()[0];
        if (kind == 'v') {
            ++valid;
            try {
                const auto p = dsl::parse_program(text);
                const auto expected = nlohmann::json::parse(testsupport::slurp(fs::path(e.path()).replace_extension(".json")));
                const bool fix = dsl::parse_program(dsl::print_program(p)) == p;
                if (dsl::program_to_json(p) == expected && fix) ++ok;
                if (p.stages.empty()) seen.insert("empty program");
                for (const auto& s : p.stages) {
                    if (s.commands.empty()) seen.insert("empty stage");
                    for (const auto& c : s.commands) {
                        seen.insert(dsl::command_name(c));
                        if (const auto* m = std::get_if<dsl::Move>(&c)) {
                            if (const auto* k = std::get_if<dsl::KeypointExpr>(&m->target)) {
                                seen.insert("kp");
                                for (const auto& o : k->offsets) seen.insert(std::string("offset") + o.sign);
                            } else {
                                seen.insert("pose literal");
                            }
                            if (m->rot) seen.insert("rot" + std::to_string(m->rot->index()));
                            if (m->speed) seen.insert("speed");
                        }
                        if (const auto* g = std::get_if<dsl::Grasp>(&c)) {
                            seen.insert(g->width ? "width number" : "width auto");
                            if (g->approach) seen.insert("approach");
                        }
                        if (const auto* r = std::get_if<dsl::Release>(&c)) {
                            if (r->retreat) seen.insert("retreat");
                        }
                    }
                }
            } catch (const Error&) {
            }
        } else if (kind == 'm') {
            ++malformed;
            std::istringstream err(testsupport::slurp(fs::path(e.path()).replace_extension(".err")));
            std::string where;
            std::getline(err, where);
            try {
                dsl::parse_program(text);
            } catch (const ParseError& pe) {
                if (std::to_string(pe.line()) + ":" + std::to_string(pe.column()) == where) ++ok;
            }
        }
    }
    const std::set<std::string> productions{"move",    "grasp",    "release",      "wait",       "kp",
                                            "offset+", "offset-",  "pose literal", "rot0",       "rot1",
                                            "rot2",    "speed",    "width auto",   "width number", "approach",
                                            "retreat", "empty stage", "empty program"};
    std::size_t covered = 0;
    for (const auto& p : productions) covered += seen.count(p);
    const int total = valid + malformed;
    return {total >= 12 && malformed >= 5 && ok == total && covered == productions.size(),
            std::to_string(total) + " programs (" + std::to_string(malformed) + " malformed), " +
                std::to_string(ok) + " matched; " + std::to_string(covered) + "/" +
                std::to_string(productions.size()) + " productions covered"};
}

Outcome throughput(const fs::path& work) {
    const fs::path scene = work / "throughput_scene";
    if (run(cli() + " make-demo --out " + scene.string() + " --width 256 --height 196 > /dev/null") != 0) {
        return {false, "make-demo failed"};
    }
    const SceneBundle bundle = io::load_scene_bundle(scene);
    const std::size_t points = bundle.background.cloud.size();

    const auto t0 = Clock::now();
    const int rc = run(cli() + " synth --scene " + scene.string() + " --plan " +
                       (scene / "pick_place.plan").string() + " --episodes 100 --seed 1 --speed 0.25" +
                       " --width 128 --height 128 --jobs 1 --out " + (work / "throughput_out").string() +
                       " > /dev/null");
    const double secs = seconds_since(t0);
    if (rc != 0) return {false, "synth failed"};

    rusage usage{};
    getrusage(RUSAGE_CHILDREN, &usage);
    const double peak_mb = usage.ru_maxrss / 1024.0;  // kilobytes on Linux

    std::size_t min_frames = SIZE_MAX, total = 0;
    for (int i = 0; i < 100; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "episode_%05d", i);
        const std::string actions = testsupport::slurp(work / "throughput_out" / name / "actions.jsonl");
        const auto n = static_cast<std::size_t>(std::count(actions.begin(), actions.end(), '\n'));
        min_frames = std::min(min_frames, n);
        total += n;
    }
    const auto first = io::read_episode(work / "throughput_out" / "episode_00000");
    const bool size_ok = first.frames[0].width == 128 && first.frames[0].height == 128;
    return {points >= 50000 && min_frames >= 60 && size_ok && secs <= 60.0 && peak_mb < 1024.0,
            std::to_string(points) + "-point scene, 100 episodes, " + std::to_string(total) + " frames (min " +
                std::to_string(min_frames) + "/episode) at 128x128 in " + fmt("%.1f", secs) + " s, peak RSS " +
                fmt("%.0f", peak_mb) + " MB"};
}

Outcome randomization() {
    const SceneBundle scene = testsupport::flat_scene(200, 150);
    const PixelRect region{0, 0, 200, 150};
    const double clearance = 0.002;
    const auto t0 = Clock::now();
    const auto poses = sample_placements(scene, region, 1000, clearance, 31337);
    const double secs = seconds_since(t0);

    std::set<std::tuple<double, double, double>> support;
    for (auto i : scene.support) {
        if (region.contains(scene.background.pixels[i])) {
            const auto& p = scene.background.cloud.positions[i];
            support.insert({p.x(), p.y(), p.z()});
        }
    }
    bool on_support = true;
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const Vec3& t = poses[i].translation();
        on_support &= support.count({t.x(), t.y(), t.z()}) == 1;
        for (std::size_t j = 0; j < i; ++j) closest = std::min(closest, (t - poses[j].translation()).norm());
    }
    const bool reproducible = sample_placements(scene, region, 1000, clearance, 31337) == poses;
    return {poses.size() == 1000 && on_support && closest >= clearance && reproducible,
            std::to_string(poses.size()) + " placements on " + std::to_string(support.size()) +
                " support points, closest pair " + fmt("%.4f", closest) + " m (min " + fmt("%.3f", clearance) +
                "), reproducible: " + (reproducible ? "yes" : "no") + ", " + fmt("%.3f", secs) + " s"};
}

}  // namespace

int main() {
    const fs::path work = testsupport::temp_dir("acceptance");
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"attachment transform vs 4x4 matrix oracle", attachment_oracle},
        {"object pose branches outside and at grasp onset", grasp_branches},
        {"projection round trip at default focal length", projection_roundtrip},
        {"held-object rigidity over a 90-frame pick-and-place", rigidity},
        {"dataset determinism (synth --episodes 10 --seed 7)", [&] { return determinism(work); }},
        {"trajectory timing, stage goals and gripper flags", trajectory_contract},
        {"PSNR / SSIM identities", metrics_contract},
        {"k-means monotonicity, K = N and determinism", kmeans_contract},
        {"DSL golden corpus and print/parse fixpoint", dsl_corpus},
        {"throughput: 100 episodes over a 50k-point scene", [&] { return throughput(work); }},
        {"placement sampling on a 200x150 support grid", randomization},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    fs::remove_all(work);
    return failed == 0 ? 0 : 1;
}

#include "vmsynth/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "vmsynth/demo_scene.hpp"
#include "vmsynth/error.hpp"
#include "vmsynth/io/episode.hpp"
#include "vmsynth/io/png.hpp"
#include "vmsynth/io/scene_bundle.hpp"
#include "vmsynth/metrics.hpp"
#include "vmsynth/random.hpp"
#include "vmsynth/synthesis.hpp"

namespace vmsynth::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw IoError("cannot write " + path.string());
}

struct RenderFlags {
    double fps = 30.0;
    double speed = 0.1;
    int width = 0;
    int height = 0;
    double splat = 1.0;

    void add_to(CLI::App* app) {
        app->add_option("--fps", fps, "Action and frame rate")->check(CLI::PositiveNumber);
        app->add_option("--speed", speed, "Default end-effector speed in m/s")->check(CLI::PositiveNumber);
        app->add_option("--width", width, "Output frame width (default: source width)")->check(CLI::NonNegativeNumber);
        app->add_option("--height", height, "Output frame height (default: source height)")
            ->check(CLI::NonNegativeNumber);
        app->add_option("--splat", splat, "Splat radius in pixels")->check(CLI::NonNegativeNumber);
    }

    SynthesisConfig config() const {
        if ((width > 0) != (height > 0)) throw InputError("--width and --height must be given together");
        SynthesisConfig c;
        c.trajectory.fps = fps;
        c.trajectory.default_speed = speed;
        c.render.width = width;
        c.render.height = height;
        c.render.splat_radius = splat;
        return c;
    }
};

std::string episode_dir_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "episode_%05zu", i);
    return buf;
}

std::map<std::string, Pose> episode_placements(const SceneBundle& scene, std::uint64_t seed) {
    std::map<std::string, Pose> out;
    if (!scene.randomization) return out;
    const auto& r = *scene.randomization;
    std::vector<std::string> names = r.objects;
    if (names.empty()) {
        for (const auto& o : scene.objects) names.push_back(o.name);
    }
    if (names.empty()) return out;
    const auto poses = sample_placements(scene, r.region, names.size(), r.min_clearance, seed);
    for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = poses[i];
    return out;
}

// ---- synth -------------------------------------------------------------

struct SynthArgs {
    std::string scene;
    std::string plan;
    std::size_t episodes = 1;
    std::uint64_t seed = 0;
    std::string out;
    int jobs = 1;
    RenderFlags render;
};

int run_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
    // Everything that can be checked up front is checked before the output
    // directory is touched.
    const SceneBundle scene = io::load_scene_bundle(a.scene);
    const dsl::ControlProgram program = dsl::parse_program(read_file(a.plan));
    dsl::validate_program(program, scene);
    const SynthesisConfig config = a.render.config();
    for (const auto& name : scene.randomization ? scene.randomization->objects : std::vector<std::string>{}) {
        if (!scene.find_object(name)) throw InputError("randomization names unknown object '" + name + "'");
    }
    plan_trajectory(program, scene, config.x0.value_or(default_home_pose(scene)), config.trajectory);

    const PreparedScene prepared = prepare_scene(scene);
    fs::create_directories(a.out);

    const auto start = std::chrono::steady_clock::now();
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> frames{0};
    std::atomic<bool> failed{false};
    std::mutex err_mutex;
    std::string first_error;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= a.episodes || failed) return;
            try {
                const std::uint64_t seed = derive_seed(a.seed, i);
                const auto placements = episode_placements(scene, seed);
                const Episode ep = synthesize_episode(prepared, program, placements, seed, config);
                io::write_episode(ep, fs::path(a.out) / episode_dir_name(i));
                frames += ep.frames.size();
            } catch (const std::exception& e) {
                std::lock_guard lock(err_mutex);
                if (!failed.exchange(true)) first_error = "episode " + std::to_string(i) + ": " + e.what();
            }
        }
    };
    const int jobs = std::max(1, a.jobs);
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    if (failed) {
        err << "error: " << first_error << '\n';
        return 1;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char line[160];
    std::snprintf(line, sizeof(line), "synthesized %zu episodes, %zu frames in %.2f s (%.1f frames/s)", a.episodes,
                  frames.load(), seconds, seconds > 0 ? frames.load() / seconds : 0.0);
    out << line << '\n';
    return 0;
}

// ---- validate ----------------------------------------------------------

int run_validate(const std::string& scene_dir, const std::string& plan, std::ostream& out) {
    const SceneBundle scene = io::load_scene_bundle(scene_dir);
    const dsl::ControlProgram program = dsl::parse_program(read_file(plan));
    const auto bindings = dsl::validate_program(program, scene);
    out << "ok: " << program.stages.size() << " stages, " << bindings.size() << " bindings, hash "
        << dsl::program_hash(program) << '\n';
    return 0;
}

// ---- render-preview ----------------------------------------------------

int run_preview(const std::string& scene_dir, const std::string& plan, int t, const std::string& out_path,
                const RenderFlags& flags, std::ostream& out) {
    const SceneBundle scene = io::load_scene_bundle(scene_dir);
    const dsl::ControlProgram program = dsl::parse_program(read_file(plan));
    dsl::validate_program(program, scene);
    const SynthesisConfig config = flags.config();
    const Trajectory traj =
        plan_trajectory(program, scene, config.x0.value_or(default_home_pose(scene)), config.trajectory);
    if (t < 0 || t >= traj.size()) {
        throw InputError("--t " + std::to_string(t) + " outside [0, " + std::to_string(traj.size()) + ")");
    }
    const PreparedScene prepared = prepare_scene(scene);
    const auto& rc = config.render;
    const CameraModel camera =
        (rc.width > 0 && rc.height > 0) ? scene.camera.resized(rc.width, rc.height) : scene.camera;
    const FrameCloud frame = compose_frame(scene, prepared.static_background, traj, t, rc.robot);
    const RenderedFrame img = render_frame(frame, camera, rc.splat_radius, rc.background_color);
    io::write_rgb_png(img.rgb, out_path);
    out << "frame " << t << " of " << traj.size() << " (stage '" << traj.records[t].stage << "') -> " << out_path
        << '\n';
    return 0;
}

// ---- eval --------------------------------------------------------------

std::vector<fs::path> png_files(const fs::path& p) {
    if (!fs::is_directory(p)) return {p};
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string format_metric(double v) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

int run_eval(const std::string& ref, const std::string& cand, std::ostream& out) {
    const auto refs = png_files(ref);
    const auto cands = png_files(cand);
    if (refs.size() != cands.size()) {
        throw InputError("reference has " + std::to_string(refs.size()) + " images, candidate has " +
                         std::to_string(cands.size()));
    }
    out << "path_ref,path_cand,psnr_db,ssim\n";
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const RgbImage a = io::read_rgb_png(refs[i]);
        const RgbImage b = io::read_rgb_png(cands[i]);
        out << refs[i].string() << ',' << cands[i].string() << ',' << format_metric(metrics::psnr(a, b)) << ','
            << format_metric(metrics::ssim(a, b)) << '\n';
    }
    return 0;
}

// ---- keypoints ---------------------------------------------------------

int run_keypoints(const std::string& scene_dir, int k, std::uint64_t seed, std::ostream& out) {
    const SceneBundle scene = io::load_scene_bundle(scene_dir);
    const auto keypoints = extract_scene_keypoints(scene, k, seed);
    io::write_keypoints(keypoints, fs::path(scene_dir) / "keypoints.json");
    const fs::path manifest = fs::path(scene_dir) / "scene.json";
    auto root = nlohmann::json::parse(read_file(manifest));
    root["keypoints"] = "keypoints.json";
    write_file(manifest, root.dump(2) + "\n");
    std::size_t movable = 0;
    for (const auto& kp : keypoints) movable += kp.movable();
    out << "wrote " << keypoints.size() << " keypoints (" << movable << " on objects) to "
        << (fs::path(scene_dir) / "keypoints.json").string() << '\n';
    return 0;
}

// ---- make-demo ---------------------------------------------------------

int run_make_demo(const std::string& dir, int width, int height, std::ostream& out) {
    DemoSceneOptions opt;
    opt.width = width;
    opt.height = height;
    const SceneBundle scene = make_demo_scene(opt);
    io::write_scene_bundle(scene, dir);
    write_file(fs::path(dir) / "pick_place.plan", kDemoPickPlacePlan);
    out << "wrote demo scene (" << scene.background.cloud.size() << " points) to " << dir << '\n';
    return 0;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthesize robot manipulation episodes from a single RGB-D view"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate randomized episodes");
    s->add_option("--scene", synth.scene, "Scene bundle directory")->required();
    s->add_option("--plan", synth.plan, "Control program file")->required();
    s->add_option("--episodes", synth.episodes, "Number of episodes")->required()->check(CLI::PositiveNumber);
    s->add_option("--seed", synth.seed, "Dataset seed")->required();
    s->add_option("--out", synth.out, "Output directory")->required();
    s->add_option("--jobs", synth.jobs, "Worker threads")->check(CLI::PositiveNumber);
    synth.render.add_to(s);

    std::string scene_dir, plan;
    auto* v = app.add_subcommand("validate", "Parse a plan and bind it against a scene bundle");
    v->add_option("--scene", scene_dir, "Scene bundle directory")->required();
    v->add_option("--plan", plan, "Control program file")->required();

    int t = 0;
    std::string out_path;
    RenderFlags preview_flags;
    auto* r = app.add_subcommand("render-preview", "Render a single frame of a plan");
    r->add_option("--scene", scene_dir, "Scene bundle directory")->required();
    r->add_option("--plan", plan, "Control program file")->required();
    r->add_option("--t", t, "Frame index")->required();
    r->add_option("--out", out_path, "Output PNG")->required();
    preview_flags.add_to(r);

    std::string ref, cand;
    auto* e = app.add_subcommand("eval", "PSNR and SSIM between images or directories of images");
    e->add_option("--ref", ref, "Reference image or directory")->required();
    e->add_option("--cand", cand, "Candidate image or directory")->required();

    int k = 0;
    std::uint64_t kp_seed = 0;
    auto* kp = app.add_subcommand("keypoints", "Extract keypoints and store them in the bundle");
    kp->add_option("--scene", scene_dir, "Scene bundle directory")->required();
    kp->add_option("--k", k, "Number of keypoints")->required()->check(CLI::PositiveNumber);
    kp->add_option("--seed", kp_seed, "Clustering seed");

    int demo_w = 320, demo_h = 240;
    auto* d = app.add_subcommand("make-demo", "Write the synthetic demo scene bundle and plan");
    d->add_option("--out", out_path, "Bundle directory")->required();
    d->add_option("--width", demo_w, "Image width");
    d->add_option("--height", demo_h, "Image height");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        return app.exit(ex, out, err);
    }

    try {
        if (*s) return run_synth(synth, out, err);
        if (*v) return run_validate(scene_dir, plan, out);
        if (*r) return run_preview(scene_dir, plan, t, out_path, preview_flags, out);
        if (*e) return run_eval(ref, cand, out);
        if (*kp) return run_keypoints(scene_dir, k, kp_seed, out);
        if (*d) return run_make_demo(out_path, demo_w, demo_h, out);
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace vmsynth::cli

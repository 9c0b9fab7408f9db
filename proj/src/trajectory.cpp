#include "vmsynth/trajectory.hpp"

#include <cmath>

#include "vmsynth/error.hpp"

namespace vmsynth {

const GraspInterval* Trajectory::interval_at(int t) const {
    for (const auto& g : grasp_intervals) {
        if (t >= g.start && t <= g.end) return &g;
    }
    return nullptr;
}

int segment_frames(double distance, double angle, double speed, double angular_speed, double fps) {
    const double seconds = std::max(distance / speed, angle / angular_speed);
    // The slack keeps e.g. 0.3 m / 0.1 m/s * 30 fps at 90 frames despite rounding.
    const double frames = std::ceil(seconds * fps - 1e-9);
    return std::max(1, static_cast<int>(frames));
}

namespace {

class Builder {
public:
    Builder(Trajectory& traj, const TrajectoryConfig& cfg) : traj_(traj), cfg_(cfg) {}

    void set_stage(const std::string& name) { stage_ = name; }

    void emit(const Pose& pose, double width, bool closed) {
        traj_.records.push_back({static_cast<int>(traj_.records.size()), pose, width, closed, stage_});
    }

    void move(const Pose& from, const Pose& to, double speed, double width, bool closed) {
        const double dist = (to.translation() - from.translation()).norm();
        const double angle = rotation_angle_between(from.rotation(), to.rotation());
        const int n = segment_frames(dist, angle, speed, cfg_.angular_speed, cfg_.fps);
        for (int k = 1; k <= n; ++k) emit(interp_pose(from, to, static_cast<double>(k) / n), width, closed);
    }

    // Width ramp at a fixed pose; `closed_at_end` marks only the last frame closed.
    void ramp(const Pose& pose, double from, double to, bool closed_before, bool closed_at_end) {
        const int n = cfg_.close_frames;
        for (int k = 1; k <= n; ++k) {
            const double w = k == n ? to : from + (to - from) * static_cast<double>(k) / n;
            emit(pose, w, k == n ? closed_at_end : closed_before);
        }
    }

    void hold(const Pose& pose, int frames, double width, bool closed) {
        for (int k = 0; k < frames; ++k) emit(pose, width, closed);
    }

    int last() const { return static_cast<int>(traj_.records.size()) - 1; }

private:
    Trajectory& traj_;
    const TrajectoryConfig& cfg_;
    std::string stage_;
};

}  // namespace

Trajectory plan_trajectory(const dsl::ControlProgram& program, const SceneBundle& scene, const Pose& x0,
                           const TrajectoryConfig& config) {
    if (program.stages.empty()) throw InputError("cannot plan an empty program");
    if (!(config.fps > 0.0) || !(config.default_speed > 0.0) || !(config.angular_speed > 0.0)) {
        throw InputError("fps, speed and angular speed must be positive");
    }
    if (config.close_frames < 1 || config.dwell_frames < 0) throw InputError("invalid gripper ramp configuration");

    Trajectory traj;
    traj.fps = config.fps;
    Builder out(traj, config);
    const dsl::ResolveOptions options{config.max_gripper_width};
    dsl::ExecState state = dsl::ExecState::initial(scene, x0, config.max_gripper_width);

    for (const auto& stage : program.stages) {
        if (stage.commands.empty()) throw ValidationError(stage.name, "stage has no commands");
        out.set_stage(stage.name);
        const int first = out.last() + 1;
        dsl::SubGoal goal;
        for (const auto& cmd : stage.commands) {
            try {
                goal = dsl::resolve_command(cmd, scene, state, options);
            } catch (const ValidationError&) {
                throw;
            } catch (const Error& e) {
                throw ValidationError(stage.name, e.what());
            }
            const bool holding = state.held.has_value();

            if (const auto* m = std::get_if<dsl::Move>(&cmd)) {
                out.move(state.ee, goal.pose, m->speed.value_or(config.default_speed), state.width, holding);
            } else if (const auto* g = std::get_if<dsl::Grasp>(&cmd)) {
                if (holding) throw ValidationError(stage.name, "grasp while holding '" + state.held->object + "'");
                Pose at = state.ee;
                if (goal.via) {
                    out.move(at, *goal.via, config.default_speed, state.width, false);
                    at = *goal.via;
                }
                out.move(at, goal.pose, config.default_speed, state.width, false);
                out.ramp(goal.pose, state.width, goal.width, false, true);
                const int onset = out.last();
                traj.grasp_onsets.push_back(onset);
                traj.grasp_intervals.push_back({g->object, onset, -1, state.object_pose(g->object), goal.pose});
                out.hold(goal.pose, config.dwell_frames, goal.width, true);
            } else if (const auto* r = std::get_if<dsl::Release>(&cmd)) {
                if (!holding) throw ValidationError(stage.name, "release while not holding an object");
                traj.grasp_intervals.back().end = out.last();
                out.ramp(state.ee, state.width, goal.width, false, false);
                out.hold(state.ee, config.dwell_frames, goal.width, false);
                if (r->retreat) out.move(state.ee, goal.pose, config.default_speed, goal.width, false);
            } else {
                const auto& w = std::get<dsl::Wait>(cmd);
                const int n = std::max(1, static_cast<int>(std::ceil(w.duration * config.fps - 1e-9)));
                out.hold(state.ee, n, state.width, holding);
            }
            dsl::advance(state, cmd, goal);
        }
        traj.stages.push_back({stage.name, first, out.last(), goal.pose});
    }
    if (!traj.grasp_intervals.empty() && traj.grasp_intervals.back().end < 0) {
        traj.grasp_intervals.back().end = out.last();
    }
    return traj;
}

}  // namespace vmsynth

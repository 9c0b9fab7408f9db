#pragma once

#include <string>
#include <vector>

#include "vmsynth/dsl.hpp"
#include "vmsynth/geometry.hpp"
#include "vmsynth/scene.hpp"

namespace vmsynth {

struct TrajectoryConfig {
    double fps = 30.0;
    double default_speed = 0.1;   // m/s
    double angular_speed = 1.0;   // rad/s
    int close_frames = 5;         // gripper close/open ramp length
    int dwell_frames = 0;         // extra still frames after closing or opening
    double max_gripper_width = kDefaultMaxGripperWidth;
};

struct ActionRecord {
    int t = 0;
    Pose pose;
    double gripper_width = 0.0;
    bool gripper_closed = false;
    std::string stage;

    friend bool operator==(const ActionRecord&, const ActionRecord&) = default;
};

// Frames [start, end] during which `object` is held. The onset pair is what the
// rigid attachment is computed from.
struct GraspInterval {
    std::string object;
    int start = 0;  // t_g: first frame with the gripper closed on the object
    int end = 0;
    Pose object_at_grasp;
    Pose ee_at_grasp;
};

struct StageSpan {
    std::string name;
    int first = 0;
    int last = 0;
    Pose sub_goal;
};

struct Trajectory {
    std::vector<ActionRecord> records;
    double fps = 30.0;
    std::vector<int> grasp_onsets;
    std::vector<GraspInterval> grasp_intervals;
    std::vector<StageSpan> stages;

    int size() const { return static_cast<int>(records.size()); }
    // Interval containing frame t, if any.
    const GraspInterval* interval_at(int t) const;
};

// Frames needed to cover a segment at the given rates: at least 1.
int segment_frames(double distance, double angle, double speed, double angular_speed, double fps);

// Samples the sub-goal chain at a fixed rate. Each stage ends exactly on its
// sub-goal; grasps insert an optional approach waypoint and a close ramp.
Trajectory plan_trajectory(const dsl::ControlProgram& program, const SceneBundle& scene, const Pose& x0,
                           const TrajectoryConfig& config = {});

}  // namespace vmsynth

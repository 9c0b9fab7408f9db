#include <doctest.h>

#include "scene_fixtures.hpp"
#include "vmsynth/demo_scene.hpp"
#include "vmsynth/error.hpp"
#include "vmsynth/trajectory.hpp"

using namespace vmsynth;

namespace {

Trajectory plan(const std::string& text, const SceneBundle& scene, const Pose& x0 = {},
                const TrajectoryConfig& cfg = {}) {
    return plan_trajectory(dsl::parse_program(text), scene, x0, cfg);
}

}  // namespace

TEST_CASE("segment frame counts") {
    CHECK(segment_frames(0.3, 0.0, 0.1, 1.0, 30.0) == 90);
    CHECK(segment_frames(0.0, 0.0, 0.1, 1.0, 30.0) == 1);
    CHECK(segment_frames(0.01, 0.0, 0.1, 1.0, 30.0) == 3);
    CHECK(segment_frames(0.0, M_PI / 2, 0.1, 1.0, 30.0) == 48);    // 47.12 -> 48
    CHECK(segment_frames(0.1, M_PI / 2, 0.1, 1.0, 30.0) == 48);    // rotation dominates
    CHECK(segment_frames(0.2, 0.1, 0.1, 1.0, 10.0) == 20);
}

TEST_CASE("a 0.3 m move at 0.1 m/s and 30 fps takes 90 frames and ends on its goal") {
    const SceneBundle s = testsupport::small_demo_scene();
    const Trajectory t = plan("stage go { move to pose([0.3, 0, 0], [1, 0, 0, 0]) speed 0.1 }", s);
    REQUIRE(t.size() == 90);
    CHECK(t.records.back().pose == Pose::from_translation(0.3, 0, 0));
    CHECK(t.stages.size() == 1);
    CHECK(t.stages[0].first == 0);
    CHECK(t.stages[0].last == 89);
    CHECK(t.records.back().pose == t.stages[0].sub_goal);
    // Evenly spaced samples; the start pose itself is not a frame.
    for (int i = 0; i < 90; ++i) {
        CHECK(t.records[i].t == i);
        CHECK(t.records[i].pose.translation().x() == doctest::Approx(0.3 * (i + 1) / 90.0));
        CHECK_FALSE(t.records[i].gripper_closed);
    }
}

TEST_CASE("default speed and fps come from the configuration") {
    const SceneBundle s = testsupport::small_demo_scene();
    TrajectoryConfig cfg;
    cfg.fps = 10;
    cfg.default_speed = 0.05;
    const Trajectory t = plan("stage go { move to pose([0, 0.1, 0], [1, 0, 0, 0]) }", s, {}, cfg);
    CHECK(t.size() == 20);
    CHECK(t.fps == 10);
}

TEST_CASE("wait holds the pose") {
    const SceneBundle s = testsupport::small_demo_scene();
    const Pose x0 = Pose::from_translation(0.1, 0.2, 0.3);
    const Trajectory t = plan("stage w { wait 0.5 }", s, x0);
    REQUIRE(t.size() == 15);
    for (const auto& r : t.records) CHECK(r.pose == x0);
}

TEST_CASE("pick-and-place: grasp intervals, closed flags and stage goals") {
    const SceneBundle s = testsupport::small_demo_scene();
    TrajectoryConfig cfg;
    cfg.dwell_frames = 2;
    const Pose x0 = Pose::from_translation(0, 0, 1.5);
    const auto program = dsl::parse_program(kDemoPickPlacePlan);
    const Trajectory t = plan_trajectory(program, s, x0, cfg);

    // Dense and contiguous records, one stage span after another.
    int expected_first = 0;
    for (const auto& span : t.stages) {
        CHECK(span.first == expected_first);
        CHECK(span.last >= span.first);
        CHECK(t.records[span.last].pose == span.sub_goal);
        for (int i = span.first; i <= span.last; ++i) CHECK(t.records[i].stage == span.name);
        expected_first = span.last + 1;
    }
    CHECK(expected_first == t.size());
    for (int i = 0; i < t.size(); ++i) CHECK(t.records[i].t == i);

    REQUIRE(t.grasp_intervals.size() == 1);
    REQUIRE(t.grasp_onsets.size() == 1);
    const auto& g = t.grasp_intervals[0];
    CHECK(g.object == "box");
    CHECK(g.start == t.grasp_onsets[0]);
    CHECK(g.end > g.start);
    CHECK(g.ee_at_grasp == t.records[g.start].pose);
    CHECK(g.object_at_grasp == s.objects[0].pose);

    for (int i = 0; i < t.size(); ++i) {
        const bool inside = i >= g.start && i <= g.end;
        CHECK(t.records[i].gripper_closed == inside);
        CHECK((t.interval_at(i) != nullptr) == inside);
    }
    // t_g is the first closed frame and carries the closing width.
    CHECK_FALSE(t.records[g.start - 1].gripper_closed);
    CHECK(t.records[g.start].gripper_width == doctest::Approx(0.03));
    // The close ramp narrows monotonically from open to the grasp width.
    for (int i = g.start - cfg.close_frames + 1; i <= g.start; ++i) {
        CHECK(t.records[i].gripper_width <= t.records[i - 1].gripper_width);
        CHECK(t.records[i].pose == t.records[g.start].pose);
    }
    // Released: open again at the end.
    CHECK(t.records.back().gripper_width == kDefaultMaxGripperWidth);
}

TEST_CASE("an unreleased grasp stays closed to the end") {
    const SceneBundle s = testsupport::small_demo_scene();
    const Trajectory t = plan("stage a { grasp \"box\" }\nstage b { move to k[2] - [0, 0, 0.1] }", s,
                              Pose::from_translation(0, 0, 1.5));
    REQUIRE(t.grasp_intervals.size() == 1);
    CHECK(t.grasp_intervals[0].end == t.size() - 1);
    CHECK(t.records.back().gripper_closed);
}

TEST_CASE("planning errors name the stage") {
    const SceneBundle s = testsupport::small_demo_scene();
    try {
        plan("stage ok { wait 0.1 }\nstage bad { move to pose([0, 0, 0], [0, 0, 0, 0]) }", s);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(e.stage() == "bad");
    }
    TrajectoryConfig cfg;
    cfg.fps = 0;
    CHECK_THROWS_AS(plan("stage a { wait 1 }", s, {}, cfg), InputError);
}

TEST_CASE("planning is deterministic") {
    const SceneBundle s = testsupport::small_demo_scene();
    const auto a = plan(kDemoPickPlacePlan, s, Pose::from_translation(0, 0, 1.5));
    const auto b = plan(kDemoPickPlacePlan, s, Pose::from_translation(0, 0, 1.5));
    CHECK(a.records == b.records);
}

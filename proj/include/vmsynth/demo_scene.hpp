#pragma once

#include "vmsynth/scene.hpp"

namespace vmsynth {

// Synthetic top-down tabletop: a textured table plane, a red box and a green
// target marker. Keypoint 1 is the box top center (attached to "box"),
// keypoint 2 the marker center. The randomization region covers the left part
// of the table, away from the marker.
struct DemoSceneOptions {
    int width = 320;
    int height = 240;
    double table_depth = 0.8;                // camera to table, meters
    Vec3 box_size = Vec3(0.04, 0.03, 0.035);  // x, y, height
    double box_x = -0.045;                   // box center on the table, camera x/y
    double box_y = 0.0;
    double marker_x = 0.05;
    double marker_y = 0.01;
    double marker_size = 0.04;
    double object_spacing = 0.0015;
};

SceneBundle make_demo_scene(const DemoSceneOptions& options = {});

// Canonical pick-and-place plan for the demo scene.
extern const char* const kDemoPickPlacePlan;

}  // namespace vmsynth

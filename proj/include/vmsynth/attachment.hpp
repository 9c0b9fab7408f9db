#pragma once

#include "vmsynth/geometry.hpp"

namespace vmsynth {

// Pose of an object rigidly held by the end-effector:
//   T_obj(t) = T_ee(t) * T_ee(t_g)^-1 * T_obj(t_g)
// where t_g is the grasp onset.
inline Pose attach_transform(const Pose& object_at_grasp, const Pose& ee_at_grasp, const Pose& ee_now) {
    return compose(compose(ee_now, invert(ee_at_grasp)), object_at_grasp);
}

}  // namespace vmsynth

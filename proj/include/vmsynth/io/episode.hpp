#pragma once

#include <filesystem>

#include "vmsynth/synthesis.hpp"

namespace vmsynth::io {

// Episode directory layout:
//
//   frames/%06d.png   8-bit RGB, one per action
//   actions.jsonl     {t, pose:{qw,qx,qy,qz,x,y,z}, gripper_width, gripper_closed, stage}
//   meta.json         fps, seed, program_hash, camera, scene_id, placements
//
// The directory is assembled under "<dir>.partial" and renamed into place, so
// a failed write leaves nothing behind. Returns the path of meta.json.
std::filesystem::path write_episode(const Episode& episode, const std::filesystem::path& dir);

Episode read_episode(const std::filesystem::path& dir);

}  // namespace vmsynth::io

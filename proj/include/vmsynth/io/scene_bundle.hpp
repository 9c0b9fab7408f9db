#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "vmsynth/scene.hpp"

namespace vmsynth::io {

inline constexpr int kSceneSchemaVersion = 1;

// Loads and validates a scene bundle directory:
//
//   scene.json            manifest (schema_version, camera, robot_base, support,
//                         objects, optional features / keypoints / randomization)
//   rgb.png               8-bit RGB source view
//   depth.png             16-bit millimeters, 0 = invalid
//   masks/<object>.png    binary footprint per object
//   objects/<object>.ply  object cloud in its local frame
//   features.bin          optional per-pixel features
//   keypoints.json        optional precomputed keypoints
//
// Errors are LoadError naming the file and field.
SceneBundle load_scene_bundle(const std::filesystem::path& dir);

// Writes a bundle in the layout above. The support region is stored as
// support.png. Keypoints are written when present.
void write_scene_bundle(const SceneBundle& scene, const std::filesystem::path& dir);

std::vector<Keypoint> read_keypoints(const std::filesystem::path& path);
void write_keypoints(const std::vector<Keypoint>& keypoints, const std::filesystem::path& path);

// Header: width, height, dim as little-endian uint32; then width*height*dim
// little-endian float32 values, row-major with dim contiguous.
FeatureMap read_features(const std::filesystem::path& path);
void write_features(const FeatureMap& features, const std::filesystem::path& path);

// {"qw","qx","qy","qz","x","y","z"}
nlohmann::json pose_to_json(const Pose& p);
Pose pose_from_json(const nlohmann::json& j);

}  // namespace vmsynth::io

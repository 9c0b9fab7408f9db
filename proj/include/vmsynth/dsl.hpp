#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vmsynth/geometry.hpp"
#include "vmsynth/scene.hpp"

namespace vmsynth::dsl {

// Quaternion literal as written, (w, x, y, z); not normalized.
struct QuatLiteral {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;
    friend bool operator==(const QuatLiteral&, const QuatLiteral&) = default;
};

struct Offset {
    char sign = '+';
    Vec3 value = Vec3::Zero();
    friend bool operator==(const Offset&, const Offset&) = default;
};

// k[index] followed by signed vector offsets.
struct KeypointExpr {
    int index = 0;
    std::vector<Offset> offsets;
    friend bool operator==(const KeypointExpr&, const KeypointExpr&) = default;
};

struct LiteralPose {
    Vec3 position = Vec3::Zero();
    QuatLiteral rotation;
    friend bool operator==(const LiteralPose&, const LiteralPose&) = default;
};

using PoseExpr = std::variant<KeypointExpr, LiteralPose>;

struct RotKeep {
    friend bool operator==(const RotKeep&, const RotKeep&) = default;
};
struct RotFaceDown {
    friend bool operator==(const RotFaceDown&, const RotFaceDown&) = default;
};
using RotDirective = std::variant<RotKeep, RotFaceDown, QuatLiteral>;

struct Move {
    PoseExpr target;
    std::optional<RotDirective> rot;
    std::optional<double> speed;
    friend bool operator==(const Move&, const Move&) = default;
};

struct Grasp {
    std::string object;
    std::optional<double> width;  // nullopt: auto
    std::optional<Vec3> approach;
    friend bool operator==(const Grasp&, const Grasp&) = default;
};

struct Release {
    std::optional<Vec3> retreat;
    friend bool operator==(const Release&, const Release&) = default;
};

struct Wait {
    double duration = 0.0;
    friend bool operator==(const Wait&, const Wait&) = default;
};

using Command = std::variant<Move, Grasp, Release, Wait>;

struct Stage {
    std::string name;
    std::vector<Command> commands;
    int line = 0;  // source line of the `stage` keyword; not part of equality

    friend bool operator==(const Stage& a, const Stage& b) {
        return a.name == b.name && a.commands == b.commands;
    }
};

struct ControlProgram {
    std::vector<Stage> stages;
    friend bool operator==(const ControlProgram&, const ControlProgram&) = default;
};

// Throws ParseError with 1-based line/column and the expected-token set.
ControlProgram parse_program(std::string_view text);

// Canonical text form; parse_program(print_program(p)) == p.
std::string print_program(const ControlProgram& program);

// Structural dump used for golden files.
nlohmann::json program_to_json(const ControlProgram& program);

// FNV-1a of the canonical text, 16 lowercase hex digits.
std::string program_hash(const ControlProgram& program);

const char* command_name(const Command& c);

struct Binding {
    std::string stage;
    enum class Kind { keypoint, object } kind;
    int keypoint = 0;
    std::string object;

    friend bool operator==(const Binding&, const Binding&) = default;
};

// Binds every keypoint and object reference and checks grasp/release nesting.
// Throws ValidationError naming the stage.
std::vector<Binding> validate_program(const ControlProgram& program, const SceneBundle& scene);

enum class GripperCommand { open, close, hold };

struct ResolveOptions {
    double max_gripper_width = kDefaultMaxGripperWidth;
};

struct GraspReference {
    std::string object;
    Pose object_at_grasp;
    Pose ee_at_grasp;
};

// Kinematic state threaded through the stages.
struct ExecState {
    Pose ee;
    double width = kDefaultMaxGripperWidth;
    std::map<std::string, Pose> object_poses;  // settled pose of every object not held
    std::optional<GraspReference> held;

    static ExecState initial(const SceneBundle& scene, const Pose& x0, double open_width = kDefaultMaxGripperWidth);

    Pose object_pose(const std::string& name) const;
    std::optional<std::string> holding() const {
        return held ? std::optional<std::string>(held->object) : std::nullopt;
    }
};

// Current position of keypoint `index`. Keypoints attached to an object move
// with it, so a keypoint on a held object follows the end-effector.
Vec3 keypoint_position(const SceneBundle& scene, const ExecState& state, int index);

struct SubGoal {
    Pose pose;                // end-effector pose when the command completes
    GripperCommand gripper = GripperCommand::hold;
    double width = 0.0;       // gripper width once the gripper command is done
    std::optional<Pose> via;  // grasp: pre-grasp pose reached before `pose`
};

SubGoal resolve_command(const Command& command, const SceneBundle& scene, const ExecState& state,
                        const ResolveOptions& options = {});

// Applies a resolved command: moves the end-effector and updates the grasp.
void advance(ExecState& state, const Command& command, const SubGoal& goal);

// Folds resolve_command over the stage's commands; returns the final sub-goal.
SubGoal resolve_stage(const Stage& stage, const SceneBundle& scene, ExecState state,
                      const ResolveOptions& options = {});

}  // namespace vmsynth::dsl

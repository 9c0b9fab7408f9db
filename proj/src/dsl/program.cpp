#include <charconv>
#include <cmath>
#include <cstdio>

#include "vmsynth/attachment.hpp"
#include "vmsynth/dsl.hpp"
#include "vmsynth/error.hpp"
#include "vmsynth/random.hpp"

namespace vmsynth::dsl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Shortest text that reads back to the same double.
std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fmt(const Vec3& v) { return "[" + fmt(v.x()) + ", " + fmt(v.y()) + ", " + fmt(v.z()) + "]"; }

std::string fmt(const QuatLiteral& q) {
    return "[" + fmt(q.w) + ", " + fmt(q.x) + ", " + fmt(q.y) + ", " + fmt(q.z) + "]";
}

std::string fmt(const PoseExpr& e) {
    return std::visit(overloaded{
                          [](const KeypointExpr& k) {
                              std::string s = "k[" + std::to_string(k.index) + "]";
                              for (const auto& o : k.offsets) s += std::string(" ") + o.sign + " " + fmt(o.value);
                              return s;
                          },
                          [](const LiteralPose& p) { return "pose(" + fmt(p.position) + ", " + fmt(p.rotation) + ")"; },
                      },
                      e);
}

std::string fmt(const RotDirective& r) {
    return std::visit(overloaded{
                          [](const RotKeep&) { return std::string("keep"); },
                          [](const RotFaceDown&) { return std::string("face-down"); },
                          [](const QuatLiteral& q) { return fmt(q); },
                      },
                      r);
}

std::string fmt(const Command& c) {
    return std::visit(overloaded{
                          [](const Move& m) {
                              std::string s = "move to " + fmt(m.target);
                              if (m.rot) s += " rot " + fmt(*m.rot);
                              if (m.speed) s += " speed " + fmt(*m.speed);
                              return s;
                          },
                          [](const Grasp& g) {
                              std::string s = "grasp \"" + g.object + "\" width " + (g.width ? fmt(*g.width) : "auto");
                              if (g.approach) s += " approach " + fmt(*g.approach);
                              return s;
                          },
                          [](const Release& r) {
                              std::string s = "release";
                              if (r.retreat) s += " retreat " + fmt(*r.retreat);
                              return s;
                          },
                          [](const Wait& w) { return "wait " + fmt(w.duration); },
                      },
                      c);
}

nlohmann::json to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
nlohmann::json to_json(const QuatLiteral& q) { return {q.w, q.x, q.y, q.z}; }

nlohmann::json to_json(const Command& c) {
    using nlohmann::json;
    return std::visit(
        overloaded{
            [](const Move& m) {
                json target = std::visit(overloaded{
                                             [](const KeypointExpr& k) {
                                                 json offsets = json::array();
                                                 for (const auto& o : k.offsets) {
                                                     offsets.push_back({{"sign", std::string(1, o.sign)},
                                                                        {"vec", to_json(o.value)}});
                                                 }
                                                 return json{{"type", "keypoint"}, {"index", k.index},
                                                             {"offsets", offsets}};
                                             },
                                             [](const LiteralPose& p) {
                                                 return json{{"type", "pose"}, {"position", to_json(p.position)},
                                                             {"rotation", to_json(p.rotation)}};
                                             },
                                         },
                                         m.target);
                json rot = nullptr;
                if (m.rot) {
                    rot = std::visit(overloaded{
                                         [](const RotKeep&) { return json("keep"); },
                                         [](const RotFaceDown&) { return json("face-down"); },
                                         [](const QuatLiteral& q) { return to_json(q); },
                                     },
                                     *m.rot);
                }
                return json{{"kind", "move"}, {"target", target}, {"rot", rot},
                            {"speed", m.speed ? json(*m.speed) : json(nullptr)}};
            },
            [](const Grasp& g) {
                return json{{"kind", "grasp"},
                            {"object", g.object},
                            {"width", g.width ? json(*g.width) : json("auto")},
                            {"approach", g.approach ? to_json(*g.approach) : json(nullptr)}};
            },
            [](const Release& r) {
                return json{{"kind", "release"}, {"retreat", r.retreat ? to_json(*r.retreat) : json(nullptr)}};
            },
            [](const Wait& w) { return json{{"kind", "wait"}, {"duration", w.duration}}; },
        },
        c);
}

}  // namespace

std::string print_program(const ControlProgram& program) {
    std::string out;
    for (std::size_t i = 0; i < program.stages.size(); ++i) {
        const auto& s = program.stages[i];
        if (i) out += "\n";
        out += "stage " + s.name + " {\n";
        for (const auto& c : s.commands) out += "  " + fmt(c) + "\n";
        out += "}\n";
    }
    return out;
}

nlohmann::json program_to_json(const ControlProgram& program) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : program.stages) {
        nlohmann::json cmds = nlohmann::json::array();
        for (const auto& c : s.commands) cmds.push_back(to_json(c));
        stages.push_back({{"name", s.name}, {"commands", cmds}});
    }
    return {{"stages", stages}};
}

std::string program_hash(const ControlProgram& program) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(print_program(program))));
    return buf;
}

const char* command_name(const Command& c) {
    return std::visit(overloaded{
                          [](const Move&) { return "move"; },
                          [](const Grasp&) { return "grasp"; },
                          [](const Release&) { return "release"; },
                          [](const Wait&) { return "wait"; },
                      },
                      c);
}

std::vector<Binding> validate_program(const ControlProgram& program, const SceneBundle& scene) {
    if (program.stages.empty()) throw ValidationError("", "program has no stages");
    std::vector<Binding> bindings;
    std::optional<std::string> holding;
    auto bind_keypoint = [&](const Stage& s, int index) {
        if (!scene.find_keypoint(index)) {
            throw ValidationError(s.name, "unknown keypoint k[" + std::to_string(index) + "] (scene has " +
                                              std::to_string(scene.keypoints.size()) + ")");
        }
        bindings.push_back({s.name, Binding::Kind::keypoint, index, {}});
    };
    for (const auto& s : program.stages) {
        if (s.commands.empty()) throw ValidationError(s.name, "stage has no commands");
        for (const auto& c : s.commands) {
            std::visit(overloaded{
                           [&](const Move& m) {
                               if (const auto* k = std::get_if<KeypointExpr>(&m.target)) bind_keypoint(s, k->index);
                           },
                           [&](const Grasp& g) {
                               if (!scene.find_object(g.object)) {
                                   throw ValidationError(s.name, "unknown object '" + g.object + "'");
                               }
                               if (holding) {
                                   throw ValidationError(s.name, "grasp of '" + g.object + "' while holding '" +
                                                                     *holding + "'");
                               }
                               holding = g.object;
                               bindings.push_back({s.name, Binding::Kind::object, 0, g.object});
                           },
                           [&](const Release&) {
                               if (!holding) throw ValidationError(s.name, "release while not holding an object");
                               holding.reset();
                           },
                           [](const Wait&) {},
                       },
                       c);
        }
    }
    return bindings;
}

ExecState ExecState::initial(const SceneBundle& scene, const Pose& x0, double open_width) {
    ExecState s;
    s.ee = x0;
    s.width = open_width;
    for (const auto& o : scene.objects) s.object_poses[o.name] = o.pose;
    return s;
}

Pose ExecState::object_pose(const std::string& name) const {
    if (held && held->object == name) return attach_transform(held->object_at_grasp, held->ee_at_grasp, ee);
    const auto it = object_poses.find(name);
    if (it == object_poses.end()) throw InputError("unknown object '" + name + "'");
    return it->second;
}

Vec3 keypoint_position(const SceneBundle& scene, const ExecState& state, int index) {
    const Keypoint* k = scene.find_keypoint(index);
    if (!k) throw InputError("unknown keypoint k[" + std::to_string(index) + "]");
    if (!k->movable()) return k->position;
    const SceneObject* o = scene.find_object(k->attachment);
    if (!o) throw InputError("keypoint attached to unknown object '" + k->attachment + "'");
    // Keypoint in the object frame, then forward with the current object pose.
    return state.object_pose(o->name) * (invert(o->pose) * k->position);
}

namespace {

Pose offset_in_frame(const Pose& frame, const Vec3& back_off) {
    return compose(frame, Pose::from_translation(-back_off));
}

Pose checked(const Vec3& t, const Eigen::Quaterniond& q, const char* what) {
    if (!t.allFinite() || !q.coeffs().allFinite() || !(q.norm() > 0.0)) {
        throw EvaluationError(std::string(what) + " evaluates to a non-finite pose");
    }
    return {q, t};
}

Eigen::Quaterniond to_quaternion(const QuatLiteral& q) { return {q.w, q.x, q.y, q.z}; }

}  // namespace

SubGoal resolve_command(const Command& command, const SceneBundle& scene, const ExecState& state,
                        const ResolveOptions& options) {
    return std::visit(
        overloaded{
            [&](const Move& m) {
                Vec3 t;
                Eigen::Quaterniond q = state.ee.rotation();
                if (const auto* k = std::get_if<KeypointExpr>(&m.target)) {
                    t = keypoint_position(scene, state, k->index);
                    for (const auto& o : k->offsets) t += o.sign == '-' ? Vec3(-o.value) : o.value;
                } else {
                    const auto& p = std::get<LiteralPose>(m.target);
                    t = p.position;
                    q = to_quaternion(p.rotation);
                }
                if (m.rot) {
                    q = std::visit(overloaded{
                                       [&](const RotKeep&) { return state.ee.rotation(); },
                                       [&](const RotFaceDown&) {
                                           const Vec3 down = -support_plane(scene).normal;
                                           const Vec3 z = state.ee.rotation() * Vec3::UnitZ();
                                           return Eigen::Quaterniond(
                                               Eigen::Quaterniond::FromTwoVectors(z, down) * state.ee.rotation());
                                       },
                                       [&](const QuatLiteral& lit) { return to_quaternion(lit); },
                                   },
                                   *m.rot);
                }
                return SubGoal{checked(t, q, "move target"), GripperCommand::hold, state.width, std::nullopt};
            },
            [&](const Grasp& g) {
                const SceneObject* o = scene.find_object(g.object);
                if (!o) throw InputError("unknown object '" + g.object + "'");
                SceneObject now = *o;
                now.pose = state.object_pose(g.object);
                const Pose grasp = grasp_pose(now, support_plane(scene).normal);
                double width = 0.0;
                if (g.width) {
                    width = std::clamp(*g.width, 0.0, options.max_gripper_width);
                } else {
                    width = grasp_width(now, grasp.rotation() * Vec3::UnitY(), options.max_gripper_width);
                }
                std::optional<Pose> via;
                if (g.approach) via = offset_in_frame(grasp, *g.approach);
                return SubGoal{grasp, GripperCommand::close, width, via};
            },
            [&](const Release& r) {
                const Pose goal = r.retreat ? offset_in_frame(state.ee, *r.retreat) : state.ee;
                return SubGoal{goal, GripperCommand::open, options.max_gripper_width, std::nullopt};
            },
            [&](const Wait&) { return SubGoal{state.ee, GripperCommand::hold, state.width, std::nullopt}; },
        },
        command);
}

void advance(ExecState& state, const Command& command, const SubGoal& goal) {
    if (const auto* g = std::get_if<Grasp>(&command)) {
        if (state.held) throw InputError("grasp while already holding '" + state.held->object + "'");
        // The object is still at its settled pose when the fingers close.
        state.ee = goal.pose;
        state.held = GraspReference{g->object, state.object_pose(g->object), goal.pose};
    } else if (std::holds_alternative<Release>(command)) {
        if (!state.held) throw InputError("release while not holding an object");
        // Open at the current pose, then retreat.
        state.object_poses[state.held->object] = state.object_pose(state.held->object);
        state.held.reset();
        state.ee = goal.pose;
    } else {
        state.ee = goal.pose;
    }
    state.width = goal.width;
}

SubGoal resolve_stage(const Stage& stage, const SceneBundle& scene, ExecState state, const ResolveOptions& options) {
    if (stage.commands.empty()) throw ValidationError(stage.name, "stage has no commands");
    SubGoal last;
    for (const auto& c : stage.commands) {
        last = resolve_command(c, scene, state, options);
        advance(state, c, last);
    }
    return last;
}

}  // namespace vmsynth::dsl

#include "vmsynth/io/episode.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vmsynth/error.hpp"
#include "vmsynth/io/png.hpp"
#include "vmsynth/io/scene_bundle.hpp"

namespace vmsynth::io {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string frame_file(std::size_t t) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%06zu.png", t);
    return buf;
}

ojson pose_json(const Pose& p) {
    const auto& q = p.rotation();
    const auto& t = p.translation();
    return {{"qw", q.w()}, {"qx", q.x()}, {"qy", q.y()}, {"qz", q.z()}, {"x", t.x()}, {"y", t.y()}, {"z", t.z()}};
}

ojson meta_json(const EpisodeMeta& m) {
    char seed[24];
    std::snprintf(seed, sizeof(seed), "%llu", static_cast<unsigned long long>(m.seed));
    ojson placements = ojson::object();
    for (const auto& [name, pose] : m.placements) placements[name] = pose_json(pose);
    return {{"fps", m.fps},
            {"seed", seed},
            {"program_hash", m.program_hash},
            {"camera",
             {{"width", m.camera.width()},
              {"height", m.camera.height()},
              {"fx", m.camera.fx()},
              {"fy", m.camera.fy()},
              {"cx", m.camera.cx()},
              {"cy", m.camera.cy()}}},
            {"scene_id", m.scene_id},
            {"placements", placements}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EpisodeFormatError("missing " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_contents(const Episode& ep, const fs::path& dir) {
    fs::create_directories(dir / "frames");
    for (std::size_t t = 0; t < ep.frames.size(); ++t) write_rgb_png(ep.frames[t], dir / "frames" / frame_file(t));

    std::string lines;
    for (const auto& a : ep.actions) {
        const ojson rec = {{"t", a.t},
                           {"pose", pose_json(a.pose)},
                           {"gripper_width", a.gripper_width},
                           {"gripper_closed", a.gripper_closed},
                           {"stage", a.stage}};
        lines += rec.dump();
        lines += '\n';
    }
    write_text(dir / "actions.jsonl", lines);
    write_text(dir / "meta.json", meta_json(ep.meta).dump(2) + "\n");
}

}  // namespace

fs::path write_episode(const Episode& ep, const fs::path& dir) {
    if (ep.frames.size() != ep.actions.size()) throw InputError("episode frame and action counts differ");
    const fs::path staging = dir.string() + ".partial";
    std::error_code ec;
    fs::remove_all(staging, ec);
    try {
        write_contents(ep, staging);
        if (fs::exists(dir)) fs::remove_all(dir);
        fs::rename(staging, dir);
    } catch (const fs::filesystem_error& e) {
        fs::remove_all(staging, ec);
        throw IoError(e.what());
    } catch (...) {
        fs::remove_all(staging, ec);
        throw;
    }
    return dir / "meta.json";
}

namespace {

double number(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw EpisodeFormatError(where + ": field '" + key + "' missing or not a number");
    }
    return j.at(key).get<double>();
}

ActionRecord parse_action(const std::string& line, int lineno) {
    const std::string where = "actions.jsonl line " + std::to_string(lineno);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw EpisodeFormatError(where + ": corrupt record: " + e.what());
    }
    if (!j.is_object() || !j.contains("pose") || !j.contains("gripper_closed") || !j.contains("stage") ||
        !j.at("gripper_closed").is_boolean() || !j.at("stage").is_string() || !j.at("t").is_number_integer()) {
        throw EpisodeFormatError(where + ": corrupt record");
    }
    ActionRecord a;
    a.t = j.at("t").get<int>();
    try {
        a.pose = pose_from_json(j.at("pose"));
    } catch (const Error& e) {
        throw EpisodeFormatError(where + ": corrupt record: " + e.what());
    }
    a.gripper_width = number(j, "gripper_width", where);
    a.gripper_closed = j.at("gripper_closed").get<bool>();
    a.stage = j.at("stage").get<std::string>();
    return a;
}

}  // namespace

Episode read_episode(const fs::path& dir) {
    Episode ep;
    const std::string text = read_text(dir / "actions.jsonl");
    if (!text.empty() && text.back() != '\n') {
        int lines = 1;
        for (char c : text) lines += c == '\n';
        throw EpisodeFormatError("actions.jsonl line " + std::to_string(lines) + ": corrupt record: truncated");
    }
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        ActionRecord a = parse_action(line, lineno);
        if (a.t != lineno - 1) {
            throw EpisodeFormatError("actions.jsonl line " + std::to_string(lineno) + ": expected t = " +
                                     std::to_string(lineno - 1));
        }
        ep.actions.push_back(std::move(a));
    }

    for (std::size_t t = 0; t < ep.actions.size(); ++t) {
        const fs::path p = dir / "frames" / frame_file(t);
        if (!fs::exists(p)) {
            throw EpisodeFormatError("frame/action count mismatch: " + std::to_string(ep.actions.size()) +
                                     " actions but frames/" + frame_file(t) + " is missing");
        }
        ep.frames.push_back(read_rgb_png(p));
    }
    const fs::path extra = dir / "frames" / frame_file(ep.actions.size());
    if (fs::exists(extra)) {
        throw EpisodeFormatError("frame/action count mismatch: frames/" + frame_file(ep.actions.size()) +
                                 " has no action record");
    }

    nlohmann::json m;
    try {
        m = nlohmann::json::parse(read_text(dir / "meta.json"));
        auto& meta = ep.meta;
        meta.fps = m.at("fps").get<double>();
        meta.seed = std::stoull(m.at("seed").get<std::string>());
        meta.program_hash = m.at("program_hash").get<std::string>();
        const auto& c = m.at("camera");
        meta.camera = CameraModel(c.at("fx").get<double>(), c.at("fy").get<double>(), c.at("cx").get<double>(),
                                  c.at("cy").get<double>(), c.at("width").get<int>(), c.at("height").get<int>());
        meta.scene_id = m.at("scene_id").get<std::string>();
        for (const auto& [name, pose] : m.at("placements").items()) meta.placements[name] = pose_from_json(pose);
    } catch (const EpisodeFormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw EpisodeFormatError("meta.json: " + std::string(e.what()));
    }
    return ep;
}

}  // namespace vmsynth::io

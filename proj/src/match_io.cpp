#include "fcvg/match_io.hpp"

#include <fstream>
#include <map>

#include "fcvg/error.hpp"

namespace fcvg {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& source, const std::string& what) {
    throw ParseError(source + ": " + what);
}

Point2 parse_point(const json& j, const std::string& source, const char* ctx) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        fail(source, std::string(ctx) + ": expected [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

LineSegment parse_segment(const json& j, const std::string& source, const char* ctx) {
    if (!j.is_array() || j.size() != 2) fail(source, std::string(ctx) + ": expected [[x,y],[x,y]]");
    try {
        return make_segment(parse_point(j[0], source, ctx), parse_point(j[1], source, ctx));
    } catch (const DomainError& e) {
        fail(source, std::string(ctx) + ": " + e.what());
    }
}

std::vector<Keypoint> parse_keypoints(const json& j, const std::string& source, const char* ctx) {
    if (!j.is_array()) fail(source, std::string(ctx) + ": expected an array of keypoints");
    std::vector<Keypoint> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& k = j[i];
        Keypoint kp;
        kp.name = "kp" + std::to_string(i);
        if (k.is_null()) {
            kp.present = false;
        } else if (k.is_object()) {
            for (auto it = k.begin(); it != k.end(); ++it) {
                if (it.key() != "name" && it.key() != "x" && it.key() != "y" && it.key() != "present") {
                    fail(source, std::string(ctx) + ": unknown keypoint field '" + it.key() + "'");
                }
            }
            if (k.contains("name")) {
                if (!k["name"].is_string()) fail(source, std::string(ctx) + ": keypoint name must be a string");
                kp.name = k["name"].get<std::string>();
            }
            kp.present = k.value("present", true);
            if (kp.present) {
                if (!k.contains("x") || !k.contains("y") || !k["x"].is_number() || !k["y"].is_number()) {
                    fail(source, std::string(ctx) + ": present keypoint needs numeric x and y");
                }
                kp.position = {k["x"].get<double>(), k["y"].get<double>()};
            }
        } else {
            fail(source, std::string(ctx) + ": keypoint must be an object or null");
        }
        out.push_back(std::move(kp));
    }
    return out;
}

json keypoints_json(const PoseSkeleton& pose) {
    json arr = json::array();
    for (const auto& kp : pose.keypoints) {
        json k = {{"name", kp.name}, {"present", kp.present}};
        if (kp.present) {
            k["x"] = kp.position.x;
            k["y"] = kp.position.y;
        }
        arr.push_back(std::move(k));
    }
    return arr;
}

json segment_json(const LineSegment& s) { return json::array({{s.p0.x, s.p0.y}, {s.p1.x, s.p1.y}}); }

} // namespace

MatchFile parse_match_json(const json& doc, const std::string& source) {
    if (!doc.is_object()) fail(source, "top level must be an object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (it.key() != "format" && it.key() != "canvas" && it.key() != "matches" && it.key() != "pose") {
            fail(source, "unknown field '" + it.key() + "'");
        }
    }
    if (!doc.contains("format") || doc["format"] != kMatchFormat) {
        fail(source, std::string("missing or unsupported format tag (expected \"") + kMatchFormat + "\")");
    }
    MatchFile out;
    const json& canvas = doc.value("canvas", json());
    if (!canvas.is_object() || !canvas.contains("w") || !canvas.contains("h") || !canvas["w"].is_number_integer() ||
        !canvas["h"].is_number_integer()) {
        fail(source, "canvas must be {\"w\": int, \"h\": int}");
    }
    out.canvas = {canvas["w"].get<int>(), canvas["h"].get<int>()};
    if (out.canvas.width <= 0 || out.canvas.height <= 0) fail(source, "canvas dimensions must be positive");

    if (!doc.contains("matches") || !doc["matches"].is_array()) fail(source, "matches must be an array");
    for (const json& m : doc["matches"]) {
        if (!m.is_object() || !m.contains("id") || !m["id"].is_number_integer()) {
            fail(source, "each match needs an integer id");
        }
        LineMatch lm;
        lm.match_id = m["id"].get<int>();
        lm.seg_start = parse_segment(m.value("start", json()), source, "match start");
        lm.seg_end = parse_segment(m.value("end", json()), source, "match end");
        out.matches.push_back(lm);
    }

    if (doc.contains("pose") && !doc["pose"].is_null()) {
        const json& pose = doc["pose"];
        if (!pose.is_object()) fail(source, "pose must be an object");
        PoseSkeleton a, b;
        a.keypoints = parse_keypoints(pose.value("keypoints_start", json()), source, "keypoints_start");
        b.keypoints = parse_keypoints(pose.value("keypoints_end", json()), source, "keypoints_end");
        const json& edges = pose.value("edges", json::array());
        if (!edges.is_array()) fail(source, "pose edges must be an array");
        for (const json& e : edges) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
                fail(source, "pose edge must be [i, j]");
            }
            a.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
        b.edges = a.edges;
        out.pose_start = std::move(a);
        out.pose_end = std::move(b);
    }
    return out;
}

MatchFile load_match_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open match file");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": invalid JSON: " + e.what());
    }
    return parse_match_json(doc, path.string());
}

json to_json(const MatchFile& file) {
    json matches = json::array();
    for (const auto& m : file.matches) {
        matches.push_back({{"id", m.match_id}, {"start", segment_json(m.seg_start)}, {"end", segment_json(m.seg_end)}});
    }
    json doc = {{"format", kMatchFormat},
                {"canvas", {{"w", file.canvas.width}, {"h", file.canvas.height}}},
                {"matches", std::move(matches)}};
    if (file.pose_start && file.pose_end) {
        json edges = json::array();
        for (auto [i, j] : file.pose_start->edges) edges.push_back({i, j});
        doc["pose"] = {{"keypoints_start", keypoints_json(*file.pose_start)},
                       {"keypoints_end", keypoints_json(*file.pose_end)},
                       {"edges", std::move(edges)}};
    }
    return doc;
}

void save_match_file(const MatchFile& file, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError(path.string() + ": cannot write match file");
    out << to_json(file).dump(2) << '\n';
}

ConditionPair to_condition_pair(const MatchFile& file) {
    try {
        return make_condition_pair(file.canvas, file.matches, file.pose_start, file.pose_end);
    } catch (const DomainError& e) {
        throw StructuralError(e.what());
    }
}

MatchFile match_file_from_pair(const ConditionGeometry& start, const ConditionGeometry& end) {
    if (start.canvas != end.canvas) throw StructuralError("geometries have different canvases");
    std::map<int, LineSegment> end_by_id;
    for (const auto& l : end.lines) end_by_id[l.match_id] = l.segment;
    MatchFile file;
    file.canvas = start.canvas;
    for (const auto& l : start.lines) {
        auto it = end_by_id.find(l.match_id);
        if (it == end_by_id.end()) throw StructuralError("match id " + std::to_string(l.match_id) + " missing from end");
        file.matches.push_back({l.match_id, l.segment, it->second});
    }
    file.pose_start = start.pose;
    file.pose_end = end.pose;
    return file;
}

} // namespace fcvg

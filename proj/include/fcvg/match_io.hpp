#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fcvg/geometry.hpp"
#include "json.hpp"

namespace fcvg {

inline constexpr const char* kMatchFormat = "fcvg-match/1";

/// Contents of a "fcvg-match/1" document, as produced by an external line
/// matcher (and optionally a pose estimator).
///
///   {"format": "fcvg-match/1",
///    "canvas": {"w": 64, "h": 64},
///    "matches": [{"id": 0, "start": [[x,y],[x,y]], "end": [[x,y],[x,y]]}, ...],
///    "pose": {"keypoints_start": [{"name": "nose", "x": 1, "y": 2, "present": true}, ...],
///             "keypoints_end": [...],
///             "edges": [[0, 1], ...]}}
///
/// "pose" is optional; "present" defaults to true and a null keypoint is absent.
struct MatchFile {
    Canvas canvas;
    std::vector<LineMatch> matches;
    std::optional<PoseSkeleton> pose_start;
    std::optional<PoseSkeleton> pose_end;
};

/// Throws ParseError (prefixed with `source`) on any schema violation.
MatchFile parse_match_json(const nlohmann::json& doc, const std::string& source = "<match>");
MatchFile load_match_file(const std::filesystem::path& path);

nlohmann::json to_json(const MatchFile& file);
void save_match_file(const MatchFile& file, const std::filesystem::path& path);

/// Runs the ingestion path (validation, canonicalization, pose reconciliation).
ConditionPair to_condition_pair(const MatchFile& file);

/// Inverse of to_condition_pair for geometries sharing one id set.
MatchFile match_file_from_pair(const ConditionGeometry& start, const ConditionGeometry& end);

} // namespace fcvg

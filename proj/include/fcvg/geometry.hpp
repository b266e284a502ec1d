#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fcvg/easing.hpp"

namespace fcvg {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};

struct LineSegment {
    Point2 p0;
    Point2 p1;
    bool operator==(const LineSegment&) const = default;
};

/// Validated constructor: finite coordinates, distinct endpoints.
LineSegment make_segment(Point2 p0, Point2 p1);

/// One line observed in both key frames.
struct LineMatch {
    int match_id = 0;
    LineSegment seg_start;
    LineSegment seg_end;
    bool operator==(const LineMatch&) const = default;
};

struct Keypoint {
    std::string name;
    Point2 position;
    bool present = true;
    bool operator==(const Keypoint&) const = default;
};

struct PoseSkeleton {
    std::vector<Keypoint> keypoints;
    std::vector<std::pair<int, int>> edges;
    bool operator==(const PoseSkeleton&) const = default;
};

struct Canvas {
    int width = 0;
    int height = 0;
    bool operator==(const Canvas&) const = default;
};

struct TaggedSegment {
    int match_id = 0;
    LineSegment segment;
    bool operator==(const TaggedSegment&) const = default;
};

/// Everything drawn into one condition frame, before rasterization.
struct ConditionGeometry {
    std::vector<TaggedSegment> lines;
    std::optional<PoseSkeleton> pose;
    Canvas canvas;
    bool operator==(const ConditionGeometry&) const = default;
};

struct ConditionPair {
    ConditionGeometry start;
    ConditionGeometry end;
};

/// Orders the start segment so p0 is lexicographically smaller (x, then y) and
/// assigns the end segment's endpoints to minimise summed endpoint distance.
LineMatch canonicalize(const LineMatch& match);

/// Ingestion path for matched lines and poses. Validates ids and pose topology,
/// canonicalizes every match, sorts lines by id, and marks a keypoint absent in
/// both frames when either frame lacks it.
ConditionPair make_condition_pair(Canvas canvas, std::vector<LineMatch> matches,
                                  std::optional<PoseSkeleton> pose_start = std::nullopt,
                                  std::optional<PoseSkeleton> pose_end = std::nullopt);

/// Endpoint-wise (1-s)·g1 + s·gN. Keypoints absent in either input stay absent.
ConditionGeometry interpolate_geometry(const ConditionGeometry& g1, const ConditionGeometry& gN, double s);

struct ConditionSequences {
    std::vector<ConditionGeometry> forward;
    std::vector<ConditionGeometry> backward;
};

/// forward[i] = interpolate(g1, gN, curve(i/(N-1))), backward = forward reversed.
ConditionSequences build_condition_sequences(const ConditionGeometry& g1, const ConditionGeometry& gN, int frames,
                                             const EasingCurve& curve);

/// Greedy mutual-nearest pairing on summed endpoint distance (either endpoint
/// orientation). Pairs farther than `dist_threshold` are dropped. Ids are the
/// index into `lines_a`.
std::vector<LineMatch> match_lines_naive(const std::vector<LineSegment>& lines_a,
                                         const std::vector<LineSegment>& lines_b, double dist_threshold);

/// Summed endpoint distance under the better of the two endpoint assignments.
double segment_distance(const LineSegment& a, const LineSegment& b);

} // namespace fcvg

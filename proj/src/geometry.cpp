#include "fcvg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "fcvg/error.hpp"

namespace fcvg {
namespace {

bool finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool lex_less(Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

Point2 lerp(Point2 a, Point2 b, double s) { return {(1.0 - s) * a.x + s * b.x, (1.0 - s) * a.y + s * b.y}; }

void check_pose(const PoseSkeleton& pose) {
    const int n = static_cast<int>(pose.keypoints.size());
    for (auto [a, b] : pose.edges) {
        if (a < 0 || a >= n || b < 0 || b >= n) throw StructuralError("pose edge index out of range");
    }
    for (const auto& kp : pose.keypoints) {
        if (kp.present && !finite(kp.position)) throw DomainError("pose keypoint '" + kp.name + "' is not finite");
    }
}

void check_same_topology(const PoseSkeleton& a, const PoseSkeleton& b) {
    if (a.keypoints.size() != b.keypoints.size() || a.edges != b.edges) {
        throw StructuralError("pose skeletons differ in keypoint count or edge topology");
    }
    for (std::size_t i = 0; i < a.keypoints.size(); ++i) {
        if (a.keypoints[i].name != b.keypoints[i].name) {
            throw StructuralError("pose keypoint order differs at index " + std::to_string(i));
        }
    }
}

} // namespace

LineSegment make_segment(Point2 p0, Point2 p1) {
    if (!finite(p0) || !finite(p1)) throw DomainError("line segment endpoints must be finite");
    if (p0 == p1) throw DomainError("zero-length line segment");
    return {p0, p1};
}

double segment_distance(const LineSegment& a, const LineSegment& b) {
    const double same = dist(a.p0, b.p0) + dist(a.p1, b.p1);
    const double swapped = dist(a.p0, b.p1) + dist(a.p1, b.p0);
    return std::min(same, swapped);
}

LineMatch canonicalize(const LineMatch& match) {
    LineMatch out = match;
    if (lex_less(out.seg_start.p1, out.seg_start.p0)) std::swap(out.seg_start.p0, out.seg_start.p1);
    const double same = dist(out.seg_start.p0, out.seg_end.p0) + dist(out.seg_start.p1, out.seg_end.p1);
    const double swapped = dist(out.seg_start.p0, out.seg_end.p1) + dist(out.seg_start.p1, out.seg_end.p0);
    if (swapped < same) std::swap(out.seg_end.p0, out.seg_end.p1);
    return out;
}

ConditionPair make_condition_pair(Canvas canvas, std::vector<LineMatch> matches,
                                  std::optional<PoseSkeleton> pose_start, std::optional<PoseSkeleton> pose_end) {
    if (canvas.width <= 0 || canvas.height <= 0) throw DomainError("canvas dimensions must be positive");
    std::set<int> ids;
    for (auto& m : matches) {
        if (!ids.insert(m.match_id).second) throw StructuralError("duplicate match id " + std::to_string(m.match_id));
        m.seg_start = make_segment(m.seg_start.p0, m.seg_start.p1);
        m.seg_end = make_segment(m.seg_end.p0, m.seg_end.p1);
        m = canonicalize(m);
    }
    std::sort(matches.begin(), matches.end(), [](const auto& a, const auto& b) { return a.match_id < b.match_id; });

    ConditionPair pair;
    pair.start.canvas = pair.end.canvas = canvas;
    for (const auto& m : matches) {
        pair.start.lines.push_back({m.match_id, m.seg_start});
        pair.end.lines.push_back({m.match_id, m.seg_end});
    }

    if (pose_start.has_value() != pose_end.has_value()) {
        throw StructuralError("pose must be given for both key frames or neither");
    }
    if (pose_start) {
        check_pose(*pose_start);
        check_pose(*pose_end);
        check_same_topology(*pose_start, *pose_end);
        for (std::size_t i = 0; i < pose_start->keypoints.size(); ++i) {
            const bool present = pose_start->keypoints[i].present && pose_end->keypoints[i].present;
            pose_start->keypoints[i].present = present;
            pose_end->keypoints[i].present = present;
        }
        pair.start.pose = std::move(pose_start);
        pair.end.pose = std::move(pose_end);
    }
    return pair;
}

ConditionGeometry interpolate_geometry(const ConditionGeometry& g1, const ConditionGeometry& gN, double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("interpolation parameter must lie in [0,1]");
    if (g1.canvas != gN.canvas) throw StructuralError("key-frame geometries have different canvas sizes");
    if (g1.lines.size() != gN.lines.size()) throw StructuralError("key-frame geometries have different match id sets");

    // Match ids are compared as sets; the output follows g1's order.
    std::vector<const TaggedSegment*> by_id;
    by_id.reserve(gN.lines.size());
    for (const auto& l : gN.lines) by_id.push_back(&l);
    std::sort(by_id.begin(), by_id.end(), [](auto* a, auto* b) { return a->match_id < b->match_id; });

    ConditionGeometry out;
    out.canvas = g1.canvas;
    out.lines.reserve(g1.lines.size());
    for (const auto& a : g1.lines) {
        auto it = std::lower_bound(by_id.begin(), by_id.end(), a.match_id,
                                   [](const TaggedSegment* t, int id) { return t->match_id < id; });
        if (it == by_id.end() || (*it)->match_id != a.match_id) {
            throw StructuralError("match id " + std::to_string(a.match_id) + " missing from end geometry");
        }
        const LineSegment& b = (*it)->segment;
        out.lines.push_back({a.match_id, {lerp(a.segment.p0, b.p0, s), lerp(a.segment.p1, b.p1, s)}});
    }

    if (g1.pose.has_value() != gN.pose.has_value()) throw StructuralError("pose present in only one key frame");
    if (g1.pose) {
        check_same_topology(*g1.pose, *gN.pose);
        PoseSkeleton pose = *g1.pose;
        for (std::size_t i = 0; i < pose.keypoints.size(); ++i) {
            const Keypoint& ka = g1.pose->keypoints[i];
            const Keypoint& kb = gN.pose->keypoints[i];
            pose.keypoints[i].present = ka.present && kb.present;
            pose.keypoints[i].position = pose.keypoints[i].present ? lerp(ka.position, kb.position, s) : Point2{};
        }
        out.pose = std::move(pose);
    }
    return out;
}

ConditionSequences build_condition_sequences(const ConditionGeometry& g1, const ConditionGeometry& gN, int frames,
                                             const EasingCurve& curve) {
    if (frames < 2) throw DomainError("condition sequences need at least 2 frames");
    ConditionSequences seq;
    seq.forward.reserve(frames);
    for (int i = 0; i < frames; ++i) {
        const double u = static_cast<double>(i) / (frames - 1);
        seq.forward.push_back(interpolate_geometry(g1, gN, curve(u)));
    }
    seq.backward.assign(seq.forward.rbegin(), seq.forward.rend());
    return seq;
}

std::vector<LineMatch> match_lines_naive(const std::vector<LineSegment>& lines_a,
                                         const std::vector<LineSegment>& lines_b, double dist_threshold) {
    if (!(dist_threshold > 0.0)) throw DomainError("match distance threshold must be positive");
    struct Candidate {
        double d;
        std::size_t a, b;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < lines_a.size(); ++i) {
        for (std::size_t j = 0; j < lines_b.size(); ++j) {
            const double d = segment_distance(lines_a[i], lines_b[j]);
            if (d <= dist_threshold) candidates.push_back({d, i, j});
        }
    }
    // Ascending distance; ties broken by index so the pairing is deterministic.
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
        if (x.d != y.d) return x.d < y.d;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });
    std::vector<bool> used_a(lines_a.size()), used_b(lines_b.size());
    std::vector<LineMatch> out;
    for (const auto& c : candidates) {
        if (used_a[c.a] || used_b[c.b]) continue;
        used_a[c.a] = used_b[c.b] = true;
        out.push_back(canonicalize({static_cast<int>(c.a), lines_a[c.a], lines_b[c.b]}));
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.match_id < y.match_id; });
    return out;
}

} // namespace fcvg

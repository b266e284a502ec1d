#pragma once

#include <string_view>
#include <utility>
#include <vector>

namespace fcvg {

enum class EasingKind { linear, ease_in, ease_out, piecewise };

/// Monotone timing map s(u) on [0,1] with s(0)=0 and s(1)=1.
///
/// ease_in is u², ease_out is 1-(1-u)², piecewise interpolates linearly
/// between user control points. Control points must start at (0,0), end at
/// (1,1), have strictly increasing u and non-decreasing s.
class EasingCurve {
public:
    using ControlPoint = std::pair<double, double>;

    EasingCurve() = default;
    explicit EasingCurve(EasingKind kind);
    static EasingCurve piecewise(std::vector<ControlPoint> points);

    EasingKind kind() const { return kind_; }
    const std::vector<ControlPoint>& control_points() const { return points_; }

    double operator()(double u) const;

    /// The time-reversed curve r(u) = 1 - s(1-u). Swapping the key frames and
    /// using the reversed curve visits the same intermediate geometries backwards.
    EasingCurve reversed() const;

    bool operator==(const EasingCurve&) const = default;

private:
    EasingKind kind_ = EasingKind::linear;
    std::vector<ControlPoint> points_;
};

double eval_easing(const EasingCurve& curve, double u);

EasingKind parse_easing_kind(std::string_view name);
std::string_view to_string(EasingKind kind);

} // namespace fcvg

#include "fcvg/easing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fcvg/error.hpp"

namespace fcvg {

EasingCurve::EasingCurve(EasingKind kind) : kind_(kind) {
    if (kind == EasingKind::piecewise) {
        throw DomainError("piecewise easing needs control points; use EasingCurve::piecewise");
    }
}

EasingCurve EasingCurve::piecewise(std::vector<ControlPoint> points) {
    if (points.size() < 2) throw DomainError("piecewise easing needs at least two control points");
    if (points.front() != ControlPoint{0.0, 0.0} || points.back() != ControlPoint{1.0, 1.0}) {
        throw DomainError("piecewise easing must start at (0,0) and end at (1,1)");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto [u, s] = points[i];
        if (!(u >= 0.0 && u <= 1.0 && s >= 0.0 && s <= 1.0)) {
            throw DomainError("piecewise control point outside [0,1]^2");
        }
        if (i > 0 && !(u > points[i - 1].first)) throw DomainError("piecewise control u must be strictly increasing");
        if (i > 0 && s < points[i - 1].second) throw DomainError("piecewise control s must be non-decreasing");
    }
    EasingCurve c;
    c.kind_ = EasingKind::piecewise;
    c.points_ = std::move(points);
    return c;
}

double EasingCurve::operator()(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("easing parameter u must lie in [0,1], got " + std::to_string(u));
    switch (kind_) {
        case EasingKind::linear:
            return u;
        case EasingKind::ease_in:
            return u * u;
        case EasingKind::ease_out:
            return 1.0 - (1.0 - u) * (1.0 - u);
        case EasingKind::piecewise: {
            auto hi = std::upper_bound(points_.begin(), points_.end(), u,
                                       [](double v, const ControlPoint& p) { return v < p.first; });
            if (hi == points_.end()) return points_.back().second;
            auto lo = std::prev(hi);
            const double w = (u - lo->first) / (hi->first - lo->first);
            return std::clamp(lo->second + w * (hi->second - lo->second), 0.0, 1.0);
        }
    }
    return u;
}

EasingCurve EasingCurve::reversed() const {
    switch (kind_) {
        case EasingKind::linear:
            return *this;
        case EasingKind::ease_in:
            return EasingCurve(EasingKind::ease_out);
        case EasingKind::ease_out:
            return EasingCurve(EasingKind::ease_in);
        case EasingKind::piecewise: {
            std::vector<ControlPoint> mirrored;
            mirrored.reserve(points_.size());
            for (auto it = points_.rbegin(); it != points_.rend(); ++it) {
                mirrored.emplace_back(1.0 - it->first, 1.0 - it->second);
            }
            return piecewise(std::move(mirrored));
        }
    }
    return *this;
}

double eval_easing(const EasingCurve& curve, double u) { return curve(u); }

EasingKind parse_easing_kind(std::string_view name) {
    if (name == "linear") return EasingKind::linear;
    if (name == "ease_in" || name == "ease-in") return EasingKind::ease_in;
    if (name == "ease_out" || name == "ease-out") return EasingKind::ease_out;
    if (name == "piecewise") return EasingKind::piecewise;
    throw DomainError("unknown easing curve '" + std::string(name) + "'");
}

std::string_view to_string(EasingKind kind) {
    switch (kind) {
        case EasingKind::linear: return "linear";
        case EasingKind::ease_in: return "ease_in";
        case EasingKind::ease_out: return "ease_out";
        case EasingKind::piecewise: return "piecewise";
    }
    return "linear";
}

} // namespace fcvg

#include "mdf/manifold.hpp"

#include <cmath>

#include "mdf/errors.hpp"
#include "mdf/io.hpp"

namespace mdf::manifold {

namespace {

// Distance from u*N to the nearest interior joint below which the joint's
// left segment is used.
constexpr double kJointSnap = 1e-9;

}  // namespace

double metric_at(const bezier::SegmentedCurve& curve, double u) {
    if (curve.segments.empty()) {
        throw DomainError("metric_at needs a non-empty curve");
    }
    if (!(u >= 0.0 && u <= 1.0)) {
        throw DomainError("metric parameter outside [0, 1]: u=" + std::to_string(u));
    }
    const auto n = curve.segments.size();
    const double scaled = u * static_cast<double>(n);
    const double snapped = std::round(scaled);

    std::size_t i;
    double t;
    if (std::abs(scaled - snapped) <= kJointSnap && snapped >= 1.0) {
        // On (or numerically at) a joint: take the left segment at its end,
        // so C0-only chains still get a well-defined one-sided tangent.
        i = static_cast<std::size_t>(snapped) - 1;
        t = 1.0;
    } else {
        i = static_cast<std::size_t>(scaled);
        if (i >= n) i = n - 1;
        t = std::clamp(scaled - static_cast<double>(i), 0.0, 1.0);
    }

    const Vec2 d = static_cast<double>(n) * bezier::derivative(curve.segments[i], t);
    return squared_norm(d);
}

MetricVector metric_vector(const bezier::SegmentedCurve& curve, int f) {
    if (f < 2) {
        throw DomainError("metric_vector needs f >= 2, got " + std::to_string(f));
    }
    MetricVector mv;
    mv.values.reserve(static_cast<std::size_t>(f));
    mv.sample_params.reserve(static_cast<std::size_t>(f));
    for (int k = 0; k < f; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(f - 1);
        mv.sample_params.push_back(u);
        mv.values.push_back(metric_at(curve, u));
    }
    return mv;
}

std::string features_csv(
    const std::vector<std::pair<std::string, MetricVector>>& rows) {
    if (rows.empty()) {
        throw DomainError("features_csv needs at least one row");
    }
    const std::size_t f = rows.front().second.values.size();
    std::string csv = "name";
    for (std::size_t k = 0; k < f; ++k) {
        csv += ",g_" + std::to_string(k);
    }
    csv += '\n';
    for (const auto& [name, mv] : rows) {
        if (mv.values.size() != f) {
            throw ShapeError("feature rows disagree on length: " +
                             std::to_string(mv.values.size()) + " vs " +
                             std::to_string(f));
        }
        csv += name;
        for (const double g : mv.values) {
            csv += ',';
            csv += io::format_double(g);
        }
        csv += '\n';
    }
    return csv;
}

}  // namespace mdf::manifold

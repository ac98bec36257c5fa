#include "mdf/bezier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "mdf/errors.hpp"

namespace mdf::bezier {

namespace {

// C(n, i) by the multiplicative formula; exact in double for the small n
// used here.
double binomial(int n, int i) {
    double c = 1.0;
    for (int k = 1; k <= i; ++k) {
        c = c * static_cast<double>(n - i + k) / static_cast<double>(k);
    }
    return c;
}

struct Partition {
    std::vector<std::size_t> boundaries;  ///< size num_segments + 1, in point indices
};

// Split the M-1 intervals between M ordered points into `num_segments`
// consecutive runs with sizes as even as possible (earlier runs take the
// remainder). Every run must keep at least 3 intervals so the two free
// control points of its cubic stay determined.
Partition make_partition(std::size_t num_points, int num_segments) {
    if (num_segments < 1) {
        throw DomainError("segment count must be positive, got " +
                          std::to_string(num_segments));
    }
    if (num_points < 4) {
        throw PartitionError("curve fitting needs at least 4 points, got " +
                             std::to_string(num_points));
    }
    const std::size_t intervals = num_points - 1;
    const auto segs = static_cast<std::size_t>(num_segments);
    const std::size_t base = intervals / segs;
    const std::size_t rem = intervals % segs;
    if (base < 3) {
        throw PartitionError(std::to_string(num_points) + " points cannot feed " +
                             std::to_string(num_segments) +
                             " segments; every segment needs at least 3 intervals");
    }
    Partition part;
    part.boundaries.resize(segs + 1);
    part.boundaries[0] = 0;
    for (std::size_t r = 0; r < segs; ++r) {
        part.boundaries[r + 1] =
            part.boundaries[r] + base + (r < rem ? 1 : 0);
    }
    return part;
}

// Normalized cumulative chord-length parameters for points[i0..i1].
std::vector<double> chord_parameters(const std::vector<Vec2>& points,
                                     std::size_t i0, std::size_t i1) {
    std::vector<double> s(i1 - i0 + 1, 0.0);
    for (std::size_t j = i0 + 1; j <= i1; ++j) {
        s[j - i0] = s[j - i0 - 1] + norm(points[j] - points[j - 1]);
    }
    const double total = s.back();
    if (!(total > 0.0)) {
        throw DomainError("degenerate point run: zero total chord length");
    }
    for (double& v : s) v /= total;
    s.back() = 1.0;
    return s;
}

// Least-squares cubic through points[i0..i1] with pinned endpoints.
CubicBezierSegment fit_one_segment(const std::vector<Vec2>& points,
                                   const std::vector<double>& s,
                                   std::size_t i0, std::size_t i1) {
    const Vec2 p0 = points[i0];
    const Vec2 p3 = points[i1];

    // Normal equations for the two free control points; the 2x2 system is
    // shared by the x and y coordinates.
    double a00 = 0.0, a01 = 0.0, a11 = 0.0;
    Vec2 r0{0.0, 0.0}, r1{0.0, 0.0};
    for (std::size_t j = i0 + 1; j < i1; ++j) {
        const double t = s[j - i0];
        const double u = 1.0 - t;
        const double b0 = u * u * u;
        const double b1 = 3.0 * u * u * t;
        const double b2 = 3.0 * u * t * t;
        const double b3 = t * t * t;
        const Vec2 rhs = points[j] - b0 * p0 - b3 * p3;
        a00 += b1 * b1;
        a01 += b1 * b2;
        a11 += b2 * b2;
        r0 = r0 + b1 * rhs;
        r1 = r1 + b2 * rhs;
    }

    const double det = a00 * a11 - a01 * a01;
    Vec2 p1, p2;
    if (det > 1e-14 * std::max(a00 * a11, 1.0)) {
        p1 = (a11 * r0 - a01 * r1) * (1.0 / det);
        p2 = (a00 * r1 - a01 * r0) * (1.0 / det);
    } else {
        // Ill-conditioned (coincident parameters); fall back to thirds of the
        // chord, which reproduces a straight segment exactly.
        p1 = p0 + (1.0 / 3.0) * (p3 - p0);
        p2 = p0 + (2.0 / 3.0) * (p3 - p0);
    }
    return CubicBezierSegment{{p0, p1, p2, p3}};
}

// Rotate the two control arms at each interior joint onto a shared line
// through the joint, choosing the line that disturbs the arms least (the
// principal direction of the arm outer-product sum). Arm lengths are kept.
void enforce_g1(SegmentedCurve& curve) {
    for (std::size_t k = 0; k + 1 < curve.segments.size(); ++k) {
        CubicBezierSegment& left = curve.segments[k];
        CubicBezierSegment& right = curve.segments[k + 1];
        const Vec2 joint = left.control[3];
        const Vec2 a = left.control[2] - joint;
        const Vec2 b = right.control[1] - joint;
        const double na = norm(a);
        const double nb = norm(b);
        if (na <= 0.0 && nb <= 0.0) continue;

        // Principal eigenvector of a*a^T + b*b^T.
        const double m00 = a.x * a.x + b.x * b.x;
        const double m01 = a.x * a.y + b.x * b.y;
        const double m11 = a.y * a.y + b.y * b.y;
        const double half_gap = 0.5 * (m00 - m11);
        const double root = std::sqrt(half_gap * half_gap + m01 * m01);
        const double lmax = 0.5 * (m00 + m11) + root;
        Vec2 d{m01, lmax - m00};
        Vec2 d_alt{lmax - m11, m01};
        if (squared_norm(d_alt) > squared_norm(d)) d = d_alt;
        const double dn = norm(d);
        if (dn <= 0.0) {
            // Isotropic arm distribution; keep the longer arm's direction.
            d = na >= nb ? a : b;
        }
        d = d * (1.0 / norm(d));

        // Opposite arms along d; keep each arm's length, and orient d so the
        // left arm flips as little as possible.
        double sign = dot(b - a, d) >= 0.0 ? 1.0 : -1.0;
        left.control[2] = joint - (na * sign) * d;
        right.control[1] = joint + (nb * sign) * d;
    }
}

// Strictly proper crossing of segments ab and cd, with the crossing position
// returned as fractions along each edge. Shared endpoints and tangential
// touches yield zero cross products and are rejected by the strict sign
// tests, so adjacent edges never report a crossing.
bool edges_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d, double& s_ab, double& s_cd) {
    const Vec2 ab = b - a;
    const Vec2 cd = d - c;
    const double d1 = cross(ab, c - a);
    const double d2 = cross(ab, d - a);
    const double d3 = cross(cd, a - c);
    const double d4 = cross(cd, b - c);
    if (((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) &&
        ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))) {
        s_cd = d1 / (d1 - d2);
        s_ab = d3 / (d3 - d4);
        return true;
    }
    return false;
}

}  // namespace

double bernstein(int i, int n, double t) {
    if (n < 0 || i < 0 || i > n) {
        throw DomainError("bernstein index out of range: i=" + std::to_string(i) +
                          ", n=" + std::to_string(n));
    }
    if (n > 20) {
        throw DomainError("bernstein degree capped at 20, got " +
                          std::to_string(n));
    }
    if (!(t >= 0.0 && t <= 1.0)) {
        throw DomainError("bernstein parameter outside [0, 1]: t=" +
                          std::to_string(t));
    }
    return binomial(n, i) * std::pow(t, i) * std::pow(1.0 - t, n - i);
}

Vec2 evaluate(const CubicBezierSegment& seg, double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw DomainError("bezier parameter outside [0, 1]: t=" +
                          std::to_string(t));
    }
    const double u = 1.0 - t;
    const double b0 = u * u * u;
    const double b1 = 3.0 * u * u * t;
    const double b2 = 3.0 * u * t * t;
    const double b3 = t * t * t;
    return b0 * seg.control[0] + b1 * seg.control[1] + b2 * seg.control[2] +
           b3 * seg.control[3];
}

Vec2 derivative(const CubicBezierSegment& seg, double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw DomainError("bezier parameter outside [0, 1]: t=" +
                          std::to_string(t));
    }
    const double u = 1.0 - t;
    const Vec2 d0 = seg.control[1] - seg.control[0];
    const Vec2 d1 = seg.control[2] - seg.control[1];
    const Vec2 d2 = seg.control[3] - seg.control[2];
    return 3.0 * (u * u * d0 + 2.0 * u * t * d1 + t * t * d2);
}

SegmentedCurve fit_segmented(const std::vector<Vec2>& points, int num_segments,
                             const FitOptions& options) {
    for (const Vec2 p : points) {
        if (!is_finite(p)) {
            throw DomainError("curve fitting input contains non-finite points");
        }
    }
    const Partition part = make_partition(points.size(), num_segments);

    SegmentedCurve curve;
    curve.segments.reserve(static_cast<std::size_t>(num_segments));
    for (std::size_t r = 0; r + 1 < part.boundaries.size(); ++r) {
        const std::size_t i0 = part.boundaries[r];
        const std::size_t i1 = part.boundaries[r + 1];
        const auto s = chord_parameters(points, i0, i1);
        curve.segments.push_back(fit_one_segment(points, s, i0, i1));
    }

    if (options.continuity == Continuity::g1) {
        enforce_g1(curve);
    }

    if (options.check_self_intersection) {
        if (auto hit = find_self_intersection(curve, options.intersection_samples)) {
            throw SelfIntersectionError(
                "fitted curve crosses itself: segment " +
                    std::to_string(hit->segment_a) + " (t=" +
                    std::to_string(hit->param_a) + ") against segment " +
                    std::to_string(hit->segment_b) + " (t=" +
                    std::to_string(hit->param_b) + ")",
                hit->segment_a, hit->segment_b, hit->param_a, hit->param_b);
        }
    }
    return curve;
}

double fit_residual(const SegmentedCurve& curve, const std::vector<Vec2>& points) {
    if (curve.segments.empty()) {
        throw DomainError("fit_residual needs a non-empty curve");
    }
    const Partition part =
        make_partition(points.size(), static_cast<int>(curve.segments.size()));

    double sum_sq = 0.0;
    for (std::size_t r = 0; r + 1 < part.boundaries.size(); ++r) {
        const std::size_t i0 = part.boundaries[r];
        const std::size_t i1 = part.boundaries[r + 1];
        const auto s = chord_parameters(points, i0, i1);
        for (std::size_t j = i0; j <= i1; ++j) {
            const Vec2 on_curve = evaluate(curve.segments[r], s[j - i0]);
            sum_sq += squared_norm(points[j] - on_curve);
        }
    }
    return std::sqrt(sum_sq / static_cast<double>(points.size()));
}

std::optional<IntersectionReport> find_self_intersection(
    const SegmentedCurve& curve, int samples_per_segment) {
    if (samples_per_segment < 8) {
        throw DomainError(
            "self-intersection test needs at least 8 samples per segment");
    }
    const std::size_t n_seg = curve.segments.size();
    const auto samples = static_cast<std::size_t>(samples_per_segment);

    // Flatten the whole chain into one edge list.
    struct Edge {
        Vec2 a, b;
        std::size_t segment;
        std::size_t slot;  ///< sample interval index within the segment
    };
    std::vector<Edge> edges;
    edges.reserve(n_seg * samples);
    for (std::size_t k = 0; k < n_seg; ++k) {
        Vec2 prev = evaluate(curve.segments[k], 0.0);
        for (std::size_t j = 1; j <= samples; ++j) {
            const double t = static_cast<double>(j) / static_cast<double>(samples);
            const Vec2 next = evaluate(curve.segments[k], t);
            edges.push_back({prev, next, k, j - 1});
            prev = next;
        }
    }

    for (std::size_t i = 0; i < edges.size(); ++i) {
        for (std::size_t j = i + 1; j < edges.size(); ++j) {
            double si = 0.0, sj = 0.0;
            if (edges_cross(edges[i].a, edges[i].b, edges[j].a, edges[j].b, si, sj)) {
                IntersectionReport rep;
                rep.segment_a = static_cast<int>(edges[i].segment);
                rep.segment_b = static_cast<int>(edges[j].segment);
                rep.param_a = (static_cast<double>(edges[i].slot) + si) /
                              static_cast<double>(samples);
                rep.param_b = (static_cast<double>(edges[j].slot) + sj) /
                              static_cast<double>(samples);
                return rep;
            }
        }
    }
    return std::nullopt;
}

bool has_self_intersection(const SegmentedCurve& curve, int samples_per_segment) {
    return find_self_intersection(curve, samples_per_segment).has_value();
}

Vec2 global_evaluate(const SegmentedCurve& curve, double u) {
    if (curve.segments.empty()) {
        throw DomainError("global_evaluate needs a non-empty curve");
    }
    if (!(u >= 0.0 && u <= 1.0)) {
        throw DomainError("global parameter outside [0, 1]: u=" + std::to_string(u));
    }
    const auto n = curve.segments.size();
    const double scaled = u * static_cast<double>(n);
    auto i = static_cast<std::size_t>(scaled);
    if (i >= n) i = n - 1;
    const double t = std::clamp(scaled - static_cast<double>(i), 0.0, 1.0);
    return evaluate(curve.segments[i], t);
}

Vec2 global_derivative(const SegmentedCurve& curve, double u) {
    if (curve.segments.empty()) {
        throw DomainError("global_derivative needs a non-empty curve");
    }
    if (!(u >= 0.0 && u <= 1.0)) {
        throw DomainError("global parameter outside [0, 1]: u=" + std::to_string(u));
    }
    const auto n = curve.segments.size();
    const double scaled = u * static_cast<double>(n);
    auto i = static_cast<std::size_t>(scaled);
    if (i >= n) i = n - 1;
    const double t = std::clamp(scaled - static_cast<double>(i), 0.0, 1.0);
    return static_cast<double>(n) * derivative(curve.segments[i], t);
}

std::string to_json(const SegmentedCurve& curve) {
    nlohmann::json j;
    j["segments"] = nlohmann::json::array();
    for (const auto& seg : curve.segments) {
        nlohmann::json js = nlohmann::json::array();
        for (const Vec2 p : seg.control) {
            js.push_back({p.x, p.y});
        }
        j["segments"].push_back({{"control", js}});
    }
    return j.dump(2);
}

SegmentedCurve from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid curve JSON: ") + e.what(), 0);
    }
    if (!j.is_object() || !j.contains("segments") || !j["segments"].is_array()) {
        throw ParseError("curve JSON lacks a \"segments\" array", 0);
    }
    SegmentedCurve curve;
    for (const auto& js : j["segments"]) {
        if (!js.is_object() || !js.contains("control") ||
            !js["control"].is_array() || js["control"].size() != 4) {
            throw ParseError("curve JSON segment lacks 4 control points", 0);
        }
        CubicBezierSegment seg;
        for (std::size_t i = 0; i < 4; ++i) {
            const auto& jp = js["control"][i];
            if (!jp.is_array() || jp.size() != 2 || !jp[0].is_number() ||
                !jp[1].is_number()) {
                throw ParseError("curve JSON control point is not an [x, y] pair", 0);
            }
            seg.control[i] = {jp[0].get<double>(), jp[1].get<double>()};
        }
        curve.segments.push_back(seg);
    }
    if (curve.segments.empty()) {
        throw ParseError("curve JSON contains no segments", 0);
    }
    for (std::size_t i = 0; i + 1 < curve.segments.size(); ++i) {
        if (!(curve.segments[i].control[3] == curve.segments[i + 1].control[0])) {
            throw ParseError("curve JSON joints are not shared between segments " +
                                 std::to_string(i) + " and " + std::to_string(i + 1),
                             0);
        }
    }
    return curve;
}

}  // namespace mdf::bezier

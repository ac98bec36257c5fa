#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mdf/vec2.hpp"

namespace mdf::bezier {

/// Bernstein basis polynomial B_{i,n}(t) = C(n,i) t^i (1-t)^(n-i).
/// Throws mdf::DomainError unless 0 <= i <= n and t is in [0, 1].
double bernstein(int i, int n, double t);

/// One cubic curve piece. control[0] and control[3] are the endpoints.
struct CubicBezierSegment {
    std::array<Vec2, 4> control;
};

/// Point on the segment at local parameter t in [0, 1].
Vec2 evaluate(const CubicBezierSegment& seg, double t);

/// First derivative with respect to the local parameter t.
Vec2 derivative(const CubicBezierSegment& seg, double t);

/// A chain of cubic segments covering one airfoil outline. Consecutive
/// segments share endpoints (segments[k].control[3] == segments[k+1].control[0]).
struct SegmentedCurve {
    std::vector<CubicBezierSegment> segments;
};

/// How neighbouring segments are stitched together at interior joints.
enum class Continuity {
    c0,  ///< shared endpoints only
    g1,  ///< shared endpoints plus a common tangent direction
};

/// Where two polyline edges cross, in curve-local coordinates.
struct IntersectionReport {
    int segment_a = 0;
    int segment_b = 0;
    double param_a = 0.0;  ///< local t on segment_a
    double param_b = 0.0;  ///< local t on segment_b
};

struct FitOptions {
    Continuity continuity = Continuity::c0;
    bool check_self_intersection = true;
    int intersection_samples = 64;  ///< per-segment polyline density
};

/// Least-squares fit of `num_segments` cubic pieces to an ordered point
/// sequence. Data points are split into consecutive runs (one per segment,
/// sizes as even as possible); each segment interpolates its run's end
/// points exactly and fits the interior in the least-squares sense under
/// chord-length parameterization.
///
/// Throws mdf::DomainError for num_segments < 1, mdf::PartitionError when a
/// segment would receive fewer than 4 points (3 intervals), and
/// mdf::SelfIntersectionError when the fitted curve crosses itself (unless
/// disabled via options).
SegmentedCurve fit_segmented(const std::vector<Vec2>& points, int num_segments,
                             const FitOptions& options = {});

/// Root-mean-square distance between the data points and the fitted curve,
/// with each point compared against its position on the same chord-length
/// parameterization used by fit_segmented.
double fit_residual(const SegmentedCurve& curve, const std::vector<Vec2>& points);

/// Detects a proper crossing of the curve with itself by flattening every
/// segment into `samples_per_segment` straight edges and testing all
/// non-adjacent edge pairs. Returns the first crossing found, if any.
std::optional<IntersectionReport> find_self_intersection(
    const SegmentedCurve& curve, int samples_per_segment = 64);

bool has_self_intersection(const SegmentedCurve& curve,
                           int samples_per_segment = 64);

/// Point on the whole chain at global parameter u in [0, 1]. Segment index
/// i = min(floor(u*N), N-1), local t = u*N - i.
Vec2 global_evaluate(const SegmentedCurve& curve, double u);

/// Derivative of global_evaluate with respect to u (local derivative times
/// the chain-rule factor N).
Vec2 global_derivative(const SegmentedCurve& curve, double u);

/// Lossless JSON round-trip for fitted curves.
std::string to_json(const SegmentedCurve& curve);
SegmentedCurve from_json(const std::string& json_text);

}  // namespace mdf::bezier

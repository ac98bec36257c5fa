#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mdf/bezier.hpp"

namespace mdf::manifold {

/// Riemannian metric of the outline curve sampled at fixed global
/// parameters. For a planar curve r(u) the metric collapses to the scalar
/// first fundamental form g(u) = ||dr/du||^2, so the feature vector is the
/// squared tangent speed profile of the airfoil outline.
struct MetricVector {
    std::vector<double> values;         ///< g(u_k), chord^2-scaled, >= 0
    std::vector<double> sample_params;  ///< the u_k, strictly increasing in [0,1]
};

/// g(u) = ||d/du global_evaluate(curve, u)||^2. At interior joints the
/// left segment's one-sided derivative is used so the value is defined even
/// when the chain is only C0.
double metric_at(const bezier::SegmentedCurve& curve, double u);

/// f uniform samples u_k = k/(f-1), k = 0..f-1. Requires f >= 2.
MetricVector metric_vector(const bezier::SegmentedCurve& curve, int f);

/// Corpus CSV: header `name,g_0,...,g_{F-1}`, one row per airfoil. All rows
/// must share one feature length.
std::string features_csv(
    const std::vector<std::pair<std::string, MetricVector>>& rows);

}  // namespace mdf::manifold

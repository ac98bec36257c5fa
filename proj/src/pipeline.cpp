#include "mdf/pipeline.hpp"

#include <algorithm>

#include "mdf/errors.hpp"

namespace mdf::pipeline {

void validate(const PipelineConfig& config) {
    if (config.num_segments < 1) {
        throw DomainError("pipeline needs num_segments >= 1");
    }
    if (config.feature_len < 2) {
        throw DomainError("pipeline needs feature_len >= 2");
    }
    if (config.resample_m < 3 * config.num_segments + 1) {
        throw DomainError("resample_m must be at least 3*num_segments + 1 so the "
                          "final fit has 3 intervals per segment");
    }
}

int smoothing_segments(std::size_t num_points, int max_segments) {
    if (num_points < 4) {
        throw InsufficientDataError("smoothing fit needs at least 4 points");
    }
    // Three intervals per run keeps every fit nearly interpolating, so the
    // resampled outline stays on the input surfaces; thin trailing-edge
    // wedges would otherwise be crossed by the smoothing error.
    const auto by_density = static_cast<int>((num_points - 1) / 3);
    return std::clamp(by_density, 1, max_segments);
}

AirfoilAnalysis analyze(const geometry::AirfoilCoordinates& raw,
                        const PipelineConfig& config) {
    validate(config);

    // The canonical outline carries its closure point (first == last), so
    // fitting the whole walk closes the curve; the duplicate is separated by
    // the full loop and never forms a zero-length chord.
    const geometry::AirfoilCoordinates canonical_raw = geometry::preprocess(raw);

    bezier::FitOptions smooth_options;
    smooth_options.continuity = bezier::Continuity::c0;
    const bezier::SegmentedCurve smooth = bezier::fit_segmented(
        canonical_raw.points,
        smoothing_segments(canonical_raw.points.size(), config.num_segments),
        smooth_options);

    geometry::AirfoilCoordinates resampled =
        geometry::resample(smooth, config.resample_m);
    resampled.name = raw.name;

    AirfoilAnalysis out;
    out.canonical = geometry::preprocess(resampled);

    bezier::FitOptions final_options;
    final_options.continuity = config.continuity;
    out.curve = bezier::fit_segmented(out.canonical.points, config.num_segments,
                                      final_options);
    out.fit_rms = bezier::fit_residual(out.curve, out.canonical.points);
    out.features = manifold::metric_vector(out.curve, config.feature_len);
    out.params = geoparams::compute_params(out.canonical);
    return out;
}

}  // namespace mdf::pipeline

#pragma once

#include "mdf/bezier.hpp"
#include "mdf/geometry.hpp"
#include "mdf/geoparams.hpp"
#include "mdf/manifold.hpp"

namespace mdf::pipeline {

struct PipelineConfig {
    int num_segments = 40;   ///< final fit segment count
    int feature_len = 271;   ///< metric samples
    int resample_m = 281;    ///< outline points after resampling
    bezier::Continuity continuity = bezier::Continuity::c0;
};

void validate(const PipelineConfig& config);

struct AirfoilAnalysis {
    geometry::AirfoilCoordinates canonical;  ///< resampled, re-canonicalized outline
    bezier::SegmentedCurve curve;            ///< final segmented fit
    manifold::MetricVector features;
    geoparams::GeometricParameters params;
    double fit_rms = 0.0;                    ///< residual of the final fit
};

/// Segment count for the smoothing fit of an M-point raw outline:
/// clamp((M-1)/3, 1, max_segments). Three intervals per segment keeps the
/// smoothing fit nearly interpolating (see smoothing_segments in pipeline.cpp).
int smoothing_segments(std::size_t num_points, int max_segments);

/// Full chain: canonicalize, fit a smoothing curve whose segment count
/// adapts to the raw point count, resample it densely, re-canonicalize, fit
/// the final curve, then extract the metric features and the geometric
/// parameters. Raw files are often too sparse to feed the final segment
/// count directly, which is why the smoothing/resampling stage exists.
AirfoilAnalysis analyze(const geometry::AirfoilCoordinates& raw,
                        const PipelineConfig& config = {});

}  // namespace mdf::pipeline

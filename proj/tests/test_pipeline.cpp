#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstddef>
#include <string>

#include "mdf/errors.hpp"
#include "mdf/pipeline.hpp"
#include "test_util.hpp"

using namespace mdf;

namespace {

pipeline::AirfoilAnalysis analyzed(const std::string& file,
                                   const pipeline::PipelineConfig& config = {}) {
    const auto raw = geometry::load_airfoil_file(testutil::data_dir() / file);
    return pipeline::analyze(raw, config);
}

}  // namespace

TEST_CASE("analysis output structure on bundled airfoils") {
    for (const std::string file :
         {"naca2412.dat", "naca0012.dat", "naca0009.dat", "naca6409.dat",
          "naca23012.dat"}) {
        CAPTURE(file);
        const auto a = analyzed(file);
        CHECK(a.canonical.points.size() == 281);
        CHECK(geometry::is_canonical(a.canonical));
        CHECK(a.curve.segments.size() == 40);
        CHECK(a.features.values.size() == 271);
        CHECK(a.features.sample_params.size() == 271);
        CHECK(a.fit_rms >= 0.0);
        CHECK(a.fit_rms < 1e-3);
        CHECK(a.params.chord == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("trailing edge style survives the pipeline") {
    // Open trailing edges stay open, sealed ones stay sealed.
    const auto open_te = analyzed("naca2412.dat");
    CHECK(open_te.params.te_thickness == doctest::Approx(0.00252).epsilon(0.15));
    const auto& opts = open_te.canonical.points;
    const bool open_loop_closed =
        opts.front().x == opts.back().x && opts.front().y == opts.back().y;
    CHECK_FALSE(open_loop_closed);

    const auto closed_te = analyzed("naca0009.dat");
    CHECK(closed_te.params.te_thickness == 0.0);
    const auto& cpts = closed_te.canonical.points;
    CHECK(cpts.front().x == cpts.back().x);
    CHECK(cpts.front().y == cpts.back().y);
}

TEST_CASE("smoothing segment count follows the density rule") {
    CHECK(pipeline::smoothing_segments(4, 40) == 1);
    CHECK(pipeline::smoothing_segments(10, 40) == 3);
    CHECK(pipeline::smoothing_segments(61, 40) == 20);
    CHECK(pipeline::smoothing_segments(121, 40) == 40);
    // Clamped to the final fit's segment count...
    CHECK(pipeline::smoothing_segments(301, 40) == 40);
    // ...but only by the given ceiling.
    CHECK(pipeline::smoothing_segments(301, 100) == 100);
    CHECK(pipeline::smoothing_segments(302, 200) == 100);
    CHECK_THROWS_AS(pipeline::smoothing_segments(3, 40), InsufficientDataError);
}

TEST_CASE("config validation") {
    pipeline::PipelineConfig config;
    CHECK_NOTHROW(pipeline::validate(config));

    auto bad = config;
    bad.num_segments = 0;
    CHECK_THROWS_AS(pipeline::validate(bad), DomainError);

    bad = config;
    bad.feature_len = 1;
    CHECK_THROWS_AS(pipeline::validate(bad), DomainError);

    // The resampled outline must give the final fit 3 intervals per segment.
    bad = config;
    bad.resample_m = 3 * config.num_segments;  // one short
    CHECK_THROWS_AS(pipeline::validate(bad), DomainError);
    bad.resample_m = 3 * config.num_segments + 1;
    CHECK_NOTHROW(pipeline::validate(bad));
}

TEST_CASE("analysis fields agree with the underlying modules") {
    const auto a = analyzed("naca2412.dat");

    const auto features = manifold::metric_vector(a.curve, 271);
    REQUIRE(features.values.size() == a.features.values.size());
    CHECK((features.values == a.features.values));
    CHECK((features.sample_params == a.features.sample_params));

    const auto params = geoparams::compute_params(a.canonical);
    CHECK(params.chord == a.params.chord);
    CHECK(params.max_camber == a.params.max_camber);
    CHECK(params.max_camber_pos == a.params.max_camber_pos);
    CHECK(params.max_thickness == a.params.max_thickness);
    CHECK(params.max_thickness_pos == a.params.max_thickness_pos);
    CHECK(params.le_radius == a.params.le_radius);
    CHECK(params.te_thickness == a.params.te_thickness);

    CHECK(bezier::fit_residual(a.curve, a.canonical.points) == a.fit_rms);
}

TEST_CASE("analysis is deterministic") {
    const auto a = analyzed("naca6613.dat");
    const auto b = analyzed("naca6613.dat");
    CHECK((a.features.values == b.features.values));
    CHECK(a.fit_rms == b.fit_rms);
    REQUIRE(a.canonical.points.size() == b.canonical.points.size());
    for (std::size_t i = 0; i < a.canonical.points.size(); ++i) {
        CHECK(a.canonical.points[i].x == b.canonical.points[i].x);
        CHECK(a.canonical.points[i].y == b.canonical.points[i].y);
    }
}

TEST_CASE("non-default configuration is honoured") {
    pipeline::PipelineConfig config;
    config.num_segments = 10;
    config.feature_len = 50;
    config.resample_m = 121;
    const auto a = analyzed("naca4413.dat", config);
    CHECK(a.canonical.points.size() == 121);
    CHECK(a.curve.segments.size() == 10);
    CHECK(a.features.values.size() == 50);
    CHECK(a.fit_rms < 1e-2);
}

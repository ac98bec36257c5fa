#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mdf/geometry.hpp"

namespace mdf::geoparams {

/// Classical section parameters, all in chord fractions. Camber and
/// thickness use the vertical convention: camber(x) = (y_up + y_lo)/2 and
/// thickness(x) = y_up - y_lo on a shared x grid. max_camber is the signed
/// camber of largest magnitude, so a flipped airfoil reports the negated
/// value at the same position.
struct GeometricParameters {
    double chord = 0.0;
    double max_camber = 0.0;
    double max_camber_pos = 0.0;
    double max_thickness = 0.0;
    double max_thickness_pos = 0.0;
    double le_radius = 0.0;
    double te_thickness = 0.0;
};

/// Number of cosine-spaced x stations the surfaces are interpolated onto.
inline constexpr int kGridPoints = 200;

/// Computes the parameters from a canonical airfoil (see
/// geometry::is_canonical). The outline is split at the leading edge into
/// upper and lower surfaces, each interpolated piecewise-linearly in x onto
/// a cosine-spaced grid (dense near the leading edge).
///
/// Throws mdf::InvalidAirfoilError when the input is not canonical or the
/// surfaces cross (thickness < -1e-6 anywhere).
GeometricParameters compute_params(const geometry::AirfoilCoordinates& airfoil);

/// Corpus CSV with the 7 named columns, one row per airfoil.
std::string params_csv(
    const std::vector<std::pair<std::string, GeometricParameters>>& rows);

/// The 7 parameters as a feature vector, in the params_csv column order.
std::vector<double> to_feature_vector(const GeometricParameters& p);

}  // namespace mdf::geoparams

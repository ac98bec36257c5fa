#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mdf/vec2.hpp"

namespace mdf::bezier {
struct SegmentedCurve;
}

namespace mdf::geometry {

// Ordered 2D point set for one airfoil. After preprocess(), points run
// trailing edge -> upper surface -> leading edge -> lower surface, with
// x normalized to [0, 1].
struct AirfoilCoordinates {
    std::string name;
    std::vector<Vec2> points;
};

// Points closer than this (in chord units) are treated as coincident.
inline constexpr double kMergeTolerance = 1e-9;

// Reads a coordinate file: a name line followed by "x y" lines. Selig files
// (one loop) come back in file order. Lednicer files (a point-count header
// and two LE->TE surface blocks) are detected by their header pair, whose
// values cannot be chord-fraction coordinates, and the two blocks are
// stitched into the equivalent single loop.
AirfoilCoordinates parse_coordinate_file(std::istream& in);
AirfoilCoordinates load_airfoil_file(const std::filesystem::path& path);

// Canonicalizes an airfoil loop: merges coincident consecutive points,
// normalizes x to [0, 1] (y scaled by the same factor), and reorders the
// loop to TE -> upper -> LE -> lower. Idempotent.
AirfoilCoordinates preprocess(const AirfoilCoordinates& raw);

// Evaluates the curve at m uniformly spaced global parameters. The name of
// the result is left empty for the caller to fill.
AirfoilCoordinates resample(const bezier::SegmentedCurve& curve, int m);

// Canonical CSV export: header "x,y", one point per row.
std::string to_canonical_csv(const AirfoilCoordinates& airfoil);

// True once the AirfoilCoordinates invariants hold (>= 4 finite points,
// x spans [0,1], no coincident consecutive points, TE->upper->LE->lower).
bool is_canonical(const AirfoilCoordinates& airfoil);

}  // namespace mdf::geometry

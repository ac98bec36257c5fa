#include "mdf/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "mdf/bezier.hpp"
#include "mdf/errors.hpp"
#include "mdf/io.hpp"

namespace mdf::geometry {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> tokens;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

double parse_real(const std::string& tok, std::size_t line_no) {
    double v = 0.0;
    const char* begin = tok.data();
    const char* end = begin + tok.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(v)) {
        throw ParseError("line " + std::to_string(line_no) +
                             ": expected a real number, got \"" + tok + "\"",
                         line_no);
    }
    return v;
}

bool near_integer(double v) { return std::abs(v - std::round(v)) < 1e-6; }

// Shoelace formula over the cyclic polygon; positive for counterclockwise.
double signed_area(const std::vector<Vec2>& pts) {
    double area = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec2 a = pts[i];
        const Vec2 b = pts[(i + 1) % pts.size()];
        area += a.x * b.y - b.x * a.y;
    }
    return 0.5 * area;
}

}  // namespace

AirfoilCoordinates parse_coordinate_file(std::istream& in) {
    AirfoilCoordinates result;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) {
        throw ParseError("empty coordinate file", 1);
    }
    ++line_no;
    result.name = trim(line);

    struct Pair {
        Vec2 p;
        std::size_t line_no;
    };
    std::vector<Pair> pairs;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (tokens.size() != 2) {
            throw ParseError("line " + std::to_string(line_no) +
                                 ": expected two numbers, got " +
                                 std::to_string(tokens.size()) + " tokens",
                             line_no);
        }
        pairs.push_back({{parse_real(tokens[0], line_no),
                          parse_real(tokens[1], line_no)},
                         line_no});
    }

    // Lednicer layout: the first pair is the per-surface point counts, which
    // can never be chord-fraction coordinates.
    if (!pairs.empty() && pairs[0].p.x > 1.5 && pairs[0].p.y > 1.5 &&
        near_integer(pairs[0].p.x) && near_integer(pairs[0].p.y)) {
        const auto n_upper = static_cast<std::size_t>(std::round(pairs[0].p.x));
        const auto n_lower = static_cast<std::size_t>(std::round(pairs[0].p.y));
        if (pairs.size() != 1 + n_upper + n_lower) {
            throw ParseError(
                "surface point counts (" + std::to_string(n_upper) + " + " +
                    std::to_string(n_lower) + ") disagree with " +
                    std::to_string(pairs.size() - 1) + " coordinate lines",
                pairs.back().line_no);
        }
        std::vector<Vec2> upper, lower;
        for (std::size_t i = 0; i < n_upper; ++i) upper.push_back(pairs[1 + i].p);
        for (std::size_t i = 0; i < n_lower; ++i) {
            lower.push_back(pairs[1 + n_upper + i].p);
        }
        // Both blocks run LE -> TE; reverse the upper block and skip the
        // shared leading-edge point to get the equivalent single loop.
        std::reverse(upper.begin(), upper.end());
        result.points = std::move(upper);
        std::size_t start = 0;
        if (!lower.empty() && !result.points.empty() &&
            norm(lower.front() - result.points.back()) <= kMergeTolerance) {
            start = 1;
        }
        for (std::size_t i = start; i < lower.size(); ++i) {
            result.points.push_back(lower[i]);
        }
    } else {
        result.points.reserve(pairs.size());
        for (const auto& pr : pairs) result.points.push_back(pr.p);
    }

    if (result.points.size() < 4) {
        throw InsufficientDataError("airfoil \"" + result.name + "\" has " +
                                    std::to_string(result.points.size()) +
                                    " points; need at least 4");
    }
    return result;
}

AirfoilCoordinates load_airfoil_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open airfoil file: " + path.string());
    }
    return parse_coordinate_file(in);
}

AirfoilCoordinates preprocess(const AirfoilCoordinates& raw) {
    if (raw.points.size() < 4) {
        throw InsufficientDataError("airfoil \"" + raw.name +
                                    "\" has fewer than 4 points");
    }
    for (const Vec2 p : raw.points) {
        if (!is_finite(p)) {
            throw InvalidAirfoilError("airfoil \"" + raw.name +
                                      "\" contains non-finite coordinates");
        }
    }

    double xmin = raw.points[0].x;
    double xmax = raw.points[0].x;
    for (const Vec2 p : raw.points) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
    }
    const double chord = xmax - xmin;
    if (!(chord > 0.0)) {
        throw InvalidAirfoilError("airfoil \"" + raw.name + "\" has zero chord");
    }

    // Chord normalization: division (not reciprocal multiply) so the extreme
    // points land on exactly 0 and 1, and a normalized input passes through
    // bit-exactly.
    std::vector<Vec2> pts;
    pts.reserve(raw.points.size());
    for (const Vec2 p : raw.points) {
        pts.push_back({(p.x - xmin) / chord, p.y / chord});
    }

    // Merge coincident consecutive points.
    std::vector<Vec2> merged;
    merged.reserve(pts.size());
    for (const Vec2 p : pts) {
        if (merged.empty() || norm(p - merged.back()) > kMergeTolerance) {
            merged.push_back(p);
        }
    }

    bool closed = false;
    if (merged.size() >= 2 &&
        norm(merged.front() - merged.back()) <= kMergeTolerance) {
        closed = true;
        merged.pop_back();
    }
    if (merged.size() < 4) {
        throw InsufficientDataError("airfoil \"" + raw.name +
                                    "\" has fewer than 4 distinct points");
    }

    // Both surfaces present iff x turns back somewhere along the walk.
    bool seen_decrease = false;
    bool seen_increase = false;
    for (std::size_t i = 1; i < merged.size(); ++i) {
        const double dx = merged[i].x - merged[i - 1].x;
        if (dx > 0.0) seen_increase = true;
        if (dx < 0.0) seen_decrease = true;
    }
    if (!(seen_decrease && seen_increase)) {
        throw IncompleteAirfoilError("airfoil \"" + raw.name +
                                     "\" describes a single surface only");
    }

    if (signed_area(merged) < 0.0) {
        std::reverse(merged.begin(), merged.end());
    }

    // Start the loop at the trailing edge point that opens the upper surface:
    // the max-x point whose cyclic successor moves toward the leading edge.
    const std::size_t n = merged.size();
    std::size_t start = n;
    double best_y = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (merged[i].x == 1.0 && merged[(i + 1) % n].x < 1.0 &&
            merged[i].y > best_y) {
            best_y = merged[i].y;
            start = i;
        }
    }
    if (start == n) {
        // No exact max-x point with a leftward successor; fall back to the
        // global argmax.
        start = static_cast<std::size_t>(
            std::max_element(merged.begin(), merged.end(),
                             [](Vec2 a, Vec2 b) { return a.x < b.x; }) -
            merged.begin());
    }
    std::rotate(merged.begin(), merged.begin() + static_cast<std::ptrdiff_t>(start),
                merged.end());

    if (closed) merged.push_back(merged.front());

    AirfoilCoordinates out;
    out.name = raw.name;
    out.points = std::move(merged);
    return out;
}

AirfoilCoordinates resample(const bezier::SegmentedCurve& curve, int m) {
    if (m < 2) {
        throw DomainError("resample needs m >= 2, got " + std::to_string(m));
    }
    AirfoilCoordinates out;
    out.points.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(m - 1);
        out.points.push_back(bezier::global_evaluate(curve, u));
    }
    return out;
}

std::string to_canonical_csv(const AirfoilCoordinates& airfoil) {
    std::string csv = "x,y\n";
    for (const Vec2 p : airfoil.points) {
        csv += io::format_double(p.x);
        csv += ',';
        csv += io::format_double(p.y);
        csv += '\n';
    }
    return csv;
}

bool is_canonical(const AirfoilCoordinates& airfoil) {
    const auto& pts = airfoil.points;
    if (pts.size() < 4) return false;
    double xmin = pts[0].x, xmax = pts[0].x;
    for (const Vec2 p : pts) {
        if (!is_finite(p)) return false;
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
    }
    if (xmin != 0.0 || xmax != 1.0) return false;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (norm(pts[i] - pts[i - 1]) <= kMergeTolerance) return false;
    }
    if (pts[0].x != 1.0 || pts[1].x >= 1.0) return false;
    std::vector<Vec2> loop = pts;
    if (norm(loop.front() - loop.back()) <= kMergeTolerance) loop.pop_back();
    return signed_area(loop) > 0.0;
}

}  // namespace mdf::geometry

#include "mdf/geoparams.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mdf/errors.hpp"
#include "mdf/io.hpp"

namespace mdf::geoparams {

namespace {

// Piecewise-linear interpolation of an x-sorted surface polyline, clamped to
// the end values outside the covered span.
double interp_surface(const std::vector<Vec2>& surf, double x) {
    if (x <= surf.front().x) return surf.front().y;
    if (x >= surf.back().x) return surf.back().y;
    const auto it = std::upper_bound(
        surf.begin(), surf.end(), x,
        [](double xv, const Vec2& p) { return xv < p.x; });
    const Vec2 hi = *it;
    const Vec2 lo = *(it - 1);
    if (hi.x == lo.x) return lo.y;
    const double w = (x - lo.x) / (hi.x - lo.x);
    return lo.y + w * (hi.y - lo.y);
}

// Least-squares circle through `pts` (algebraic fit): minimize
// sum (x^2 + y^2 + D x + E y + F)^2 over D, E, F.
double circle_fit_radius(const std::vector<Vec2>& pts) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    double sz = 0, sxz = 0, syz = 0;
    const auto n = static_cast<double>(pts.size());
    for (const Vec2 p : pts) {
        const double z = p.x * p.x + p.y * p.y;
        sx += p.x;
        sy += p.y;
        sxx += p.x * p.x;
        syy += p.y * p.y;
        sxy += p.x * p.y;
        sz += z;
        sxz += p.x * z;
        syz += p.y * z;
    }
    // Normal equations for [D E F]^T.
    double m[3][4] = {{sxx, sxy, sx, -sxz},
                      {sxy, syy, sy, -syz},
                      {sx, sy, n, -sz}};
    // Gaussian elimination with partial pivoting.
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        }
        if (std::abs(m[pivot][col]) < 1e-14) return 0.0;
        std::swap(m[col], m[pivot]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    const double d = m[0][3] / m[0][0];
    const double e = m[1][3] / m[1][1];
    const double f = m[2][3] / m[2][2];
    const double r2 = 0.25 * (d * d + e * e) - f;
    return r2 > 0.0 ? std::sqrt(r2) : 0.0;
}

// Circumradius of the triangle abc; 0 when (near-)collinear.
double circumradius(Vec2 a, Vec2 b, Vec2 c) {
    const double la = norm(b - c);
    const double lb = norm(c - a);
    const double lc = norm(a - b);
    const double area2 = std::abs(cross(b - a, c - a));
    if (area2 < 1e-30) return 0.0;
    return la * lb * lc / (2.0 * area2);
}

}  // namespace

GeometricParameters compute_params(const geometry::AirfoilCoordinates& airfoil) {
    if (!geometry::is_canonical(airfoil)) {
        throw InvalidAirfoilError("airfoil \"" + airfoil.name +
                                  "\" is not in canonical form");
    }
    const auto& pts = airfoil.points;

    // Drop the closure duplicate so the walk is open TE -> LE -> TE.
    std::vector<Vec2> walk = pts;
    bool closed = false;
    if (norm(walk.front() - walk.back()) <= geometry::kMergeTolerance) {
        walk.pop_back();
        closed = true;
    }

    // Split at the leading edge. With a blunt (multi-point) leading edge the
    // vertical LE face between the first and last min-x points belongs to
    // neither surface.
    double xmin = walk[0].x;
    for (const Vec2 p : walk) xmin = std::min(xmin, p.x);
    std::size_t le_first = walk.size(), le_last = 0;
    for (std::size_t i = 0; i < walk.size(); ++i) {
        if (walk[i].x == xmin) {
            le_first = std::min(le_first, i);
            le_last = std::max(le_last, i);
        }
    }
    if (le_first == 0 || le_last + 1 >= walk.size()) {
        throw InvalidAirfoilError("airfoil \"" + airfoil.name +
                                  "\" has its leading edge at the walk boundary");
    }

    std::vector<Vec2> upper(walk.begin(), walk.begin() + static_cast<std::ptrdiff_t>(le_first) + 1);
    std::vector<Vec2> lower(walk.begin() + static_cast<std::ptrdiff_t>(le_last), walk.end());
    if (closed) {
        // The closure edge returns to the first point, so a closed loop's
        // lower surface ends at the shared trailing-edge point.
        lower.push_back(walk.front());
    }
    std::reverse(upper.begin(), upper.end());  // now LE -> TE
    std::stable_sort(upper.begin(), upper.end(),
                     [](Vec2 a, Vec2 b) { return a.x < b.x; });
    std::stable_sort(lower.begin(), lower.end(),
                     [](Vec2 a, Vec2 b) { return a.x < b.x; });

    GeometricParameters out;
    double gx_min = pts[0].x, gx_max = pts[0].x;
    for (const Vec2 p : pts) {
        gx_min = std::min(gx_min, p.x);
        gx_max = std::max(gx_max, p.x);
    }
    out.chord = gx_max - gx_min;

    // Cosine-spaced stations cluster samples near the leading edge.
    double best_abs_camber = -1.0;
    for (int i = 0; i < kGridPoints; ++i) {
        const double x =
            0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(kGridPoints - 1)));
        const double y_up = interp_surface(upper, x);
        const double y_lo = interp_surface(lower, x);
        const double thickness = y_up - y_lo;
        if (thickness < -1e-6) {
            throw InvalidAirfoilError("airfoil \"" + airfoil.name +
                                      "\" surfaces cross near x=" +
                                      std::to_string(x));
        }
        const double camber = 0.5 * (y_up + y_lo);
        if (std::abs(camber) > best_abs_camber) {
            best_abs_camber = std::abs(camber);
            out.max_camber = camber;
            out.max_camber_pos = x;
        }
        if (thickness > out.max_thickness) {
            out.max_thickness = thickness;
            out.max_thickness_pos = x;
        }
    }
    out.te_thickness =
        std::max(0.0, interp_surface(upper, 1.0) - interp_surface(lower, 1.0));
    out.max_thickness = std::max(out.max_thickness, out.te_thickness);

    // Leading-edge radius: least-squares circle over the nose points, or the
    // circumcircle of the three points nearest the leading edge when the
    // nose window is too sparse.
    std::vector<Vec2> nose;
    for (const Vec2 p : walk) {
        if (p.x <= 0.02) nose.push_back(p);
    }
    if (nose.size() >= 5) {
        out.le_radius = circle_fit_radius(nose);
    } else {
        const Vec2 le = walk[le_first];
        std::vector<Vec2> near = walk;
        std::stable_sort(near.begin(), near.end(), [le](Vec2 a, Vec2 b) {
            return squared_norm(a - le) < squared_norm(b - le);
        });
        out.le_radius = circumradius(near[0], near[1], near[2]);
    }
    return out;
}

std::string params_csv(
    const std::vector<std::pair<std::string, GeometricParameters>>& rows) {
    std::string csv =
        "name,chord,max_camber,max_camber_pos,max_thickness,"
        "max_thickness_pos,le_radius,te_thickness\n";
    for (const auto& [name, p] : rows) {
        csv += name;
        for (const double v : to_feature_vector(p)) {
            csv += ',';
            csv += io::format_double(v);
        }
        csv += '\n';
    }
    return csv;
}

std::vector<double> to_feature_vector(const GeometricParameters& p) {
    return {p.chord,         p.max_camber,        p.max_camber_pos,
            p.max_thickness, p.max_thickness_pos, p.le_radius,
            p.te_thickness};
}

}  // namespace mdf::geoparams

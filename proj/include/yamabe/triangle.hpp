#pragma once

// Euclidean geometry of a single triangle. Index r in 0..2 names a corner;
// the length x[r] is the side opposite that corner.

#include "yamabe/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace yamabe {

/// Relative slack below which a triangle counts as degenerate.
inline constexpr double kDegenerateSlack = 1e-9;

struct TriangleLengths {
    std::array<double, 3> x{};

    double operator[](int r) const { return x[static_cast<std::size_t>(r)]; }
    double perimeter() const noexcept { return x[0] + x[1] + x[2]; }
};

struct TriangleAngles {
    std::array<double, 3> theta{};

    double operator[](int r) const { return theta[static_cast<std::size_t>(r)]; }
    double sum() const noexcept { return theta[0] + theta[1] + theta[2]; }
};

/// [d theta_r / d u_s * u_s] together with the data it is built from.
struct AngleDerivativeMatrix {
    Eigen::Matrix3d m;   // -a / (2A)
    Eigen::Matrix3d a;   // a_rr = x_r^2, a_rs = -x_r x_s cos(theta_t)
    double area{};
    TriangleLengths lengths;
    TriangleAngles angles;
};

/// min over corners of (x_s + x_t - x_r) / perimeter. Scale invariant;
/// positive exactly when the strict triangle inequalities hold. Non-finite or
/// non-positive input yields -infinity.
inline double relative_slack(const TriangleLengths& l) noexcept
{
    const double p = l.perimeter();
    if (!(p > 0.0) || !std::isfinite(p) || l.x[0] <= 0.0 || l.x[1] <= 0.0 || l.x[2] <= 0.0)
        return -std::numeric_limits<double>::infinity();
    const double longest = std::max({l.x[0], l.x[1], l.x[2]});
    return (p - 2.0 * longest) / p;
}

/// Corner opposite the longest side: the corner that flattens toward pi
/// when the triangle degenerates.
inline int tight_corner(const TriangleLengths& l) noexcept
{
    int r = 0;
    for (int s = 1; s < 3; ++s)
        if (l[s] > l[r])
            r = s;
    return r;
}

inline void require_nondegenerate(const TriangleLengths& l)
{
    const double slack = relative_slack(l);
    if (!(slack >= kDegenerateSlack)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "lengths (" << l.x[0] << ", " << l.x[1] << ", " << l.x[2] << ") have relative slack " << slack;
        throw Error(ErrorCode::DegenerateTriangle, msg.str());
    }
}

/// Heron's formula with Kahan's operand ordering.
inline double triangle_area(const TriangleLengths& l)
{
    require_nondegenerate(l);
    std::array<double, 3> s = l.x;
    std::sort(s.begin(), s.end(), std::greater<>());
    const double a = s[0], b = s[1], c = s[2];
    return 0.25 * std::sqrt((a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c)));
}

/// Law of cosines, ratio clamped to [-1, 1].
inline TriangleAngles triangle_angles(const TriangleLengths& l)
{
    require_nondegenerate(l);
    TriangleAngles out;
    for (int r = 0; r < 3; ++r) {
        const double xr = l[r], xs = l[(r + 1) % 3], xt = l[(r + 2) % 3];
        const double c = (xs * xs + xt * xt - xr * xr) / (2.0 * xs * xt);
        out.theta[static_cast<std::size_t>(r)] = std::acos(std::clamp(c, -1.0, 1.0));
    }
    return out;
}

/// x_r = d_r * u_s * u_t.
inline TriangleLengths conformal_lengths(const TriangleLengths& d, const std::array<double, 3>& u)
{
    TriangleLengths x{{d.x[0] * u[1] * u[2], d.x[1] * u[0] * u[2], d.x[2] * u[0] * u[1]}};
    const double slack = relative_slack(x);
    if (!(slack >= kDegenerateSlack)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "conformal lengths (" << x.x[0] << ", " << x.x[1] << ", " << x.x[2] << ") have relative slack "
            << slack << " (threshold " << kDegenerateSlack << ")";
        throw Error(ErrorCode::OutOfConformalDomain, msg.str());
    }
    return x;
}

/// [d theta_r / d x_s]: diagonal x_r/(2A), off-diagonal -(x_r/(2A)) cos(theta_t)
/// with t the third corner.
inline Eigen::Matrix3d angle_derivatives_lengths(const TriangleLengths& l, const TriangleAngles& angles, double area)
{
    Eigen::Matrix3d j;
    for (int r = 0; r < 3; ++r) {
        const double diag = l[r] / (2.0 * area);
        for (int s = 0; s < 3; ++s) {
            if (r == s) {
                j(r, s) = diag;
            } else {
                const int t = 3 - r - s;
                j(r, s) = -diag * std::cos(angles[t]);
            }
        }
    }
    return j;
}

inline Eigen::Matrix3d angle_derivatives_lengths(const TriangleLengths& l)
{
    return angle_derivatives_lengths(l, triangle_angles(l), triangle_area(l));
}

/// Angle derivative matrix of a triangle with the given (already conformally
/// scaled) side lengths.
inline AngleDerivativeMatrix angle_derivative_matrix(const TriangleLengths& x)
{
    AngleDerivativeMatrix out;
    out.lengths = x;
    out.angles = triangle_angles(x);
    out.area = triangle_area(x);
    for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s)
            out.a(r, s) = r == s ? x[r] * x[r] : -x[r] * x[s] * std::cos(out.angles[3 - r - s]);
    out.m = -out.a / (2.0 * out.area);
    return out;
}

inline AngleDerivativeMatrix angle_derivative_matrix(const TriangleLengths& d, const std::array<double, 3>& u)
{
    return angle_derivative_matrix(conformal_lengths(d, u));
}

} // namespace yamabe

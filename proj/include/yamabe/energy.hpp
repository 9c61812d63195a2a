#pragma once

// Energy F(w) = integral from 0 to w of sum over corners (a - theta) dw,
// whose gradient is K - (2*pi - target corner sums).

#include "yamabe/curvature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

namespace yamabe {

/// Target corner angle per face corner, aligned with Triangulation::face(f).
struct TargetAngles {
    std::vector<std::array<double, 3>> corner;

    /// Sum of target corners at each vertex.
    std::vector<double> vertex_sums(const Triangulation& t) const
    {
        std::vector<double> out(t.vertex_count(), 0.0);
        for (Index f = 0; f < t.face_count(); ++f)
            for (std::size_t r = 0; r < 3; ++r)
                out[t.face(f)[r]] += corner[f][r];
        return out;
    }

    /// Largest deviation of any face sum from pi.
    double face_sum_error() const
    {
        double worst = 0.0;
        for (const auto& c : corner)
            worst = std::max(worst, std::abs(c[0] + c[1] + c[2] - std::numbers::pi));
        return worst;
    }
};

struct EnergyValue {
    double value{};
    std::vector<double> gradient;
};

struct EnergyOptions {
    double tolerance{1e-10};
    unsigned max_depth{15};
    int domain_samples{256};
};

/// The integration path left the conformal domain. `segment` indexes the
/// polyline piece and `t` in [0,1] is the first out-of-domain parameter found
/// on it.
class PathError : public Error {
public:
    PathError(std::size_t segment, double t)
        : Error(ErrorCode::PathLeavesDomain, describe(segment, t)), segment_(segment), t_(t)
    {}

    std::size_t segment() const noexcept { return segment_; }
    double t() const noexcept { return t_; }

private:
    static std::string describe(std::size_t segment, double t)
    {
        std::ostringstream msg;
        msg.precision(17);
        msg << "segment " << segment << " leaves the conformal domain at t = " << t;
        return msg.str();
    }

    std::size_t segment_;
    double t_;
};

namespace detail {

inline std::vector<double> lerp(std::span<const double> p, std::span<const double> q, double s)
{
    std::vector<double> x(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        x[i] = p[i] + s * (q[i] - p[i]);
    return x;
}

/// First parameter in [0,1] at which the segment p->q leaves the domain, if
/// any sampled point does.
inline std::optional<double> first_exit(const Triangulation& t, const PLMetric& d, std::span<const double> p,
                                        std::span<const double> q, int samples)
{
    double good = 0.0;
    for (int k = 0; k <= samples; ++k) {
        const double s = static_cast<double>(k) / samples;
        if (in_domain(t, d, lerp(p, q, s))) {
            good = s;
            continue;
        }
        if (k == 0)
            return 0.0;
        double lo = good, hi = s;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (in_domain(t, d, lerp(p, q, mid)) ? lo : hi) = mid;
        }
        return hi;
    }
    return std::nullopt;
}

} // namespace detail

/// Gradient of F at w: K_i - (2*pi - sum of targets at i).
inline std::vector<double> energy_gradient(const Triangulation& t, const PLMetric& d, std::span<const double> w,
                                           const TargetAngles& targets)
{
    const CurvatureVector k = curvature(t, d, w);
    const std::vector<double> sums = targets.vertex_sums(t);
    std::vector<double> g(t.vertex_count());
    for (Index i = 0; i < g.size(); ++i)
        g[i] = k[i] - (kTwoPi - sums[i]);
    return g;
}

/// Line integral of the energy form along a polyline. The result is
/// F(path.back()) - F(path.front()); the form is closed, so it does not depend
/// on the route as long as the route stays in the domain.
inline EnergyValue energy_along_path(const Triangulation& t, const PLMetric& d,
                                     std::span<const std::vector<double>> path, const TargetAngles& targets,
                                     const EnergyOptions& opts = {})
{
    using boost::math::quadrature::gauss_kronrod;
    EnergyValue out;
    for (std::size_t seg = 0; seg + 1 < path.size(); ++seg) {
        const auto& p = path[seg];
        const auto& q = path[seg + 1];
        if (auto exit = detail::first_exit(t, d, p, q, opts.domain_samples))
            throw PathError(seg, *exit);
        auto integrand = [&](double s) {
            const std::vector<double> x = detail::lerp(p, q, s);
            if (!in_domain(t, d, x))
                throw PathError(seg, s);
            const std::vector<double> g = energy_gradient(t, d, x, targets);
            double dot = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i)
                dot += g[i] * (q[i] - p[i]);
            return dot;
        };
        out.value += gauss_kronrod<double, 15>::integrate(integrand, 0.0, 1.0, opts.max_depth, opts.tolerance);
    }
    out.gradient = energy_gradient(t, d, path.back(), targets);
    return out;
}

/// F(w) along the straight segment from 0.
inline EnergyValue energy(const Triangulation& t, const PLMetric& d, std::span<const double> w,
                          const TargetAngles& targets, const EnergyOptions& opts = {})
{
    const std::vector<std::vector<double>> path{std::vector<double>(w.size(), 0.0),
                                                std::vector<double>(w.begin(), w.end())};
    return energy_along_path(t, d, path, targets, opts);
}

} // namespace yamabe

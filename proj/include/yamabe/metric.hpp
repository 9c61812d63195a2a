#pragma once

#include "yamabe/mesh.hpp"
#include "yamabe/triangle.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

namespace yamabe {

/// Per-face triangle-inequality slack of a conformally changed metric.
struct DomainReport {
    bool in_domain{};
    std::vector<double> slack;   // per face, relative to perimeter
    Index worst_face{};
    Edge worst_edge;             // longest side of the worst face
    double min_slack{};
};

/// Raised when a conformal factor pushes some face out of the strict
/// triangle inequalities.
class DomainError : public Error {
public:
    DomainError(ErrorCode code, const std::string& what, DomainReport report)
        : Error(code, what), report_(std::move(report))
    {}

    const DomainReport& report() const noexcept { return report_; }

private:
    DomainReport report_;
};

/// Edge lengths of a piecewise-flat metric, indexed like Triangulation::edges().
class PLMetric {
public:
    PLMetric() = default;

    /// Validates every face against the strict triangle inequalities.
    static PLMetric from_lengths(const Triangulation& t, std::vector<double> lengths)
    {
        if (lengths.size() != t.edge_count())
            throw Error(ErrorCode::InvalidIndex, "expected " + std::to_string(t.edge_count()) + " edge lengths, got "
                                                     + std::to_string(lengths.size()));
        for (std::size_t e = 0; e < lengths.size(); ++e)
            if (!(lengths[e] > 0.0) || !std::isfinite(lengths[e]))
                throw Error(ErrorCode::DegenerateTriangle, "edge " + std::to_string(e) + " has non-positive length");
        PLMetric d;
        d.lengths_ = std::move(lengths);
        for (Index f = 0; f < t.face_count(); ++f)
            require_nondegenerate(d.face_lengths(t, f));
        return d;
    }

    static PLMetric unit(const Triangulation& t) { return from_lengths(t, std::vector<double>(t.edge_count(), 1.0)); }

    std::span<const double> lengths() const noexcept { return lengths_; }
    double length(Index e) const { return lengths_.at(e); }
    Index size() const noexcept { return lengths_.size(); }

    /// Side lengths of face f, x[r] opposite corner r.
    TriangleLengths face_lengths(const Triangulation& t, Index f) const
    {
        const auto& fe = t.face_edges(f);
        return {{lengths_[fe[0]], lengths_[fe[1]], lengths_[fe[2]]}};
    }

    friend bool operator==(const PLMetric&, const PLMetric&) = default;

private:
    std::vector<double> lengths_;
};

/// Positive per-vertex factor u, stored through its logarithm w = log u.
class ConformalFactor {
public:
    ConformalFactor() = default;

    static ConformalFactor ones(Index n) { return from_log(std::vector<double>(n, 0.0)); }

    static ConformalFactor from_log(std::vector<double> w)
    {
        ConformalFactor c;
        c.w_ = std::move(w);
        return c;
    }

    static ConformalFactor from_u(std::span<const double> u)
    {
        std::vector<double> w(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!(u[i] > 0.0))
                throw Error(ErrorCode::InvalidIndex, "conformal factor entry " + std::to_string(i) + " is not positive");
            w[i] = std::log(u[i]);
        }
        return from_log(std::move(w));
    }

    std::span<const double> w() const noexcept { return w_; }
    double w(Index i) const { return w_.at(i); }
    double u(Index i) const { return std::exp(w_.at(i)); }
    std::vector<double> u() const
    {
        std::vector<double> out(w_.size());
        for (std::size_t i = 0; i < w_.size(); ++i)
            out[i] = std::exp(w_[i]);
        return out;
    }
    Index size() const noexcept { return w_.size(); }

private:
    std::vector<double> w_;
};

/// Lengths of face f under u*d, x[r] opposite corner r.
inline TriangleLengths conformal_face_lengths(const Triangulation& t, const PLMetric& d, std::span<const double> w,
                                              Index f)
{
    const Face& face = t.face(f);
    const auto& fe = t.face_edges(f);
    TriangleLengths x;
    for (int r = 0; r < 3; ++r) {
        const Index s = face[static_cast<std::size_t>((r + 1) % 3)];
        const Index q = face[static_cast<std::size_t>((r + 2) % 3)];
        x.x[static_cast<std::size_t>(r)] = d.length(fe[static_cast<std::size_t>(r)]) * std::exp(w[s] + w[q]);
    }
    return x;
}

/// Side lengths of face f under u*d rescaled so the longest side is 1.
/// Angles and their derivatives depend only on this shape,
/// and it stays representable when w drifts far from zero.
inline TriangleLengths conformal_face_shape(const Triangulation& t, const PLMetric& d, std::span<const double> w,
                                            Index f)
{
    const Face& face = t.face(f);
    const auto& fe = t.face_edges(f);
    std::array<double, 3> logs{};
    for (int r = 0; r < 3; ++r) {
        const Index s = face[static_cast<std::size_t>((r + 1) % 3)];
        const Index q = face[static_cast<std::size_t>((r + 2) % 3)];
        logs[static_cast<std::size_t>(r)] = std::log(d.length(fe[static_cast<std::size_t>(r)])) + w[s] + w[q];
    }
    const double top = std::max({logs[0], logs[1], logs[2]});
    return {{std::exp(logs[0] - top), std::exp(logs[1] - top), std::exp(logs[2] - top)}};
}

/// Never throws on numeric grounds: extreme factors still give finite slacks.
inline DomainReport domain_report(const Triangulation& t, const PLMetric& d, const ConformalFactor& u)
{
    DomainReport rep;
    rep.slack.resize(t.face_count());
    rep.min_slack = std::numeric_limits<double>::infinity();
    const auto w = u.w();
    for (Index f = 0; f < t.face_count(); ++f) {
        const TriangleLengths x = conformal_face_shape(t, d, w, f);
        const auto& fe = t.face_edges(f);
        const double s = relative_slack(x);
        rep.slack[f] = s;
        if (s < rep.min_slack) {
            rep.min_slack = s;
            rep.worst_face = f;
            rep.worst_edge = t.edge(fe[static_cast<std::size_t>(tight_corner(x))]);
        }
    }
    rep.in_domain = rep.min_slack >= kDegenerateSlack;
    return rep;
}

inline bool in_domain(const Triangulation& t, const PLMetric& d, std::span<const double> w)
{
    for (Index f = 0; f < t.face_count(); ++f)
        if (!(relative_slack(conformal_face_shape(t, d, w, f)) >= kDegenerateSlack))
            return false;
    return true;
}

/// (u*d)(ij) = u_i u_j d_ij.
inline PLMetric apply_conformal(const Triangulation& t, const PLMetric& d, const ConformalFactor& u)
{
    const DomainReport rep = domain_report(t, d, u);
    if (!rep.in_domain) {
        std::ostringstream msg;
        msg << "face " << rep.worst_face << " has relative slack " << rep.min_slack << " at edge " << rep.worst_edge.a
            << "-" << rep.worst_edge.b;
        throw DomainError(ErrorCode::OutOfConformalDomain, msg.str(), rep);
    }
    std::vector<double> lengths(t.edge_count());
    for (Index e = 0; e < t.edge_count(); ++e) {
        const Edge& ed = t.edge(e);
        lengths[e] = d.length(e) * std::exp(u.w(ed.a) + u.w(ed.b));
    }
    return PLMetric::from_lengths(t, std::move(lengths));
}

/// Rescales u so that the product of its entries is 1 (w sums to zero).
inline ConformalFactor normalize_product(const ConformalFactor& u)
{
    const auto w = u.w();
    if (w.empty())
        return u;
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    std::vector<double> out(w.begin(), w.end());
    for (double& x : out)
        x -= mean;
    return ConformalFactor::from_log(std::move(out));
}

} // namespace yamabe

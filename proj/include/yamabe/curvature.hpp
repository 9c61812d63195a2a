#pragma once

#include "yamabe/metric.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace yamabe {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Vertex curvatures K_i = 2*pi - (sum of corner angles at v_i).
struct CurvatureVector {
    std::vector<double> k;

    double operator[](Index i) const { return k[i]; }
    Index size() const noexcept { return k.size(); }
    double sum() const noexcept
    {
        double s = 0.0;
        for (double x : k)
            s += x;
        return s;
    }
};

/// 2*pi*chi / N, from topology alone.
inline double average_curvature(const Triangulation& t)
{
    return kTwoPi * static_cast<double>(euler_characteristic(t)) / static_cast<double>(t.vertex_count());
}

/// Corner angles of every face under u*d (w = log u), face order.
inline std::vector<TriangleAngles> corner_angles(const Triangulation& t, const PLMetric& d, std::span<const double> w)
{
    std::vector<TriangleAngles> out(t.face_count());
    for (Index f = 0; f < t.face_count(); ++f)
        out[f] = triangle_angles(conformal_face_shape(t, d, w, f));
    return out;
}

inline CurvatureVector curvature_from_angles(const Triangulation& t, std::span<const TriangleAngles> angles)
{
    CurvatureVector out{std::vector<double>(t.vertex_count(), kTwoPi)};
    for (Index f = 0; f < t.face_count(); ++f)
        for (int r = 0; r < 3; ++r)
            out.k[t.face(f)[static_cast<std::size_t>(r)]] -= angles[f][r];
    return out;
}

/// Curvature of the metric with the given edge lengths.
inline CurvatureVector curvature(const Triangulation& t, const PLMetric& lengths)
{
    const std::vector<double> zero(t.vertex_count(), 0.0);
    return curvature_from_angles(t, corner_angles(t, lengths, zero));
}

/// Curvature of u*d with w = log u.
inline CurvatureVector curvature(const Triangulation& t, const PLMetric& d, std::span<const double> w)
{
    return curvature_from_angles(t, corner_angles(t, d, w));
}

/// C[i][r] = sum over faces of d theta_i / d u_r * u_r, i.e. C = -dK/dw.
/// Assembled by scattering each face's angle derivative matrix in face order.
inline Eigen::SparseMatrix<double> coefficient_matrix(const Triangulation& t, const PLMetric& d,
                                                      std::span<const double> w)
{
    const Index n = t.vertex_count();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(9 * t.face_count());
    for (Index f = 0; f < t.face_count(); ++f) {
        const AngleDerivativeMatrix local = angle_derivative_matrix(conformal_face_shape(t, d, w, f));
        const Face& face = t.face(f);
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s)
                triplets.emplace_back(static_cast<int>(face[static_cast<std::size_t>(r)]),
                                      static_cast<int>(face[static_cast<std::size_t>(s)]), local.m(r, s));
    }
    Eigen::SparseMatrix<double> c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    c.setFromTriplets(triplets.begin(), triplets.end());
    return c;
}

/// Orthonormal (Helmert) basis of the sum-zero hyperplane, N x (N-1).
inline Eigen::MatrixXd sum_zero_basis(Index n)
{
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n) - 1);
    for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(n); ++k) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(k * (k + 1)));
        for (Eigen::Index i = 0; i < k; ++i)
            q(i, k - 1) = scale;
        q(k, k - 1) = -static_cast<double>(k) * scale;
    }
    return q;
}

/// Eigenvalues (ascending) of C restricted to the sum-zero hyperplane.
inline Eigen::VectorXd projected_eigenvalues(const Eigen::SparseMatrix<double>& c)
{
    const Eigen::MatrixXd q = sum_zero_basis(static_cast<Index>(c.rows()));
    const Eigen::MatrixXd dense = Eigen::MatrixXd(c);
    const Eigen::MatrixXd restricted = q.transpose() * dense * q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (restricted + restricted.transpose()),
                                                          Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

struct RigidityReport {
    double min_singular_value{};
    double matrix_norm{};        // spectral norm of C
    bool locally_rigid{};
};

/// Local rigidity of the curvature map on the normalized slice: the
/// Jacobian of K restricted to sum-zero w is -C projected, and the map is a
/// local homeomorphism when that restriction is nonsingular.
inline RigidityReport rigidity_check(const Triangulation& t, const PLMetric& d, std::span<const double> w)
{
    const Eigen::SparseMatrix<double> c = coefficient_matrix(t, d, w);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(Eigen::MatrixXd(c), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd restricted = projected_eigenvalues(c);
    RigidityReport rep;
    rep.matrix_norm = full.eigenvalues().cwiseAbs().maxCoeff();
    rep.min_singular_value = restricted.cwiseAbs().minCoeff();
    rep.locally_rigid = rep.min_singular_value > 1e-10 * rep.matrix_norm;
    return rep;
}

} // namespace yamabe

#include "fixtures.hpp"
#include "oracles.hpp"

#include <yamabe/admissibility.hpp>
#include <yamabe/catalog.hpp>
#include <yamabe/energy.hpp>
#include <yamabe/flow.hpp>

#include <gtest/gtest.h>

#include <numbers>
#include <numeric>
#include <random>

using namespace yamabe;
constexpr double pi = std::numbers::pi;

namespace {

std::vector<double> log_of(std::vector<double> u)
{
    for (double& x : u)
        x = std::log(x);
    return u;
}

FlowState advance(const FlowEngine& engine, FlowState s, double dt, int steps)
{
    for (int k = 0; k < steps; ++k)
        s = engine.step(s, dt).state;
    return s;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

} // namespace

TEST(Flow, FlatTorusIsFixed)
{
    const auto t = catalog::torus7();
    const FlowEngine engine(t, PLMetric::unit(t), FlowMode::Unnormalized);
    const FlowState s0 = engine.make_state(std::vector<double>(7, 0.0));
    for (double dt : {1e-3, 0.1, 1.0}) {
        const FlowState s = engine.step(s0, dt).state;
        for (double w : s.w)
            EXPECT_NEAR(w, 0.0, 1e-14);
    }
}

TEST(Flow, RegularTetrahedronShrinksUniformly)
{
    const auto t = catalog::tetrahedron();
    const FlowEngine engine(t, PLMetric::unit(t), FlowMode::Unnormalized);
    const FlowState s = engine.step(engine.make_state(std::vector<double>(4, 0.0)), 0.1).state;
    for (double w : s.w)
        EXPECT_NEAR(w, -0.1 * pi, 1e-13);
    for (Index i = 0; i < 4; ++i)
        EXPECT_NEAR(s.K[i], pi, 1e-13);
}

TEST(Flow, StepMatchesReferenceIntegrator)
{
    const auto t = catalog::tetrahedron();
    const auto d = PLMetric::unit(t);
    const FlowEngine engine(t, d, FlowMode::Unnormalized);
    const auto w0 = log_of({1.0, 1.0, 1.0, 1.2});
    const FlowState s = engine.step(engine.make_state(w0), 1e-3).state;

    const auto faces = oracle::face_list(t);
    const auto len = oracle::length_map(t, d.lengths());
    const oracle::Field field = [&](const std::vector<double>& w) {
        auto k = oracle::curvature(4, faces, len, w);
        for (double& x : k)
            x = -x;
        return k;
    };
    const auto ref = oracle::reference_solution(field, w0, 1e-3, 64);
    for (Index i = 0; i < 4; ++i)
        EXPECT_NEAR(s.w[i], ref[i], 1e-9);
}

TEST(Flow, NormalizedFixedPoint)
{
    const auto t = catalog::icosahedron();
    const FlowEngine engine(t, PLMetric::unit(t), FlowMode::Normalized);
    const FlowState s = advance(engine, engine.make_state(std::vector<double>(12, 0.0)), 0.05, 20);
    for (double w : s.w)
        EXPECT_NEAR(w, 0.0, 1e-13);
}

TEST(Flow, ScalingEquivalence)
{
    const auto t = catalog::tetrahedron();
    const auto d = PLMetric::unit(t);
    const FlowEngine un(t, d, FlowMode::Unnormalized);
    const FlowEngine no(t, d, FlowMode::Normalized);
    auto w0 = log_of({1.0, 1.0, 1.0, 1.3});
    FlowEngine::project_sum_zero(w0);
    FlowState a = un.make_state(w0), b = no.make_state(w0);
    const double dt = 1e-3;
    double t_now = 0.0;
    for (double target : {0.1, 0.5, 1.0}) {
        const int steps = static_cast<int>(std::lround((target - t_now) / dt));
        a = advance(un, a, dt, steps);
        b = advance(no, b, dt, steps);
        t_now = target;
        for (Index i = 0; i < 4; ++i)
            EXPECT_NEAR(b.w[i], a.w[i] + no.average_curvature() * target, 1e-7) << target;
    }
}

TEST(Flow, NormalizedPreservesProduct)
{
    const auto t = catalog::tetrahedron();
    const FlowEngine engine(t, PLMetric::unit(t), FlowMode::Normalized);
    FlowState s = engine.make_state(log_of({1.0, 1.0, 1.0, 1.3}));
    for (int k = 0; k < 10000; ++k) {
        s = engine.step(s, 1e-3).state;
        ASSERT_LT(std::abs(sum(s.w)), 1e-9);
    }
}

TEST(Flow, LyapunovMonotone)
{
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> uf(0.85, 1.15);
    for (const auto& t : {catalog::tetrahedron(), catalog::icosahedron(), catalog::genus2()}) {
        for (auto mode : {FlowMode::Normalized, FlowMode::Unnormalized}) {
            std::vector<double> u(t.vertex_count());
            for (double& x : u)
                x = uf(rng);
            FlowOptions opts;
            opts.max_time = 5.0;
            const auto res = run(t, PLMetric::unit(t), mode, ConformalFactor::from_u(u), opts);
            const auto& rows = res.segments.front().rows;
            for (std::size_t i = 1; i < rows.size(); ++i) {
                double k2_prev = 0.0, k2 = 0.0;
                for (Index v = 0; v < t.vertex_count(); ++v) {
                    k2_prev += rows[i - 1].K[v] * rows[i - 1].K[v];
                    k2 += rows[i].K[v] * rows[i].K[v];
                }
                EXPECT_LE(k2, k2_prev + 1e-12);
                EXPECT_LE(rows[i].G, rows[i - 1].G + 1e-12);
                EXPECT_LE(rows[i].F, rows[i - 1].F);
            }
        }
    }
}

TEST(Flow, AccumulatedEnergyMatchesEnergyFunction)
{
    // F(w(t)) - F(w(0)) equals the integral of -G along the trajectory, and
    // the finite-difference gradient of F is -dw/dt.
    const auto t = catalog::tetrahedron();
    const auto d = PLMetric::unit(t);
    const auto targets = target_angles(t).targets;
    FlowOptions opts;
    opts.max_time = 2.0;
    opts.dt_max = 5e-3;
    const auto res = run(t, d, FlowMode::Normalized, ConformalFactor::from_u(std::vector<double>{1, 1, 1, 1.3}), opts);
    const FlowEngine engine(t, d, FlowMode::Normalized);
    const auto& rows = res.segments.front().rows;
    const double f0 = energy(t, d, rows.front().w, targets).value;
    for (std::size_t k = 0; k < 10; ++k) {
        const auto& row = rows[k * (rows.size() - 1) / 9];
        EXPECT_NEAR(energy(t, d, row.w, targets).value - f0, row.F, 1e-8);
        const auto v = engine.velocity(engine.make_state(row.w));
        const double h = 1e-5;
        for (Index i = 0; i < 4; ++i) {
            auto wp = row.w, wm = row.w;
            wp[i] += h;
            wm[i] -= h;
            const double fd = (energy(t, d, wp, targets).value - energy(t, d, wm, targets).value) / (2 * h);
            EXPECT_NEAR(fd, -v[i], 1e-5);
        }
    }
}

TEST(Flow, DetectHealthy)
{
    const auto t = catalog::icosahedron();
    const FlowEngine engine(t, PLMetric::unit(t), FlowMode::Normalized);
    EXPECT_EQ(engine.detect_singularity(engine.make_state(std::vector<double>(12, 0.05))).kind, SingularityKind::None);
}

TEST(Flow, DetectRemovable)
{
    auto [t, d] = fixture::flat_quad_octahedron(1e-7);
    const FlowEngine engine(t, d, FlowMode::Normalized);
    // push face (0,1,2) to slack 1e-10 through u_0
    const double s = 1e-10, delta = 4e-7 / (1 + 1e-7);
    std::vector<double> w(6, 0.0);
    w[0] = std::log((1.0 - delta / 2.0) * (1.0 + s) / (1.0 - s));
    FlowState st;
    st.w = w;
    const auto rep = engine.detect_singularity(st);
    EXPECT_EQ(rep.kind, SingularityKind::Removable);
    EXPECT_EQ(t.face(rep.face), (Face{0, 1, 2}));
    EXPECT_EQ(rep.tight_edge, Edge(1, 2));
    EXPECT_EQ(rep.collapsing_vertex, 0u);
    EXPECT_NEAR(rep.slack, s, 1e-12);
}

TEST(Flow, DetectEssential)
{
    // Vertex 3 sits far from a unit base triangle and u_3 compensates, so
    // the shape stays equilateral while u_3 is small. The threshold is
    // raised to what this geometry can reach with a valid base metric.
    const double far = 1e6;
    const auto t = catalog::tetrahedron();
    std::vector<double> len(6, 1.0);
    for (Index j = 0; j < 3; ++j)
        len[t.edge_index(j, 3)] = far;
    const auto d = PLMetric::from_lengths(t, len);
    FlowOptions opts;
    opts.u_essential = 1e-3;
    const FlowEngine engine(t, d, FlowMode::Normalized, opts);
    const FlowState s = engine.make_state({0.0, 0.0, 0.0, -std::log(far)});
    const auto rep = engine.detect_singularity(s);
    EXPECT_EQ(rep.kind, SingularityKind::Essential);
    EXPECT_EQ(rep.vertex, 3u);
    EXPECT_LT(rep.min_u, 1e-3);
    EXPECT_GT(rep.slack, 0.3);
}

TEST(Flow, DevelopedDiagonal)
{
    EXPECT_NEAR(developed_diagonal(1.0, 1.0, 2.0, 2.0, 2.0), std::sqrt(3.0), 1e-15);
    // kite: heights add
    const double a = 1.3, b = 2.1, c = 1.6;
    EXPECT_NEAR(developed_diagonal(a, a, c, b, b), std::sqrt(a * a - c * c / 4) + std::sqrt(b * b - c * c / 4), 1e-14);
    // square with unit sides
    EXPECT_NEAR(developed_diagonal(1.0, 1.0, std::sqrt(2.0), 1.0, 1.0), std::sqrt(2.0), 1e-15);
    // slack 1e-9: |ij| = 2 - 4e-9
    EXPECT_NEAR(developed_diagonal(1.0, 1.0, 2.0 - 4e-9, 2.0, 2.0), std::sqrt(3.0), 1e-4);
}

TEST(Flow, SurgeryOnFlatQuad)
{
    auto [t, d] = fixture::flat_quad_octahedron(1e-7);
    const FlowEngine engine(t, d, FlowMode::Normalized);
    const auto rep = engine.detect_singularity(engine.make_state(std::vector<double>(6, 0.0)));
    ASSERT_EQ(rep.kind, SingularityKind::Removable);
    const auto cut = surgery(t, d.lengths(), rep);
    EXPECT_EQ(cut.flip.removed_edge, Edge(1, 2));
    EXPECT_EQ(cut.flip.inserted_edge, Edge(0, 5));
    EXPECT_NEAR(cut.new_length, std::sqrt(3.0), 1e-3);
    EXPECT_EQ(cut.metric.length(cut.triangulation.edge_index(0, 5)), cut.new_length);
    for (Index e = 0; e < cut.triangulation.edge_count(); ++e) {
        const Edge& ed = cut.triangulation.edge(e);
        if (ed != Edge(0, 5)) {
            EXPECT_EQ(cut.metric.length(e), d.length(t.edge_index(ed.a, ed.b)));
        }
    }
    EXPECT_NEAR(curvature(cut.triangulation, cut.metric).sum(), 4 * pi, 1e-10);
}

TEST(Flow, SurgeryRejectsFlatResult)
{
    // k, i, l collinear: the new face (i,k,l) would be a segment.
    const auto t = catalog::octahedron();
    std::vector<double> len(t.edge_count());
    auto set = [&](Index a, Index b, double x) { len[t.edge_index(a, b)] = x; };
    set(0, 1, 1.0);
    set(1, 5, 1.0);
    set(1, 2, 2.0);
    set(0, 2, std::sqrt(3.0));
    set(2, 5, std::sqrt(7.0));
    set(0, 3, 1.5);
    set(0, 4, 1.5);
    set(2, 3, 1.5);
    set(3, 4, 1.5);
    set(1, 4, 1.5);
    set(3, 5, 2.5);
    set(4, 5, 2.0);
    SingularityReport rep;
    rep.kind = SingularityKind::Removable;
    rep.tight_edge = Edge(1, 2);
    rep.collapsing_vertex = 0;
    try {
        (void)surgery(t, len, rep);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NewMetricOutOfDomain);
    }
}

TEST(Flow, SurgeryRejectsDuplicateEdge)
{
    const auto t = catalog::tetrahedron();
    SingularityReport rep;
    rep.kind = SingularityKind::Removable;
    rep.tight_edge = Edge(0, 1);
    rep.collapsing_vertex = 2;
    const std::vector<double> len(6, 1.0);
    try {
        (void)surgery(t, len, rep);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::FlipCreatesDuplicateEdge);
    }
}

TEST(Flow, RunRegularTetrahedron)
{
    const auto t = catalog::tetrahedron();
    const auto res = run(t, PLMetric::unit(t), FlowMode::Normalized, ConformalFactor::ones(4));
    EXPECT_EQ(res.status, RunStatus::Converged);
    EXPECT_EQ(res.accepted_steps, 0u);
}

TEST(Flow, RunPerturbedTetrahedron)
{
    const auto t = catalog::tetrahedron();
    FlowOptions opts;
    opts.record_spectrum = true;
    const auto res = run(t, PLMetric::unit(t), FlowMode::Normalized,
                         ConformalFactor::from_u(std::vector<double>{1, 1, 1, 1.3}), opts);
    ASSERT_EQ(res.status, RunStatus::Converged);
    for (Index i = 0; i < 4; ++i)
        EXPECT_NEAR(res.final_state.K[i], pi, 1e-9);
    const auto fit = fit_convergence(res.segments.front().rows);
    // G decays at twice the sum-zero eigenvalue magnitude 8/sqrt3 of C at
    // the equilateral limit
    EXPECT_NEAR(fit.rate, 16.0 / std::sqrt(3.0), 0.1);
    EXPECT_LT(fit.residual, 1e-2);
    EXPECT_TRUE(fit.decay_bound_holds);
    EXPECT_GT(fit.lambda_floor, 0.0);
}

TEST(Flow, RunUnnormalizedTetrahedron)
{
    const auto t = catalog::tetrahedron();
    const auto res = run(t, PLMetric::unit(t), FlowMode::Unnormalized,
                         ConformalFactor::from_u(std::vector<double>{1, 1, 1, 1.3}));
    ASSERT_EQ(res.status, RunStatus::Converged);
    // w drifts like -K_av t
    EXPECT_NEAR(sum(res.final_state.w) / 4, -pi * res.final_state.t + sum(log_of({1, 1, 1, 1.3})) / 4, 1e-6);
}

TEST(Flow, RunJitteredTorus)
{
    std::mt19937_64 rng(72);
    std::uniform_real_distribution<double> dist(0.95, 1.05);
    const auto t = catalog::torus7();
    std::vector<double> len(t.edge_count());
    for (double& x : len)
        x = dist(rng);
    const auto res = run(t, PLMetric::from_lengths(t, len), FlowMode::Normalized, ConformalFactor::ones(7));
    ASSERT_EQ(res.status, RunStatus::Converged);
    for (double k : res.final_state.K.k)
        EXPECT_NEAR(k, 0.0, 1e-9);
}

TEST(Flow, EnvelopeHolds)
{
    const auto t = catalog::icosahedron();
    std::mt19937_64 rng(73);
    std::uniform_real_distribution<double> uf(0.85, 1.15);
    std::vector<double> u(12);
    for (double& x : u)
        x = uf(rng);
    const auto res = run(t, PLMetric::unit(t), FlowMode::Unnormalized, ConformalFactor::from_u(u));
    const double c = 2 * pi * static_cast<double>(t.edge_count());
    for (const auto& row : res.segments.front().rows)
        for (double w : row.w) {
            EXPECT_GE(w, -c * row.t - std::log(c));
            EXPECT_LE(w, c * row.t + std::log(c));
        }
}

TEST(Flow, SurgeryThenContinue)
{
    auto [t, d] = fixture::flat_quad_octahedron(1e-7);
    const auto res = run(t, d, FlowMode::Normalized, ConformalFactor::ones(6));
    ASSERT_GE(res.surgeries, 1);
    ASSERT_GE(res.segments.size(), 2u);
    EXPECT_EQ(res.status, RunStatus::Converged);
    for (const auto& seg : res.segments) {
        EXPECT_EQ(euler_characteristic(seg.triangulation), 2);
        for (const auto& row : seg.rows)
            EXPECT_NEAR(std::accumulate(row.K.begin(), row.K.end(), 0.0), 4 * pi, 1e-10);
    }
    bool saw = false;
    for (const auto& ev : res.events)
        if (ev.type == FlowEvent::Type::Surgery) {
            saw = true;
            EXPECT_EQ(ev.flip->inserted_edge, Edge(0, 5));
        }
    EXPECT_TRUE(saw);
}

TEST(Flow, SingularWithoutSurgery)
{
    auto [t, d] = fixture::flat_quad_octahedron(1e-7);
    FlowOptions opts;
    opts.surgery = false;
    const auto res = run(t, d, FlowMode::Normalized, ConformalFactor::ones(6), opts);
    EXPECT_EQ(res.status, RunStatus::Singular);
    ASSERT_EQ(res.events.back().type, FlowEvent::Type::Singularity);
    EXPECT_EQ(res.events.back().report.kind, SingularityKind::Removable);
}

TEST(Flow, SurgeryBudget)
{
    auto [t, d] = fixture::flat_quad_octahedron(1e-7);
    FlowOptions opts;
    opts.max_surgeries = 0;
    try {
        (void)run(t, d, FlowMode::Normalized, ConformalFactor::ones(6), opts);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MaxSurgeriesExceeded);
    }
}

TEST(Flow, MaxTime)
{
    const auto t = catalog::tetrahedron();
    FlowOptions opts;
    opts.max_time = 0.1;
    const auto res = run(t, PLMetric::unit(t), FlowMode::Normalized,
                         ConformalFactor::from_u(std::vector<double>{1, 1, 1, 1.3}), opts);
    EXPECT_EQ(res.status, RunStatus::MaxTime);
    EXPECT_NEAR(res.final_state.t, 0.1, 1e-12);
}

TEST(Flow, SingleTriangleFixedPoint)
{
    const auto res = single_triangle_flow({{1.0, 1.0, 1.0}}, {1.0, 1.0, 1.0});
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.rows.size(), 1u);
}

TEST(Flow, SingleTriangleRightTriangle)
{
    const auto res = single_triangle_flow({{3.0, 4.0, 5.0}}, {1.0, 1.0, 1.0});
    ASSERT_TRUE(res.converged);
    EXPECT_TRUE(res.reports.empty());
    for (double a : res.rows.back().theta)
        EXPECT_NEAR(a, pi / 3.0, 1e-8);
    for (std::size_t i = 1; i < res.rows.size(); ++i)
        EXPECT_LT(res.rows[i].G, res.rows[i - 1].G);
    // the product of the factors stays 1
    for (const auto& row : res.rows)
        EXPECT_NEAR(row.w[0] + row.w[1] + row.w[2], 0.0, 1e-12);
}

TEST(Flow, SingleTriangleNeedle)
{
    const auto res = single_triangle_flow({{1.0, 1.0, 1.999}}, {1.0, 1.0, 1.0});
    ASSERT_TRUE(res.converged);
    for (std::size_t i = 1; i < res.rows.size(); ++i)
        EXPECT_LT(res.rows[i].G, res.rows[i - 1].G);
}

TEST(Flow, FitSyntheticExponential)
{
    std::vector<double> t, g;
    for (int k = 0; k <= 100; ++k) {
        t.push_back(0.05 * k);
        g.push_back(std::exp(-2.0 * t.back()));
    }
    const auto fit = fit_convergence(t, g);
    EXPECT_NEAR(fit.rate, 2.0, 1e-6);
    EXPECT_NEAR(fit.amplitude, 1.0, 1e-6);
    EXPECT_LT(fit.residual, 1e-12);
}

TEST(Flow, FitNeedsTail)
{
    const auto t = catalog::torus7();
    const auto res = run(t, PLMetric::unit(t), FlowMode::Normalized, ConformalFactor::ones(7));
    try {
        (void)fit_convergence(res.segments.front().rows);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientTail);
    }
    const std::vector<double> tt{0, 1, 2}, g{0, 0, 0};
    EXPECT_THROW((void)fit_convergence(tt, g), Error);
}

TEST(Flow, StepUnderflow)
{
    // a controller that may not shrink below its start cannot escape a
    // state whose every step leaves the domain
    auto [t, d] = fixture::flat_quad_octahedron(2e-9);
    FlowOptions opts;
    opts.dt_min = 0.5;
    const FlowEngine engine(t, d, FlowMode::Normalized, opts);
    const FlowState s = engine.make_state(std::vector<double>(6, 0.0));
    try {
        (void)engine.step(s, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StepUnderflow);
    }
}

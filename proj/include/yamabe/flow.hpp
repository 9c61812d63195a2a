#pragma once

// Conformal curvature flow in log coordinates w = log u:
//   unnormalized  dw_i/dt = -K_i
//   normalized    dw_i/dt = -(K_i - K_av),  sum w_i = 0
// with singularity detection and edge-flip surgery.

#include "yamabe/curvature.hpp"
#include "yamabe/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

namespace yamabe {

enum class FlowMode { Unnormalized, Normalized };

struct FlowOptions {
    double removable_slack{1e-6};   // face slack that triggers a removable singularity
    double u_essential{1e-12};      // normalized factor below which a vertex is collapsing
    double u_max_box{1e12};
    double tol_converge{1e-9};      // on max |K_i - K_av|
    double dt_initial{1e-2};
    double dt_min{1e-12};
    double dt_max{0.05};
    double max_time{1e3};
    bool surgery{true};
    int max_surgeries{100};
    double sample_interval{0.0};    // 0 records every accepted step
    bool record_spectrum{false};    // projected eigenvalue floor and dG/dt per row
    std::size_t max_steps{50'000'000};
};

struct FlowState {
    double t{};
    std::vector<double> w;
    CurvatureVector K;
    double F_accum{};
    double G{};   // sum (K_i - K_av)^2
};

enum class SingularityKind { None, Essential, Removable };

inline const char* to_string(SingularityKind k) noexcept
{
    switch (k) {
    case SingularityKind::None: return "none";
    case SingularityKind::Essential: return "essential";
    case SingularityKind::Removable: return "removable";
    }
    return "none";
}

struct SingularityReport {
    SingularityKind kind{SingularityKind::None};
    double time{};
    Index vertex{};             // essential: vertex with the smallest normalized factor
    Index face{};               // removable: face with the smallest slack
    Edge tight_edge;            // removable: side the collapsing vertex approaches
    Index collapsing_vertex{};  // removable: corner flattening toward pi
    double slack{};             // smallest face slack at detection
    double min_u{};             // normalized factors at detection
    double max_u{};
};

struct StepResult {
    FlowState state;
    double dt{};   // step actually taken
    int rejections{};
};

class FlowEngine {
public:
    FlowEngine(Triangulation t, PLMetric d, FlowMode mode, FlowOptions opts = {})
        : t_(std::move(t)), d_(std::move(d)), mode_(mode), opts_(opts), k_av_(yamabe::average_curvature(t_))
    {}

    const Triangulation& triangulation() const noexcept { return t_; }
    const PLMetric& base_metric() const noexcept { return d_; }
    FlowMode mode() const noexcept { return mode_; }
    const FlowOptions& options() const noexcept { return opts_; }
    double average_curvature() const noexcept { return k_av_; }

    /// State at log-factor w. In normalized mode w is first moved to the
    /// sum-zero hyperplane (a uniform shift changes no angle).
    FlowState make_state(std::vector<double> w, double t = 0.0, double f_accum = 0.0) const
    {
        if (mode_ == FlowMode::Normalized)
            project_sum_zero(w);
        const DomainReport rep = domain_report(t_, d_, ConformalFactor::from_log(w));
        if (!rep.in_domain) {
            std::ostringstream msg;
            msg << "initial factor puts face " << rep.worst_face << " at slack " << rep.min_slack;
            throw DomainError(ErrorCode::OutOfConformalDomain, msg.str(), rep);
        }
        FlowState s;
        s.t = t;
        s.K = curvature(t_, d_, w);
        s.w = std::move(w);
        s.F_accum = f_accum;
        s.G = deviation_energy(s.K);
        return s;
    }

    /// dw/dt at a state.
    std::vector<double> velocity(const FlowState& s) const
    {
        std::vector<double> v(s.w.size());
        const double shift = mode_ == FlowMode::Normalized ? k_av_ : 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = -(s.K[i] - shift);
        return v;
    }

    double deviation_energy(const CurvatureVector& k) const
    {
        double g = 0.0;
        for (double x : k.k)
            g += (x - k_av_) * (x - k_av_);
        return g;
    }

    double max_deviation(const CurvatureVector& k) const
    {
        double m = 0.0;
        for (double x : k.k)
            m = std::max(m, std::abs(x - k_av_));
        return m;
    }

    /// Rounding allowance for comparing G between two evaluations.
    double lyapunov_noise(const FlowState& s) const
    {
        constexpr double delta = 1e-13;
        double l1 = 0.0;
        for (double x : s.K.k)
            l1 += std::abs(x - k_av_);
        return 2.0 * delta * l1 + static_cast<double>(s.K.size()) * delta * delta;
    }

    /// One RK4 step of (w, F_accum); nullopt when a stage or the result leaves
    /// the domain or G grows beyond rounding.
    std::optional<FlowState> try_step(const FlowState& s, double dt) const
    {
        const std::size_t n = s.w.size();
        const double shift = mode_ == FlowMode::Normalized ? k_av_ : 0.0;
        auto field = [&](std::span<const double> y, std::span<double> dy) {
            const std::span<const double> w = y.first(n);
            if (!in_domain(t_, d_, w))
                return false;
            const CurvatureVector k = curvature(t_, d_, w);
            double g = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                dy[i] = -(k[i] - shift);
                g += (k[i] - k_av_) * (k[i] - k_av_);
            }
            dy[n] = -g;
            return true;
        };
        std::vector<double> y(s.w);
        y.push_back(s.F_accum);
        auto next = rk4_step(field, y, dt);
        if (!next)
            return std::nullopt;
        std::vector<double> w(next->begin(), next->begin() + static_cast<std::ptrdiff_t>(n));
        if (mode_ == FlowMode::Normalized)
            project_sum_zero(w);
        if (!in_domain(t_, d_, w))
            return std::nullopt;
        FlowState out;
        out.t = s.t + dt;
        out.K = curvature(t_, d_, w);
        out.w = std::move(w);
        out.F_accum = (*next)[n];
        out.G = deviation_energy(out.K);
        if (out.G > s.G + lyapunov_noise(s))
            return std::nullopt;
        return out;
    }

    /// Adaptive step: halve until accepted. `dt_cap` bounds the step without
    /// touching the controller's running size.
    StepResult step(const FlowState& s, StepController& ctrl,
                    double dt_cap = std::numeric_limits<double>::infinity()) const
    {
        StepResult r;
        while (true) {
            const double dt = std::min(ctrl.dt(), dt_cap);
            if (auto next = try_step(s, dt)) {
                ctrl.accept();
                r.state = std::move(*next);
                r.dt = dt;
                return r;
            }
            ++r.rejections;
            ctrl.reject();
            dt_cap = std::min(dt_cap, 0.5 * dt);
            if (ctrl.underflow() || dt_cap < opts_.dt_min) {
                std::ostringstream msg;
                msg << "no acceptable step at t = " << s.t << " down to dt = " << dt_cap;
                throw Error(ErrorCode::StepUnderflow, msg.str());
            }
        }
    }

    /// Fixed-size step with halving on rejection.
    StepResult step(const FlowState& s, double dt) const
    {
        StepController ctrl(dt, opts_.dt_min, dt, 1.0, std::numeric_limits<int>::max());
        return step(s, ctrl);
    }

    /// Classification on the normalized representative of w.
    SingularityReport detect_singularity(const FlowState& s) const
    {
        SingularityReport rep;
        rep.time = s.t;
        std::vector<double> w(s.w);
        project_sum_zero(w);
        rep.min_u = std::numeric_limits<double>::infinity();
        rep.max_u = 0.0;
        for (Index i = 0; i < w.size(); ++i) {
            const double u = std::exp(w[i]);
            if (u < rep.min_u) {
                rep.min_u = u;
                rep.vertex = i;
            }
            rep.max_u = std::max(rep.max_u, u);
        }
        const DomainReport dom = domain_report(t_, d_, ConformalFactor::from_log(w));
        rep.slack = dom.min_slack;
        rep.face = dom.worst_face;
        rep.tight_edge = dom.worst_edge;
        const Face& f = t_.face(dom.worst_face);
        for (Index v : f)
            if (!dom.worst_edge.contains(v))
                rep.collapsing_vertex = v;
        if (rep.min_u < opts_.u_essential)
            rep.kind = SingularityKind::Essential;
        else if (rep.slack < opts_.removable_slack && rep.max_u <= opts_.u_max_box)
            rep.kind = SingularityKind::Removable;
        return rep;
    }

    /// Edge lengths of u*d with u normalized to unit product.
    std::vector<double> current_lengths(const FlowState& s) const
    {
        std::vector<double> w(s.w);
        project_sum_zero(w);
        std::vector<double> out(t_.edge_count());
        for (Index e = 0; e < t_.edge_count(); ++e)
            out[e] = d_.length(e) * std::exp(w[t_.edge(e).a] + w[t_.edge(e).b]);
        return out;
    }

    static void project_sum_zero(std::vector<double>& w)
    {
        if (w.empty())
            return;
        const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
        for (double& x : w)
            x -= mean;
    }

private:
    Triangulation t_;
    PLMetric d_;
    FlowMode mode_;
    FlowOptions opts_;
    double k_av_;
};

/// One adaptive step of dw/dt = -K.
inline StepResult step_unnormalized(const Triangulation& t, const PLMetric& d, const FlowState& s, double dt,
                                    const FlowOptions& opts = {})
{
    return FlowEngine(t, d, FlowMode::Unnormalized, opts).step(s, dt);
}

/// One adaptive step of dw/dt = -(K - K_av), re-projected to sum w = 0.
inline StepResult step_normalized(const Triangulation& t, const PLMetric& d, const FlowState& s, double dt,
                                  const FlowOptions& opts = {})
{
    return FlowEngine(t, d, FlowMode::Normalized, opts).step(s, dt);
}

// --- surgery ---------------------------------------------------------------

/// Length of the diagonal k-l after laying triangles (i,j,k) and (i,j,l)
/// flat on opposite sides of the segment i-j.
inline double developed_diagonal(double ik, double jk, double ij, double il, double jl)
{
    const double xk = (ik * ik - jk * jk + ij * ij) / (2.0 * ij);
    const double yk = std::sqrt(std::max(0.0, ik * ik - xk * xk));
    const double xl = (il * il - jl * jl + ij * ij) / (2.0 * ij);
    const double yl = -std::sqrt(std::max(0.0, il * il - xl * xl));
    return std::hypot(xk - xl, yk - yl);
}

struct SurgeryResult {
    Triangulation triangulation;
    PLMetric metric;
    EdgeFlip flip;
    double new_length{};
};

/// Flips the tight edge named by a removable-singularity report and carries
/// the lengths over; the new diagonal gets its developed length. `lengths`
/// is indexed like t.edges() and may be exactly degenerate.
inline SurgeryResult surgery(const Triangulation& t, std::span<const double> lengths, const SingularityReport& report)
{
    EdgeFlip flip = plan_flip(t, report.tight_edge);
    if (flip.apex_k != report.collapsing_vertex && flip.apex_l == report.collapsing_vertex) {
        std::swap(flip.apex_k, flip.apex_l);
        std::swap(flip.old_faces[0], flip.old_faces[1]);
        std::swap(flip.new_faces[0], flip.new_faces[1]);
    }
    const Index i = flip.removed_edge.a, j = flip.removed_edge.b, k = flip.apex_k, l = flip.apex_l;
    auto len = [&](Index a, Index b) { return lengths[t.edge_index(a, b)]; };
    const double kl = developed_diagonal(len(i, k), len(j, k), len(i, j), len(i, l), len(j, l));

    Triangulation next = flip_edge(t, flip.removed_edge);
    std::vector<double> carried(next.edge_count());
    for (Index e = 0; e < next.edge_count(); ++e) {
        const Edge& ed = next.edge(e);
        carried[e] = ed == flip.inserted_edge ? kl : len(ed.a, ed.b);
    }
    SurgeryResult out{std::move(next), PLMetric{}, flip, kl};
    try {
        out.metric = PLMetric::from_lengths(out.triangulation, std::move(carried));
    } catch (const Error& e) {
        throw Error(ErrorCode::NewMetricOutOfDomain, e.what());
    }
    return out;
}

// --- runs ------------------------------------------------------------------

struct TraceRow {
    double t{};
    std::vector<double> w;
    std::vector<double> K;
    double G{};
    double F{};
    double lambda_floor{std::numeric_limits<double>::quiet_NaN()};   // min |eigenvalue| of C on sum-zero
    double dG{std::numeric_limits<double>::quiet_NaN()};             // 2 g^T C g, g = K - K_av
};

/// Rows recorded on one triangulation; a surgery starts a new segment.
struct TraceSegment {
    Triangulation triangulation;
    PLMetric base;
    std::vector<TraceRow> rows;
};

struct FlowEvent {
    enum class Type { SegmentStart, Singularity, Surgery, Converged, MaxTime };
    Type type{};
    double t{};
    Index segment{};
    SingularityReport report;
    std::optional<EdgeFlip> flip;
    double new_length{};
};

inline const char* to_string(FlowEvent::Type t) noexcept
{
    switch (t) {
    case FlowEvent::Type::SegmentStart: return "segment_start";
    case FlowEvent::Type::Singularity: return "singularity";
    case FlowEvent::Type::Surgery: return "surgery";
    case FlowEvent::Type::Converged: return "converged";
    case FlowEvent::Type::MaxTime: return "max_time";
    }
    return "unknown";
}

enum class RunStatus { Converged, MaxTime, Singular };

struct RunResult {
    RunStatus status{};
    std::vector<TraceSegment> segments;
    std::vector<FlowEvent> events;
    FlowState final_state;
    std::size_t accepted_steps{};
    std::size_t rejected_steps{};
    int surgeries{};
};

inline TraceRow make_row(const FlowEngine& engine, const FlowState& s)
{
    TraceRow row{s.t, s.w, s.K.k, s.G, s.F_accum};
    if (engine.options().record_spectrum) {
        const auto c = coefficient_matrix(engine.triangulation(), engine.base_metric(), s.w);
        row.lambda_floor = projected_eigenvalues(c).cwiseAbs().minCoeff();
        Eigen::VectorXd g(static_cast<Eigen::Index>(s.K.size()));
        for (Index i = 0; i < s.K.size(); ++i)
            g(static_cast<Eigen::Index>(i)) = s.K[i] - engine.average_curvature();
        row.dG = 2.0 * g.dot(c * g);
    }
    return row;
}

/// Integrates until max |K - K_av| < tol_converge unless max_time or a
/// singularity intervenes. With surgery enabled a removable singularity flips the tight
/// edge and the flow continues on the new triangulation, re-based on the
/// current lengths with u reset to 1.
inline RunResult run(const Triangulation& t, const PLMetric& d, FlowMode mode, const ConformalFactor& u0,
                     const FlowOptions& opts = {})
{
    RunResult result;
    auto engine = std::make_unique<FlowEngine>(t, d, mode, opts);
    FlowState state = engine->make_state(std::vector<double>(u0.w().begin(), u0.w().end()));
    StepController ctrl(opts.dt_initial, opts.dt_min, opts.dt_max);

    auto start_segment = [&] {
        result.segments.push_back({engine->triangulation(), engine->base_metric(), {}});
        result.segments.back().rows.push_back(make_row(*engine, state));
        FlowEvent ev;
        ev.type = FlowEvent::Type::SegmentStart;
        ev.t = state.t;
        ev.segment = result.segments.size() - 1;
        result.events.push_back(ev);
    };
    start_segment();
    double last_sample = state.t;

    auto finish = [&](RunStatus status, FlowEvent::Type type) {
        result.status = status;
        auto& rows = result.segments.back().rows;
        if (rows.back().t != state.t)
            rows.push_back(make_row(*engine, state));
        FlowEvent ev;
        ev.type = type;
        ev.t = state.t;
        ev.segment = result.segments.size() - 1;
        result.events.push_back(ev);
        result.final_state = state;
    };

    while (true) {
        if (engine->max_deviation(state.K) < opts.tol_converge) {
            finish(RunStatus::Converged, FlowEvent::Type::Converged);
            return result;
        }
        if (state.t >= opts.max_time || result.accepted_steps >= opts.max_steps) {
            finish(RunStatus::MaxTime, FlowEvent::Type::MaxTime);
            return result;
        }
        const SingularityReport rep = engine->detect_singularity(state);
        if (rep.kind != SingularityKind::None) {
            FlowEvent ev;
            ev.type = FlowEvent::Type::Singularity;
            ev.t = state.t;
            ev.segment = result.segments.size() - 1;
            ev.report = rep;
            result.events.push_back(ev);
            if (rep.kind == SingularityKind::Essential || !opts.surgery) {
                result.status = RunStatus::Singular;
                auto& rows = result.segments.back().rows;
                if (rows.back().t != state.t)
                    rows.push_back(make_row(*engine, state));
                result.final_state = state;
                return result;
            }
            if (result.surgeries >= opts.max_surgeries)
                throw Error(ErrorCode::MaxSurgeriesExceeded, std::to_string(result.surgeries) + " surgeries performed");
            const std::vector<double> lengths = engine->current_lengths(state);
            SurgeryResult cut = surgery(engine->triangulation(), lengths, rep);
            ++result.surgeries;
            FlowEvent sev;
            sev.type = FlowEvent::Type::Surgery;
            sev.t = state.t;
            sev.segment = result.segments.size();
            sev.report = rep;
            sev.flip = cut.flip;
            sev.new_length = cut.new_length;
            result.events.push_back(sev);
            engine = std::make_unique<FlowEngine>(std::move(cut.triangulation), std::move(cut.metric), mode, opts);
            state = engine->make_state(std::vector<double>(t.vertex_count(), 0.0), state.t, state.F_accum);
            start_segment();
            last_sample = state.t;
            continue;
        }
        const StepResult step = engine->step(state, ctrl, opts.max_time - state.t);
        result.rejected_steps += static_cast<std::size_t>(step.rejections);
        ++result.accepted_steps;
        state = step.state;
        if (opts.sample_interval <= 0.0 || state.t - last_sample >= opts.sample_interval) {
            result.segments.back().rows.push_back(make_row(*engine, state));
            last_sample = state.t;
        }
    }
}

// --- single triangle -------------------------------------------------------

struct SingleTriangleRow {
    double t{};
    std::array<double, 3> w{};
    std::array<double, 3> theta{};
    double G{};   // sum (pi/3 - theta_i)^2
};

struct SingleTriangleResult {
    std::vector<SingleTriangleRow> rows;
    std::vector<SingularityReport> reports;
    bool converged{};
};

/// Normalized flow of one triangle with K_i = pi - theta_i:
/// du_i/dt = -(pi/3 - theta_i) u_i.
inline SingleTriangleResult single_triangle_flow(const TriangleLengths& d, const std::array<double, 3>& u0,
                                                 const FlowOptions& opts = {})
{
    constexpr double third = std::numbers::pi / 3.0;
    require_nondegenerate(d);
    auto shape = [&](std::span<const double> w) {
        const std::array<double, 3> u{std::exp(w[0]), std::exp(w[1]), std::exp(w[2])};
        TriangleLengths x{{d.x[0] * u[1] * u[2], d.x[1] * u[0] * u[2], d.x[2] * u[0] * u[1]}};
        const double top = std::max({x.x[0], x.x[1], x.x[2]});
        for (double& v : x.x)
            v /= top;
        return x;
    };
    auto deviation = [&](const TriangleAngles& a) {
        double g = 0.0;
        for (int r = 0; r < 3; ++r)
            g += (third - a[r]) * (third - a[r]);
        return g;
    };
    auto field = [&](std::span<const double> w, std::span<double> dw) {
        const TriangleLengths x = shape(w);
        if (!(relative_slack(x) >= kDegenerateSlack))
            return false;
        const TriangleAngles a = triangle_angles(x);
        for (int r = 0; r < 3; ++r)
            dw[static_cast<std::size_t>(r)] = -(third - a[r]);
        return true;
    };

    std::vector<double> w{std::log(u0[0]), std::log(u0[1]), std::log(u0[2])};
    FlowEngine::project_sum_zero(w);
    SingleTriangleResult out;
    TriangleAngles angles = triangle_angles(shape(w));
    double t = 0.0;
    auto record = [&] {
        out.rows.push_back({t, {w[0], w[1], w[2]}, angles.theta, deviation(angles)});
    };
    record();
    StepController ctrl(opts.dt_initial, opts.dt_min, opts.dt_max);
    double last_sample = 0.0;
    while (true) {
        double worst = 0.0;
        for (int r = 0; r < 3; ++r)
            worst = std::max(worst, std::abs(angles[r] - third));
        if (worst < opts.tol_converge) {
            out.converged = true;
            break;
        }
        if (t >= opts.max_time)
            break;
        const double slack = relative_slack(shape(w));
        if (slack < opts.removable_slack) {
            SingularityReport rep;
            rep.kind = SingularityKind::Removable;
            rep.time = t;
            rep.slack = slack;
            out.reports.push_back(rep);
            break;
        }
        const double g_old = deviation(angles);
        while (true) {
            const double dt = std::min(ctrl.dt(), opts.max_time - t);
            auto next = rk4_step(field, w, dt);
            if (next) {
                FlowEngine::project_sum_zero(*next);
                const TriangleLengths x = shape(*next);
                if (relative_slack(x) >= kDegenerateSlack) {
                    const TriangleAngles a = triangle_angles(x);
                    if (deviation(a) <= g_old + 1e-26) {
                        w = std::move(*next);
                        angles = a;
                        t += dt;
                        ctrl.accept();
                        break;
                    }
                }
            }
            ctrl.reject();
            if (ctrl.underflow())
                throw Error(ErrorCode::StepUnderflow, "single-triangle flow cannot take a step");
        }
        if (opts.sample_interval <= 0.0 || t - last_sample >= opts.sample_interval) {
            record();
            last_sample = t;
        }
    }
    if (out.rows.back().t != t)
        record();
    return out;
}

// --- convergence fit -------------------------------------------------------

struct ConvergenceFit {
    double rate{};        // G(t) ~ amplitude * exp(-rate * t)
    double amplitude{};
    double residual{};          // rms_log_residual over the span of log G on the tail
    double rms_log_residual{};  // RMS of log G about the fitted line, natural-log units
    std::size_t points{};
    double lambda_floor{std::numeric_limits<double>::quiet_NaN()};
    bool decay_bound_holds{true};     // dG/dt <= -lambda G at every recorded row
    double worst_decay_ratio{std::numeric_limits<double>::quiet_NaN()};   // max of (dG/dt) / (lambda G)
};

/// Least-squares line through (t, log G) on the tail where G < G(0)/10.
inline ConvergenceFit fit_convergence(std::span<const double> t, std::span<const double> g)
{
    if (t.empty() || !(g[0] > 0.0))
        throw Error(ErrorCode::InsufficientTail, "G(0) is zero; nothing to fit");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (g[i] < g[0] / 10.0 && g[i] > 0.0) {
            xs.push_back(t[i]);
            ys.push_back(std::log(g[i]));
        }
    if (xs.size() < 3)
        throw Error(ErrorCode::InsufficientTail, "only " + std::to_string(xs.size()) + " tail points below G(0)/10");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0))
        throw Error(ErrorCode::InsufficientTail, "tail spans no time");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (intercept + slope * xs[i]);
        ss += r * r;
    }
    const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
    ConvergenceFit fit;
    fit.rate = -slope;
    fit.amplitude = std::exp(intercept);
    fit.rms_log_residual = std::sqrt(ss / n);
    fit.residual = *hi > *lo ? fit.rms_log_residual / (*hi - *lo) : 0.0;
    fit.points = xs.size();
    return fit;
}

/// Fit on a flow trace. When the rows carry spectrum data, also checks
/// dG/dt <= -lambda G with lambda the smallest projected eigenvalue magnitude
/// seen along the trace.
inline ConvergenceFit fit_convergence(std::span<const TraceRow> rows)
{
    std::vector<double> t, g;
    for (const auto& r : rows) {
        t.push_back(r.t);
        g.push_back(r.G);
    }
    ConvergenceFit fit = fit_convergence(t, g);
    double lambda = std::numeric_limits<double>::infinity();
    bool have = false;
    for (const auto& r : rows)
        if (!std::isnan(r.lambda_floor)) {
            lambda = std::min(lambda, r.lambda_floor);
            have = true;
        }
    if (have) {
        fit.lambda_floor = lambda;
        fit.worst_decay_ratio = -std::numeric_limits<double>::infinity();
        for (const auto& r : rows) {
            if (std::isnan(r.dG) || !(r.G > 0.0))
                continue;
            const double ratio = r.dG / (lambda * r.G);   // bound asks ratio <= -1
            fit.worst_decay_ratio = std::max(fit.worst_decay_ratio, ratio);
            if (r.dG > -lambda * r.G)
                fit.decay_bound_holds = false;
        }
    }
    return fit;
}

} // namespace yamabe

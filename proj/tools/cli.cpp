#include "cli.hpp"

#include <yamabe/admissibility.hpp>
#include <yamabe/catalog.hpp>
#include <yamabe/energy.hpp>
#include <yamabe/io.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace yamabe::cli {

const char* to_string(Command c) noexcept
{
    switch (c) {
    case Command::Flow: return "flow";
    case Command::Admissible: return "admissible";
    case Command::TargetAngles: return "target-angles";
    case Command::SingleTriangle: return "single-triangle";
    case Command::JacobianCheck: return "jacobian-check";
    case Command::Energy: return "energy";
    case Command::Multistart: return "multistart";
    }
    return "flow";
}

namespace {

/// Flat JSON object whose keys are long flag names.
class ConfigJSON : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override
    {
        nlohmann::json j = nlohmann::json::object();
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable())
                continue;
            const std::string& name = opt->get_lnames().front();
            if (opt->count() > 0) {
                const auto& res = opt->results();
                if (res.size() == 1)
                    j[name] = res.front();
                else
                    j[name] = res;
            } else if (default_also && !opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
    {
        nlohmann::json j;
        try {
            input >> j;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConfigError(std::string("malformed JSON config: ") + e.what());
        }
        if (!j.is_object())
            throw CLI::ConfigError("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            CLI::ConfigItem item;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value)
                    item.inputs.push_back(scalar(key, v));
            } else {
                item.inputs.push_back(scalar(key, value));
            }
            items.push_back(std::move(item));
        }
        return items;
    }

private:
    static std::string scalar(const std::string& key, const nlohmann::json& v)
    {
        if (v.is_string())
            return v.get<std::string>();
        if (v.is_boolean())
            return v.get<bool>() ? "true" : "false";
        if (v.is_number_integer())
            return std::to_string(v.get<long long>());
        if (v.is_number()) {
            std::ostringstream os;
            os << std::setprecision(17) << v.get<double>();
            return os.str();
        }
        throw CLI::ConfigError("config key '" + key + "' must be a scalar or an array of scalars");
    }
};

RunConfig parse_impl(std::vector<std::string> args)
{
    RunConfig cfg;
    CLI::App app{"Discrete conformal curvature flow for triangulated closed surfaces", "yamabe"};
    app.config_formatter(std::make_shared<ConfigJSON>());
    app.set_config("--config", "", "JSON file whose keys mirror the long flags");
    app.allow_config_extras(false);
    app.require_subcommand(1);

    const std::vector<std::pair<Command, std::string>> commands{
        {Command::Flow, "Integrate the flow on a mesh"},
        {Command::Admissible, "Decide whether a constant-curvature metric can exist"},
        {Command::TargetAngles, "Corner angles summing to pi per face and 2*pi - K_av per vertex"},
        {Command::SingleTriangle, "Normalized flow of one triangle"},
        {Command::JacobianCheck, "Compare the assembled coefficient matrix with finite differences"},
        {Command::Energy, "Energy and gradient at a conformal factor"},
        {Command::Multistart, "Normalized flow from random starts; compares the limits"},
    };
    std::vector<std::pair<Command, CLI::App*>> subs;
    for (const auto& [cmd, desc] : commands) {
        CLI::App* sub = app.add_subcommand(to_string(cmd), desc);
        sub->fallthrough();
        subs.emplace_back(cmd, sub);
    }

    auto positive = CLI::PositiveNumber;
    app.add_option("--mesh", cfg.mesh, "Mesh file (.json or .off) or builtin:<name>");
    app.add_option("--lengths", cfg.lengths, "Edge lengths: JSON {\"i-j\": len} or lines 'i j len'");
    app.add_flag("--normalized", cfg.normalized, "Normalized flow (constant product of u)");
    app.add_option("--u0", cfg.u0, "Initial conformal factor u, comma separated")->delimiter(',');
    app.add_option("--d", cfg.d, "Triangle side lengths for single-triangle")->delimiter(',')->expected(3);
    app.add_option("--tol", cfg.flow.tol_converge, "Convergence threshold on max |K - K_av|")->check(positive);
    app.add_option("--max-time", cfg.flow.max_time, "Integration time limit")->check(positive);
    app.add_option("--dt", cfg.flow.dt_initial, "Initial step")->check(positive);
    app.add_option("--dt-min", cfg.flow.dt_min, "Smallest step before giving up")->check(positive);
    app.add_option("--dt-max", cfg.flow.dt_max, "Largest step")->check(positive);
    app.add_option("--removable-slack", cfg.flow.removable_slack, "Face slack that triggers surgery")->check(positive);
    app.add_option("--u-essential", cfg.flow.u_essential, "Normalized u below which a vertex collapses")
        ->check(positive);
    app.add_option("--max-surgeries", cfg.flow.max_surgeries, "Surgery budget")->check(CLI::NonNegativeNumber);
    app.add_flag("--surgery,!--no-surgery", cfg.flow.surgery, "Flip degenerate edges and continue (default on)");
    app.add_option("--sample-interval", cfg.flow.sample_interval, "Trace sampling in time, 0 records every step")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--out", cfg.out, "Trace CSV path");
    app.add_option("--events", cfg.events, "Events path (JSON lines)");
    app.add_option("--report", cfg.report, "Summary JSON path (stdout when absent)");
    app.add_flag("--witness", cfg.witness, "Include a certificate with the admissibility verdict");
    app.add_option("--starts", cfg.starts, "Number of multistart runs")->check(CLI::PositiveNumber);
    app.add_option("--seed", cfg.seed, "Multistart random seed");
    app.add_option("--spread", cfg.spread, "Multistart log-factor half-width")->check(positive);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        cfg.help = app.help();
        return cfg;
    } catch (const CLI::ExtrasError& e) {
        throw Error(ErrorCode::UnknownFlag, e.what());
    } catch (const CLI::ConfigError& e) {
        throw Error(ErrorCode::UnknownFlag, e.what());
    } catch (const CLI::RequiredError& e) {
        throw Error(ErrorCode::MissingInput, e.what());
    } catch (const CLI::FileError& e) {
        throw Error(ErrorCode::MissingInput, e.what());
    } catch (const CLI::ParseError& e) {
        throw Error(ErrorCode::BadArgument, e.what());
    }
    for (const auto& [cmd, sub] : subs)
        if (sub->parsed())
            cfg.command = cmd;

    if (cfg.command == Command::SingleTriangle) {
        if (cfg.d.empty())
            throw Error(ErrorCode::MissingInput, "single-triangle needs --d a,b,c");
        if (!cfg.u0.empty() && cfg.u0.size() != 3)
            throw Error(ErrorCode::BadArgument, "single-triangle --u0 takes three values");
    } else if (cfg.mesh.empty()) {
        throw Error(ErrorCode::MissingInput, std::string(to_string(cfg.command)) + " needs --mesh");
    }
    for (double u : cfg.u0)
        if (!(u > 0.0) || !std::isfinite(u))
            throw Error(ErrorCode::BadArgument, "--u0 entries must be positive");
    for (double x : cfg.d)
        if (!(x > 0.0) || !std::isfinite(x))
            throw Error(ErrorCode::BadArgument, "--d entries must be positive");
    return cfg;
}

io::MeshData load_mesh(const RunConfig& cfg)
{
    constexpr std::string_view builtin = "builtin:";
    if (cfg.mesh.rfind(builtin, 0) == 0) {
        io::MeshData m;
        m.triangulation = catalog::by_name(std::string_view(cfg.mesh).substr(builtin.size()));
        m.metric = PLMetric::unit(m.triangulation);
        if (cfg.lengths) {
            m.metric = PLMetric::from_lengths(m.triangulation,
                                              io::parse_lengths(io::read_text(*cfg.lengths), m.triangulation, *cfg.lengths));
            m.has_lengths = true;
        }
        return m;
    }
    std::optional<std::filesystem::path> lengths;
    if (cfg.lengths)
        lengths = *cfg.lengths;
    return io::read_mesh(cfg.mesh, lengths);
}

ConformalFactor initial_factor(const RunConfig& cfg, const Triangulation& t)
{
    if (cfg.u0.empty())
        return ConformalFactor::ones(t.vertex_count());
    if (cfg.u0.size() != t.vertex_count())
        throw Error(ErrorCode::BadArgument, "--u0 has " + std::to_string(cfg.u0.size()) + " entries, mesh has "
                                                + std::to_string(t.vertex_count()) + " vertices");
    return ConformalFactor::from_u(cfg.u0);
}

void emit_report(const RunConfig& cfg, const nlohmann::json& report, std::ostream& out)
{
    if (cfg.report)
        io::write_text(*cfg.report, report.dump(2) + "\n");
    else
        out << report.dump(2) << '\n';
}

int run_flow(const RunConfig& cfg, std::ostream& out)
{
    const io::MeshData mesh = load_mesh(cfg);
    const FlowMode mode = cfg.normalized ? FlowMode::Normalized : FlowMode::Unnormalized;
    spdlog::info("flow: {} vertices, {} faces, chi = {}, {} mode", mesh.triangulation.vertex_count(),
                 mesh.triangulation.face_count(), euler_characteristic(mesh.triangulation),
                 cfg.normalized ? "normalized" : "unnormalized");
    const RunResult res = run(mesh.triangulation, mesh.metric, mode, initial_factor(cfg, mesh.triangulation), cfg.flow);
    for (const auto& ev : res.events)
        if (ev.type == FlowEvent::Type::Singularity || ev.type == FlowEvent::Type::Surgery)
            spdlog::info("t = {:.6g}: {} ({})", ev.t, to_string(ev.type), to_string(ev.report.kind));
    if (cfg.out)
        for (const auto& p : io::emit_trace(res, *cfg.out))
            spdlog::debug("trace written to {}", p.string());
    if (cfg.events)
        io::emit_events(res, *cfg.events);

    const FlowEngine engine(res.segments.back().triangulation, res.segments.back().base, mode, cfg.flow);
    const FlowState& s = res.final_state;
    std::vector<double> u(s.w.size());
    std::vector<double> w(s.w);
    if (mode == FlowMode::Normalized)
        FlowEngine::project_sum_zero(w);
    for (std::size_t i = 0; i < w.size(); ++i)
        u[i] = std::exp(w[i]);
    const char* status = res.status == RunStatus::Converged ? "converged"
                         : res.status == RunStatus::MaxTime ? "max_time"
                                                            : "singular";
    nlohmann::json report{{"command", "flow"},
                          {"status", status},
                          {"t", s.t},
                          {"G", s.G},
                          {"max_deviation", engine.max_deviation(s.K)},
                          {"K_av", engine.average_curvature()},
                          {"F", s.F_accum},
                          {"accepted_steps", res.accepted_steps},
                          {"rejected_steps", res.rejected_steps},
                          {"surgeries", res.surgeries},
                          {"segments", res.segments.size()},
                          {"K", s.K.k},
                          {"u", u}};
    for (const auto& ev : res.events)
        if (ev.type == FlowEvent::Type::Singularity)
            report["singularity"] = io::event_json(ev);
    emit_report(cfg, report, out);
    switch (res.status) {
    case RunStatus::Converged: return kExitConverged;
    case RunStatus::MaxTime: return kExitMaxTime;
    case RunStatus::Singular: return kExitSingular;
    }
    return kExitError;
}

int run_admissible(const RunConfig& cfg, std::ostream& out)
{
    const io::MeshData mesh = load_mesh(cfg);
    const Triangulation& t = mesh.triangulation;
    const AdmissibilityVerdict verdict = check_admissible(t);
    nlohmann::json report{{"command", "admissible"},
                          {"admissible", verdict.admissible},
                          {"vertices", t.vertex_count()},
                          {"faces", t.face_count()},
                          {"euler_characteristic", euler_characteristic(t)}};
    if (cfg.witness) {
        if (verdict.admissible) {
            nlohmann::json corners = nlohmann::json::array();
            for (Index f = 0; f < t.face_count(); ++f) {
                std::array<double, 3> c{};
                for (int r = 0; r < 3; ++r)
                    c[static_cast<std::size_t>(r)] = verdict.flow.flow[verdict.network.corner_arc(f, r)];
                corners.push_back({{"face", t.face(f)}, {"angles", c}});
            }
            report["witness"] = {{"type", "feasible_flow"},
                                 {"margin", kStrictnessEpsilon},
                                 {"kirchhoff_residual", kirchhoff_residual(verdict.network, verdict.flow.flow)},
                                 {"corners", corners}};
        } else {
            const std::vector<Index> subset = vertex_part(verdict.network, verdict.flow.violating_subset);
            std::vector<bool> in(t.vertex_count(), false);
            for (Index v : subset)
                in[v] = true;
            std::size_t touching = 0;
            for (const Face& f : t.faces())
                touching += (in[f[0]] || in[f[1]] || in[f[2]]) ? 1 : 0;
            report["witness"] = {{"type", "violating_subset"},
                                 {"vertices", subset},
                                 {"faces_meeting", touching},
                                 {"ratio", static_cast<double>(touching) / static_cast<double>(subset.size())},
                                 {"threshold", static_cast<double>(t.face_count()) / static_cast<double>(t.vertex_count())}};
        }
    }
    emit_report(cfg, report, out);
    return kExitConverged;
}

int run_target_angles(const RunConfig& cfg, std::ostream& out)
{
    const io::MeshData mesh = load_mesh(cfg);
    const Triangulation& t = mesh.triangulation;
    const TargetAngleResult res = target_angles(t);
    nlohmann::json corners = nlohmann::json::array();
    for (Index f = 0; f < t.face_count(); ++f)
        corners.push_back({{"face", t.face(f)}, {"angles", res.targets.corner[f]}});
    nlohmann::json report{{"command", "target-angles"},
                          {"margin", res.used_eps},
                          {"max_margin", res.max_feasible_eps},
                          {"vertex_sums", res.targets.vertex_sums(t)},
                          {"corners", corners}};
    emit_report(cfg, report, out);
    return kExitConverged;
}

int run_single_triangle(const RunConfig& cfg, std::ostream& out)
{
    const TriangleLengths d{{cfg.d[0], cfg.d[1], cfg.d[2]}};
    const std::array<double, 3> u0 = cfg.u0.empty() ? std::array<double, 3>{1.0, 1.0, 1.0}
                                                    : std::array<double, 3>{cfg.u0[0], cfg.u0[1], cfg.u0[2]};
    const SingleTriangleResult res = single_triangle_flow(d, u0, cfg.flow);
    if (cfg.out) {
        std::ostringstream os;
        os << "t,w_0,w_1,w_2,theta_0,theta_1,theta_2,G\n" << std::setprecision(17);
        for (const auto& r : res.rows)
            os << r.t << ',' << r.w[0] << ',' << r.w[1] << ',' << r.w[2] << ',' << r.theta[0] << ',' << r.theta[1]
               << ',' << r.theta[2] << ',' << r.G << '\n';
        io::write_text(*cfg.out, os.str());
    }
    const auto& last = res.rows.back();
    nlohmann::json report{{"command", "single-triangle"},
                          {"converged", res.converged},
                          {"t", last.t},
                          {"angles", last.theta},
                          {"G", last.G},
                          {"samples", res.rows.size()},
                          {"singularities", res.reports.size()}};
    emit_report(cfg, report, out);
    if (!res.reports.empty())
        return kExitSingular;
    return res.converged ? kExitConverged : kExitMaxTime;
}

int run_jacobian_check(const RunConfig& cfg, std::ostream& out)
{
    const io::MeshData mesh = load_mesh(cfg);
    const Triangulation& t = mesh.triangulation;
    const ConformalFactor u = initial_factor(cfg, t);
    std::vector<double> w(u.w().begin(), u.w().end());
    if (!in_domain(t, mesh.metric, w))
        throw Error(ErrorCode::OutOfConformalDomain, "--u0 is outside the conformal domain");
    const Eigen::MatrixXd c = Eigen::MatrixXd(coefficient_matrix(t, mesh.metric, w));
    const double h = 1e-6;
    double fd_error = 0.0, scale = 0.0;
    for (Index s = 0; s < t.vertex_count(); ++s) {
        std::vector<double> wp(w), wm(w);
        wp[s] += h;
        wm[s] -= h;
        const CurvatureVector kp = curvature(t, mesh.metric, wp);
        const CurvatureVector km = curvature(t, mesh.metric, wm);
        for (Index r = 0; r < t.vertex_count(); ++r) {
            const double fd = -(kp[r] - km[r]) / (2.0 * h);
            const auto ri = static_cast<Eigen::Index>(r), si = static_cast<Eigen::Index>(s);
            fd_error = std::max(fd_error, std::abs(fd - c(ri, si)));
            scale = std::max(scale, std::abs(c(ri, si)));
        }
    }
    const RigidityReport rig = rigidity_check(t, mesh.metric, w);
    const Eigen::VectorXd ev = projected_eigenvalues(coefficient_matrix(t, mesh.metric, w));
    nlohmann::json report{{"command", "jacobian-check"},
                          {"finite_difference_error", fd_error},
                          {"relative_error", scale > 0 ? fd_error / scale : fd_error},
                          {"symmetry_error", (c - c.transpose()).cwiseAbs().maxCoeff()},
                          {"row_sum_error", c.rowwise().sum().cwiseAbs().maxCoeff()},
                          {"max_projected_eigenvalue", ev.maxCoeff()},
                          {"min_singular_value", rig.min_singular_value},
                          {"spectral_norm", rig.matrix_norm},
                          {"locally_rigid", rig.locally_rigid}};
    emit_report(cfg, report, out);
    return kExitConverged;
}

int run_energy(const RunConfig& cfg, std::ostream& out)
{
    const io::MeshData mesh = load_mesh(cfg);
    const Triangulation& t = mesh.triangulation;
    const ConformalFactor u = initial_factor(cfg, t);
    const TargetAngleResult targets = target_angles(t);
    const EnergyValue e = energy(t, mesh.metric, u.w(), targets.targets);
    nlohmann::json report{{"command", "energy"}, {"value", e.value}, {"gradient", e.gradient}};
    emit_report(cfg, report, out);
    return kExitConverged;
}

int run_multistart(const RunConfig& cfg, std::ostream& out)
{
    const io::MeshData mesh = load_mesh(cfg);
    const Triangulation& t = mesh.triangulation;
    const PLMetric& d = mesh.metric;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(-cfg.spread, cfg.spread);
    std::vector<std::vector<double>> starts;
    for (int tries = 0; starts.size() < cfg.starts; ++tries) {
        if (tries > 1000 * static_cast<int>(cfg.starts))
            throw Error(ErrorCode::BadArgument, "--spread leaves too few starts inside the conformal domain");
        std::vector<double> w(t.vertex_count());
        for (double& x : w)
            x = dist(rng);
        if (in_domain(t, d, w))
            starts.push_back(std::move(w));
    }
    spdlog::info("multistart: {} runs on {} vertices", starts.size(), t.vertex_count());

    std::vector<std::future<RunResult>> jobs;
    for (const auto& w : starts)
        jobs.push_back(std::async(std::launch::async, [&t, &d, &cfg, w] {
            return run(t, d, FlowMode::Normalized, ConformalFactor::from_log(w), cfg.flow);
        }));

    const FlowEngine engine(t, d, FlowMode::Normalized, cfg.flow);
    nlohmann::json runs = nlohmann::json::array();
    std::vector<std::vector<double>> limits;
    bool all_converged = true, any_singular = false;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        const RunResult res = jobs[k].get();
        std::vector<double> w(res.final_state.w);
        FlowEngine::project_sum_zero(w);
        const bool converged = res.status == RunStatus::Converged;
        all_converged = all_converged && converged;
        any_singular = any_singular || res.status == RunStatus::Singular;
        if (converged && res.surgeries == 0)
            limits.push_back(w);
        runs.push_back({{"start", starts[k]},
                        {"status", converged                          ? "converged"
                                   : res.status == RunStatus::MaxTime ? "max_time"
                                                                      : "singular"},
                        {"t", res.final_state.t},
                        {"max_deviation", engine.max_deviation(res.final_state.K)},
                        {"surgeries", res.surgeries},
                        {"w", w}});
    }
    double spread = 0.0;
    for (std::size_t a = 0; a < limits.size(); ++a)
        for (std::size_t b = a + 1; b < limits.size(); ++b)
            for (std::size_t i = 0; i < limits[a].size(); ++i)
                spread = std::max(spread, std::abs(limits[a][i] - limits[b][i]));
    nlohmann::json report{{"command", "multistart"},
                          {"seed", cfg.seed},
                          {"compared", limits.size()},
                          {"max_limit_difference", spread},
                          {"runs", runs}};
    emit_report(cfg, report, out);
    if (any_singular)
        return kExitSingular;
    return all_converged ? kExitConverged : kExitMaxTime;
}

} // namespace

RunConfig parse_config(const std::vector<std::string>& args) { return parse_impl(args); }

RunConfig parse_config(int argc, const char* const* argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return parse_impl(std::move(args));
}

int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    try {
        switch (cfg.command) {
        case Command::Flow: return run_flow(cfg, out);
        case Command::Admissible: return run_admissible(cfg, out);
        case Command::TargetAngles: return run_target_angles(cfg, out);
        case Command::SingleTriangle: return run_single_triangle(cfg, out);
        case Command::JacobianCheck: return run_jacobian_check(cfg, out);
        case Command::Energy: return run_energy(cfg, out);
        case Command::Multistart: return run_multistart(cfg, out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    RunConfig cfg;
    try {
        cfg = parse_config(argc, argv);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
    if (cfg.help) {
        out << *cfg.help;
        return kExitConverged;
    }
    return execute(cfg, out, err);
}

} // namespace yamabe::cli

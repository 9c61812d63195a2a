#pragma once

// Whether a triangulation carries a constant-curvature PL metric, decided
// two ways: by enumerating vertex subsets against the counting condition
// |F_I|/|I| > |F|/|V|, and as the feasibility of a circulation with lower and
// upper bounds on the vertex/face incidence network.

#include "yamabe/energy.hpp"
#include "yamabe/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <vector>

namespace yamabe {

struct StarCheck {
    bool admissible{};
    std::vector<Index> worst_subset;   // proper subset minimizing |F_I|/|I|
    Index worst_faces{};               // |F_I| for worst_subset
};

inline constexpr Index kBruteForceLimit = 22;

/// Enumerates every proper nonempty vertex subset.
inline StarCheck check_star_bruteforce(const Triangulation& t)
{
    const Index n = t.vertex_count();
    if (n > kBruteForceLimit)
        throw Error(ErrorCode::TooLarge, std::to_string(n) + " vertices exceeds the enumeration limit of "
                                             + std::to_string(kBruteForceLimit));
    std::vector<std::uint32_t> face_masks;
    face_masks.reserve(t.face_count());
    for (const Face& f : t.faces())
        face_masks.push_back((1u << f[0]) | (1u << f[1]) | (1u << f[2]));

    const std::uint64_t total_faces = t.face_count();
    const std::uint32_t full = (1u << n) - 1u;
    std::uint32_t best_mask = 0;
    std::uint64_t best_faces = 0, best_size = 1;
    for (std::uint32_t mask = 1; mask < full; ++mask) {
        std::uint64_t hit = 0;
        for (std::uint32_t fm : face_masks)
            hit += (fm & mask) != 0;
        const std::uint64_t size = static_cast<std::uint64_t>(std::popcount(mask));
        // hit/size < best_faces/best_size
        if (best_mask == 0 || hit * best_size < best_faces * size) {
            best_mask = mask;
            best_faces = hit;
            best_size = size;
        }
    }
    StarCheck out;
    for (Index v = 0; v < n; ++v)
        if (best_mask & (1u << v))
            out.worst_subset.push_back(v);
    out.worst_faces = best_faces;
    // strict: |F_I| * |V| > |F| * |I|
    out.admissible = best_mask == 0 || best_faces * n > total_faces * best_size;
    return out;
}

/// Directed graph on V u F u {z} with lower/upper capacities.
/// Node ids: vertex v -> v, face f -> N + f, z -> N + |F|.
/// Edge ids: (f, v) for corner r of face f -> 3f + r; then (z, f) for every
/// face; then (v, z) for every vertex.
struct FlowNetwork {
    struct Arc {
        Index from{};
        Index to{};
        double lower{};
        double upper{};
    };

    Index vertex_count{};
    Index face_count{};
    std::vector<Arc> arcs;

    Index node_count() const noexcept { return vertex_count + face_count + 1; }
    Index face_node(Index f) const noexcept { return vertex_count + f; }
    Index sink_node() const noexcept { return vertex_count + face_count; }
    Index corner_arc(Index f, int r) const noexcept { return 3 * f + static_cast<Index>(r); }
};

inline FlowNetwork build_network(const Triangulation& t, double eps)
{
    constexpr double pi = std::numbers::pi;
    FlowNetwork net;
    net.vertex_count = t.vertex_count();
    net.face_count = t.face_count();
    const double inf = std::numeric_limits<double>::infinity();
    for (Index f = 0; f < t.face_count(); ++f)
        for (Index v : t.face(f))
            net.arcs.push_back({net.face_node(f), v, eps, inf});
    for (Index f = 0; f < t.face_count(); ++f)
        net.arcs.push_back({net.sink_node(), net.face_node(f), pi, pi});
    const double per_vertex = pi * static_cast<double>(t.face_count()) / static_cast<double>(t.vertex_count());
    for (Index v = 0; v < t.vertex_count(); ++v)
        net.arcs.push_back({v, net.sink_node(), per_vertex, per_vertex});
    return net;
}

struct FeasibleFlowResult {
    bool feasible{};
    std::vector<double> flow;            // per arc, when feasible
    std::vector<Index> violating_subset; // node ids, when infeasible
};

namespace detail {

/// Dinic max-flow on real capacities; residuals below `cutoff` count as
/// saturated.
class MaxFlow {
public:
    explicit MaxFlow(Index nodes, double cutoff) : adj_(nodes), cutoff_(cutoff) {}

    Index add_edge(Index from, Index to, double cap)
    {
        const Index id = to_.size();
        to_.push_back(to);
        cap_.push_back(cap);
        adj_[from].push_back(id);
        to_.push_back(from);
        cap_.push_back(0.0);
        adj_[to].push_back(id + 1);
        return id;
    }

    double run(Index s, Index t)
    {
        double total = 0.0;
        while (bfs(s, t)) {
            next_.assign(adj_.size(), 0);
            while (true) {
                const double pushed = dfs(s, t, std::numeric_limits<double>::infinity());
                if (pushed <= cutoff_)
                    break;
                total += pushed;
            }
        }
        return total;
    }

    /// Flow currently routed through edge id.
    double flow(Index id) const { return cap_[id + 1]; }

    /// Nodes reachable from s through residual capacity above the cutoff.
    std::vector<bool> reachable(Index s) const
    {
        std::vector<bool> seen(adj_.size(), false);
        std::queue<Index> q;
        q.push(s);
        seen[s] = true;
        while (!q.empty()) {
            const Index v = q.front();
            q.pop();
            for (Index id : adj_[v])
                if (cap_[id] > cutoff_ && !seen[to_[id]]) {
                    seen[to_[id]] = true;
                    q.push(to_[id]);
                }
        }
        return seen;
    }

private:
    bool bfs(Index s, Index t)
    {
        level_.assign(adj_.size(), -1);
        std::queue<Index> q;
        level_[s] = 0;
        q.push(s);
        while (!q.empty()) {
            const Index v = q.front();
            q.pop();
            for (Index id : adj_[v])
                if (cap_[id] > cutoff_ && level_[to_[id]] < 0) {
                    level_[to_[id]] = level_[v] + 1;
                    q.push(to_[id]);
                }
        }
        return level_[t] >= 0;
    }

    double dfs(Index v, Index t, double limit)
    {
        if (v == t)
            return limit;
        for (Index& i = next_[v]; i < adj_[v].size(); ++i) {
            const Index id = adj_[v][i];
            const Index w = to_[id];
            if (cap_[id] > cutoff_ && level_[w] == level_[v] + 1) {
                const double pushed = dfs(w, t, std::min(limit, cap_[id]));
                if (pushed > cutoff_) {
                    cap_[id] -= pushed;
                    cap_[id ^ 1] += pushed;
                    return pushed;
                }
            }
        }
        return 0.0;
    }

    std::vector<std::vector<Index>> adj_;
    std::vector<Index> to_;
    std::vector<double> cap_;
    std::vector<int> level_;
    std::vector<Index> next_;
    double cutoff_;
};

} // namespace detail

/// Sum of upper bounds on arcs entering U minus sum of lower bounds on arcs
/// leaving U. A feasible circulation exists iff this is >= 0 for every
/// nonempty proper U.
inline double cut_margin(const FlowNetwork& net, const std::vector<Index>& subset)
{
    std::vector<bool> in(net.node_count(), false);
    for (Index v : subset)
        in[v] = true;
    double entering = 0.0, leaving = 0.0;
    for (const auto& arc : net.arcs) {
        if (!in[arc.from] && in[arc.to])
            entering += arc.upper;
        else if (in[arc.from] && !in[arc.to])
            leaving += arc.lower;
    }
    return entering - leaving;
}

/// Circulation with bounds via the standard reduction: shift lower bounds
/// out, route the induced node imbalances from a super-source to a
/// super-sink, and call the circulation feasible when the max flow saturates
/// every source arc. On failure the nodes unreachable from the super-source
/// in the final residual graph form a subset violating the cut condition.
inline FeasibleFlowResult feasible_flow(const FlowNetwork& net)
{
    const Index n = net.node_count();
    double big = 1.0;
    for (const auto& arc : net.arcs) {
        big += std::abs(arc.lower);
        if (std::isfinite(arc.upper))
            big += std::abs(arc.upper);
    }

    std::vector<double> excess(n, 0.0);
    for (const auto& arc : net.arcs) {
        excess[arc.to] += arc.lower;
        excess[arc.from] -= arc.lower;
    }
    double demand = 0.0;
    for (double e : excess)
        if (e > 0.0)
            demand += e;

    const Index source = n, sink = n + 1;
    detail::MaxFlow mf(n + 2, 1e-12);
    std::vector<Index> ids;
    ids.reserve(net.arcs.size());
    for (const auto& arc : net.arcs) {
        const double upper = std::isfinite(arc.upper) ? arc.upper : big;
        ids.push_back(mf.add_edge(arc.from, arc.to, std::max(0.0, upper - arc.lower)));
    }
    for (Index v = 0; v < n; ++v) {
        if (excess[v] > 0.0)
            mf.add_edge(source, v, excess[v]);
        else if (excess[v] < 0.0)
            mf.add_edge(v, sink, -excess[v]);
    }
    const double routed = mf.run(source, sink);

    FeasibleFlowResult out;
    bool bounds_ok = true;
    for (const auto& arc : net.arcs)
        bounds_ok = bounds_ok && arc.lower <= arc.upper;
    out.feasible = bounds_ok && routed >= demand - 1e-12 * (1.0 + demand);
    if (out.feasible) {
        out.flow.resize(net.arcs.size());
        for (std::size_t a = 0; a < net.arcs.size(); ++a)
            out.flow[a] = net.arcs[a].lower + mf.flow(ids[a]);
    } else {
        const std::vector<bool> seen = mf.reachable(source);
        for (Index v = 0; v < n; ++v)
            if (!seen[v])
                out.violating_subset.push_back(v);
    }
    return out;
}

/// Largest imbalance |inflow - outflow| over all nodes.
inline double kirchhoff_residual(const FlowNetwork& net, const std::vector<double>& flow)
{
    std::vector<double> balance(net.node_count(), 0.0);
    for (std::size_t a = 0; a < net.arcs.size(); ++a) {
        balance[net.arcs[a].to] += flow[a];
        balance[net.arcs[a].from] -= flow[a];
    }
    double worst = 0.0;
    for (double b : balance)
        worst = std::max(worst, std::abs(b));
    return worst;
}

/// Margin standing in for the strict inequality of the counting condition.
inline constexpr double kStrictnessEpsilon = 1e-9 * std::numbers::pi;

struct AdmissibilityVerdict {
    bool admissible{};
    FeasibleFlowResult flow;
    FlowNetwork network;
};

inline AdmissibilityVerdict check_admissible(const Triangulation& t, double eps = kStrictnessEpsilon)
{
    AdmissibilityVerdict out;
    out.network = build_network(t, eps);
    out.flow = feasible_flow(out.network);
    out.admissible = out.flow.feasible;
    return out;
}

/// Vertices (ids below N) of a network node subset.
inline std::vector<Index> vertex_part(const FlowNetwork& net, const std::vector<Index>& subset)
{
    std::vector<Index> out;
    for (Index v : subset)
        if (v < net.vertex_count)
            out.push_back(v);
    return out;
}

struct TargetAngleOptions {
    int bisection_steps{50};
};

struct TargetAngleResult {
    TargetAngles targets;
    double max_feasible_eps{};
    double used_eps{};
};

/// Corner targets summing to pi per face and 2*pi - K_av per vertex, read off
/// a feasible flow whose corner lower bound is half the largest feasible one.
inline TargetAngleResult target_angles(const Triangulation& t, const TargetAngleOptions& opts = {})
{
    constexpr double pi = std::numbers::pi;
    if (!feasible_flow(build_network(t, kStrictnessEpsilon)).feasible)
        throw Error(ErrorCode::NotAdmissible, "no feasible corner-angle flow exists");
    double lo = kStrictnessEpsilon, hi = pi / 3.0;
    if (feasible_flow(build_network(t, hi)).feasible) {
        lo = hi;
    } else {
        for (int it = 0; it < opts.bisection_steps; ++it) {
            const double mid = 0.5 * (lo + hi);
            (feasible_flow(build_network(t, mid)).feasible ? lo : hi) = mid;
        }
    }
    TargetAngleResult out;
    out.max_feasible_eps = lo;
    out.used_eps = 0.5 * lo;
    const FlowNetwork net = build_network(t, out.used_eps);
    const FeasibleFlowResult flow = feasible_flow(net);
    if (!flow.feasible)
        throw Error(ErrorCode::NotAdmissible, "flow at half the maximal margin is infeasible");
    out.targets.corner.resize(t.face_count());
    for (Index f = 0; f < t.face_count(); ++f)
        for (int r = 0; r < 3; ++r)
            out.targets.corner[f][static_cast<std::size_t>(r)] = flow.flow[net.corner_arc(f, r)];
    return out;
}

} // namespace yamabe

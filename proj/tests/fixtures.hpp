#pragma once

#include <yamabe/catalog.hpp>
#include <yamabe/metric.hpp>

#include <utility>

namespace fixture {

/// Octahedron (poles 0 and 5, ring 1..4) whose face (0,1,2) has sides
/// |01| = |02| = 1 and |12| = 2 - delta, so vertex 0 sits almost on segment
/// 1-2, while (1,2,5) is equilateral with side 2. The other sides keep every
/// remaining face well shaped. Relative slack of (0,1,2) is delta / (4 - delta).
inline std::pair<yamabe::Triangulation, yamabe::PLMetric> flat_quad_octahedron(double slack)
{
    const double delta = 4.0 * slack / (1.0 + slack);
    const auto t = yamabe::catalog::octahedron();
    std::vector<double> len(t.edge_count(), 0.0);
    auto set = [&](yamabe::Index a, yamabe::Index b, double x) { len[t.edge_index(a, b)] = x; };
    set(0, 1, 1.0);
    set(0, 2, 1.0);
    set(1, 2, 2.0 - delta);
    set(1, 5, 2.0);
    set(2, 5, 2.0);
    set(0, 3, 1.0);
    set(0, 4, 1.0);
    set(2, 3, 1.5);
    set(3, 4, 1.5);
    set(1, 4, 1.5);
    set(3, 5, 2.0);
    set(4, 5, 2.0);
    return {t, yamabe::PLMetric::from_lengths(t, std::move(len))};
}

} // namespace fixture

#pragma once

// Standard closed triangulations and constructions used to grow new ones.

#include "yamabe/mesh.hpp"

#include <random>
#include <string>
#include <string_view>

namespace yamabe::catalog {

inline Triangulation tetrahedron()
{
    return Triangulation::build({{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}});
}

/// Suspension of an n-cycle: poles 0 and n+1, ring 1..n.
inline Triangulation bipyramid(Index n)
{
    std::vector<Face> faces;
    for (Index i = 1; i <= n; ++i) {
        const Index j = i % n + 1;
        faces.push_back({0, i, j});
        faces.push_back({n + 1, i, j});
    }
    return Triangulation::build(std::move(faces));
}

inline Triangulation octahedron() { return bipyramid(4); }

inline Triangulation icosahedron()
{
    std::vector<Face> faces;
    for (Index i = 1; i <= 5; ++i) {
        const Index j = i % 5 + 1;
        faces.push_back({0, i, j});
        faces.push_back({11, 5 + i, 5 + j});
        faces.push_back({i, j, 5 + i});
        faces.push_back({j, 5 + i, 5 + j});
    }
    return Triangulation::build(std::move(faces));
}

/// Seven-vertex torus: faces {i, i+1, i+3} and {i, i+2, i+3} mod 7.
inline Triangulation torus7()
{
    std::vector<Face> faces;
    for (Index i = 0; i < 7; ++i) {
        faces.push_back({i, (i + 1) % 7, (i + 3) % 7});
        faces.push_back({i, (i + 2) % 7, (i + 3) % 7});
    }
    return Triangulation::build(std::move(faces));
}

/// Six-vertex projective plane (hemi-icosahedron), chi = 1.
inline Triangulation projective_plane6()
{
    return Triangulation::build({{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 5}, {0, 5, 1},
                                 {1, 2, 4}, {2, 3, 5}, {3, 4, 1}, {4, 5, 2}, {5, 1, 3}});
}

/// Connected sum of two seven-vertex tori along the face (0,1,3):
/// 11 vertices, 26 faces, chi = -2.
inline Triangulation genus2()
{
    std::vector<Face> faces;
    const Index remap[7] = {0, 1, 7, 3, 8, 9, 10};
    for (Index copy = 0; copy < 2; ++copy) {
        for (Index i = 0; i < 7; ++i) {
            const Face a{i, (i + 1) % 7, (i + 3) % 7};
            const Face b{i, (i + 2) % 7, (i + 3) % 7};
            for (const Face& f : {a, b}) {
                if (canonical_face(f[0], f[1], f[2]) == Face{0, 1, 3})
                    continue;
                if (copy == 0)
                    faces.push_back(f);
                else
                    faces.push_back({remap[f[0]], remap[f[1]], remap[f[2]]});
            }
        }
    }
    return Triangulation::build(std::move(faces));
}

/// Stellar subdivision of face f: a new vertex joined to its three corners.
/// The first new face keeps index f; the other two are appended.
inline Triangulation subdivide_face(const Triangulation& t, Index f)
{
    std::vector<Face> faces(t.faces().begin(), t.faces().end());
    const Face old = faces.at(f);
    const Index n = t.vertex_count();
    faces[f] = {old[0], old[1], n};
    faces.push_back({old[1], old[2], n});
    faces.push_back({old[0], old[2], n});
    return Triangulation::build(std::move(faces));
}

/// Link of v as a cyclic vertex sequence c_0..c_{m-1}, with (v, c_r, c_{r+1})
/// a face for every r.
inline std::vector<Index> link_cycle(const Triangulation& t, Index v)
{
    std::vector<std::pair<Index, Index>> link;
    for (const Face& f : t.faces())
        if (f[0] == v || f[1] == v || f[2] == v) {
            Index x = f[0] == v ? f[1] : f[0];
            Index y = f[2] == v ? f[1] : f[2];
            link.emplace_back(x, y);
        }
    std::vector<Index> cycle{link.front().first, link.front().second};
    std::vector<bool> used(link.size(), false);
    used[0] = true;
    while (cycle.size() < link.size()) {
        const Index cur = cycle.back();
        for (std::size_t k = 0; k < link.size(); ++k) {
            if (used[k])
                continue;
            if (link[k].first == cur || link[k].second == cur) {
                used[k] = true;
                cycle.push_back(link[k].first == cur ? link[k].second : link[k].first);
                break;
            }
        }
    }
    return cycle;
}

/// Splits v into v and a new vertex v': the link arc c_p..c_q moves to v',
/// and the faces (v,v',c_p), (v,v',c_q) are added. Requires 0 <= p < q < m.
inline Triangulation vertex_split(const Triangulation& t, Index v, std::size_t p, std::size_t q)
{
    const std::vector<Index> cycle = link_cycle(t, v);
    const std::size_t m = cycle.size();
    if (!(p < q && q < m))
        throw Error(ErrorCode::InvalidIndex, "vertex_split needs 0 <= p < q < link size");
    const Index vn = t.vertex_count();
    std::vector<Face> faces(t.faces().begin(), t.faces().end());
    for (std::size_t r = p; r < q; ++r) {
        const Face target = canonical_face(v, cycle[r], cycle[(r + 1) % m]);
        for (Face& f : faces)
            if (f == target) {
                f = canonical_face(vn, cycle[r], cycle[(r + 1) % m]);
                break;
            }
    }
    faces.push_back(canonical_face(v, vn, cycle[p]));
    faces.push_back(canonical_face(v, vn, cycle[q]));
    return Triangulation::build(std::move(faces));
}

/// Random sphere triangulation with `vertices` vertices grown from the
/// tetrahedron by random vertex splits, followed by a few random flips.
template <class Rng>
Triangulation random_sphere(Index vertices, Rng& rng)
{
    Triangulation t = tetrahedron();
    while (t.vertex_count() < vertices) {
        const Index v = std::uniform_int_distribution<Index>(0, t.vertex_count() - 1)(rng);
        const std::size_t m = link_cycle(t, v).size();
        std::size_t p = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
        std::size_t q = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
        if (p == q)
            continue;
        if (p > q)
            std::swap(p, q);
        t = vertex_split(t, v, p, q);
    }
    for (int k = 0; k < static_cast<int>(vertices); ++k) {
        const Index e = std::uniform_int_distribution<Index>(0, t.edge_count() - 1)(rng);
        try {
            t = flip_edge(t, t.edge(e));
        } catch (const Error&) {
            // flip would duplicate an edge; skip it
        }
    }
    return t;
}

/// Named lookup used by the command line (`builtin:<name>`).
inline Triangulation by_name(std::string_view name)
{
    if (name == "tetrahedron")
        return tetrahedron();
    if (name == "octahedron")
        return octahedron();
    if (name == "icosahedron")
        return icosahedron();
    if (name == "torus7")
        return torus7();
    if (name == "rp2")
        return projective_plane6();
    if (name == "genus2")
        return genus2();
    throw Error(ErrorCode::MissingInput, "unknown builtin mesh '" + std::string(name) + "'");
}

} // namespace yamabe::catalog

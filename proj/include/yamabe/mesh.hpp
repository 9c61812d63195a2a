#pragma once

#include "yamabe/errors.hpp"

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace yamabe {

using Index = std::size_t;

/// Unordered vertex pair stored as (min, max).
struct Edge {
    Index a{};
    Index b{};

    constexpr Edge() = default;
    constexpr Edge(Index i, Index j) : a(std::min(i, j)), b(std::max(i, j)) {}

    constexpr bool contains(Index v) const noexcept { return v == a || v == b; }
    constexpr Index other(Index v) const noexcept { return v == a ? b : a; }

    friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

/// Vertex triple, kept sorted ascending.
using Face = std::array<Index, 3>;

inline Face canonical_face(Index i, Index j, Index k)
{
    Face f{i, j, k};
    std::sort(f.begin(), f.end());
    return f;
}

/// Description of an edge flip: the diagonal (i,j) of the quadrilateral
/// formed by faces (i,j,k) and (i,j,l) is replaced by (k,l).
struct EdgeFlip {
    Edge removed_edge;
    Edge inserted_edge;
    std::array<Index, 2> old_faces{};   // face indices of (i,j,k), (i,j,l)
    std::array<Face, 2> new_faces{};    // (k,l,i), (k,l,j)
    Index apex_k{};                     // apex in old_faces[0]
    Index apex_l{};                     // apex in old_faces[1]
};

/// Combinatorial closed surface. Immutable once built; every mutating
/// operation (flip_edge) returns a fresh value.
///
/// Edges are indexed densely in lexicographic (min,max) order, so two
/// triangulations built from the same face list agree on edge indices.
/// Face indices follow the input order.
class Triangulation {
public:
    /// Empty placeholder; only build() yields a usable value.
    Triangulation() = default;

    /// Validates and indexes a face list. `vertex_count` defaults to one past
    /// the largest index used.
    static Triangulation build(std::vector<Face> faces, std::optional<Index> vertex_count = std::nullopt);

    Index vertex_count() const noexcept { return vertex_count_; }
    Index edge_count() const noexcept { return edges_.size(); }
    Index face_count() const noexcept { return faces_.size(); }

    std::span<const Face> faces() const noexcept { return faces_; }
    std::span<const Edge> edges() const noexcept { return edges_; }
    const Face& face(Index f) const { return faces_.at(f); }
    const Edge& edge(Index e) const { return edges_.at(e); }

    /// Edge index of the side opposite corner r of face f.
    Index face_edge(Index f, int r) const { return face_edges_.at(f)[static_cast<std::size_t>(r)]; }
    const std::array<Index, 3>& face_edges(Index f) const { return face_edges_.at(f); }

    /// The two faces incident to edge e.
    const std::array<Index, 2>& edge_faces(Index e) const { return edge_faces_.at(e); }

    std::optional<Index> find_edge(Index i, Index j) const
    {
        const Edge key(i, j);
        auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
        if (it == edges_.end() || *it != key)
            return std::nullopt;
        return static_cast<Index>(it - edges_.begin());
    }

    Index edge_index(Index i, Index j) const
    {
        if (auto e = find_edge(i, j))
            return *e;
        throw Error(ErrorCode::NotAnEdge, std::to_string(i) + "-" + std::to_string(j));
    }

    /// Vertex of face f that is not on edge e.
    Index apex(Index f, const Edge& e) const
    {
        for (Index v : faces_.at(f))
            if (!e.contains(v))
                return v;
        throw Error(ErrorCode::NotAnEdge, "face does not contain edge");
    }

    /// Sorted list of sorted faces; equal for triangulations with the same
    /// face set regardless of face order.
    std::vector<Face> canonical_faces() const
    {
        std::vector<Face> out = faces_;
        std::sort(out.begin(), out.end());
        return out;
    }

    friend bool operator==(const Triangulation& x, const Triangulation& y)
    {
        return x.vertex_count_ == y.vertex_count_ && x.faces_ == y.faces_;
    }

private:
    Index vertex_count_{};
    std::vector<Face> faces_;
    std::vector<Edge> edges_;
    std::vector<std::array<Index, 3>> face_edges_;
    std::vector<std::array<Index, 2>> edge_faces_;
};

inline Triangulation Triangulation::build(std::vector<Face> faces, std::optional<Index> vertex_count)
{
    Index n = 0;
    for (const Face& f : faces)
        for (Index v : f)
            n = std::max(n, v + 1);
    if (vertex_count) {
        if (*vertex_count < n)
            throw Error(ErrorCode::InvalidIndex,
                        "face references vertex " + std::to_string(n - 1) + " but vertex count is "
                            + std::to_string(*vertex_count));
        n = *vertex_count;
    }

    Triangulation t;
    t.vertex_count_ = n;
    t.faces_.reserve(faces.size());
    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
        Face f = canonical_face(faces[fi][0], faces[fi][1], faces[fi][2]);
        if (f[0] == f[1] || f[1] == f[2])
            throw Error(ErrorCode::DegenerateFace, "face " + std::to_string(fi) + " repeats a vertex");
        t.faces_.push_back(f);
    }

    {
        std::vector<Face> sorted = t.faces_;
        std::sort(sorted.begin(), sorted.end());
        auto dup = std::adjacent_find(sorted.begin(), sorted.end());
        if (dup != sorted.end())
            throw Error(ErrorCode::DuplicateFace, "face (" + std::to_string((*dup)[0]) + "," + std::to_string((*dup)[1])
                                                      + "," + std::to_string((*dup)[2]) + ") appears twice");
    }

    // (edge, face, corner opposite the edge) incidences
    struct Incidence {
        Edge edge;
        Index face;
        int corner;
    };
    std::vector<Incidence> inc;
    inc.reserve(3 * t.faces_.size());
    for (Index fi = 0; fi < t.faces_.size(); ++fi) {
        const Face& f = t.faces_[fi];
        inc.push_back({Edge(f[1], f[2]), fi, 0});
        inc.push_back({Edge(f[0], f[2]), fi, 1});
        inc.push_back({Edge(f[0], f[1]), fi, 2});
    }
    std::stable_sort(inc.begin(), inc.end(), [](const Incidence& x, const Incidence& y) { return x.edge < y.edge; });

    t.face_edges_.assign(t.faces_.size(), {});
    for (std::size_t i = 0; i < inc.size();) {
        std::size_t j = i;
        while (j < inc.size() && inc[j].edge == inc[i].edge)
            ++j;
        if (j - i != 2)
            throw Error(ErrorCode::BoundaryEdge, "edge " + std::to_string(inc[i].edge.a) + "-"
                                                     + std::to_string(inc[i].edge.b) + " lies in "
                                                     + std::to_string(j - i) + " face(s), expected 2");
        const Index e = t.edges_.size();
        t.edges_.push_back(inc[i].edge);
        t.edge_faces_.push_back({inc[i].face, inc[i + 1].face});
        t.face_edges_[inc[i].face][static_cast<std::size_t>(inc[i].corner)] = e;
        t.face_edges_[inc[i + 1].face][static_cast<std::size_t>(inc[i + 1].corner)] = e;
        i = j;
    }

    // Connectivity of the 1-skeleton, isolated vertices included.
    std::vector<Index> parent(n);
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    for (const Edge& e : t.edges_)
        parent[find(e.a)] = find(e.b);
    for (Index v = 1; v < n; ++v)
        if (find(v) != find(0))
            throw Error(ErrorCode::Disconnected, "vertex " + std::to_string(v) + " is not connected to vertex 0");

    // Each link vertex has degree 2 in the link of v (every edge has two
    // faces), so the link is a single cycle iff it is connected.
    std::vector<std::vector<std::pair<Index, Index>>> links(n);
    for (const Face& f : t.faces_) {
        links[f[0]].emplace_back(f[1], f[2]);
        links[f[1]].emplace_back(f[0], f[2]);
        links[f[2]].emplace_back(f[0], f[1]);
    }
    for (Index v = 0; v < n; ++v) {
        const auto& link = links[v];
        if (link.empty())
            throw Error(ErrorCode::Disconnected, "vertex " + std::to_string(v) + " lies in no face");
        std::vector<bool> used(link.size(), false);
        used[0] = true;
        std::size_t reached = 1;
        Index cur = link[0].second;
        const Index start = link[0].first;
        while (cur != start) {
            std::size_t next = link.size();
            for (std::size_t k = 0; k < link.size(); ++k)
                if (!used[k] && (link[k].first == cur || link[k].second == cur)) {
                    next = k;
                    break;
                }
            if (next == link.size())
                break;
            used[next] = true;
            ++reached;
            cur = link[next].first == cur ? link[next].second : link[next].first;
        }
        if (reached != link.size())
            throw Error(ErrorCode::BoundaryEdge, "link of vertex " + std::to_string(v) + " is not a single cycle");
    }
    return t;
}

inline long euler_characteristic(const Triangulation& t) noexcept
{
    return static_cast<long>(t.vertex_count()) - static_cast<long>(t.edge_count())
           + static_cast<long>(t.face_count());
}

/// Checks that edge (i,j) can be flipped and returns the flip description.
inline EdgeFlip plan_flip(const Triangulation& t, const Edge& e)
{
    const Index ei = t.edge_index(e.a, e.b);
    const auto& ef = t.edge_faces(ei);
    EdgeFlip flip;
    flip.removed_edge = e;
    flip.old_faces = ef;
    flip.apex_k = t.apex(ef[0], e);
    flip.apex_l = t.apex(ef[1], e);
    if (flip.apex_k == flip.apex_l)
        throw Error(ErrorCode::FlipDegenerate, "faces across " + std::to_string(e.a) + "-" + std::to_string(e.b)
                                                   + " share apex " + std::to_string(flip.apex_k));
    flip.inserted_edge = Edge(flip.apex_k, flip.apex_l);
    if (t.find_edge(flip.apex_k, flip.apex_l))
        throw Error(ErrorCode::FlipCreatesDuplicateEdge,
                    "edge " + std::to_string(flip.inserted_edge.a) + "-" + std::to_string(flip.inserted_edge.b)
                        + " already exists");
    flip.new_faces = {canonical_face(flip.apex_k, flip.apex_l, e.a), canonical_face(flip.apex_k, flip.apex_l, e.b)};
    return flip;
}

/// Replaces the two faces across `e` by the two faces across the other
/// diagonal. The new faces take the face indices of the old ones.
inline Triangulation flip_edge(const Triangulation& t, const Edge& e)
{
    const EdgeFlip flip = plan_flip(t, e);
    std::vector<Face> faces(t.faces().begin(), t.faces().end());
    faces[flip.old_faces[0]] = flip.new_faces[0];
    faces[flip.old_faces[1]] = flip.new_faces[1];
    return Triangulation::build(std::move(faces), t.vertex_count());
}

} // namespace yamabe

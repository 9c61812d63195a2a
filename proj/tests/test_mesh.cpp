#include <yamabe/catalog.hpp>
#include <yamabe/mesh.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace yamabe;

namespace {

ErrorCode build_error(std::vector<Face> faces, std::optional<Index> n = std::nullopt)
{
    try {
        (void)Triangulation::build(std::move(faces), n);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "build succeeded";
    return ErrorCode::IoError;
}

std::vector<Index> degrees(const Triangulation& t)
{
    std::vector<Index> deg(t.vertex_count(), 0);
    for (const Edge& e : t.edges()) {
        ++deg[e.a];
        ++deg[e.b];
    }
    return deg;
}

} // namespace

TEST(Mesh, TetrahedronCounts)
{
    const auto t = catalog::tetrahedron();
    EXPECT_EQ(t.vertex_count(), 4u);
    EXPECT_EQ(t.edge_count(), 6u);
    EXPECT_EQ(t.face_count(), 4u);
    EXPECT_EQ(euler_characteristic(t), 2);
}

TEST(Mesh, IcosahedronCounts)
{
    const auto t = catalog::icosahedron();
    EXPECT_EQ(t.vertex_count(), 12u);
    EXPECT_EQ(t.edge_count(), 30u);
    EXPECT_EQ(t.face_count(), 20u);
    EXPECT_EQ(euler_characteristic(t), 2);
    for (Index d : degrees(t))
        EXPECT_EQ(d, 5u);
}

TEST(Mesh, SevenVertexTorus)
{
    const auto t = catalog::torus7();
    EXPECT_EQ(t.vertex_count(), 7u);
    EXPECT_EQ(t.face_count(), 14u);
    // 14 faces * 3 sides / 2 faces per edge
    EXPECT_EQ(t.edge_count(), 21u);
    EXPECT_EQ(euler_characteristic(t), 0);
    for (Index d : degrees(t))
        EXPECT_EQ(d, 6u);
}

TEST(Mesh, GenusTwo)
{
    const auto t = catalog::genus2();
    EXPECT_EQ(t.vertex_count(), 11u);
    EXPECT_EQ(t.face_count(), 26u);
    EXPECT_EQ(t.edge_count(), 39u);
    EXPECT_EQ(euler_characteristic(t), -2);
}

TEST(Mesh, ProjectivePlane)
{
    const auto t = catalog::projective_plane6();
    EXPECT_EQ(t.edge_count(), 15u);
    EXPECT_EQ(euler_characteristic(t), 1);
}

TEST(Mesh, EdgesAreCanonicalAndSorted)
{
    const auto t = catalog::octahedron();
    for (Index e = 0; e < t.edge_count(); ++e) {
        EXPECT_LT(t.edge(e).a, t.edge(e).b);
        if (e > 0) {
            EXPECT_LT(t.edge(e - 1), t.edge(e));
        }
        EXPECT_EQ(t.edge_index(t.edge(e).b, t.edge(e).a), e);
    }
    EXPECT_FALSE(t.find_edge(0, 5).has_value());
    EXPECT_THROW((void)t.edge_index(0, 5), Error);
}

TEST(Mesh, FaceEdgeIsOppositeCorner)
{
    const auto t = catalog::icosahedron();
    for (Index f = 0; f < t.face_count(); ++f) {
        const Face& face = t.face(f);
        for (int r = 0; r < 3; ++r) {
            const Edge& e = t.edge(t.face_edge(f, r));
            EXPECT_FALSE(e.contains(face[static_cast<std::size_t>(r)]));
        }
    }
}

TEST(Mesh, EveryEdgeHasTwoFaces)
{
    const auto t = catalog::genus2();
    for (Index e = 0; e < t.edge_count(); ++e) {
        const auto& ef = t.edge_faces(e);
        EXPECT_NE(ef[0], ef[1]);
        for (Index f : ef) {
            const Face& face = t.face(f);
            const Edge& ed = t.edge(e);
            EXPECT_TRUE(std::find(face.begin(), face.end(), ed.a) != face.end());
            EXPECT_TRUE(std::find(face.begin(), face.end(), ed.b) != face.end());
        }
    }
}

TEST(Mesh, RejectsBoundary)
{
    EXPECT_EQ(build_error({{0, 1, 2}, {0, 1, 3}, {0, 2, 3}}), ErrorCode::BoundaryEdge);
}

TEST(Mesh, RejectsRepeatedVertex)
{
    EXPECT_EQ(build_error({{0, 0, 1}, {0, 1, 2}, {0, 2, 3}, {1, 2, 3}}), ErrorCode::DegenerateFace);
}

TEST(Mesh, RejectsDuplicateFace)
{
    EXPECT_EQ(build_error({{0, 1, 2}, {2, 1, 0}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}), ErrorCode::DuplicateFace);
}

TEST(Mesh, RejectsDisconnected)
{
    EXPECT_EQ(build_error({{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}, {4, 5, 6}, {4, 5, 7}, {4, 6, 7}, {5, 6, 7}}),
              ErrorCode::Disconnected);
}

TEST(Mesh, RejectsIndexOutOfRange)
{
    EXPECT_EQ(build_error({{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}, 3), ErrorCode::InvalidIndex);
}

TEST(Mesh, RejectsPinchedVertex)
{
    // Two tetrahedra glued at vertex 0: every edge has two faces but the
    // link of 0 is two circles.
    EXPECT_EQ(build_error({{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}, {0, 4, 5}, {0, 4, 6}, {0, 5, 6}, {4, 5, 6}}),
              ErrorCode::BoundaryEdge);
}

TEST(Mesh, FlipOnOctahedron)
{
    const auto t = catalog::octahedron();
    const EdgeFlip plan = plan_flip(t, Edge(1, 2));
    EXPECT_EQ(plan.inserted_edge, Edge(0, 5));
    const auto f = flip_edge(t, Edge(1, 2));
    EXPECT_EQ(f.vertex_count(), t.vertex_count());
    EXPECT_EQ(f.edge_count(), t.edge_count());
    EXPECT_EQ(f.face_count(), t.face_count());
    EXPECT_EQ(euler_characteristic(f), 2);
    EXPECT_FALSE(f.find_edge(1, 2).has_value());
    EXPECT_TRUE(f.find_edge(0, 5).has_value());
    // the replaced faces keep their indices
    for (Index k = 0; k < 2; ++k)
        EXPECT_EQ(f.face(plan.old_faces[k]), canonical_face(plan.new_faces[k][0], plan.new_faces[k][1],
                                                            plan.new_faces[k][2]));
}

TEST(Mesh, FlipBackRestores)
{
    const auto t = catalog::octahedron();
    const auto back = flip_edge(flip_edge(t, Edge(1, 2)), Edge(0, 5));
    EXPECT_EQ(back.canonical_faces(), t.canonical_faces());
}

TEST(Mesh, FlipRejectsExistingDiagonal)
{
    const auto t = catalog::tetrahedron();
    try {
        (void)flip_edge(t, Edge(0, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::FlipCreatesDuplicateEdge);
    }
}

TEST(Mesh, FlipRejectsNonEdge)
{
    const auto t = catalog::octahedron();
    try {
        (void)flip_edge(t, Edge(0, 5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotAnEdge);
    }
}

TEST(Mesh, StellarSubdivision)
{
    auto t = catalog::tetrahedron();
    for (int k = 0; k < 5; ++k) {
        t = catalog::subdivide_face(t, 0);
        EXPECT_EQ(euler_characteristic(t), 2);
    }
    EXPECT_EQ(t.vertex_count(), 9u);
    EXPECT_EQ(t.face_count(), 14u);
}

TEST(Mesh, RandomSpheres)
{
    std::mt19937_64 rng(7);
    for (int k = 0; k < 20; ++k) {
        const auto t = catalog::random_sphere(4 + static_cast<Index>(k % 9), rng);
        EXPECT_EQ(euler_characteristic(t), 2);
        EXPECT_EQ(t.vertex_count(), 4u + static_cast<Index>(k % 9));
    }
}

TEST(Mesh, LinkCycle)
{
    const auto t = catalog::icosahedron();
    const auto cyc = catalog::link_cycle(t, 0);
    ASSERT_EQ(cyc.size(), 5u);
    for (std::size_t r = 0; r < cyc.size(); ++r)
        EXPECT_TRUE(t.find_edge(cyc[r], cyc[(r + 1) % cyc.size()]).has_value());
}

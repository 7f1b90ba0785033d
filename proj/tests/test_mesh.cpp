#include "c1vem/errors.hpp"
#include "c1vem/mesh.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace c1vem;

TEST_CASE("quad mesh generator")
{
    SUBCASE("n=1 is the unit square")
    {
        const auto m = generate_quad_mesh(1);
        CHECK(m.num_cells() == 1);
        CHECK(m.num_vertices() == 4);
        CHECK(element_geometry(m, 0).area == doctest::Approx(1.0));
    }
    SUBCASE("n=16")
    {
        const auto m = generate_quad_mesh(16);
        CHECK(m.num_cells() == 256);
        for (std::size_t c = 0; c < m.num_cells(); ++c) {
            const auto g = element_geometry(m, c);
            CHECK(g.diameter == doctest::Approx(std::sqrt(2.0) / 16).epsilon(1e-14));
            CHECK(g.area == doctest::Approx(1.0 / 256).epsilon(1e-13));
        }
    }
    SUBCASE("n=128")
    {
        const auto m = generate_quad_mesh(128);
        CHECK(m.num_cells() == 16384);
        CHECK(m.num_vertices() == 16641);
    }
}

TEST_CASE("tri mesh generator")
{
    CHECK(generate_tri_mesh(1).num_cells() == 2);
    const auto m = generate_tri_mesh(2);
    CHECK(m.num_cells() == 8);
    CHECK(std::abs(m.total_area() - 1.0) < 1e-14);
    const auto m5 = generate_tri_mesh(5);
    for (std::size_t c = 0; c < m5.num_cells(); ++c) {
        CHECK(m5.cell(c).size() == 3);
        CHECK(signed_area(m5.cell_points(c)) > 0.0);
    }
}

TEST_CASE("element geometry")
{
    SUBCASE("unit square")
    {
        const std::vector<Point> sq = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
        const auto g = polygon_geometry(sq);
        CHECK(g.area == doctest::Approx(1.0));
        CHECK(g.centroid.x() == doctest::Approx(0.5));
        CHECK(g.centroid.y() == doctest::Approx(0.5));
        CHECK(g.diameter == doctest::Approx(std::sqrt(2.0)));
    }
    SUBCASE("triangle")
    {
        const std::vector<Point> tri = {{0, 0}, {1, 0}, {0, 1}};
        const auto g = polygon_geometry(tri);
        CHECK(g.area == doctest::Approx(0.5));
        CHECK(g.centroid.x() == doctest::Approx(1.0 / 3));
        CHECK(g.centroid.y() == doctest::Approx(1.0 / 3));
    }
    SUBCASE("regular pentagon")
    {
        std::vector<Point> p;
        for (int i = 0; i < 5; ++i)
            p.emplace_back(std::cos(2 * std::numbers::pi * i / 5), std::sin(2 * std::numbers::pi * i / 5));
        const double closed_form = 2.5 * std::sin(2 * std::numbers::pi / 5);
        const auto g = polygon_geometry(p);
        CHECK(std::abs(g.area - closed_form) < 1e-14);
        CHECK(closed_form == doctest::Approx(2.37764).epsilon(1e-5));
        CHECK(g.centroid.norm() < 1e-15);
    }
}

TEST_CASE("geometry invariants on random polygons")
{
    for (const auto& poly : oracle::polygon_suite(120, 77)) {
        const auto g = polygon_geometry(poly.loop);
        // divergence theorem: |E| = 1/2 sum_e int_e x.n ds (x.n is constant on an edge)
        double div = 0.0;
        Point closure = Point::Zero();
        for (const auto& e : g.edges) {
            div += 0.5 * e.length * e.p0.dot(e.normal);
            closure += e.length * e.normal;
            CHECK(std::abs(e.normal.norm() - 1.0) < 1e-14);
            CHECK(std::abs(e.normal.dot(e.tangent)) < 1e-14);
            CHECK(e.length <= g.diameter * (1.0 + 1e-15));
        }
        CHECK(std::abs(div - g.area) <= 1e-13 * g.area);
        CHECK(closure.norm() <= 1e-13 * g.diameter);
        CHECK(g.area > 0.0);
    }
}

TEST_CASE("topology of a structured mesh")
{
    const auto m = generate_quad_mesh(3);
    int boundary_edges = 0;
    for (const auto& e : m.edges()) {
        if (e.on_boundary()) {
            ++boundary_edges;
            continue;
        }
        // the two adjacent cells see opposite outward normals
        auto normal_in = [&](int cell) {
            const auto& loop = m.cell(cell);
            for (std::size_t i = 0; i < loop.size(); ++i) {
                const int a = loop[i], b = loop[(i + 1) % loop.size()];
                if ((a == e.v0 && b == e.v1) || (a == e.v1 && b == e.v0)) {
                    const Point d = (m.vertex(b) - m.vertex(a)).normalized();
                    return Point(d.y(), -d.x());
                }
            }
            return Point(0, 0);
        };
        CHECK((normal_in(e.cells[0]) + normal_in(e.cells[1])).norm() < 1e-15);
    }
    CHECK(boundary_edges == 12);
    CHECK(m.num_edges() == 24);
    CHECK(m.boundary_normals(0).size() == 2);   // corner
    CHECK(m.boundary_normals(1).size() == 2);   // side vertex: two collinear edges
    CHECK(!m.is_boundary_vertex(5));
}

TEST_CASE("mesh input and output")
{
    SUBCASE("native json round trip")
    {
        const auto m = generate_quad_mesh(2);
        std::stringstream ss;
        write_mesh_json(ss, m);
        const auto r = load_mesh(ss, MeshFormat::NativeJson);
        CHECK(r.cells() == m.cells());
        REQUIRE(r.num_vertices() == m.num_vertices());
        for (std::size_t i = 0; i < m.num_vertices(); ++i) CHECK(r.vertex(i) == m.vertex(i));
    }
    SUBCASE("off-poly round trip")
    {
        const auto m = generate_tri_mesh(3);
        std::stringstream ss;
        write_mesh_off(ss, m);
        const auto r = load_mesh(ss, MeshFormat::OffPoly);
        CHECK(r.cells() == m.cells());
        for (std::size_t i = 0; i < m.num_vertices(); ++i) CHECK(r.vertex(i) == m.vertex(i));
    }
    SUBCASE("clockwise loops are reoriented")
    {
        std::stringstream ss("NPOLY 4  0 0  1 0  1 1  0 1  1  4 0 3 2 1");
        const auto m = load_mesh(ss, MeshFormat::OffPoly);
        CHECK(signed_area(m.cell_points(0)) == doctest::Approx(1.0));
    }
    SUBCASE("voronoi fixture")
    {
        const auto m = load_mesh_file("data/voronoi_10.off");
        CHECK(m.num_cells() == 10);
        bool saw[7] = {};
        for (const auto& c : m.cells()) {
            REQUIRE(c.size() <= 6);
            saw[c.size()] = true;
        }
        CHECK(saw[4]);
        CHECK(saw[5]);
        CHECK(saw[6]);
        CHECK(std::abs(m.total_area() - 1.0) < 1e-12);
    }
    SUBCASE("errors")
    {
        std::stringstream bad_index(R"({"version":1,"vertices":[[0,0],[1,0],[0,1]],"cells":[[0,1,5]]})");
        CHECK_THROWS_AS(load_mesh(bad_index, MeshFormat::NativeJson), TopologyError);
        std::stringstream garbage("{ not json");
        CHECK_THROWS_AS(load_mesh(garbage, MeshFormat::NativeJson), ParseError);
        std::stringstream truncated("NPOLY 3 0 0 1 0");
        CHECK_THROWS_AS(load_mesh(truncated, MeshFormat::OffPoly), ParseError);
        std::stringstream bowtie("NPOLY 4  0 0  2 0  0 1  1 1  1  4 0 1 2 3");
        CHECK_THROWS_AS(load_mesh(bowtie, MeshFormat::OffPoly), TopologyError);
        std::stringstream flat("NPOLY 3  0 0  1 0  2 0  1  3 0 1 2");
        CHECK_THROWS_AS(load_mesh(flat, MeshFormat::OffPoly), GeometryError);
        // three triangles fanning over one edge
        std::stringstream fan("NPOLY 5  0 0 1 0 0.5 1 0.5 -1 0.5 2  3  3 0 1 2  3 1 0 3  3 0 1 4");
        CHECK_THROWS_AS(load_mesh(fan, MeshFormat::OffPoly), TopologyError);
    }
}

TEST_CASE("regularity warnings are not fatal")
{
    std::vector<Point> v = {{0, 0}, {1, 0}, {1, 1}, {0.001, 1}, {0, 1}};
    PolygonalMesh m(v, {{0, 1, 2, 3, 4}});
    CHECK(m.warnings().size() == 1);
}

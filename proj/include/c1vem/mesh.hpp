#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace c1vem {

using Point = Eigen::Vector2d;

/// One mesh edge. `cells[1] == -1` marks a boundary edge; for boundary edges
/// `v0 -> v1` follows the counter-clockwise loop of `cells[0]`.
struct MeshEdge {
    int v0 = -1;
    int v1 = -1;
    int cells[2] = {-1, -1};

    bool on_boundary() const { return cells[1] < 0; }
};

struct EdgeGeometry {
    Point p0;
    Point p1;
    double length = 0.0;
    Point tangent;  ///< unit, p0 -> p1
    Point normal;   ///< unit, outward for a counter-clockwise loop
};

struct ElementGeometry {
    double area = 0.0;
    Point centroid;
    double diameter = 0.0;
    std::vector<EdgeGeometry> edges;  ///< edge i joins local vertex i and i+1
};

/// Geometry of a polygon given by its counter-clockwise vertex loop.
ElementGeometry polygon_geometry(std::span<const Point> loop);

/// Signed shoelace area; positive for counter-clockwise loops.
double signed_area(std::span<const Point> loop);

struct MeshCheckOptions {
    /// Edge-to-diameter ratio below which a regularity warning is issued.
    double min_edge_ratio = 0.05;
};

/// Conforming partition of a planar polygonal domain into simple polygons.
///
/// The constructor validates and reorients the input; after construction the
/// object is immutable so element workers can share it freely.
class PolygonalMesh {
public:
    PolygonalMesh() = default;
    PolygonalMesh(std::vector<Point> vertices, std::vector<std::vector<int>> cells,
                  MeshCheckOptions options = {});

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_cells() const { return cells_.size(); }
    std::size_t num_edges() const { return edges_.size(); }

    const std::vector<Point>& vertices() const { return vertices_; }
    const Point& vertex(std::size_t i) const { return vertices_[i]; }
    const std::vector<std::vector<int>>& cells() const { return cells_; }
    const std::vector<int>& cell(std::size_t c) const { return cells_[c]; }
    const std::vector<MeshEdge>& edges() const { return edges_; }

    /// Edge indices of cell `c` in loop order (edge i joins local vertex i and i+1).
    const std::vector<int>& cell_edges(std::size_t c) const { return cell_edges_[c]; }
    /// Cells that have vertex `v` as a corner.
    const std::vector<int>& vertex_cells(std::size_t v) const { return vertex_cells_[v]; }

    bool is_boundary_vertex(std::size_t v) const { return boundary_vertex_[v] != 0; }
    /// Outward unit normals of the boundary edges touching vertex `v` (empty if interior).
    const std::vector<Point>& boundary_normals(std::size_t v) const { return boundary_normals_[v]; }

    /// Coordinates of the vertex loop of cell `c`.
    std::vector<Point> cell_points(std::size_t c) const;

    /// Mesh-regularity violations found at construction. Never fatal.
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Total signed area of all cells.
    double total_area() const;

private:
    void build_topology();
    void check_regularity(const MeshCheckOptions& options);

    std::vector<Point> vertices_;
    std::vector<std::vector<int>> cells_;
    std::vector<MeshEdge> edges_;
    std::vector<std::vector<int>> cell_edges_;
    std::vector<std::vector<int>> vertex_cells_;
    std::vector<char> boundary_vertex_;
    std::vector<std::vector<Point>> boundary_normals_;
    std::vector<std::string> warnings_;
};

ElementGeometry element_geometry(const PolygonalMesh& mesh, std::size_t cell);

/// Uniform n x n grid of squares on the unit square.
PolygonalMesh generate_quad_mesh(int n);

/// n x n grid on the unit square, each square split along one diagonal; the
/// diagonal direction alternates in a checkerboard pattern.
PolygonalMesh generate_tri_mesh(int n);

enum class MeshFormat { NativeJson, OffPoly };

PolygonalMesh load_mesh(std::istream& in, MeshFormat format);
/// Picks the format from the extension: `.json` native, anything else off-poly.
PolygonalMesh load_mesh_file(const std::string& path);

void write_mesh_json(std::ostream& out, const PolygonalMesh& mesh);
void write_mesh_off(std::ostream& out, const PolygonalMesh& mesh);

} // namespace c1vem

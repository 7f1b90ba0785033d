#include "c1vem/mesh.hpp"

#include "c1vem/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

namespace c1vem {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

int orientation_sign(const Point& a, const Point& b, const Point& c, double eps)
{
    const double v = cross(b - a, c - a);
    if (v > eps) return 1;
    if (v < -eps) return -1;
    return 0;
}

bool on_segment(const Point& a, const Point& b, const Point& p)
{
    return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d, double eps)
{
    const int o1 = orientation_sign(a, b, c, eps);
    const int o2 = orientation_sign(a, b, d, eps);
    const int o3 = orientation_sign(c, d, a, eps);
    const int o4 = orientation_sign(c, d, b, eps);
    if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

bool is_simple(std::span<const Point> loop, double eps)
{
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = loop[i];
        const Point& b = loop[(i + 1) % n];
        for (std::size_t j = i + 1; j < n; ++j) {
            // adjacent edges share exactly one endpoint
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            const Point& c = loop[j];
            const Point& d = loop[(j + 1) % n];
            if (segments_intersect(a, b, c, d, eps)) return false;
        }
    }
    return true;
}

} // namespace

double signed_area(std::span<const Point> loop)
{
    double twice = 0.0;
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) twice += cross(loop[i], loop[(i + 1) % n]);
    return 0.5 * twice;
}

ElementGeometry polygon_geometry(std::span<const Point> loop)
{
    ElementGeometry g;
    const std::size_t n = loop.size();
    // shift to the first vertex to limit cancellation in the centroid sums
    const Point origin = loop[0];
    double twice_area = 0.0;
    Point c = Point::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = loop[i] - origin;
        const Point b = loop[(i + 1) % n] - origin;
        const double w = cross(a, b);
        twice_area += w;
        c += w * (a + b);
    }
    g.area = 0.5 * twice_area;
    g.centroid = origin + c / (3.0 * twice_area);

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            g.diameter = std::max(g.diameter, (loop[i] - loop[j]).norm());

    g.edges.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        EdgeGeometry& e = g.edges[i];
        e.p0 = loop[i];
        e.p1 = loop[(i + 1) % n];
        const Point d = e.p1 - e.p0;
        e.length = d.norm();
        e.tangent = d / e.length;
        e.normal = Point(e.tangent.y(), -e.tangent.x());
    }
    return g;
}

PolygonalMesh::PolygonalMesh(std::vector<Point> vertices, std::vector<std::vector<int>> cells,
                             MeshCheckOptions options)
    : vertices_(std::move(vertices)), cells_(std::move(cells))
{
    const int nv = static_cast<int>(vertices_.size());
    double extent = 0.0;
    if (!vertices_.empty()) {
        Point lo = vertices_[0], hi = vertices_[0];
        for (const Point& p : vertices_) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        extent = (hi - lo).norm();
    }
    const double area_eps = 1e-14 * extent * extent;
    const double orient_eps = 1e-14 * extent * extent;

    for (std::size_t c = 0; c < cells_.size(); ++c) {
        auto& loop = cells_[c];
        if (loop.size() < 3)
            throw TopologyError("cell " + std::to_string(c) + " has fewer than 3 vertices");
        for (int v : loop)
            if (v < 0 || v >= nv)
                throw TopologyError("cell " + std::to_string(c) + " references vertex " +
                                    std::to_string(v) + " out of range");
        std::vector<int> sorted = loop;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw TopologyError("cell " + std::to_string(c) + " repeats a vertex");

        const auto pts = cell_points(c);
        const double a = signed_area(pts);
        if (std::abs(a) <= area_eps)
            throw GeometryError("cell " + std::to_string(c) + " is degenerate (zero area)");
        if (a < 0.0) std::reverse(loop.begin(), loop.end());
        if (!is_simple(cell_points(c), orient_eps))
            throw TopologyError("cell " + std::to_string(c) + " is self-intersecting");
    }

    build_topology();
    check_regularity(options);
}

std::vector<Point> PolygonalMesh::cell_points(std::size_t c) const
{
    std::vector<Point> pts;
    pts.reserve(cells_[c].size());
    for (int v : cells_[c]) pts.push_back(vertices_[v]);
    return pts;
}

double PolygonalMesh::total_area() const
{
    double a = 0.0;
    for (std::size_t c = 0; c < cells_.size(); ++c) a += signed_area(cell_points(c));
    return a;
}

void PolygonalMesh::build_topology()
{
    std::map<std::pair<int, int>, int> lookup;
    cell_edges_.assign(cells_.size(), {});
    vertex_cells_.assign(vertices_.size(), {});

    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const auto& loop = cells_[c];
        const std::size_t n = loop.size();
        cell_edges_[c].reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int a = loop[i];
            const int b = loop[(i + 1) % n];
            vertex_cells_[a].push_back(static_cast<int>(c));
            const auto key = std::minmax(a, b);
            auto it = lookup.find(key);
            if (it == lookup.end()) {
                MeshEdge e;
                e.v0 = a;
                e.v1 = b;
                e.cells[0] = static_cast<int>(c);
                lookup.emplace(key, static_cast<int>(edges_.size()));
                cell_edges_[c].push_back(static_cast<int>(edges_.size()));
                edges_.push_back(e);
            } else {
                MeshEdge& e = edges_[it->second];
                if (e.cells[1] >= 0)
                    throw TopologyError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                        ") is shared by more than two cells");
                if (e.v0 == a)
                    throw TopologyError("cells " + std::to_string(e.cells[0]) + " and " +
                                        std::to_string(c) + " overlap along edge (" +
                                        std::to_string(a) + "," + std::to_string(b) + ")");
                e.cells[1] = static_cast<int>(c);
                cell_edges_[c].push_back(it->second);
            }
        }
    }

    boundary_vertex_.assign(vertices_.size(), 0);
    boundary_normals_.assign(vertices_.size(), {});
    for (const MeshEdge& e : edges_) {
        if (!e.on_boundary()) continue;
        const Point d = (vertices_[e.v1] - vertices_[e.v0]).normalized();
        const Point n(d.y(), -d.x());
        for (int v : {e.v0, e.v1}) {
            boundary_vertex_[v] = 1;
            boundary_normals_[v].push_back(n);
        }
    }
}

void PolygonalMesh::check_regularity(const MeshCheckOptions& options)
{
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        const ElementGeometry g = element_geometry(*this, c);
        for (std::size_t i = 0; i < g.edges.size(); ++i) {
            if (g.edges[i].length < options.min_edge_ratio * g.diameter) {
                std::ostringstream msg;
                msg << "cell " << c << ": edge " << i << " length " << g.edges[i].length
                    << " is below " << options.min_edge_ratio << " x diameter " << g.diameter;
                warnings_.push_back(msg.str());
            }
        }
    }
}

ElementGeometry element_geometry(const PolygonalMesh& mesh, std::size_t cell)
{
    const auto pts = mesh.cell_points(cell);
    return polygon_geometry(pts);
}

PolygonalMesh generate_quad_mesh(int n)
{
    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    std::vector<std::vector<int>> cells;
    cells.reserve(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    return PolygonalMesh(std::move(vertices), std::move(cells));
}

PolygonalMesh generate_tri_mesh(int n)
{
    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    std::vector<std::vector<int>> cells;
    cells.reserve(2 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            if ((i + j) % 2 == 0) {
                cells.push_back({a, b, c});
                cells.push_back({a, c, d});
            } else {
                cells.push_back({a, b, d});
                cells.push_back({b, c, d});
            }
        }
    }
    return PolygonalMesh(std::move(vertices), std::move(cells));
}

namespace {

PolygonalMesh load_json(std::istream& in)
{
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("mesh json: ") + e.what());
    }
    std::vector<Point> vertices;
    std::vector<std::vector<int>> cells;
    try {
        if (!doc.is_object() || !doc.contains("version") || doc.at("version").get<int>() != 1)
            throw ParseError("mesh json: missing or unsupported \"version\"");
        for (const auto& v : doc.at("vertices")) {
            if (!v.is_array() || v.size() != 2) throw ParseError("mesh json: vertex is not [x,y]");
            vertices.emplace_back(v[0].get<double>(), v[1].get<double>());
        }
        for (const auto& c : doc.at("cells")) cells.push_back(c.get<std::vector<int>>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("mesh json: ") + e.what());
    }
    return PolygonalMesh(std::move(vertices), std::move(cells));
}

PolygonalMesh load_off(std::istream& in)
{
    std::string header;
    if (!(in >> header) || header != "NPOLY") throw ParseError("off-poly: expected NPOLY header");
    long nv = 0;
    if (!(in >> nv) || nv < 0) throw ParseError("off-poly: bad vertex count");
    std::vector<Point> vertices(static_cast<std::size_t>(nv));
    for (auto& p : vertices)
        if (!(in >> p.x() >> p.y())) throw ParseError("off-poly: truncated vertex list");
    long nc = 0;
    if (!(in >> nc) || nc < 0) throw ParseError("off-poly: bad cell count");
    std::vector<std::vector<int>> cells(static_cast<std::size_t>(nc));
    for (auto& c : cells) {
        int k = 0;
        if (!(in >> k) || k < 0) throw ParseError("off-poly: bad cell size");
        c.resize(static_cast<std::size_t>(k));
        for (int& v : c)
            if (!(in >> v)) throw ParseError("off-poly: truncated cell list");
    }
    return PolygonalMesh(std::move(vertices), std::move(cells));
}

} // namespace

PolygonalMesh load_mesh(std::istream& in, MeshFormat format)
{
    return format == MeshFormat::NativeJson ? load_json(in) : load_off(in);
}

PolygonalMesh load_mesh_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open mesh file " + path);
    const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
    return load_mesh(in, json ? MeshFormat::NativeJson : MeshFormat::OffPoly);
}

void write_mesh_json(std::ostream& out, const PolygonalMesh& mesh)
{
    nlohmann::json doc;
    doc["version"] = 1;
    auto& verts = doc["vertices"] = nlohmann::json::array();
    for (const Point& p : mesh.vertices()) verts.push_back({p.x(), p.y()});
    doc["cells"] = mesh.cells();
    out << doc.dump() << '\n';
}

void write_mesh_off(std::ostream& out, const PolygonalMesh& mesh)
{
    const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
    out << "NPOLY\n" << mesh.num_vertices() << '\n';
    for (const Point& p : mesh.vertices()) out << p.x() << ' ' << p.y() << '\n';
    out << mesh.num_cells() << '\n';
    for (const auto& c : mesh.cells()) {
        out << c.size();
        for (int v : c) out << ' ' << v;
        out << '\n';
    }
    out.precision(old_precision);
}

} // namespace c1vem

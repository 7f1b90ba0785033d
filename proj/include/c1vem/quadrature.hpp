#pragma once

#include "c1vem/mesh.hpp"

#include <span>
#include <vector>

namespace c1vem {

struct QuadraturePoint {
    Point x;
    double w = 0.0;
};

/// Gauss-Legendre rule on [0,1]: nodes ascending, weights summing to 1.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Cached per point count; exact for polynomials of degree 2n-1.
const GaussRule& gauss_legendre(int npts);

/// Gauss-Legendre rule mapped to the segment p0-p1; weights sum to |p1-p0|.
std::vector<QuadraturePoint> edge_quadrature(const Point& p0, const Point& p1, int npts);

/// Rule on the (possibly negatively oriented) triangle a,b,c, exact for
/// polynomials up to `degree`. Weights carry the signed area.
void append_triangle_quadrature(const Point& a, const Point& b, const Point& c, int degree,
                                std::vector<QuadraturePoint>& out);

/// Signed fan triangulation of the polygon about `apex`. Exact for any simple
/// polygon and any apex, since the signed sub-triangle areas cancel outside it.
std::vector<QuadraturePoint> polygon_quadrature(std::span<const Point> loop, const Point& apex,
                                                int degree);

} // namespace c1vem

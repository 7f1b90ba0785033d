#pragma once

#include "c1vem/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <vector>

namespace c1vem {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Exponents of the degree-2 scaled monomials, graded by total degree:
/// 1, xi, eta, xi^2, xi*eta, eta^2.
inline constexpr std::array<std::array<int, 2>, 6> kP2Exponents = {
    {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}}};

/// m_a(x) = ((x - x_E)/h_E)^a1 ((y - y_E)/h_E)^a2 for the six P2 exponents.
struct ScaledMonomialBasis {
    Point center = Point::Zero();
    double h = 1.0;

    static constexpr int size = 6;

    ScaledMonomialBasis() = default;
    ScaledMonomialBasis(const Point& c, double diameter) : center(c), h(diameter) {}
    explicit ScaledMonomialBasis(const ElementGeometry& g) : center(g.centroid), h(g.diameter) {}

    Point scaled(const Point& x) const { return (x - center) / h; }

    Vec6 values(const Point& x) const;
    /// Row a holds the gradient of m_a.
    Eigen::Matrix<double, 6, 2> gradients(const Point& x) const;
    /// Hessian of m_a (constant because the basis is quadratic).
    Eigen::Matrix2d hessian(int a) const;
    /// Laplacian of m_a (constant).
    double laplacian(int a) const;

    /// Evaluate the polynomial with coefficients `c` in this basis.
    double eval(const Vec6& c, const Point& x) const { return c.dot(values(x)); }
    Point eval_gradient(const Vec6& c, const Point& x) const { return gradients(x).transpose() * c; }
    Eigen::Matrix2d eval_hessian(const Vec6& c) const;
};

/// Integrals over an element of ((x - x_E)/h_E)^a ((y - y_E)/h_E)^b for a+b <= max_degree.
class MomentTable {
public:
    MomentTable() = default;
    explicit MomentTable(int max_degree);

    int max_degree() const { return max_degree_; }
    double operator()(int a, int b) const { return data_[index(a, b)]; }
    double& operator()(int a, int b) { return data_[index(a, b)]; }

private:
    static int index(int a, int b)
    {
        const int d = a + b;
        return d * (d + 1) / 2 + b;
    }
    int max_degree_ = -1;
    std::vector<double> data_;
};

/// Exact moments via the divergence theorem: the x-antiderivative of the
/// integrand is integrated against n_x along each edge with Gauss quadrature.
MomentTable monomial_moments(const ElementGeometry& geometry, int max_degree);

/// H_ab = int_E m_a m_b; needs moments up to degree 4. Throws GeometryError
/// when H is not positive definite.
Mat6 p2_mass_matrix(const MomentTable& moments);

/// (grad m_a . grad m_b) integrated over E; needs moments up to degree 2.
Mat6 p2_gradient_gram(const MomentTable& moments, double h);

/// (hess m_a : hess m_b) integrated over E.
Mat6 p2_hessian_gram(double area, double h);

} // namespace c1vem

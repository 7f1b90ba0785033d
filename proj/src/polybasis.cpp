#include "c1vem/polybasis.hpp"

#include "c1vem/errors.hpp"
#include "c1vem/quadrature.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace c1vem {

Vec6 ScaledMonomialBasis::values(const Point& x) const
{
    const Point s = scaled(x);
    Vec6 v;
    v << 1.0, s.x(), s.y(), s.x() * s.x(), s.x() * s.y(), s.y() * s.y();
    return v;
}

Eigen::Matrix<double, 6, 2> ScaledMonomialBasis::gradients(const Point& x) const
{
    const Point s = scaled(x);
    const double ih = 1.0 / h;
    Eigen::Matrix<double, 6, 2> g;
    g << 0.0, 0.0,
         ih, 0.0,
         0.0, ih,
         2.0 * s.x() * ih, 0.0,
         s.y() * ih, s.x() * ih,
         0.0, 2.0 * s.y() * ih;
    return g;
}

Eigen::Matrix2d ScaledMonomialBasis::hessian(int a) const
{
    const double ih2 = 1.0 / (h * h);
    Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
    switch (a) {
    case 3: H(0, 0) = 2.0 * ih2; break;
    case 4: H(0, 1) = H(1, 0) = ih2; break;
    case 5: H(1, 1) = 2.0 * ih2; break;
    default: break;
    }
    return H;
}

double ScaledMonomialBasis::laplacian(int a) const
{
    return (a == 3 || a == 5) ? 2.0 / (h * h) : 0.0;
}

Eigen::Matrix2d ScaledMonomialBasis::eval_hessian(const Vec6& c) const
{
    Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
    for (int a = 3; a < 6; ++a) H += c[a] * hessian(a);
    return H;
}

MomentTable::MomentTable(int max_degree)
    : max_degree_(max_degree), data_((max_degree + 1) * (max_degree + 2) / 2, 0.0)
{
}

MomentTable monomial_moments(const ElementGeometry& geometry, int max_degree)
{
    MomentTable table(max_degree);
    const int npts = (max_degree + 3) / 2;  // integrand degree max_degree + 1
    const double h = geometry.diameter;
    const Point& c = geometry.centroid;
    std::vector<double> xpow(max_degree + 2), ypow(max_degree + 1);
    for (const EdgeGeometry& e : geometry.edges) {
        const double nx = e.normal.x();
        if (nx == 0.0) continue;
        for (const QuadraturePoint& q : edge_quadrature(e.p0, e.p1, npts)) {
            const Point s = (q.x - c) / h;
            xpow[0] = ypow[0] = 1.0;
            for (int k = 1; k <= max_degree + 1; ++k) xpow[k] = xpow[k - 1] * s.x();
            for (int k = 1; k <= max_degree; ++k) ypow[k] = ypow[k - 1] * s.y();
            const double wn = q.w * nx * h;
            for (int d = 0; d <= max_degree; ++d)
                for (int b = 0; b <= d; ++b) {
                    const int a = d - b;
                    table(a, b) += wn * xpow[a + 1] * ypow[b] / (a + 1);
                }
        }
    }
    return table;
}

Mat6 p2_mass_matrix(const MomentTable& moments)
{
    Mat6 H;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            H(i, j) = moments(kP2Exponents[i][0] + kP2Exponents[j][0],
                              kP2Exponents[i][1] + kP2Exponents[j][1]);
    Eigen::LLT<Mat6> llt(H);
    if (llt.info() != Eigen::Success)
        throw GeometryError("P2 mass matrix is not positive definite (degenerate element)");
    return H;
}

Mat6 p2_gradient_gram(const MomentTable& moments, double h)
{
    Mat6 G = Mat6::Zero();
    const double ih2 = 1.0 / (h * h);
    for (int i = 1; i < 6; ++i) {
        const auto [ai, bi] = kP2Exponents[i];
        for (int j = 1; j < 6; ++j) {
            const auto [aj, bj] = kP2Exponents[j];
            double v = 0.0;
            if (ai > 0 && aj > 0) v += ai * aj * moments(ai + aj - 2, bi + bj);
            if (bi > 0 && bj > 0) v += bi * bj * moments(ai + aj, bi + bj - 2);
            G(i, j) = v * ih2;
        }
    }
    return G;
}

Mat6 p2_hessian_gram(double area, double h)
{
    ScaledMonomialBasis basis(Point::Zero(), h);
    Mat6 G = Mat6::Zero();
    for (int i = 3; i < 6; ++i)
        for (int j = 3; j < 6; ++j)
            G(i, j) = area * (basis.hessian(i).array() * basis.hessian(j).array()).sum();
    return G;
}

} // namespace c1vem

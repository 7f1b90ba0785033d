#include "c1vem/localspace.hpp"

#include "c1vem/errors.hpp"
#include "c1vem/quadrature.hpp"

#include <Eigen/LU>

#include <cmath>

namespace c1vem {

namespace {

// Three Gauss points integrate every boundary integrand here exactly (degree <= 5).
constexpr int kEdgePoints = 3;

Mat6X solve_projector(const Mat6& G, const Mat6X& B)
{
    Eigen::FullPivLU<Mat6> lu(G);
    if (!lu.isInvertible()) throw GeometryError("singular projector system (degenerate element)");
    Eigen::PartialPivLU<Mat6> plu(G);
    return plu.solve(B);
}

MatX symmetrized(const MatX& A) { return 0.5 * (A + A.transpose()); }

} // namespace

EdgeTraceWeights edge_trace_weights(const EdgeGeometry& edge, double s)
{
    const double L = edge.length;
    const Point& t = edge.tangent;
    const Point& n = edge.normal;
    const double s2 = s * s, s3 = s2 * s;

    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1;
    const double d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;

    EdgeTraceWeights w;
    w.value << h00, h10 * L * t.x(), h10 * L * t.y(), h01, h11 * L * t.x(), h11 * L * t.y();

    Eigen::Matrix<double, 1, 6> tangential;
    tangential << d00 / L, d10 * t.x(), d10 * t.y(), d01 / L, d11 * t.x(), d11 * t.y();
    Eigen::Matrix<double, 1, 6> normal;
    normal << 0.0, (1 - s) * n.x(), (1 - s) * n.y(), 0.0, s * n.x(), s * n.y();

    w.gradient.row(0) = t.x() * tangential + n.x() * normal;
    w.gradient.row(1) = t.y() * tangential + n.y() * normal;
    return w;
}

TraceValue edge_trace(const Eigen::Matrix<double, 6, 1>& raw_endpoint_data, const EdgeGeometry& edge,
                      double s)
{
    const EdgeTraceWeights w = edge_trace_weights(edge, s);
    TraceValue out;
    out.value = w.value * raw_endpoint_data;
    out.gradient = w.gradient * raw_endpoint_data;
    return out;
}

MatX dof_matrix(const ElementGeometry& geometry, const LocalDofLayout& layout,
                const ScaledMonomialBasis& basis)
{
    const int n = layout.num_vertices();
    MatX D(3 * n, 6);
    for (int v = 0; v < n; ++v) {
        const Point& x = geometry.edges[v].p0;
        const double hv = layout.vertex_scale[v];
        D.row(3 * v) = basis.values(x).transpose();
        const auto g = basis.gradients(x);
        D.row(3 * v + 1) = hv * g.col(0).transpose();
        D.row(3 * v + 2) = hv * g.col(1).transpose();
    }
    return D;
}

namespace {

// Scatter trace weights on raw endpoint data into row `row` of B, at the DOF
// positions of local vertices v0 and v1.
void scatter_edge_weights(const Eigen::Matrix<double, 1, 6>& w, int v0, int v1,
                          const LocalDofLayout& layout, double factor, Mat6X& B, int row)
{
    const double ih0 = 1.0 / layout.vertex_scale[v0];
    const double ih1 = 1.0 / layout.vertex_scale[v1];
    B(row, 3 * v0) += factor * w[0];
    B(row, 3 * v0 + 1) += factor * ih0 * w[1];
    B(row, 3 * v0 + 2) += factor * ih0 * w[2];
    B(row, 3 * v1) += factor * w[3];
    B(row, 3 * v1 + 1) += factor * ih1 * w[4];
    B(row, 3 * v1 + 2) += factor * ih1 * w[5];
}

} // namespace

Mat6X pi_delta_matrix(const MatX& D, const ElementGeometry& geometry, const LocalDofLayout& layout,
                      const ScaledMonomialBasis& basis)
{
    const int n = layout.num_vertices();
    const int N = 3 * n;
    Mat6X B = Mat6X::Zero(6, N);

    // kernel fixing: vertex-value products against 1, m_(1,0), m_(0,1)
    for (int v = 0; v < n; ++v)
        for (int b = 0; b < 3; ++b) B(b, 3 * v) = D(3 * v, b);

    // hessian energy against quadratics: boundary terms (hess q n) . grad v
    const GaussRule& rule = gauss_legendre(kEdgePoints);
    for (int e = 0; e < n; ++e) {
        const EdgeGeometry& edge = geometry.edges[e];
        const int v0 = e, v1 = (e + 1) % n;
        for (int q = 0; q < kEdgePoints; ++q) {
            const EdgeTraceWeights w = edge_trace_weights(edge, rule.nodes[q]);
            const double wq = rule.weights[q] * edge.length;
            for (int b = 3; b < 6; ++b) {
                const Point hn = basis.hessian(b) * edge.normal;
                const Eigen::Matrix<double, 1, 6> row = hn.transpose() * w.gradient;
                scatter_edge_weights(row, v0, v1, layout, wq, B, b);
            }
        }
    }

    const Mat6 G = B * D;
    return solve_projector(G, B);
}

Mat6X pi0_matrix(const Mat6X& pi_delta) { return pi_delta; }

Mat6X pi_nabla_matrix(const MatX& D, const Mat6X& pi0, const ElementGeometry& geometry,
                      const LocalDofLayout& layout, const ScaledMonomialBasis& basis,
                      const MomentTable& moments)
{
    const int n = layout.num_vertices();
    const int N = 3 * n;
    Mat6X B = Mat6X::Zero(6, N);

    // int_E v = int_E Pi0 v
    Eigen::Matrix<double, 1, 6> integrals;
    for (int a = 0; a < 6; ++a) integrals[a] = moments(kP2Exponents[a][0], kP2Exponents[a][1]);
    const Eigen::Matrix<double, 1, Eigen::Dynamic> mean_row = integrals * pi0;
    B.row(0) = mean_row;
    for (int b = 1; b < 6; ++b) B.row(b) = -basis.laplacian(b) * mean_row;

    const GaussRule& rule = gauss_legendre(kEdgePoints);
    for (int e = 0; e < n; ++e) {
        const EdgeGeometry& edge = geometry.edges[e];
        const int v0 = e, v1 = (e + 1) % n;
        for (int q = 0; q < kEdgePoints; ++q) {
            const double s = rule.nodes[q];
            const Point x = edge.p0 + s * (edge.p1 - edge.p0);
            const EdgeTraceWeights w = edge_trace_weights(edge, s);
            const double wq = rule.weights[q] * edge.length;
            const auto grads = basis.gradients(x);
            for (int b = 1; b < 6; ++b) {
                const double dn = grads.row(b).dot(edge.normal);
                scatter_edge_weights(w.value, v0, v1, layout, wq * dn, B, b);
            }
        }
    }

    const Mat6 G = B * D;
    return solve_projector(G, B);
}

LocalForms local_forms(const Mat6X& pi_delta, const Mat6X& pi0, const Mat6X& pi_nabla, const MatX& D,
                       const ElementGeometry& geometry, const MomentTable& moments)
{
    const double h = geometry.diameter;
    const int N = static_cast<int>(D.rows());
    const MatX I = MatX::Identity(N, N);

    const Mat6 G_hess = p2_hessian_gram(geometry.area, h);
    const Mat6 G_grad = p2_gradient_gram(moments, h);
    const Mat6 H = p2_mass_matrix(moments);

    const MatX R_delta = I - D * pi_delta;
    const MatX R_nabla = I - D * pi_nabla;
    const MatX R_zero = I - D * pi0;

    LocalForms f;
    f.hessian = symmetrized(pi_delta.transpose() * G_hess * pi_delta +
                            (1.0 / (h * h)) * R_delta.transpose() * R_delta);
    f.gradient = symmetrized(pi_nabla.transpose() * G_grad * pi_nabla + R_nabla.transpose() * R_nabla);
    f.mass = symmetrized(pi0.transpose() * H * pi0 + (h * h) * R_zero.transpose() * R_zero);
    return f;
}

ElementOperators build_element_operators(const ElementGeometry& geometry, LocalDofLayout layout)
{
    if (!(geometry.area > 0.0)) throw GeometryError("element has non-positive area");
    ElementOperators op;
    op.geometry = geometry;
    op.basis = ScaledMonomialBasis(geometry);
    op.moments = monomial_moments(geometry, 4);
    op.layout = std::move(layout);
    op.mass_p2 = p2_mass_matrix(op.moments);
    op.D = dof_matrix(op.geometry, op.layout, op.basis);
    op.pi_delta = pi_delta_matrix(op.D, op.geometry, op.layout, op.basis);
    op.pi0 = pi0_matrix(op.pi_delta);
    op.pi_nabla = pi_nabla_matrix(op.D, op.pi0, op.geometry, op.layout, op.basis, op.moments);
    op.forms = local_forms(op.pi_delta, op.pi0, op.pi_nabla, op.D, op.geometry, op.moments);
    return op;
}

NonlinearLocal nonlinear_local(const MatX& mass, const MatX& gradient, double area, const VecX& z)
{
    NonlinearLocal out;
    const VecX Mz = mass * z;
    const VecX Kz = gradient * z;
    out.c_hat = 3.0 / area * z.dot(Mz) - 1.0;
    out.residual = out.c_hat * Kz;
    out.jacobian = out.c_hat * gradient + (6.0 / area) * Kz * Mz.transpose();
    return out;
}

} // namespace c1vem

#pragma once

#include "c1vem/mesh.hpp"
#include "c1vem/polybasis.hpp"

#include <Eigen/Core>

#include <vector>

namespace c1vem {

/// Local ordering: for each vertex in loop order the triple
/// (v, h_v * dv/dx, h_v * dv/dy).
struct LocalDofLayout {
    std::vector<double> vertex_scale;  ///< h_v per local vertex

    int num_vertices() const { return static_cast<int>(vertex_scale.size()); }
    int size() const { return 3 * num_vertices(); }
};

/// Linear weights of the boundary trace at one edge point with respect to the
/// raw endpoint data (v0, dv0/dx, dv0/dy, v1, dv1/dx, dv1/dy).
struct EdgeTraceWeights {
    Eigen::Matrix<double, 1, 6> value;
    Eigen::Matrix<double, 2, 6> gradient;
};

/// Value along the edge is the cubic Hermite interpolant of the endpoint values
/// and tangential derivatives; the normal derivative is linear between the
/// endpoint normal derivatives. `s` in [0,1] runs from p0 to p1.
EdgeTraceWeights edge_trace_weights(const EdgeGeometry& edge, double s);

struct TraceValue {
    double value = 0.0;
    Point gradient = Point::Zero();
};

TraceValue edge_trace(const Eigen::Matrix<double, 6, 1>& raw_endpoint_data, const EdgeGeometry& edge,
                      double s);

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;
using Mat6X = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// D(i, a) = DOF_i(m_a); N_E x 6.
MatX dof_matrix(const ElementGeometry& geometry, const LocalDofLayout& layout,
                const ScaledMonomialBasis& basis);

/// Hessian-energy projector with vertex-value kernel fixing.
Mat6X pi_delta_matrix(const MatX& D, const ElementGeometry& geometry, const LocalDofLayout& layout,
                      const ScaledMonomialBasis& basis);

/// L2 projector; on the enhanced space it coincides with the Hessian projector.
Mat6X pi0_matrix(const Mat6X& pi_delta);

/// Gradient projector with mean-value kernel fixing.
Mat6X pi_nabla_matrix(const MatX& D, const Mat6X& pi0, const ElementGeometry& geometry,
                      const LocalDofLayout& layout, const ScaledMonomialBasis& basis,
                      const MomentTable& moments);

struct LocalForms {
    MatX hessian;   ///< discrete Hessian energy
    MatX gradient;  ///< discrete Dirichlet form
    MatX mass;      ///< discrete L2 product
};

/// Consistency part plus the Euclidean DOF stabilization, scaled h^-2, 1, h^2.
LocalForms local_forms(const Mat6X& pi_delta, const Mat6X& pi0, const Mat6X& pi_nabla, const MatX& D,
                       const ElementGeometry& geometry, const MomentTable& moments);

/// All per-element matrices of the local virtual element space.
struct ElementOperators {
    ElementGeometry geometry;
    ScaledMonomialBasis basis;
    MomentTable moments;  ///< up to degree 4
    LocalDofLayout layout;
    MatX D;
    Mat6X pi_delta;
    Mat6X pi0;
    Mat6X pi_nabla;
    Mat6 mass_p2;  ///< int_E m_a m_b
    LocalForms forms;

    int size() const { return layout.size(); }
};

ElementOperators build_element_operators(const ElementGeometry& geometry, LocalDofLayout layout);

/// Local contribution of the nonlinear gradient term at state z.
struct NonlinearLocal {
    double c_hat = 0.0;  ///< 3 |E|^-1 z'Mz - 1
    VecX residual;       ///< c_hat K z
    MatX jacobian;       ///< c_hat K + 6 |E|^-1 (K z)(M z)'
};

NonlinearLocal nonlinear_local(const MatX& mass, const MatX& gradient, double area, const VecX& z);

/// Local DOF vector of a polynomial given by its basis coefficients.
inline VecX dofs_of(const MatX& D, const Vec6& coeffs) { return D * coeffs; }

} // namespace c1vem

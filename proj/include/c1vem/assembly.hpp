#pragma once

#include "c1vem/localspace.hpp"
#include "c1vem/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <vector>

namespace c1vem {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class DofComponent : int { Value = 0, ScaledDx = 1, ScaledDy = 2 };

/// Three DOFs per vertex, numbered vertex-major: 3 v + component.
class DofMap {
public:
    DofMap() = default;
    explicit DofMap(const PolygonalMesh& mesh);

    int size() const { return static_cast<int>(3 * scale_.size()); }
    int num_vertices() const { return static_cast<int>(scale_.size()); }
    static int index(int vertex, DofComponent c) { return 3 * vertex + static_cast<int>(c); }

    /// h_v: largest diameter among the cells sharing vertex v.
    double vertex_scale(int v) const { return scale_[v]; }
    const std::vector<int>& element_dofs(std::size_t cell) const { return element_dofs_[cell]; }
    LocalDofLayout layout(const PolygonalMesh& mesh, std::size_t cell) const;

private:
    std::vector<double> scale_;
    std::vector<std::vector<int>> element_dofs_;
};

DofMap build_dof_map(const PolygonalMesh& mesh);

/// Essential boundary condition dv/dn = 0 realized in rotated gradient frames.
///
/// Each vertex carries an orthonormal frame for its gradient DOFs; unknowns in
/// "frame coordinates" are value, then the scaled gradient components along
/// the frame columns. At a boundary vertex with a single normal direction the
/// frame is (tangent, normal) and the normal component is fixed; at a corner
/// the frame is the identity and both gradient components are fixed.
class ConstraintSet {
public:
    ConstraintSet() = default;
    ConstraintSet(std::vector<Eigen::Matrix2d> frames, std::vector<char> fixed);

    /// No constraints, identity frames.
    static ConstraintSet none(const DofMap& dofs);

    int size() const { return static_cast<int>(fixed_.size()); }
    bool is_fixed(int dof) const { return fixed_[dof] != 0; }
    int num_fixed() const;
    const Eigen::Matrix2d& frame(int vertex) const { return frames_[vertex]; }
    bool is_rotated(int vertex) const { return rotated_[vertex] != 0; }

    Eigen::VectorXd to_frame(const Eigen::VectorXd& cartesian) const;
    Eigen::VectorXd to_cartesian(const Eigen::VectorXd& frame) const;
    /// Zero the fixed components of a frame-coordinate vector.
    void zero_fixed(Eigen::VectorXd& frame) const;

    /// Block-diagonal local map frame -> cartesian for a cell's vertex loop.
    MatX element_rotation(const std::vector<int>& loop) const;
    bool touches_rotated(const std::vector<int>& loop) const;

private:
    std::vector<Eigen::Matrix2d> frames_;
    std::vector<char> rotated_;
    std::vector<char> fixed_;
};

ConstraintSet build_constraints(const PolygonalMesh& mesh, const DofMap& dofs,
                                double corner_angle_tol = 1e-8);

struct AssemblyOptions {
    int threads = 1;
    /// Sum duplicate contributions in a canonical order, making the result
    /// independent of the element ordering bit for bit.
    bool ordered_reduction = false;
};

std::vector<ElementOperators> build_mesh_operators(const PolygonalMesh& mesh, const DofMap& dofs,
                                                   int threads = 1);

/// Constant global matrices in frame coordinates, fixed rows/columns replaced
/// by the identity.
struct GlobalSystem {
    SparseMatrix mass;
    SparseMatrix hessian;
};

GlobalSystem assemble_constant(const PolygonalMesh& mesh, const std::vector<ElementOperators>& ops,
                               const DofMap& dofs, const ConstraintSet& constraints,
                               const AssemblyOptions& options = {});

using SpaceTimeField = std::function<double(const Point&, double)>;

/// Load vector (f, Pi0 v) in cartesian DOF coordinates. Per element the moments
/// int_E f m_a come from a degree-8 fan-triangle rule; quadrature data is cached.
class LoadAssembler {
public:
    LoadAssembler(const PolygonalMesh& mesh, const std::vector<ElementOperators>& ops, const DofMap& dofs);

    Eigen::VectorXd assemble(const SpaceTimeField& f, double t) const;

private:
    struct ElementRule {
        std::vector<Point> points;
        MatX weighted_basis;  ///< N_E x n_q: w_q P0' m(x_q)
    };
    const DofMap* dofs_;
    std::vector<ElementRule> rules_;
};

Eigen::VectorXd assemble_load(const SpaceTimeField& f, double t, const PolygonalMesh& mesh,
                              const std::vector<ElementOperators>& ops, const DofMap& dofs);

/// Residual and Jacobian of one backward Euler step, in frame coordinates:
///   F(W) = k^-1 M (W - W_prev) + gamma^2 A W + sum_E c_hat(z_E) K_E z_E - L
/// with fixed rows replaced by F_i = W_i.
class ResidualAssembler {
public:
    ResidualAssembler(const PolygonalMesh& mesh, const std::vector<ElementOperators>& ops,
                      const DofMap& dofs, const ConstraintSet& constraints, double gamma,
                      const AssemblyOptions& options = {});

    int size() const { return n_; }
    double gamma() const { return gamma_; }
    const GlobalSystem& system() const { return system_; }
    const ConstraintSet& constraints() const { return *constraints_; }
    double time_step() const { return k_; }
    /// k^-1 M W_prev + L with fixed rows zeroed.
    const Eigen::VectorXd& step_rhs() const { return rhs_; }

    /// Fix the time step and the previous state (frame coordinates) plus the
    /// load (frame coordinates, may be empty for zero).
    void set_step(double k, const Eigen::VectorXd& w_prev, const Eigen::VectorXd& load);

    void residual(const Eigen::VectorXd& w, Eigen::VectorXd& f) const;
    /// Jacobian values are written into `j`, whose pattern is fixed across calls.
    void jacobian(const Eigen::VectorXd& w, SparseMatrix& j) const;

    /// Sum over elements of the nonlinear contribution alone (frame coordinates).
    void nonlinear_residual(const Eigen::VectorXd& w, Eigen::VectorXd& f) const;

    /// Frame-coordinate local matrices of element e.
    const LocalForms& frame_forms(std::size_t e) const { return frame_forms_[e]; }
    double element_area(std::size_t e) const { return areas_[e]; }

private:
    VecX gather(const Eigen::VectorXd& w, std::size_t e) const;

    int n_ = 0;
    double gamma_ = 0.0;
    double k_ = 0.0;
    AssemblyOptions options_;
    const ConstraintSet* constraints_;
    std::vector<std::vector<int>> element_dofs_;
    std::vector<LocalForms> frame_forms_;
    std::vector<double> areas_;
    GlobalSystem system_;
    SparseMatrix pattern_;               ///< element-block pattern with unit diagonal on fixed DOFs
    std::vector<std::vector<int>> slot_;  ///< per element: N_E^2 value positions, -1 if fixed
    std::vector<double> base_values_;    ///< k^-1 M + gamma^2 A in pattern order
    Eigen::VectorXd rhs_;                ///< k^-1 M W_prev + L
};

} // namespace c1vem

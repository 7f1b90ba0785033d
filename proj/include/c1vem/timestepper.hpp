#pragma once

#include "c1vem/assembly.hpp"
#include "c1vem/solvers.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <vector>

namespace c1vem {

/// Everything derived from the mesh once: numbering, element operators and
/// boundary constraints. Shared read-only between the stepper and post-processing.
struct Discretization {
    PolygonalMesh mesh;
    DofMap dofs;
    std::vector<ElementOperators> ops;
    ConstraintSet constraints;
};

std::shared_ptr<const Discretization> discretize(PolygonalMesh mesh, int threads = 1,
                                                 double corner_angle_tol = 1e-8);

/// Double-well potential (1 - x^2)^2 / 4.
inline double psi(double x)
{
    const double s = 1.0 - x * x;
    return 0.25 * s * s;
}

/// One time level. `w` is in frame coordinates (see ConstraintSet).
struct State {
    Eigen::VectorXd w;
    double t = 0.0;
    int step = 0;
    double mass = 0.0;
    double energy = std::numeric_limits<double>::quiet_NaN();  ///< NaN when not evaluated
    NewtonReport newton;
};

/// Mass and energy functionals with cached per-element quadrature.
class Diagnostics {
public:
    explicit Diagnostics(std::shared_ptr<const Discretization> disc);

    /// sum_E int_E Pi0 u_h.
    double mass(const Eigen::VectorXd& w) const;
    /// sum_E int_E psi(Pi0 u_h) + gamma^2/2 a_h^Delta(u_h, u_h); `hessian` is the
    /// global frame-coordinate matrix.
    double energy(const Eigen::VectorXd& w, double gamma, const SparseMatrix& hessian) const;

private:
    std::shared_ptr<const Discretization> disc_;
    std::vector<Eigen::RowVectorXd> mean_rows_;  ///< int_E Pi0 v as a row over local DOFs
    std::vector<MatX> point_values_;             ///< n_q x N_E: Pi0 v at quadrature points
    std::vector<Eigen::VectorXd> weights_;
};

struct StepperOptions {
    double gamma = 0.01;
    double k = 5e-5;
    NewtonOptions newton;
    LinearSolverKind linear = LinearSolverKind::Direct;
    int threads = 1;
    bool deterministic = true;
    /// Evaluate the energy every this many steps (0: never).
    int energy_every = 1;
    /// On Newton failure retry the step as two half steps, at most this deep.
    int adaptive_depth = 0;
};

/// Backward Euler with Newton for the Cahn-Hilliard system.
class CahnHilliardStepper {
public:
    using Observer = std::function<void(const State&)>;

    CahnHilliardStepper(std::shared_ptr<const Discretization> disc, StepperOptions options,
                        SpaceTimeField forcing = {});
    ~CahnHilliardStepper();

    /// Cartesian DOFs -> constrained frame-coordinate state with diagnostics.
    State initial_state(const Eigen::VectorXd& u_cartesian, double t0 = 0.0) const;

    /// Solve one step from `prev` (initial Newton guess = prev). Throws SolverError.
    State step(const State& prev);

    /// March `steps` steps. The observer sees the initial state and every new
    /// state; with keep_all false only the initial and final states are returned.
    std::vector<State> run(const State& initial, int steps, const Observer& observer = {}, bool keep_all = true);

    const Discretization& discretization() const { return *disc_; }
    const ResidualAssembler& assembler() const { return *assembler_; }
    const Diagnostics& diagnostics() const { return diagnostics_; }
    const StepperOptions& options() const { return options_; }
    Eigen::VectorXd cartesian(const State& s) const { return disc_->constraints.to_cartesian(s.w); }
    double energy(const Eigen::VectorXd& w) const;
    /// Energy increases above 1e-8 E_h(U_0) observed so far.
    int energy_warnings() const { return energy_warnings_; }

private:
    Eigen::VectorXd solve_step(const Eigen::VectorXd& w_prev, double t_new, double k, NewtonReport& report,
                               int depth);

    std::shared_ptr<const Discretization> disc_;
    StepperOptions options_;
    SpaceTimeField forcing_;
    std::unique_ptr<ResidualAssembler> assembler_;
    std::unique_ptr<LoadAssembler> load_;
    std::unique_ptr<NewtonSolver> newton_;
    Diagnostics diagnostics_;
    double reference_energy_ = std::numeric_limits<double>::quiet_NaN();
    double last_energy_ = std::numeric_limits<double>::quiet_NaN();
    int energy_warnings_ = 0;
};

} // namespace c1vem

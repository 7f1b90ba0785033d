#pragma once

#include "c1vem/errors.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <memory>
#include <string>
#include <vector>

namespace c1vem {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class LinearSolverKind { Direct, BiCGStab };

LinearSolverKind parse_linear_solver(const std::string& name);
std::string to_string(LinearSolverKind kind);

/// Factor-once, solve-many interface for unsymmetric sparse systems. The
/// sparsity pattern is analyzed on the first factorization and reused while
/// it does not change.
class LinearSolver {
public:
    virtual ~LinearSolver() = default;
    /// Throws SolverError if the matrix is numerically singular.
    virtual void factor(const SparseMatrix& A) = 0;
    /// Throws SolverError on breakdown.
    virtual Eigen::VectorXd solve(const Eigen::VectorXd& b) = 0;
    virtual std::string name() const = 0;
};

struct IterativeOptions {
    double tol = 1e-10;
    int max_iter = 2000;
    double drop_tol = 1e-6;
    int fill_factor = 20;
};

std::unique_ptr<LinearSolver> make_linear_solver(LinearSolverKind kind, const IterativeOptions& it = {});

/// F(x) = 0 with a sparse Jacobian whose pattern is fixed.
class NonlinearProblem {
public:
    virtual ~NonlinearProblem() = default;
    virtual int size() const = 0;
    virtual void residual(const Eigen::VectorXd& x, Eigen::VectorXd& f) = 0;
    virtual void jacobian(const Eigen::VectorXd& x, SparseMatrix& j) = 0;
    /// Residual norm below which F(x) is indistinguishable from rounding noise.
    virtual double noise_floor(const Eigen::VectorXd&) const { return 0.0; }
};

enum class JacobianPolicy {
    Exact,  ///< refactor at every iterate
    Reuse,  ///< keep the last factorization while it contracts the residual fast enough
};

struct NewtonOptions {
    double tol = 1e-6;
    int max_iter = 25;
    bool line_search = false;
    int max_halvings = 8;
    JacobianPolicy jacobian = JacobianPolicy::Exact;
    /// Reuse mode refactors when ||F_new|| > reuse_contraction * ||F_old||.
    double reuse_contraction = 0.05;
};

struct NewtonReport {
    int iterations = 0;
    double initial_norm = 0.0;
    double final_norm = 0.0;
    double relative_residual = 0.0;  ///< final_norm / initial_norm (0 when F0 = 0)
    int factorizations = 0;
    bool converged = false;
    bool noise_limited = false;  ///< stopped at the noise floor before reaching tol
    std::vector<double> history;  ///< ||F|| at the initial guess and after each iteration
};

/// Non-convergence; carries the report of the failed iteration.
class NewtonFailure : public SolverError {
public:
    NewtonFailure(const std::string& what, NewtonReport r) : SolverError(what), report(r) {}
    NewtonReport report;
};

/// Newton iteration from x (updated in place). The relative l2 criterion
/// ||F||/||F0|| <= tol ends the iteration, as does ||F|| reaching the problem's
/// noise floor. Throws NewtonFailure on non-convergence.
NewtonReport newton_solve(NonlinearProblem& problem, Eigen::VectorXd& x, const NewtonOptions& options,
                          LinearSolver& solver);

/// Newton driver that owns the Jacobian storage and keeps a factorization
/// alive across calls (for the reuse policy across time steps).
class NewtonSolver {
public:
    NewtonSolver(NewtonOptions options, std::unique_ptr<LinearSolver> solver);

    NewtonReport solve(NonlinearProblem& problem, Eigen::VectorXd& x);
    /// Drop the cached factorization (e.g. after the problem changed).
    void invalidate() { have_factor_ = false; }
    const NewtonOptions& options() const { return options_; }
    int total_factorizations() const { return total_factorizations_; }

private:
    void refactor(NonlinearProblem& problem, const Eigen::VectorXd& x, NewtonReport& report);

    NewtonOptions options_;
    std::unique_ptr<LinearSolver> solver_;
    SparseMatrix jacobian_;
    bool have_factor_ = false;
    int total_factorizations_ = 0;
};

} // namespace c1vem

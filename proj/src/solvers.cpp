#include "c1vem/solvers.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#ifdef C1VEM_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include <cmath>
#include <type_traits>
#include <vector>

namespace c1vem {

LinearSolverKind parse_linear_solver(const std::string& name)
{
    if (name == "direct") return LinearSolverKind::Direct;
    if (name == "bicgstab") return LinearSolverKind::BiCGStab;
    throw ConfigError("unknown linear solver '" + name + "' (expected direct or bicgstab)");
}

std::string to_string(LinearSolverKind kind)
{
    return kind == LinearSolverKind::Direct ? "direct" : "bicgstab";
}

namespace {

/// Remembers the last analyzed sparsity pattern.
class PatternCache {
public:
    bool same(const SparseMatrix& A) const
    {
        if (A.rows() != rows_ || A.nonZeros() != static_cast<Eigen::Index>(inner_.size())) return false;
        return std::equal(outer_.begin(), outer_.end(), A.outerIndexPtr()) &&
               std::equal(inner_.begin(), inner_.end(), A.innerIndexPtr());
    }
    void store(const SparseMatrix& A)
    {
        rows_ = A.rows();
        outer_.assign(A.outerIndexPtr(), A.outerIndexPtr() + A.outerSize() + 1);
        inner_.assign(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros());
    }

private:
    Eigen::Index rows_ = -1;
    std::vector<int> outer_, inner_;
};

template <class LU>
class DirectSolver final : public LinearSolver {
public:
    explicit DirectSolver(std::string name) : name_(std::move(name))
    {
#ifdef C1VEM_HAVE_UMFPACK
        // plain triangular solves; Newton corrects the residual anyway
        if constexpr (std::is_same_v<LU, Eigen::UmfPackLU<SparseMatrix>>) lu_.umfpackControl()(UMFPACK_IRSTEP) = 0;
#endif
    }

    void factor(const SparseMatrix& A) override
    {
        if (!A.isCompressed()) throw SolverError("direct solver expects a compressed matrix");
        if (!pattern_.same(A)) {
            lu_.analyzePattern(A);
            pattern_.store(A);
        }
        lu_.factorize(A);
        if (lu_.info() != Eigen::Success) throw SolverError(name_ + ": factorization failed (singular Jacobian)");
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) override
    {
        Eigen::VectorXd x = lu_.solve(b);
        if (lu_.info() != Eigen::Success || !x.allFinite()) throw SolverError(name_ + ": solve failed");
        return x;
    }

    std::string name() const override { return name_; }

private:
    std::string name_;
    LU lu_;
    PatternCache pattern_;
};

class IterativeSolver final : public LinearSolver {
public:
    explicit IterativeSolver(const IterativeOptions& o)
    {
        solver_.setTolerance(o.tol);
        solver_.setMaxIterations(o.max_iter);
        solver_.preconditioner().setDroptol(o.drop_tol);
        solver_.preconditioner().setFillfactor(o.fill_factor);
    }

    void factor(const SparseMatrix& A) override
    {
        solver_.compute(A);
        if (solver_.info() != Eigen::Success) throw SolverError("bicgstab: preconditioner setup failed");
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) override
    {
        Eigen::VectorXd x = solver_.solve(b);
        if (solver_.info() != Eigen::Success || !x.allFinite())
            throw SolverError("bicgstab: no convergence after " + std::to_string(solver_.iterations()) +
                              " iterations (estimated error " + std::to_string(solver_.error()) + ")");
        return x;
    }

    std::string name() const override { return "bicgstab+ilut"; }

private:
    Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> solver_;
};

} // namespace

std::unique_ptr<LinearSolver> make_linear_solver(LinearSolverKind kind, const IterativeOptions& it)
{
    if (kind == LinearSolverKind::BiCGStab) return std::make_unique<IterativeSolver>(it);
#ifdef C1VEM_HAVE_UMFPACK
    return std::make_unique<DirectSolver<Eigen::UmfPackLU<SparseMatrix>>>("umfpack");
#else
    return std::make_unique<DirectSolver<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>>("sparselu");
#endif
}

// ---------------------------------------------------------------------------

NewtonSolver::NewtonSolver(NewtonOptions options, std::unique_ptr<LinearSolver> solver)
    : options_(options), solver_(std::move(solver))
{
    if (!(options_.tol > 0.0)) throw ConfigError("newton tolerance must be positive");
    if (options_.max_iter < 1) throw ConfigError("newton max_iter must be at least 1");
}

void NewtonSolver::refactor(NonlinearProblem& problem, const Eigen::VectorXd& x, NewtonReport& report)
{
    problem.jacobian(x, jacobian_);
    solver_->factor(jacobian_);
    have_factor_ = true;
    ++report.factorizations;
    ++total_factorizations_;
}

NewtonReport NewtonSolver::solve(NonlinearProblem& problem, Eigen::VectorXd& x)
{
    NewtonReport report;
    Eigen::VectorXd f;
    problem.residual(x, f);
    double norm = f.norm();
    report.initial_norm = report.final_norm = norm;
    report.history.push_back(norm);
    if (!std::isfinite(norm)) throw NewtonFailure("non-finite initial residual", report);
    if (norm == 0.0) {
        report.converged = true;
        return report;
    }
    const double floor = problem.noise_floor(x);
    if (norm <= floor) {
        report.converged = report.noise_limited = true;
        report.relative_residual = 1.0;
        return report;
    }

    const bool reuse = options_.jacobian == JacobianPolicy::Reuse;
    bool want_refactor = !reuse || !have_factor_;
    Eigen::VectorXd x_new, f_new;
    for (int it = 1; it <= options_.max_iter; ++it) {
        bool fresh = false;
        if (want_refactor) {
            refactor(problem, x, report);
            fresh = true;
        }

        auto trial = [&](double& new_norm) {
            const Eigen::VectorXd delta = solver_->solve(-f);
            double lambda = 1.0;
            x_new = x + delta;
            problem.residual(x_new, f_new);
            new_norm = f_new.norm();
            for (int h = 0; options_.line_search && h < options_.max_halvings && !(new_norm < norm); ++h) {
                lambda *= 0.5;
                x_new = x + lambda * delta;
                problem.residual(x_new, f_new);
                new_norm = f_new.norm();
            }
        };

        double new_norm = 0.0;
        trial(new_norm);
        if (!fresh && !(new_norm < norm)) {
            // stale Jacobian made no progress: retry from x with the exact one
            refactor(problem, x, report);
            fresh = true;
            trial(new_norm);
        }
        if (!std::isfinite(new_norm)) {
            report.iterations = it;
            throw NewtonFailure("Newton iterate became non-finite", report);
        }
        x.swap(x_new);
        f.swap(f_new);
        const double prev_norm = norm;
        norm = new_norm;
        report.iterations = it;
        report.final_norm = norm;
        report.history.push_back(norm);
        report.relative_residual = norm / report.initial_norm;
        if (norm <= options_.tol * report.initial_norm || norm <= floor) {
            report.converged = true;
            report.noise_limited = norm > options_.tol * report.initial_norm;
            return report;
        }
        want_refactor = !reuse || norm > options_.reuse_contraction * prev_norm;
    }
    throw NewtonFailure("Newton did not converge in " + std::to_string(options_.max_iter) +
                            " iterations (relative residual " + std::to_string(report.relative_residual) + ")",
                        report);
}

NewtonReport newton_solve(NonlinearProblem& problem, Eigen::VectorXd& x, const NewtonOptions& options,
                          LinearSolver& solver)
{
    // non-owning adapter around the caller's solver
    struct Borrowed final : LinearSolver {
        LinearSolver& s;
        explicit Borrowed(LinearSolver& r) : s(r) {}
        void factor(const SparseMatrix& A) override { s.factor(A); }
        Eigen::VectorXd solve(const Eigen::VectorXd& b) override { return s.solve(b); }
        std::string name() const override { return s.name(); }
    };
    NewtonSolver newton(options, std::make_unique<Borrowed>(solver));
    return newton.solve(problem, x);
}

} // namespace c1vem

#include "c1vem/timestepper.hpp"

#include "c1vem/quadrature.hpp"

#include <cmath>
#include <limits>

namespace c1vem {

std::shared_ptr<const Discretization> discretize(PolygonalMesh mesh, int threads, double corner_angle_tol)
{
    auto d = std::make_shared<Discretization>();
    d->mesh = std::move(mesh);
    d->dofs = DofMap(d->mesh);
    d->ops = build_mesh_operators(d->mesh, d->dofs, threads);
    d->constraints = build_constraints(d->mesh, d->dofs, corner_angle_tol);
    return d;
}

Diagnostics::Diagnostics(std::shared_ptr<const Discretization> disc) : disc_(std::move(disc))
{
    const auto& ops = disc_->ops;
    mean_rows_.resize(ops.size());
    point_values_.resize(ops.size());
    weights_.resize(ops.size());
    for (std::size_t e = 0; e < ops.size(); ++e) {
        const auto& op = ops[e];
        const Vec6 integrals = op.mass_p2.col(0);  // int_E m_a
        mean_rows_[e] = integrals.transpose() * op.pi0;
        // psi(Pi0 u) has degree 8
        const auto q = polygon_quadrature(disc_->mesh.cell_points(e), op.geometry.centroid, 8);
        Eigen::Matrix<double, Eigen::Dynamic, 6> basis(q.size(), 6);
        weights_[e].resize(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) {
            basis.row(i) = op.basis.values(q[i].x).transpose();
            weights_[e][i] = q[i].w;
        }
        point_values_[e] = basis * op.pi0;
    }
}

double Diagnostics::mass(const Eigen::VectorXd& w) const
{
    const Eigen::VectorXd u = disc_->constraints.to_cartesian(w);
    double m = 0.0;
    for (std::size_t e = 0; e < mean_rows_.size(); ++e) {
        const auto& g = disc_->dofs.element_dofs(e);
        for (std::size_t i = 0; i < g.size(); ++i) m += mean_rows_[e][i] * u[g[i]];
    }
    return m;
}

double Diagnostics::energy(const Eigen::VectorXd& w, double gamma, const SparseMatrix& hessian) const
{
    const Eigen::VectorXd u = disc_->constraints.to_cartesian(w);
    double bulk = 0.0;
    VecX z;
    for (std::size_t e = 0; e < point_values_.size(); ++e) {
        const auto& g = disc_->dofs.element_dofs(e);
        z.resize(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) z[i] = u[g[i]];
        const Eigen::VectorXd vals = point_values_[e] * z;
        for (Eigen::Index i = 0; i < vals.size(); ++i) bulk += weights_[e][i] * psi(vals[i]);
    }
    return bulk + 0.5 * gamma * gamma * w.dot(hessian * w);
}

// ---------------------------------------------------------------------------

namespace {

class StepProblem final : public NonlinearProblem {
public:
    explicit StepProblem(const ResidualAssembler& a) : a_(a) {}
    int size() const override { return a_.size(); }
    void residual(const Eigen::VectorXd& x, Eigen::VectorXd& f) override { a_.residual(x, f); }
    void jacobian(const Eigen::VectorXd& x, SparseMatrix& j) override { a_.jacobian(x, j); }
    double noise_floor(const Eigen::VectorXd&) const override
    {
        return 256.0 * std::numeric_limits<double>::epsilon() * a_.step_rhs().norm();
    }

private:
    const ResidualAssembler& a_;
};

} // namespace

CahnHilliardStepper::CahnHilliardStepper(std::shared_ptr<const Discretization> disc, StepperOptions options,
                                         SpaceTimeField forcing)
    : disc_(std::move(disc)), options_(options), forcing_(std::move(forcing)), diagnostics_(disc_)
{
    if (!(options_.gamma > 0.0)) throw ConfigError("gamma must be positive");
    if (!(options_.k > 0.0)) throw ConfigError("time step must be positive");
    AssemblyOptions ao;
    ao.threads = options_.threads;
    ao.ordered_reduction = options_.deterministic;
    assembler_ = std::make_unique<ResidualAssembler>(disc_->mesh, disc_->ops, disc_->dofs, disc_->constraints,
                                                     options_.gamma, ao);
    if (forcing_) load_ = std::make_unique<LoadAssembler>(disc_->mesh, disc_->ops, disc_->dofs);
    newton_ = std::make_unique<NewtonSolver>(options_.newton, make_linear_solver(options_.linear));
}

CahnHilliardStepper::~CahnHilliardStepper() = default;

double CahnHilliardStepper::energy(const Eigen::VectorXd& w) const
{
    return diagnostics_.energy(w, options_.gamma, assembler_->system().hessian);
}

State CahnHilliardStepper::initial_state(const Eigen::VectorXd& u_cartesian, double t0) const
{
    if (u_cartesian.size() != disc_->dofs.size()) throw ConfigError("initial vector has wrong size");
    State s;
    s.w = disc_->constraints.to_frame(u_cartesian);
    disc_->constraints.zero_fixed(s.w);
    s.t = t0;
    s.mass = diagnostics_.mass(s.w);
    if (options_.energy_every > 0) s.energy = energy(s.w);
    s.newton.converged = true;
    return s;
}

Eigen::VectorXd CahnHilliardStepper::solve_step(const Eigen::VectorXd& w_prev, double t_new, double k,
                                                NewtonReport& report, int depth)
{
    Eigen::VectorXd load;
    if (load_) load = disc_->constraints.to_frame(load_->assemble(forcing_, t_new));
    if (k != assembler_->time_step()) newton_->invalidate();
    assembler_->set_step(k, w_prev, load);
    StepProblem problem(*assembler_);
    Eigen::VectorXd w = w_prev;
    try {
        report = newton_->solve(problem, w);
        return w;
    } catch (const SolverError&) {
        if (depth >= options_.adaptive_depth) throw;
    }
    newton_->invalidate();
    NewtonReport first, second;
    const Eigen::VectorXd mid = solve_step(w_prev, t_new - 0.5 * k, 0.5 * k, first, depth + 1);
    w = solve_step(mid, t_new, 0.5 * k, second, depth + 1);
    report = second;
    report.iterations += first.iterations;
    report.factorizations += first.factorizations;
    return w;
}

State CahnHilliardStepper::step(const State& prev)
{
    State next;
    next.step = prev.step + 1;
    next.t = prev.t + options_.k;
    next.w = solve_step(prev.w, next.t, options_.k, next.newton, 0);
    next.mass = diagnostics_.mass(next.w);
    if (options_.energy_every > 0 && next.step % options_.energy_every == 0) {
        next.energy = energy(next.w);
        if (std::isnan(reference_energy_)) reference_energy_ = prev.energy;
        if (!std::isnan(last_energy_) && !std::isnan(reference_energy_) &&
            next.energy > last_energy_ + 1e-8 * std::abs(reference_energy_) && !forcing_)
            ++energy_warnings_;
        last_energy_ = next.energy;
    }
    return next;
}

std::vector<State> CahnHilliardStepper::run(const State& initial, int steps, const Observer& observer, bool keep_all)
{
    std::vector<State> out{initial};
    if (observer) observer(initial);
    reference_energy_ = initial.energy;
    last_energy_ = initial.energy;
    State current = initial;
    for (int i = 0; i < steps; ++i) {
        try {
            current = step(current);
        } catch (const SolverError& e) {
            throw SolverError("step " + std::to_string(current.step + 1) + " (t = " +
                              std::to_string(current.t + options_.k) + "): " + e.what());
        }
        if (observer) observer(current);
        if (keep_all) out.push_back(current);
    }
    if (!keep_all && steps > 0) out.push_back(current);
    return out;
}

} // namespace c1vem

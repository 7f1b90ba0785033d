#include "c1vem/assembly.hpp"

#include "c1vem/parallel.hpp"
#include "c1vem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace c1vem {

DofMap::DofMap(const PolygonalMesh& mesh)
{
    const std::size_t nv = mesh.num_vertices();
    scale_.assign(nv, 0.0);
    element_dofs_.resize(mesh.num_cells());
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const double h = element_geometry(mesh, c).diameter;
        auto& dofs = element_dofs_[c];
        for (int v : mesh.cell(c)) {
            scale_[v] = std::max(scale_[v], h);
            for (int k = 0; k < 3; ++k) dofs.push_back(3 * v + k);
        }
    }
}

LocalDofLayout DofMap::layout(const PolygonalMesh& mesh, std::size_t cell) const
{
    LocalDofLayout l;
    for (int v : mesh.cell(cell)) l.vertex_scale.push_back(scale_[v]);
    return l;
}

DofMap build_dof_map(const PolygonalMesh& mesh) { return DofMap(mesh); }

// ---------------------------------------------------------------------------

ConstraintSet::ConstraintSet(std::vector<Eigen::Matrix2d> frames, std::vector<char> fixed)
    : frames_(std::move(frames)), fixed_(std::move(fixed))
{
    rotated_.resize(frames_.size());
    for (std::size_t v = 0; v < frames_.size(); ++v)
        rotated_[v] = frames_[v] != Eigen::Matrix2d::Identity() ? 1 : 0;
}

ConstraintSet ConstraintSet::none(const DofMap& dofs)
{
    return ConstraintSet(std::vector<Eigen::Matrix2d>(dofs.num_vertices(), Eigen::Matrix2d::Identity()),
                         std::vector<char>(dofs.size(), 0));
}

int ConstraintSet::num_fixed() const
{
    return static_cast<int>(std::count(fixed_.begin(), fixed_.end(), 1));
}

Eigen::VectorXd ConstraintSet::to_frame(const Eigen::VectorXd& u) const
{
    Eigen::VectorXd w = u;
    for (std::size_t v = 0; v < frames_.size(); ++v)
        if (rotated_[v]) w.segment<2>(3 * v + 1) = frames_[v].transpose() * u.segment<2>(3 * v + 1);
    return w;
}

Eigen::VectorXd ConstraintSet::to_cartesian(const Eigen::VectorXd& w) const
{
    Eigen::VectorXd u = w;
    for (std::size_t v = 0; v < frames_.size(); ++v)
        if (rotated_[v]) u.segment<2>(3 * v + 1) = frames_[v] * w.segment<2>(3 * v + 1);
    return u;
}

void ConstraintSet::zero_fixed(Eigen::VectorXd& w) const
{
    for (std::size_t i = 0; i < fixed_.size(); ++i)
        if (fixed_[i]) w[i] = 0.0;
}

MatX ConstraintSet::element_rotation(const std::vector<int>& loop) const
{
    const int n = static_cast<int>(loop.size());
    MatX R = MatX::Identity(3 * n, 3 * n);
    for (int i = 0; i < n; ++i) R.block<2, 2>(3 * i + 1, 3 * i + 1) = frames_[loop[i]];
    return R;
}

bool ConstraintSet::touches_rotated(const std::vector<int>& loop) const
{
    return std::any_of(loop.begin(), loop.end(), [&](int v) { return rotated_[v] != 0; });
}

ConstraintSet build_constraints(const PolygonalMesh& mesh, const DofMap& dofs, double corner_angle_tol)
{
    const int nv = dofs.num_vertices();
    std::vector<Eigen::Matrix2d> frames(nv, Eigen::Matrix2d::Identity());
    std::vector<char> fixed(dofs.size(), 0);
    for (int v = 0; v < nv; ++v) {
        const auto& normals = mesh.boundary_normals(v);
        if (normals.empty()) continue;
        const Point n0 = normals.front();
        bool corner = false;
        for (const Point& n : normals) {
            const double angle = std::atan2(std::abs(n0.x() * n.y() - n0.y() * n.x()), n0.dot(n));
            if (angle > corner_angle_tol) corner = true;
        }
        if (corner) {
            fixed[DofMap::index(v, DofComponent::ScaledDx)] = 1;
            fixed[DofMap::index(v, DofComponent::ScaledDy)] = 1;
            continue;
        }
        Point n = Point::Zero();
        for (const Point& m : normals) n += m;
        n.normalize();
        frames[v].col(0) = Point(-n.y(), n.x());
        frames[v].col(1) = n;
        fixed[DofMap::index(v, DofComponent::ScaledDy)] = 1;  // normal component in the frame
    }
    return ConstraintSet(std::move(frames), std::move(fixed));
}

// ---------------------------------------------------------------------------

std::vector<ElementOperators> build_mesh_operators(const PolygonalMesh& mesh, const DofMap& dofs, int threads)
{
    std::vector<ElementOperators> ops(mesh.num_cells());
    parallel_for(mesh.num_cells(), threads, [&](std::size_t c) {
        ops[c] = build_element_operators(element_geometry(mesh, c), dofs.layout(mesh, c));
    });
    return ops;
}

namespace {

using Triplet = Eigen::Triplet<double>;

MatX rotated(const MatX& X, const MatX& R) { return R.transpose() * X * R; }

/// Local matrices of element e in frame coordinates.
std::vector<LocalForms> frame_local_forms(const PolygonalMesh& mesh, const std::vector<ElementOperators>& ops,
                                          const ConstraintSet& cs, int threads)
{
    std::vector<LocalForms> out(ops.size());
    parallel_for(ops.size(), threads, [&](std::size_t e) {
        const auto& loop = mesh.cell(e);
        if (!cs.touches_rotated(loop)) {
            out[e] = ops[e].forms;
            return;
        }
        const MatX R = cs.element_rotation(loop);
        out[e].hessian = rotated(ops[e].forms.hessian, R);
        out[e].gradient = rotated(ops[e].forms.gradient, R);
        out[e].mass = rotated(ops[e].forms.mass, R);
        // restore exact symmetry lost in the triple product
        out[e].hessian = 0.5 * (out[e].hessian + out[e].hessian.transpose()).eval();
        out[e].gradient = 0.5 * (out[e].gradient + out[e].gradient.transpose()).eval();
        out[e].mass = 0.5 * (out[e].mass + out[e].mass.transpose()).eval();
    });
    return out;
}

SparseMatrix from_triplets(int n, std::vector<Triplet>& t, bool ordered)
{
    SparseMatrix S(n, n);
    if (!ordered) {
        S.setFromTriplets(t.begin(), t.end());
        S.makeCompressed();
        return S;
    }
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
        return std::make_tuple(a.col(), a.row(), a.value()) < std::make_tuple(b.col(), b.row(), b.value());
    });
    std::vector<Triplet> merged;
    merged.reserve(t.size());
    for (const Triplet& x : t) {
        if (!merged.empty() && merged.back().row() == x.row() && merged.back().col() == x.col())
            merged.back() = Triplet(x.row(), x.col(), merged.back().value() + x.value());
        else
            merged.push_back(x);
    }
    S.setFromTriplets(merged.begin(), merged.end());
    S.makeCompressed();
    return S;
}

GlobalSystem assemble_from_forms(const std::vector<LocalForms>& forms, const DofMap& dofs,
                                 const ConstraintSet& cs, bool ordered)
{
    std::vector<Triplet> tm, ta;
    std::size_t total = 0;
    for (const auto& f : forms) total += f.mass.size();
    tm.reserve(total + dofs.size());
    ta.reserve(total + dofs.size());
    for (std::size_t e = 0; e < forms.size(); ++e) {
        const auto& g = dofs.element_dofs(e);
        const int ne = static_cast<int>(g.size());
        for (int j = 0; j < ne; ++j) {
            if (cs.is_fixed(g[j])) continue;
            for (int i = 0; i < ne; ++i) {
                if (cs.is_fixed(g[i])) continue;
                tm.emplace_back(g[i], g[j], forms[e].mass(i, j));
                ta.emplace_back(g[i], g[j], forms[e].hessian(i, j));
            }
        }
    }
    for (int i = 0; i < dofs.size(); ++i)
        if (cs.is_fixed(i)) {
            tm.emplace_back(i, i, 1.0);
            ta.emplace_back(i, i, 1.0);
        }
    GlobalSystem sys;
    sys.mass = from_triplets(dofs.size(), tm, ordered);
    sys.hessian = from_triplets(dofs.size(), ta, ordered);
    return sys;
}

/// Position of entry (i, j) in the value array of a compressed column-major matrix.
int value_slot(const SparseMatrix& S, int i, int j)
{
    const int* inner = S.innerIndexPtr();
    const int begin = S.outerIndexPtr()[j], end = S.outerIndexPtr()[j + 1];
    const int* p = std::lower_bound(inner + begin, inner + end, i);
    return (p != inner + end && *p == i) ? static_cast<int>(p - inner) : -1;
}

} // namespace

GlobalSystem assemble_constant(const PolygonalMesh& mesh, const std::vector<ElementOperators>& ops,
                               const DofMap& dofs, const ConstraintSet& constraints,
                               const AssemblyOptions& options)
{
    const auto forms = frame_local_forms(mesh, ops, constraints, options.threads);
    return assemble_from_forms(forms, dofs, constraints, options.ordered_reduction);
}

// ---------------------------------------------------------------------------

LoadAssembler::LoadAssembler(const PolygonalMesh& mesh, const std::vector<ElementOperators>& ops,
                             const DofMap& dofs)
    : dofs_(&dofs), rules_(ops.size())
{
    parallel_for(ops.size(), 1, [&](std::size_t e) {
        const auto pts = mesh.cell_points(e);
        const auto q = polygon_quadrature(pts, ops[e].geometry.centroid, 8);
        auto& r = rules_[e];
        Eigen::Matrix<double, 6, Eigen::Dynamic> basis(6, q.size());
        r.points.reserve(q.size());
        for (std::size_t k = 0; k < q.size(); ++k) {
            r.points.push_back(q[k].x);
            basis.col(k) = q[k].w * ops[e].basis.values(q[k].x);
        }
        r.weighted_basis = ops[e].pi0.transpose() * basis;
    });
}

Eigen::VectorXd LoadAssembler::assemble(const SpaceTimeField& f, double t) const
{
    Eigen::VectorXd L = Eigen::VectorXd::Zero(dofs_->size());
    for (std::size_t e = 0; e < rules_.size(); ++e) {
        const auto& r = rules_[e];
        Eigen::VectorXd fv(r.points.size());
        for (std::size_t k = 0; k < r.points.size(); ++k) fv[k] = f(r.points[k], t);
        const VecX le = r.weighted_basis * fv;
        const auto& g = dofs_->element_dofs(e);
        for (std::size_t i = 0; i < g.size(); ++i) L[g[i]] += le[i];
    }
    return L;
}

Eigen::VectorXd assemble_load(const SpaceTimeField& f, double t, const PolygonalMesh& mesh,
                              const std::vector<ElementOperators>& ops, const DofMap& dofs)
{
    return LoadAssembler(mesh, ops, dofs).assemble(f, t);
}

// ---------------------------------------------------------------------------

ResidualAssembler::ResidualAssembler(const PolygonalMesh& mesh, const std::vector<ElementOperators>& ops,
                                     const DofMap& dofs, const ConstraintSet& constraints, double gamma,
                                     const AssemblyOptions& options)
    : n_(dofs.size()), gamma_(gamma), options_(options), constraints_(&constraints)
{
    element_dofs_.resize(ops.size());
    areas_.resize(ops.size());
    for (std::size_t e = 0; e < ops.size(); ++e) {
        element_dofs_[e] = dofs.element_dofs(e);
        areas_[e] = ops[e].geometry.area;
    }
    frame_forms_ = frame_local_forms(mesh, ops, constraints, options.threads);
    system_ = assemble_from_forms(frame_forms_, dofs, constraints, options.ordered_reduction);

    // element-block pattern, unit diagonal everywhere
    std::vector<Triplet> t;
    for (std::size_t e = 0; e < ops.size(); ++e) {
        const auto& g = element_dofs_[e];
        for (int j : g)
            for (int i : g)
                if (!constraints.is_fixed(i) && !constraints.is_fixed(j)) t.emplace_back(i, j, 0.0);
    }
    for (int i = 0; i < n_; ++i) t.emplace_back(i, i, 0.0);
    pattern_.resize(n_, n_);
    pattern_.setFromTriplets(t.begin(), t.end());
    pattern_.makeCompressed();

    slot_.resize(ops.size());
    for (std::size_t e = 0; e < ops.size(); ++e) {
        const auto& g = element_dofs_[e];
        const int ne = static_cast<int>(g.size());
        auto& s = slot_[e];
        s.assign(ne * ne, -1);
        for (int j = 0; j < ne; ++j)
            for (int i = 0; i < ne; ++i)
                if (!constraints.is_fixed(g[i]) && !constraints.is_fixed(g[j]))
                    s[i + ne * j] = value_slot(pattern_, g[i], g[j]);
    }
}

void ResidualAssembler::set_step(double k, const Eigen::VectorXd& w_prev, const Eigen::VectorXd& load)
{
    if (k != k_ || base_values_.empty()) {
        k_ = k;
        SparseMatrix base = pattern_;
        auto accumulate = [&](const SparseMatrix& S, double factor) {
            for (int j = 0; j < S.outerSize(); ++j)
                for (SparseMatrix::InnerIterator it(S, j); it; ++it) {
                    if (constraints_->is_fixed(static_cast<int>(it.row()))) continue;
                    base.valuePtr()[value_slot(base, static_cast<int>(it.row()), j)] += factor * it.value();
                }
        };
        accumulate(system_.mass, 1.0 / k);
        accumulate(system_.hessian, gamma_ * gamma_);
        for (int i = 0; i < n_; ++i)
            if (constraints_->is_fixed(i)) base.valuePtr()[value_slot(base, i, i)] = 1.0;
        base_values_.assign(base.valuePtr(), base.valuePtr() + base.nonZeros());
    }
    rhs_ = (system_.mass * w_prev) / k;
    if (load.size() > 0) rhs_ += load;
    for (int i = 0; i < n_; ++i)
        if (constraints_->is_fixed(i)) rhs_[i] = 0.0;
}

VecX ResidualAssembler::gather(const Eigen::VectorXd& w, std::size_t e) const
{
    const auto& g = element_dofs_[e];
    VecX z(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) z[i] = w[g[i]];
    return z;
}

void ResidualAssembler::nonlinear_residual(const Eigen::VectorXd& w, Eigen::VectorXd& f) const
{
    std::vector<VecX> local(frame_forms_.size());
    parallel_for(frame_forms_.size(), options_.threads, [&](std::size_t e) {
        const VecX z = gather(w, e);
        const VecX Mz = frame_forms_[e].mass * z;
        const double c_hat = 3.0 / areas_[e] * z.dot(Mz) - 1.0;
        local[e] = c_hat * (frame_forms_[e].gradient * z);
    });
    f = Eigen::VectorXd::Zero(n_);
    for (std::size_t e = 0; e < local.size(); ++e) {
        const auto& g = element_dofs_[e];
        for (std::size_t i = 0; i < g.size(); ++i) f[g[i]] += local[e][i];
    }
    for (int i = 0; i < n_; ++i)
        if (constraints_->is_fixed(i)) f[i] = 0.0;
}

void ResidualAssembler::residual(const Eigen::VectorXd& w, Eigen::VectorXd& f) const
{
    nonlinear_residual(w, f);
    const Eigen::Map<const SparseMatrix> base(n_, n_, pattern_.nonZeros(), pattern_.outerIndexPtr(),
                                              pattern_.innerIndexPtr(), base_values_.data());
    f += base * w;
    f -= rhs_;
    for (int i = 0; i < n_; ++i)
        if (constraints_->is_fixed(i)) f[i] = w[i];
}

void ResidualAssembler::jacobian(const Eigen::VectorXd& w, SparseMatrix& j) const
{
    if (j.rows() != n_ || j.nonZeros() != pattern_.nonZeros() || !j.isCompressed()) j = pattern_;
    std::vector<MatX> local(frame_forms_.size());
    parallel_for(frame_forms_.size(), options_.threads, [&](std::size_t e) {
        const VecX z = gather(w, e);
        local[e] = nonlinear_local(frame_forms_[e].mass, frame_forms_[e].gradient, areas_[e], z).jacobian;
    });
    double* values = j.valuePtr();
    std::copy(base_values_.begin(), base_values_.end(), values);
    for (std::size_t e = 0; e < local.size(); ++e) {
        const auto& s = slot_[e];
        const double* le = local[e].data();
        for (std::size_t k = 0; k < s.size(); ++k)
            if (s[k] >= 0) values[s[k]] += le[k];
    }
}

} // namespace c1vem

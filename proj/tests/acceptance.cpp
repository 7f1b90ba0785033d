// Acceptance checks 1-9. Prints one PASS/FAIL line per check and exits
// nonzero if any check fails. Run from the tests/ directory.

#include "c1vem/assembly.hpp"
#include "c1vem/config.hpp"
#include "c1vem/driver.hpp"
#include "c1vem/localspace.hpp"
#include "c1vem/problems.hpp"

#include "oracles.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace c1vem;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---------------------------------------------------------------------------
// independent P2 data: scaled monomials ((x - c)/h)^a ((y - c)/h)^b

constexpr int kExp[6][2] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};

double ipow(double x, int n) { return n == 0 ? 1.0 : n == 1 ? x : x * x; }

struct Monomial {
    Point c;
    double h;
    int a, b;

    double value(const Point& x) const { return ipow((x.x() - c.x()) / h, a) * ipow((x.y() - c.y()) / h, b); }
    Point gradient(const Point& x) const
    {
        const double s = (x.x() - c.x()) / h, t = (x.y() - c.y()) / h;
        return Point(a ? a * ipow(s, a - 1) * ipow(t, b) / h : 0.0, b ? b * ipow(s, a) * ipow(t, b - 1) / h : 0.0);
    }
    Eigen::Matrix2d hessian(const Point&) const
    {
        Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
        if (a == 2) H(0, 0) = 2.0 / (h * h);
        if (b == 2) H(1, 1) = 2.0 / (h * h);
        if (a == 1 && b == 1) H(0, 1) = H(1, 0) = 1.0 / (h * h);
        return H;
    }
};

/// Local DOF vector (v, h_v dv/dx, h_v dv/dy per vertex) of every basis monomial.
MatX oracle_dofs(const std::vector<Point>& loop, const Point& c, double h, double hv)
{
    const int n = static_cast<int>(loop.size());
    MatX D(3 * n, 6);
    for (int k = 0; k < 6; ++k) {
        const Monomial m{c, h, kExp[k][0], kExp[k][1]};
        for (int i = 0; i < n; ++i) {
            D(3 * i, k) = m.value(loop[i]);
            const Point g = m.gradient(loop[i]);
            D(3 * i + 1, k) = hv * g.x();
            D(3 * i + 2, k) = hv * g.y();
        }
    }
    return D;
}

ElementOperators single_element(const std::vector<Point>& loop)
{
    const auto g = polygon_geometry(loop);
    LocalDofLayout layout;
    layout.vertex_scale.assign(loop.size(), g.diameter);
    return build_element_operators(g, layout);
}

int numerical_rank(const MatX& A, double rel_tol)
{
    Eigen::SelfAdjointEigenSolver<MatX> es(A);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    int r = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) r += std::abs(es.eigenvalues()[i]) > rel_tol * top;
    return r;
}

const std::vector<oracle::TestPolygon>& suite()
{
    static const auto polys = oracle::polygon_suite(240, 2024);
    return polys;
}

std::string suite_summary()
{
    std::map<std::string, int> count;
    for (const auto& p : suite()) ++count[p.kind];
    std::string s;
    for (const auto& [k, n] : count) s += (s.empty() ? "" : " ") + k + "=" + std::to_string(n);
    return s;
}

// ---------------------------------------------------------------------------

Outcome projector_exactness()
{
    double worst = 0.0;
    bool identical = true;
    for (const auto& poly : suite()) {
        const auto op = single_element(poly.loop);
        const MatX D = oracle_dofs(poly.loop, op.geometry.centroid, op.geometry.diameter, op.geometry.diameter);
        for (const Mat6X* P : {&op.pi_delta, &op.pi0, &op.pi_nabla}) {
            const Mat6 C = *P * D;  // column k: coefficients of the projection of m_k
            for (int k = 0; k < 6; ++k) {
                // sup over the vertices and the centroid of |Pi p - p|
                std::vector<Point> pts = poly.loop;
                pts.push_back(op.geometry.centroid);
                const Monomial m{op.geometry.centroid, op.geometry.diameter, kExp[k][0], kExp[k][1]};
                for (const Point& x : pts)
                    worst = std::max(worst, std::abs(op.basis.eval(C.col(k), x) - m.value(x)));
                worst = std::max(worst, (C.col(k) - Vec6::Unit(k)).cwiseAbs().maxCoeff());
            }
        }
        identical = identical && (op.pi0.array() == op.pi_delta.array()).all();
    }
    const bool ok = worst <= 1e-10 && identical;
    return {ok, std::to_string(suite().size()) + " polygons (" + suite_summary() + "), max error " +
                    fmt("%.2e", worst) + " (tol 1e-10), Pi0 == PiDelta: " + (identical ? "yes" : "no")};
}

Outcome form_consistency()
{
    double worst = 0.0, worst_scaled = 0.0;
    std::set<const oracle::TestPolygon*> offenders;
    for (const auto& poly : suite()) {
        const auto op = single_element(poly.loop);
        const Point c = op.geometry.centroid;
        const double h = op.geometry.diameter;
        const MatX D = oracle_dofs(poly.loop, c, h, h);
        Mat6 exact[3];
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b) {
                const Monomial p{c, h, kExp[a][0], kExp[a][1]}, q{c, h, kExp[b][0], kExp[b][1]};
                exact[0](a, b) = oracle::integrate_polygon(
                    poly.loop, [&](const Point& x) { return (p.hessian(x).array() * q.hessian(x).array()).sum(); });
                exact[1](a, b) =
                    oracle::integrate_polygon(poly.loop, [&](const Point& x) { return p.gradient(x).dot(q.gradient(x)); });
                exact[2](a, b) =
                    oracle::integrate_polygon(poly.loop, [&](const Point& x) { return p.value(x) * q.value(x); });
            }
        const MatX* forms[3] = {&op.forms.hessian, &op.forms.gradient, &op.forms.mass};
        for (int f = 0; f < 3; ++f) {
            const Mat6 discrete = D.transpose() * *forms[f] * D;
            const double dev = (discrete - exact[f]).cwiseAbs().maxCoeff() / exact[f].cwiseAbs().maxCoeff();
            // the same deviation measured against the scale of the stored local matrix
            const double scale = forms[f]->cwiseAbs().maxCoeff() * D.cwiseAbs().maxCoeff() * D.cwiseAbs().maxCoeff();
            worst_scaled = std::max(worst_scaled, (discrete - exact[f]).cwiseAbs().maxCoeff() / scale);
            if (dev > 1e-10) offenders.insert(&poly);
            worst = std::max(worst, dev);
        }
    }
    std::map<std::string, int> kinds;
    for (const auto* p : offenders) ++kinds[p->kind];
    std::string where;
    for (const auto& [k, n] : kinds) where += " " + k + "=" + std::to_string(n);
    return {worst <= 1e-10, "max relative deviation of a_h, k_h, m_h from exact P2 x P2 integrals " +
                                fmt("%.2e", worst) + " (tol 1e-10); polygons above tol: " +
                                std::to_string(offenders.size()) + (where.empty() ? "" : " (" + where.substr(1) + ")") +
                                "; deviation relative to the stored matrix scale " + fmt("%.1e", worst_scaled)};
}

Outcome rank_structure()
{
    int bad_a = 0, bad_k = 0, bad_m = 0;
    for (const auto& poly : suite()) {
        const auto op = single_element(poly.loop);
        const int N = op.size();
        bad_a += numerical_rank(op.forms.hessian, 1e-9) != N - 3;
        bad_k += numerical_rank(op.forms.gradient, 1e-9) != N - 1;
        const bool pd = Eigen::LLT<MatX>(op.forms.mass).info() == Eigen::Success &&
                        Eigen::SelfAdjointEigenSolver<MatX>(op.forms.mass).eigenvalues().minCoeff() > 0.0;
        bad_m += !pd;
    }
    return {bad_a == 0 && bad_k == 0 && bad_m == 0,
            "violations: rank(A) != N-3 on " + std::to_string(bad_a) + ", rank(K) != N-1 on " +
                std::to_string(bad_k) + ", M not positive definite on " + std::to_string(bad_m) + " of " +
                std::to_string(suite().size())};
}

Outcome jacobian_check()
{
    const auto disc = discretize(generate_quad_mesh(8), 1);
    ResidualAssembler R(disc->mesh, disc->ops, disc->dofs, disc->constraints, 0.01);
    const int n = R.size();
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto random_state = [&] {
        Eigen::VectorXd w(n);
        for (int i = 0; i < n; ++i) w[i] = U(rng);
        disc->constraints.zero_fixed(w);
        return w;
    };
    R.set_step(5e-5, random_state(), {});
    const Eigen::VectorXd w = random_state();
    SparseMatrix J;
    R.jacobian(w, J);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd dir = random_state();
        const double eps = 1e-6;
        Eigen::VectorXd fp, fm;
        R.residual(w + eps * dir, fp);
        R.residual(w - eps * dir, fm);
        const Eigen::VectorXd jd = J * dir;
        worst = std::max(worst, ((fp - fm) / (2 * eps) - jd).norm() / jd.norm());
    }
    return {worst <= 1e-6, "n=8 quad, 5 random directions, max relative mismatch " + fmt("%.2e", worst) +
                               " (tol 1e-6)"};
}

RunConfig shipped(const std::string& name, const fs::path& out)
{
    RunConfig c = load_config_file("../configs/" + name);
    c.output_dir = out.string();
    c.log_every = 0;
    c.write_vtk = false;
    c.snapshots.clear();
    return c;
}

/// Max over the CSV rows of |m_i - m_0|.
double csv_mass_drift(const fs::path& csv, double& m0)
{
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    double worst = 0.0;
    bool first = true;
    while (std::getline(in, line)) {
        std::istringstream f(line);
        std::string step, t, mass;
        std::getline(f, step, ',');
        std::getline(f, t, ',');
        std::getline(f, mass, ',');
        const double m = std::stod(mass);
        if (first) m0 = m;
        first = false;
        worst = std::max(worst, std::abs(m - m0));
    }
    return worst;
}

Outcome mass_conservation(const fs::path& scratch)
{
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (const char* name : {"test2_ellipse.cfg", "test3_cross.cfg", "test4_spinodal.cfg"}) {
        RunConfig c = shipped(name, scratch / name);
        c.mesh = MeshSource::parse("quad:32");
        c.final_time.reset();
        c.steps = 100;
        c.energy_every = 0;
        std::ostringstream log;
        double m0 = 0.0, drift = 0.0;
        try {
            run_simulation(c, log);
            drift = csv_mass_drift(fs::path(c.output_dir) / "series.csv", m0);
        } catch (const std::exception& e) {
            ok = false;
            detail += std::string(name) + " failed: " + e.what() + "; ";
            continue;
        }
        const double bound = 1e-8 * (1.0 + std::abs(m0));
        ok = ok && drift <= bound;
        detail += std::string(name).substr(0, 5) + " drift " + fmt("%.2e", drift) + " / bound " + fmt("%.2e", bound) +
                  "; ";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && secs <= 120.0;
    return {ok, detail + "runtime " + fmt("%.0f s", secs) + " (limit 120 s)"};
}

Outcome convergence_rates()
{
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig c = load_config_file("../configs/test1_convergence.cfg");
    c.convergence_levels = {8, 16, 32, 64};
    c.final_time = 1e-3;
    c.steps.reset();
    c.dt = 1e-6;
    std::ostringstream log;
    const ConvergenceTable t = run_convergence(c, log);
    std::ostringstream table;
    print_convergence_table(table, t);
    std::cout << table.str();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& r = t.rates.back();
    if (!r[0].value || !r[1].value || !r[2].value) return {false, "missing rates on the finest levels"};
    const double h2 = *r[0].value, h1 = *r[1].value, l2 = *r[2].value;
    const bool ok = l2 >= 1.8 && l2 <= 2.2 && h1 >= 1.8 && h1 <= 2.2 && h2 >= 0.85 && h2 <= 1.2 && secs <= 900.0;
    return {ok, "rates n=32->64: L2 " + fmt("%.3f", l2) + " [1.8, 2.2], H1 " + fmt("%.3f", h1) + " [1.8, 2.2], H2 " +
                    fmt("%.3f", h2) + " [0.85, 1.2]; runtime " + fmt("%.0f s", secs) + " (limit 900 s)"};
}

Outcome steady_states(const fs::path& scratch)
{
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (const char* name : {"test2_ellipse.cfg", "test3_cross.cfg"}) {
        RunConfig c = shipped(name, scratch / name);
        c.mesh = MeshSource::parse("quad:64");
        std::ostringstream log;
        try {
            const RunResult r = run_simulation(c, log);
            const double circ = level_set_circularity(r.disc->constraints.to_cartesian(r.final.w), *r.disc, 0.0, 256);
            const double drift = std::abs(r.final.mass - r.initial.mass);
            const double bound = 1e-8 * (1.0 + std::abs(r.initial.mass));
            const bool pass = circ >= 0.95 && drift <= bound && r.final.t >= 1.0 - 1e-9;
            ok = ok && pass;
            detail += std::string(name).substr(0, 5) + " t=" + fmt("%.3f", r.final.t) + " circularity " +
                      fmt("%.4f", circ) + " (>= 0.95), mass drift " + fmt("%.1e", drift) + "; ";
        } catch (const std::exception& e) {
            ok = false;
            detail += std::string(name) + " failed: " + e.what() + "; ";
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && secs <= 1200.0;
    return {ok, detail + "runtime " + fmt("%.0f s", secs) + " (limit 1200 s)"};
}

Outcome determinism(const fs::path& scratch)
{
    std::string csv[2];
    for (int i = 0; i < 2; ++i) {
        RunConfig c = shipped("test4_spinodal.cfg", scratch / ("det" + std::to_string(i)));
        c.mesh = MeshSource::parse("quad:16");
        c.final_time.reset();
        c.steps = 25;
        c.threads = 2;
        c.deterministic = true;
        c.energy_every = 1;
        std::ostringstream log;
        run_simulation(c, log);
        std::ifstream in(fs::path(c.output_dir) / "series.csv", std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        csv[i] = ss.str();
    }
    const bool ok = !csv[0].empty() && csv[0] == csv[1];
    return {ok, "two seeded random-datum runs (2 threads, 25 steps): CSV " + std::to_string(csv[0].size()) +
                    " bytes, " + (ok ? "byte-identical" : "different")};
}

double rel_diff(const SparseMatrix& a, const SparseMatrix& b)
{
    const SparseMatrix d = a - b;
    double num = 0.0, den = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(d, k); it; ++it) num = std::max(num, std::abs(it.value()));
    for (int k = 0; k < a.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) den = std::max(den, std::abs(it.value()));
    return num / den;
}

Outcome ordering_invariance()
{
    double worst = 0.0;
    std::mt19937 rng(17);
    for (const auto& base : {load_mesh_file("data/voronoi_1024.off"), generate_tri_mesh(16)}) {
        const DofMap d0(base);
        const auto ops0 = build_mesh_operators(base, d0);
        const auto ref = assemble_constant(base, ops0, d0, build_constraints(base, d0));
        auto permuted = base.cells();
        std::shuffle(permuted.begin(), permuted.end(), rng);
        for (auto& loop : permuted)
            std::rotate(loop.begin(), loop.begin() + static_cast<long>(rng() % loop.size()), loop.end());
        const PolygonalMesh m(base.vertices(), permuted);
        const DofMap d(m);
        const auto ops = build_mesh_operators(m, d);
        const auto sys = assemble_constant(m, ops, d, build_constraints(m, d));
        worst = std::max({worst, rel_diff(ref.mass, sys.mass), rel_diff(ref.hessian, sys.hessian)});
    }
    return {worst <= 1e-13, "element permutation + loop rotation on a 1024-cell Voronoi and a tri mesh, max relative "
                            "entry change " +
                                fmt("%.2e", worst) + " (tol 1e-13)"};
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    const fs::path scratch = fs::temp_directory_path() / "c1vem_acceptance";
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    const std::vector<std::pair<const char*, std::function<Outcome()>>> checks = {
        {"projector exactness", projector_exactness},
        {"form consistency", form_consistency},
        {"rank and kernel structure", rank_structure},
        {"Jacobian against finite differences", jacobian_check},
        {"mass conservation", [&] { return mass_conservation(scratch); }},
        {"convergence rates", convergence_rates},
        {"qualitative steady states", [&] { return steady_states(scratch); }},
        {"determinism", [&] { return determinism(scratch); }},
        {"ordering invariance", ordering_invariance},
    };
    int failed = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = checks[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %d %s: %s: %s\n", id, o.pass ? "PASS" : "FAIL", checks[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}

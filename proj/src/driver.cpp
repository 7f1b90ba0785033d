#include "c1vem/driver.hpp"

#include "c1vem/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace c1vem {

namespace fs = std::filesystem;

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void write_vtk(std::ostream& out, const Discretization& disc, const Eigen::VectorXd& u, double t)
{
    const auto& mesh = disc.mesh;
    const std::size_t nv = mesh.num_vertices(), nc = mesh.num_cells();
    std::size_t conn = 0;
    for (const auto& c : mesh.cells()) conn += c.size() + 1;

    out << "# vtk DataFile Version 3.0\n";
    out << "c1vem solution t=" << format_double(t) << "\n";
    out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "FIELD FieldData 1\nTIME 1 1 double\n" << format_double(t) << "\n";
    out << "POINTS " << nv << " double\n";
    for (const auto& p : mesh.vertices()) out << format_double(p.x()) << ' ' << format_double(p.y()) << " 0\n";
    out << "CELLS " << nc << ' ' << conn << "\n";
    for (const auto& c : mesh.cells()) {
        out << c.size();
        for (int v : c) out << ' ' << v;
        out << '\n';
    }
    out << "CELL_TYPES " << nc << "\n";
    for (std::size_t c = 0; c < nc; ++c) out << "7\n";

    out << "POINT_DATA " << nv << "\nSCALARS u double 1\nLOOKUP_TABLE default\n";
    for (std::size_t v = 0; v < nv; ++v) out << format_double(u[DofMap::index(static_cast<int>(v), DofComponent::Value)]) << '\n';
    out << "VECTORS grad_u double\n";
    for (std::size_t v = 0; v < nv; ++v) {
        const int iv = static_cast<int>(v);
        const double h = disc.dofs.vertex_scale(iv);
        out << format_double(u[DofMap::index(iv, DofComponent::ScaledDx)] / h) << ' '
            << format_double(u[DofMap::index(iv, DofComponent::ScaledDy)] / h) << " 0\n";
    }

    std::vector<Vec6> coeffs(nc);
    std::vector<double> means(nc);
    VecX z;
    for (std::size_t e = 0; e < nc; ++e) {
        const auto& op = disc.ops[e];
        const auto& g = disc.dofs.element_dofs(e);
        z.resize(static_cast<Eigen::Index>(g.size()));
        for (std::size_t i = 0; i < g.size(); ++i) z[static_cast<Eigen::Index>(i)] = u[g[i]];
        coeffs[e] = op.pi0 * z;
        means[e] = op.mass_p2.col(0).dot(coeffs[e]) / op.geometry.area;
    }
    out << "CELL_DATA " << nc << "\nFIELD CellData 2\n";
    out << "pi0 6 " << nc << " double\n";
    for (const auto& c : coeffs) {
        for (int a = 0; a < 6; ++a) out << (a ? " " : "") << format_double(c[a]);
        out << '\n';
    }
    out << "pi0_mean 1 " << nc << " double\n";
    for (double m : means) out << format_double(m) << '\n';
}

namespace {

std::shared_ptr<const ExactSolution> make_exact(const ExactSpec& spec, double gamma)
{
    switch (spec.kind) {
    case ExactSpec::Kind::Manufactured: return std::make_shared<ManufacturedCase>(gamma);
    case ExactSpec::Kind::Constant: return std::make_shared<ConstantCase>(spec.constant);
    case ExactSpec::Kind::None: break;
    }
    return nullptr;
}

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

class Manifest {
public:
    Manifest(fs::path path, const RunConfig& config) : path_(std::move(path))
    {
        doc_["status"] = "incomplete";
        doc_["config"] = serialize_config(config);
        doc_["steps_planned"] = config.num_steps();
        doc_["steps_completed"] = 0;
        doc_["files"] = nlohmann::json::array();
        doc_["snapshots"] = nlohmann::json::array();
    }

    void add_file(const std::string& name) { doc_["files"].push_back(name); }
    void add_snapshot(const SnapshotRecord& s)
    {
        doc_["snapshots"].push_back({{"step", s.step}, {"t", s.t}, {"file", s.file}});
    }
    void progress(const State& s)
    {
        doc_["steps_completed"] = s.step;
        doc_["t"] = s.t;
    }
    void set(const std::string& key, nlohmann::json value) { doc_[key] = std::move(value); }

    void flush() const
    {
        std::ofstream out(path_);
        if (!out) throw IoError("cannot write '" + path_.string() + "'");
        out << doc_.dump(2) << '\n';
    }

private:
    fs::path path_;
    nlohmann::json doc_;
};

} // namespace

RunResult run_simulation(const RunConfig& config, std::ostream& log)
{
    config.validate();
    const fs::path dir = config.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

    Manifest manifest(dir / "manifest.json", config);
    manifest.flush();
    RunResult result;
    result.steps_planned = config.num_steps();
    try {
        PolygonalMesh mesh = config.mesh.build();
        for (const auto& w : mesh.warnings()) log << "warning: " << w << '\n';
        manifest.set("mesh_warnings", mesh.warnings().size());
        result.disc = discretize(std::move(mesh), config.resolved_threads());
        const Discretization& disc = *result.disc;
        manifest.set("dofs", disc.dofs.size());
        manifest.set("cells", disc.mesh.num_cells());

        SpaceTimeField forcing;
        if (config.forcing.kind == ExactSpec::Kind::Manufactured) forcing = ManufacturedCase(config.gamma).forcing();
        CahnHilliardStepper stepper(result.disc, config.stepper_options(), forcing);
        const State initial = stepper.initial_state(interpolate_initial(config.initial_datum(), disc), config.t0);
        result.initial = initial;

        std::map<int, double> snapshot_steps;
        for (double s : config.snapshots)
            snapshot_steps.emplace(static_cast<int>(std::llround((s - config.t0) / config.dt)), s);

        std::ofstream csv = open_output(dir / "series.csv");
        manifest.add_file("series.csv");
        csv << "step,t,mass,energy,newton_iters,residual\n";

        const double m0 = initial.mass;
        auto observe = [&](const State& s) {
            csv << s.step << ',' << format_double(s.t) << ',' << format_double(s.mass) << ','
                << format_double(s.energy) << ',' << s.newton.iterations << ','
                << format_double(s.newton.relative_residual) << '\n';
            csv.flush();
            if (!csv) throw IoError("write failed for series.csv");
            const double drift = s.mass - m0;
            result.max_mass_drift = std::max(result.max_mass_drift, std::abs(drift));
            if (config.log_every > 0 && s.step % config.log_every == 0) {
                char line[160];
                std::snprintf(line, sizeof line, "step %6d  t=%-12.6g newton=%2d  rel=%9.3e  mass_drift=%+.3e", s.step,
                              s.t, s.newton.iterations, s.newton.relative_residual, drift);
                log << line << '\n';
            }
            if (const auto it = snapshot_steps.find(s.step); it != snapshot_steps.end() && config.write_vtk) {
                char name[64];
                std::snprintf(name, sizeof name, "u_%06d.vtk", s.step);
                std::ofstream vtk = open_output(dir / name);
                write_vtk(vtk, disc, stepper.cartesian(s), s.t);
                if (!vtk) throw IoError(std::string("write failed for ") + name);
                SnapshotRecord rec{s.step, s.t, name};
                result.snapshots.push_back(rec);
                manifest.add_file(name);
                manifest.add_snapshot(rec);
            }
            manifest.progress(s);
            if (s.step == 0 || (!result.snapshots.empty() && result.snapshots.back().step == s.step)) manifest.flush();
        };

        auto states = stepper.run(initial, config.num_steps(), observe, false);
        result.final = states.back();
        result.energy_warnings = stepper.energy_warnings();
        manifest.set("status", "complete");
        manifest.set("max_mass_drift", result.max_mass_drift);
        manifest.set("energy_warnings", result.energy_warnings);
        manifest.flush();
    } catch (const std::exception& e) {
        manifest.set("status", "incomplete");
        manifest.set("error", e.what());
        try {
            manifest.flush();
        } catch (const std::exception&) {
        }
        throw;
    }
    return result;
}

ConvergenceTable compute_rates(std::vector<ConvergenceLevel> levels)
{
    ConvergenceTable table;
    table.levels = std::move(levels);
    table.rates.resize(table.levels.size());
    for (std::size_t i = 1; i < table.levels.size(); ++i) {
        const auto& c = table.levels[i - 1];
        const auto& f = table.levels[i];
        if (!c.ok || !f.ok) continue;
        const double ec[3] = {c.errors.h2, c.errors.h1, c.errors.l2};
        const double ef[3] = {f.errors.h2, f.errors.h1, f.errors.l2};
        for (int k = 0; k < 3; ++k) {
            Rate& r = table.rates[i][k];
            if (ec[k] <= kExactErrorLevel && ef[k] <= kExactErrorLevel) r.exact = true;
            else if (ec[k] > 0.0 && ef[k] > 0.0) r.value = std::log(ec[k] / ef[k]) / std::log(c.h / f.h);
        }
    }
    return table;
}

ConvergenceTable run_convergence(const RunConfig& config, std::ostream& log)
{
    config.validate();
    if (config.exact.kind == ExactSpec::Kind::None) throw ConfigError("convergence needs a reference solution (exact)");
    std::vector<int> levels = config.convergence_levels;
    if (levels.empty()) {
        if (config.mesh.kind == MeshSource::Kind::File) throw ConfigError("convergence needs convergence.levels");
        levels.push_back(config.mesh.n);
    }
    const auto exact = make_exact(config.exact, config.gamma);
    std::vector<ConvergenceLevel> rows;
    for (int n : levels) {
        ConvergenceLevel row;
        row.n = n;
        try {
            PolygonalMesh mesh = config.convergence_family == "tri" ? generate_tri_mesh(n) : generate_quad_mesh(n);
            auto disc = discretize(std::move(mesh), config.resolved_threads());
            for (const auto& op : disc->ops) row.h = std::max(row.h, op.geometry.diameter);
            CahnHilliardStepper stepper(disc, config.stepper_options(), exact->forcing());
            const State s0 = stepper.initial_state(interpolate(*exact, config.t0, *disc), config.t0);
            const auto states = stepper.run(s0, config.num_steps(), {}, false);
            row.errors = compute_errors(stepper.cartesian(states.back()), *exact, states.back().t, *disc);
            row.ok = true;
            char line[160];
            std::snprintf(line, sizeof line, "level n=%d h=%.4e  H2=%.4e  H1=%.4e  L2=%.4e", n, row.h, row.errors.h2,
                          row.errors.h1, row.errors.l2);
            log << line << '\n';
        } catch (const SolverError& e) {
            row.error = e.what();
            log << "level n=" << n << " failed: " << e.what() << '\n';
        }
        rows.push_back(row);
    }
    return compute_rates(std::move(rows));
}

namespace {

std::string rate_text(const Rate& r, const char* missing)
{
    if (r.exact) return "exact";
    if (!r.value) return missing;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *r.value);
    return buf;
}

} // namespace

void write_convergence_csv(std::ostream& out, const ConvergenceTable& t)
{
    out << "n,h,e_h2,rate_h2,e_h1,rate_h1,e_l2,rate_l2,status\n";
    for (std::size_t i = 0; i < t.levels.size(); ++i) {
        const auto& l = t.levels[i];
        const double e[3] = {l.errors.h2, l.errors.h1, l.errors.l2};
        out << l.n << ',' << format_double(l.h);
        for (int k = 0; k < 3; ++k) {
            out << ',' << (l.ok ? format_double(e[k]) : "");
            const Rate& r = t.rates[i][k];
            out << ',' << (r.exact ? "exact" : r.value ? format_double(*r.value) : "");
        }
        out << ',' << (l.ok ? "ok" : "failed") << '\n';
    }
}

void print_convergence_table(std::ostream& out, const ConvergenceTable& t)
{
    char line[200];
    std::snprintf(line, sizeof line, "%-10s %-11s %-7s %-11s %-7s %-11s %-7s", "h", "e_H2", "rate", "e_H1", "rate",
                  "e_L2", "rate");
    out << line << '\n';
    for (std::size_t i = 0; i < t.levels.size(); ++i) {
        const auto& l = t.levels[i];
        if (!l.ok) {
            std::snprintf(line, sizeof line, "1/%-8d failed: %s", l.n, l.error.c_str());
            out << line << '\n';
            continue;
        }
        std::snprintf(line, sizeof line, "1/%-8d %-11.2e %-7s %-11.2e %-7s %-11.2e %-7s", l.n, l.errors.h2,
                      rate_text(t.rates[i][0], "-").c_str(), l.errors.h1, rate_text(t.rates[i][1], "-").c_str(),
                      l.errors.l2, rate_text(t.rates[i][2], "-").c_str());
        out << line << '\n';
    }
}

PolygonalMesh generate_from_spec(const std::string& spec)
{
    std::string kind, arg;
    if (const auto p = spec.find('('); p != std::string::npos && spec.back() == ')') {
        kind = spec.substr(0, p);
        arg = spec.substr(p + 1, spec.size() - p - 2);
    } else if (const auto c = spec.find(':'); c != std::string::npos) {
        kind = spec.substr(0, c);
        arg = spec.substr(c + 1);
    }
    int n = 0;
    const auto [end, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), n);
    const bool number_ok = ec == std::errc() && end == arg.data() + arg.size() && !arg.empty() && n >= 1;
    if (!number_ok || (kind != "quad" && kind != "tri"))
        throw ConfigError("invalid mesh spec '" + spec + "': expected quad(n) or tri(n) with n >= 1");
    return kind == "quad" ? generate_quad_mesh(n) : generate_tri_mesh(n);
}

int exit_code_for(const std::exception& e)
{
    if (dynamic_cast<const IoError*>(&e)) return 4;
    if (dynamic_cast<const SolverError*>(&e)) return 3;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const TopologyError*>(&e) || dynamic_cast<const GeometryError*>(&e))
        return 2;
    return 1;
}

} // namespace c1vem

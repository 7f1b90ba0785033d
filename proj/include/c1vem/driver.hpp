#pragma once

#include "c1vem/config.hpp"

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace c1vem {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// VTK legacy ASCII unstructured grid with native polygon cells. Point data:
/// u and its gradient; cell data: the six Pi^0 coefficients in the scaled
/// monomial basis of each cell and the cell mean of Pi^0 u_h.
void write_vtk(std::ostream& out, const Discretization& disc, const Eigen::VectorXd& u_cartesian, double t);

struct SnapshotRecord {
    int step = 0;
    double t = 0.0;
    std::string file;
};

struct RunResult {
    std::shared_ptr<const Discretization> disc;
    State initial;
    State final;
    int steps_planned = 0;
    double max_mass_drift = 0.0;  ///< max_i |m(U_i) - m(U_0)|
    std::vector<SnapshotRecord> snapshots;
    int energy_warnings = 0;
};

/// Runs the configured simulation, writing series.csv, VTK snapshots and
/// manifest.json into config.output_dir. On failure the manifest is marked
/// incomplete and the exception is rethrown.
RunResult run_simulation(const RunConfig& config, std::ostream& log);

struct ConvergenceLevel {
    int n = 0;
    double h = 0.0;
    ErrorNorms errors;
    bool ok = false;
    std::string error;
};

/// Rate between a level and its predecessor; "exact" when both errors are at
/// round-off level.
struct Rate {
    std::optional<double> value;
    bool exact = false;
};

struct ConvergenceTable {
    std::vector<ConvergenceLevel> levels;
    /// rates[i][0..2] = H2, H1, L2 between levels i-1 and i; rates[0] empty.
    std::vector<std::array<Rate, 3>> rates;
};

/// Round-off threshold below which an error counts as exact.
inline constexpr double kExactErrorLevel = 1e-10;

ConvergenceTable compute_rates(std::vector<ConvergenceLevel> levels);

/// March each level of config.convergence_levels to the end time and measure
/// errors against config.exact. Failed levels are recorded, not thrown.
ConvergenceTable run_convergence(const RunConfig& config, std::ostream& log);

void write_convergence_csv(std::ostream& out, const ConvergenceTable& table);
void print_convergence_table(std::ostream& out, const ConvergenceTable& table);

/// "quad(n)" or "tri(n)" (also "quad:n", "tri:n"). Throws ConfigError.
PolygonalMesh generate_from_spec(const std::string& spec);

/// Process exit status for an exception escaping a command: 2 config or
/// input, 3 solver, 4 I/O, 1 anything else.
int exit_code_for(const std::exception& e);

} // namespace c1vem

#pragma once

#include "c1vem/mesh.hpp"
#include "c1vem/problems.hpp"
#include "c1vem/solvers.hpp"
#include "c1vem/timestepper.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace c1vem {

/// Where the mesh comes from: "quad:n", "tri:n" or "file:<path>".
struct MeshSource {
    enum class Kind { Quad, Tri, File };
    Kind kind = Kind::Quad;
    int n = 32;
    std::string path;

    static MeshSource parse(const std::string& spec);
    std::string to_string() const;
    /// Throws IoError when a mesh file cannot be opened.
    PolygonalMesh build() const;

    bool operator==(const MeshSource&) const = default;
};

/// Reference solution used by the convergence driver.
struct ExactSpec {
    enum class Kind { None, Manufactured, Constant };
    Kind kind = Kind::None;
    double constant = 0.0;

    static ExactSpec parse(const std::string& spec);
    std::string to_string() const;

    bool operator==(const ExactSpec&) const = default;
};

/// Complete description of a run. One `key = value` line per field; see
/// config_schema() for keys and defaults.
struct RunConfig {
    MeshSource mesh;
    double gamma = 0.01;
    double dt = 5e-5;
    double t0 = 0.0;
    std::optional<double> final_time;
    std::optional<int> steps;

    double newton_tol = 1e-6;
    int newton_max_iter = 25;
    bool newton_line_search = false;
    int newton_max_halvings = 8;
    JacobianPolicy newton_jacobian = JacobianPolicy::Exact;
    int adaptive_depth = 0;

    std::string initial = "zero";
    std::uint64_t seed = 42;
    double smoothing = 0.0;
    ExactSpec forcing;  ///< None or Manufactured
    ExactSpec exact;    ///< convergence driver only

    std::string output_dir = "output";
    std::vector<double> snapshots;
    bool write_vtk = true;
    int log_every = 1;
    int energy_every = 1;

    LinearSolverKind linear = LinearSolverKind::Direct;
    int threads = 0;  ///< 0: hardware concurrency
    bool deterministic = true;

    std::string convergence_family = "quad";
    std::vector<int> convergence_levels;

    /// Number of time steps implied by steps or final_time.
    int num_steps() const;
    double end_time() const;
    int resolved_threads() const;
    InitialDatum initial_datum() const;
    StepperOptions stepper_options() const;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

/// Parses the key-value document. Unknown or repeated keys and malformed
/// values throw ConfigError. The result is not validated.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

/// Canonical text with every key; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// Applies `key = value` from the environment: key "newton.tol" is read from
/// C1VEM_NEWTON_TOL. Returns the names of the overridden keys.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::vector<std::string> apply_env_overrides(RunConfig& config, const EnvLookup& lookup);
std::vector<std::string> apply_env_overrides(RunConfig& config);

/// Environment variable name for a config key.
std::string env_name(const std::string& key);

/// One line per key: name, default and meaning.
std::string config_schema();

} // namespace c1vem

#include "c1vem/config.hpp"
#include "c1vem/driver.hpp"
#include "c1vem/errors.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace c1vem;

namespace {

struct CommonFlags {
    std::string config_path;
    int threads = -1;
    std::vector<std::string> overrides;
};

RunConfig load(const CommonFlags& flags)
{
    RunConfig config = load_config_file(flags.config_path);
    for (const auto& key : apply_env_overrides(config)) std::cerr << "override from environment: " << key << '\n';
    // command-line assignments go through the same key table as the environment
    for (const auto& kv : flags.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        auto lookup = [&](const std::string& name) -> std::optional<std::string> {
            if (name == env_name(key)) return value;
            return std::nullopt;
        };
        if (apply_env_overrides(config, lookup).empty()) throw ConfigError("unknown config key '" + key + "'");
    }
    if (flags.threads >= 0) config.threads = flags.threads;
    config.validate();
    return config;
}

int guarded(const std::function<void()>& body)
{
    try {
        body();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"C1 virtual element solver for the Cahn-Hilliard equation"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    bool quiet = false;
    std::string output_dir;
    auto* run = app.add_subcommand("run", "march a configured simulation and write VTK/CSV output");
    run->add_option("config", run_flags.config_path, "configuration file")->required();
    run->add_option("--threads", run_flags.threads, "assembly workers (0: hardware concurrency)");
    run->add_option("--set", run_flags.overrides, "override a config key, key=value (repeatable)");
    run->add_option("-o,--output", output_dir, "output directory (overrides output.dir)");
    run->add_flag("-q,--quiet", quiet, "suppress the per-step log");

    CommonFlags conv_flags;
    std::string conv_csv;
    auto* conv = app.add_subcommand("convergence", "error and rate table against a reference solution");
    conv->add_option("config", conv_flags.config_path, "configuration file")->required();
    conv->add_option("--threads", conv_flags.threads, "assembly workers (0: hardware concurrency)");
    conv->add_option("--set", conv_flags.overrides, "override a config key, key=value (repeatable)");
    conv->add_option("--csv", conv_csv, "CSV output path (default: <output.dir>/convergence.csv)");

    std::string mesh_spec, mesh_out;
    auto* meshgen = app.add_subcommand("meshgen", "write a generated mesh as native JSON");
    meshgen->add_option("spec", mesh_spec, "quad(n) or tri(n)")->required();
    meshgen->add_option("-o,--output", mesh_out, "mesh file")->required();

    app.add_subcommand("schema", "list configuration keys with defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (app.got_subcommand("schema")) {
        std::cout << config_schema();
        return 0;
    }

    if (run->parsed())
        return guarded([&] {
            if (!output_dir.empty()) run_flags.overrides.push_back("output.dir=" + output_dir);
            const RunConfig config = load(run_flags);
            std::ostringstream sink;
            std::ostream& log = quiet ? static_cast<std::ostream&>(sink) : std::cout;
            const RunResult r = run_simulation(config, log);
            std::cout << "completed " << r.final.step << " steps to t=" << format_double(r.final.t)
                      << ", max mass drift " << format_double(r.max_mass_drift) << ", output in "
                      << config.output_dir << '\n';
        });

    if (conv->parsed())
        return guarded([&] {
            const RunConfig config = load(conv_flags);
            const ConvergenceTable table = run_convergence(config, std::cout);
            print_convergence_table(std::cout, table);
            const std::filesystem::path path =
                conv_csv.empty() ? std::filesystem::path(config.output_dir) / "convergence.csv" : std::filesystem::path(conv_csv);
            if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
            std::ofstream out(path);
            if (!out) throw IoError("cannot write '" + path.string() + "'");
            write_convergence_csv(out, table);
            bool failed = false;
            for (const auto& l : table.levels) failed = failed || !l.ok;
            if (failed) throw SolverError("one or more levels failed");
        });

    if (meshgen->parsed())
        return guarded([&] {
            const PolygonalMesh mesh = generate_from_spec(mesh_spec);
            std::ofstream out(mesh_out);
            if (!out) throw IoError("cannot write '" + mesh_out + "'");
            write_mesh_json(out, mesh);
            if (!out) throw IoError("write failed for '" + mesh_out + "'");
            std::cout << "wrote " << mesh.num_cells() << " cells, " << mesh.num_vertices() << " vertices to "
                      << mesh_out << '\n';
        });

    return 0;
}

#include "c1vem/config.hpp"
#include "c1vem/driver.hpp"
#include "c1vem/errors.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace c1vem;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("c1vem_test_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

RunConfig small_run(const fs::path& dir)
{
    RunConfig c;
    c.mesh = MeshSource::parse("quad:8");
    c.steps = 5;
    c.initial = "random";
    c.seed = 7;
    c.threads = 1;
    c.log_every = 0;
    c.output_dir = dir.string();
    c.snapshots = {0.0, 5 * c.dt};
    return c;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(C1VEM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("config text round trip")
{
    const std::string text = R"(
# comment line
mesh = tri:12      # trailing comment
gamma = 0.02
dt = 1e-6
final_time = 2.5e-4
newton.tol = 1e-8
newton.max_iter = 12
newton.line_search = true
newton.jacobian = reuse
initial = expr: 0.5*cos(pi*x) - (y < 0.3)
seed = 123456789012
smoothing = 0.01
forcing = manufactured
exact = constant:0.25
output.dir = out dir/run 1
output.snapshots = 0, 1e-4, 2.5e-4
output.vtk = false
diagnostics.energy_every = 3
solver.linear = bicgstab
threads = 2
deterministic = false
convergence.family = tri
convergence.levels = 4, 8
)";
    const RunConfig c = parse_config(text);
    CHECK(c.mesh.kind == MeshSource::Kind::Tri);
    CHECK(c.mesh.n == 12);
    CHECK(c.gamma == 0.02);
    CHECK(c.final_time == 2.5e-4);
    CHECK(!c.steps);
    CHECK(c.num_steps() == 250);
    CHECK(c.newton_jacobian == JacobianPolicy::Reuse);
    CHECK(c.initial == "expr: 0.5*cos(pi*x) - (y < 0.3)");
    CHECK(c.seed == 123456789012ull);
    CHECK(c.exact.kind == ExactSpec::Kind::Constant);
    CHECK(c.exact.constant == 0.25);
    CHECK(c.output_dir == "out dir/run 1");
    CHECK(c.snapshots == std::vector<double>{0.0, 1e-4, 2.5e-4});
    CHECK(c.linear == LinearSolverKind::BiCGStab);
    CHECK(c.convergence_levels == std::vector<int>{4, 8});
    CHECK_NOTHROW(c.validate());

    const RunConfig back = parse_config(serialize_config(c));
    CHECK(back == c);
    CHECK(serialize_config(back) == serialize_config(c));

    // defaults survive too, including awkward doubles
    RunConfig d;
    d.steps = 3;
    d.gamma = 0.1 + 0.2;
    d.dt = 1.0 / 3.0;
    CHECK(parse_config(serialize_config(d)) == d);
}

TEST_CASE("config errors")
{
    CHECK_THROWS_AS(parse_config("unknown.key = 1"), ConfigError);
    CHECK_THROWS_AS(parse_config("gamma = 1\ngamma = 2"), ConfigError);
    CHECK_THROWS_AS(parse_config("gamma 1"), ConfigError);
    CHECK_THROWS_AS(parse_config("gamma = abc"), ConfigError);
    CHECK_THROWS_AS(parse_config("steps = 1.5"), ConfigError);
    CHECK_THROWS_AS(parse_config("mesh = hex:4"), ConfigError);
    CHECK_THROWS_AS(parse_config("mesh = quad:0"), ConfigError);
    CHECK_THROWS_AS(parse_config("initial = expr: 1 +"), ConfigError);
    CHECK_THROWS_AS(parse_config("newton.jacobian = sometimes"), ConfigError);
    CHECK_THROWS_AS(parse_config("deterministic = maybe"), ConfigError);

    auto invalid = [](const std::string& text) {
        const RunConfig c = parse_config(text);
        CHECK_THROWS_AS(c.validate(), ConfigError);
    };
    invalid("steps = 1\ndt = 0");
    invalid("steps = 1\ndt = -1e-3");
    invalid("steps = 1\ngamma = 0");
    invalid("dt = 0.1");                           // neither T nor N
    invalid("dt = 0.1\nsteps = 2\nfinal_time = 0.2");  // both
    invalid("dt = 0.1\nfinal_time = 0.25");         // not a multiple of dt
    invalid("dt = 0.1\nsteps = 2\noutput.snapshots = 0.5");
    invalid("dt = 0.1\nsteps = 2\nnewton.tol = 0");
    invalid("dt = 0.1\nsteps = 2\nforcing = constant:1");
    CHECK_NOTHROW(parse_config("dt = 0.1\nsteps = 2\noutput.snapshots = 0, 0.2").validate());
}

TEST_CASE("environment overrides")
{
    CHECK(env_name("newton.tol") == "C1VEM_NEWTON_TOL");
    CHECK(env_name("output.dir") == "C1VEM_OUTPUT_DIR");
    RunConfig c = parse_config("steps = 10\ngamma = 0.5");
    const std::map<std::string, std::string> env = {
        {"C1VEM_GAMMA", "0.25"}, {"C1VEM_FINAL_TIME", "1e-3"}, {"C1VEM_UNRELATED", "x"}};
    const auto applied = apply_env_overrides(c, [&](const std::string& k) -> std::optional<std::string> {
        const auto it = env.find(k);
        if (it == env.end()) return std::nullopt;
        return it->second;
    });
    CHECK(applied == std::vector<std::string>{"gamma", "final_time"});
    CHECK(c.gamma == 0.25);
    CHECK(c.final_time == 1e-3);
    CHECK(!c.steps);  // exclusive with final_time
    CHECK_THROWS_AS(apply_env_overrides(c, [](const std::string& k) -> std::optional<std::string> {
        if (k == "C1VEM_DT") return "fast";
        return std::nullopt;
    }),
                    ConfigError);
}

TEST_CASE("shipped configs parse and validate")
{
    for (const char* name : {"test1_convergence.cfg", "test2_ellipse.cfg", "test3_cross.cfg", "test4_spinodal.cfg",
                             "smoke.cfg"}) {
        CAPTURE(name);
        const RunConfig c = load_config_file(std::string("../configs/") + name);
        CHECK_NOTHROW(c.validate());
        CHECK(parse_config(serialize_config(c)) == c);
    }
    const RunConfig t2 = load_config_file("../configs/test2_ellipse.cfg");
    CHECK(t2.gamma == 0.01);
    CHECK(t2.dt == 5e-5);
    CHECK(t2.snapshots == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(t2.num_steps() == 20000);
    CHECK(load_config_file("../configs/test3_cross.cfg").snapshots == std::vector<double>{0.0, 0.05, 1.0});
    CHECK_THROWS_AS(load_config_file("../configs/missing.cfg"), IoError);
}

TEST_CASE("run writes series, snapshots and manifest")
{
    const fs::path dir = scratch("run");
    std::ostringstream log;
    RunConfig c = small_run(dir);
    c.log_every = 1;
    const RunResult r = run_simulation(c, log);
    CHECK(r.final.step == 5);
    CHECK(r.snapshots.size() == 2);
    CHECK(fs::exists(dir / "u_000000.vtk"));
    CHECK(fs::exists(dir / "u_000005.vtk"));

    std::istringstream csv(slurp(dir / "series.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "step,t,mass,energy,newton_iters,residual");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 6);

    const std::string manifest = slurp(dir / "manifest.json");
    CHECK(manifest.find("\"status\": \"complete\"") != std::string::npos);

    // one log line per step, including the initial state
    int log_lines = 0;
    std::istringstream ls(log.str());
    while (std::getline(ls, line)) log_lines += line.rfind("step", 0) == 0;
    CHECK(log_lines == 6);

    const std::string vtk = slurp(dir / "u_000005.vtk");
    CHECK(vtk.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
    CHECK(vtk.find("CELLS 64 320") != std::string::npos);
    CHECK(vtk.find("pi0 6 64 double") != std::string::npos);
    CHECK(vtk.find("VECTORS grad_u double") != std::string::npos);
}

TEST_CASE("zero datum stays zero")
{
    const fs::path dir = scratch("zero");
    RunConfig c = small_run(dir);
    c.initial = "zero";
    std::ostringstream log;
    const RunResult r = run_simulation(c, log);
    CHECK(r.final.w.cwiseAbs().maxCoeff() == 0.0);
    std::istringstream csv(slurp(dir / "series.csv"));
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
        std::istringstream fields(line);
        std::string step, t, mass;
        std::getline(fields, step, ',');
        std::getline(fields, t, ',');
        std::getline(fields, mass, ',');
        CHECK(mass == "0");
    }
    const std::string vtk = slurp(dir / "u_000005.vtk");
    const auto begin = vtk.find("LOOKUP_TABLE default\n") + 21;
    const auto end = vtk.find("VECTORS");
    std::istringstream values(vtk.substr(begin, end - begin));
    double v = 0.0, worst = 0.0;
    while (values >> v) worst = std::max(worst, std::abs(v));
    CHECK(worst == 0.0);
}

TEST_CASE("deterministic runs give byte-identical CSV")
{
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    std::ostringstream log;
    RunConfig ca = small_run(a), cb = small_run(b);
    ca.threads = cb.threads = 3;
    run_simulation(ca, log);
    run_simulation(cb, log);
    const std::string sa = slurp(a / "series.csv"), sb = slurp(b / "series.csv");
    CHECK(!sa.empty());
    CHECK(sa == sb);
    CHECK(slurp(a / "u_000005.vtk") == slurp(b / "u_000005.vtk"));

    RunConfig cc = small_run(scratch("det_c"));
    cc.seed = 8;
    run_simulation(cc, log);
    CHECK(slurp(fs::path(cc.output_dir) / "series.csv") != sa);
}

TEST_CASE("failed run leaves an incomplete manifest")
{
    const fs::path dir = scratch("fail");
    RunConfig c = small_run(dir);
    c.newton_max_iter = 1;
    c.newton_tol = 1e-14;
    std::ostringstream log;
    CHECK_THROWS_AS(run_simulation(c, log), SolverError);
    const std::string manifest = slurp(dir / "manifest.json");
    CHECK(manifest.find("\"status\": \"incomplete\"") != std::string::npos);
    CHECK(manifest.find("\"error\"") != std::string::npos);
    CHECK(fs::exists(dir / "series.csv"));
}

TEST_CASE("convergence table")
{
    SUBCASE("rates from synthetic levels")
    {
        std::vector<ConvergenceLevel> levels(3);
        for (int i = 0; i < 3; ++i) {
            const double h = 1.0 / (8 << i);
            levels[i].n = 8 << i;
            levels[i].h = h;
            levels[i].errors = {3 * h, 5 * h * h, 7 * h * h};
            levels[i].ok = true;
        }
        levels[2].ok = false;
        const auto t = compute_rates(levels);
        CHECK(!t.rates[0][0].value);
        CHECK(*t.rates[1][0].value == doctest::Approx(1.0));
        CHECK(*t.rates[1][1].value == doctest::Approx(2.0));
        CHECK(*t.rates[1][2].value == doctest::Approx(2.0));
        CHECK(!t.rates[2][0].value);
        std::ostringstream csv;
        write_convergence_csv(csv, t);
        CHECK(csv.str().find("failed") != std::string::npos);
    }
    SUBCASE("stationary constant is exact on every level")
    {
        RunConfig c = parse_config("steps = 3\ndt = 1e-4\ngamma = 0.1\nexact = constant:0.3\nconvergence.levels = 2, 4\n"
                                   "threads = 1\ndiagnostics.energy_every = 0");
        std::ostringstream log;
        const auto t = run_convergence(c, log);
        REQUIRE(t.levels.size() == 2);
        for (const auto& l : t.levels) {
            CHECK(l.ok);
            CHECK(l.errors.l2 <= kExactErrorLevel);
            CHECK(l.errors.h1 <= kExactErrorLevel);
            CHECK(l.errors.h2 <= kExactErrorLevel);
        }
        for (const auto& r : t.rates[1]) CHECK(r.exact);
        std::ostringstream table;
        print_convergence_table(table, t);
        CHECK(table.str().find("exact") != std::string::npos);
    }
    SUBCASE("single level has no rates")
    {
        RunConfig c = parse_config("steps = 2\ndt = 1e-6\ngamma = 0.1\nexact = manufactured\nmesh = quad:4\n"
                                   "threads = 1\ndiagnostics.energy_every = 0");
        std::ostringstream log;
        const auto t = run_convergence(c, log);
        REQUIRE(t.levels.size() == 1);
        CHECK(t.levels[0].ok);
        CHECK(t.levels[0].errors.l2 > 0.0);
        for (const auto& r : t.rates[0]) CHECK((!r.value && !r.exact));
    }
    CHECK_THROWS_AS(run_convergence(parse_config("steps = 1"), std::cout), ConfigError);
}

TEST_CASE("meshgen specs")
{
    CHECK(generate_from_spec("quad(2)").num_cells() == 4);
    CHECK(generate_from_spec("tri(2)").num_cells() == 8);
    CHECK(generate_from_spec("quad:3").num_cells() == 9);
    for (const char* bad : {"quad(0)", "hex(2)", "quad(x)", "quad", "tri(2"})
        CHECK_THROWS_AS(generate_from_spec(bad), ConfigError);

    const fs::path dir = scratch("mesh");
    fs::create_directories(dir);
    const fs::path file = dir / "q128.json";
    {
        std::ofstream out(file);
        write_mesh_json(out, generate_from_spec("quad(128)"));
    }
    CHECK(load_mesh_file(file.string()).num_cells() == 16384);
}

TEST_CASE("exit codes")
{
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(ParseError("x")) == 2);
    CHECK(exit_code_for(SolverError("x")) == 3);
    CHECK(exit_code_for(IoError("x")) == 4);
    CHECK(exit_code_for(std::runtime_error("x")) == 1);

    const fs::path dir = scratch("exit");
    fs::create_directories(dir);
    const std::string cfg = "../configs/smoke.cfg";
    const std::string out = " -o " + (dir / "out").string();
    CHECK(run_cli("run " + cfg + " --set dt=0" + out) == 2);
    CHECK(run_cli("run " + cfg + " --set dt=-1e-5" + out) == 2);
    CHECK(run_cli("run " + cfg + " --set no.such=1" + out) == 2);
    CHECK(run_cli("run missing.cfg") == 4);
    CHECK(run_cli("run " + cfg + " --set mesh=file:/nonexistent/m.json" + out) == 4);
    CHECK(run_cli("run " + cfg + " --set newton.max_iter=1 --set newton.tol=1e-14" + out) == 3);
    CHECK(run_cli("bogus") == 2);
    CHECK(run_cli("meshgen 'hex(3)' -o " + (dir / "m.json").string()) == 2);
    CHECK(run_cli("meshgen 'quad(2)' -o " + (dir / "m.json").string()) == 0);
    CHECK(load_mesh_file((dir / "m.json").string()).num_cells() == 4);
    CHECK(run_cli("run " + cfg + " --set steps=2 --set output.snapshots=0 -q" + out) == 0);
}

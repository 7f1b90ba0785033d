#include "c1vem/config.hpp"

#include "c1vem/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace c1vem {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& s)
{
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || s.empty())
        throw ConfigError("config key '" + key + "': expected a number, got '" + s + "'");
    return v;
}

template <class Int>
Int to_int(const std::string& key, const std::string& s)
{
    Int v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || s.empty())
        throw ConfigError("config key '" + key + "': expected an integer, got '" + s + "'");
    return v;
}

bool to_bool(const std::string& key, const std::string& s)
{
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + s + "'");
}

// shortest representation that reads back to the same double
std::string fmt(double v)
{
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <class T>
std::string fmt_list(const std::vector<T>& xs)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_floating_point_v<T>) out += fmt(xs[i]);
        else out += std::to_string(xs[i]);
    }
    return out;
}

struct Key {
    const char* name;
    const char* fallback;  ///< default as written in the schema
    const char* help;
    void (*set)(RunConfig&, const std::string& key, const std::string& value);
    /// Empty optional: key is omitted from the canonical text.
    std::optional<std::string> (*get)(const RunConfig&);
};

JacobianPolicy parse_policy(const std::string& key, const std::string& s)
{
    if (s == "exact") return JacobianPolicy::Exact;
    if (s == "reuse") return JacobianPolicy::Reuse;
    throw ConfigError("config key '" + key + "': expected exact or reuse, got '" + s + "'");
}

const std::vector<Key>& keys()
{
    using C = RunConfig;
    using S = const std::string&;
    static const std::vector<Key> table = {
        {"mesh", "quad:32", "quad:n | tri:n | file:<path> (.json native, otherwise off-poly)",
         [](C& c, S, S v) { c.mesh = MeshSource::parse(v); },
         [](const C& c) -> std::optional<std::string> { return c.mesh.to_string(); }},
        {"gamma", "0.01", "interface parameter, > 0", [](C& c, S k, S v) { c.gamma = to_double(k, v); },
         [](const C& c) -> std::optional<std::string> { return fmt(c.gamma); }},
        {"dt", "5e-05", "time step k, > 0", [](C& c, S k, S v) { c.dt = to_double(k, v); },
         [](const C& c) -> std::optional<std::string> { return fmt(c.dt); }},
        {"t0", "0", "initial time", [](C& c, S k, S v) { c.t0 = to_double(k, v); },
         [](const C& c) -> std::optional<std::string> { return fmt(c.t0); }},
        {"final_time", "(unset)", "final time T; exactly one of final_time and steps",
         [](C& c, S k, S v) { c.final_time = to_double(k, v); },
         [](const C& c) -> std::optional<std::string> {
             if (!c.final_time) return std::nullopt;
             return fmt(*c.final_time);
         }},
        {"steps", "(unset)", "number of time steps N", [](C& c, S k, S v) { c.steps = to_int<int>(k, v); },
         [](const C& c) -> std::optional<std::string> {
             if (!c.steps) return std::nullopt;
             return std::to_string(*c.steps);
         }},
        {"newton.tol", "1e-06", "relative residual tolerance",
         [](C& c, S k, S v) { c.newton_tol = to_double(k, v); },
         [](const C& c) -> std::optional<std::string> { return fmt(c.newton_tol); }},
        {"newton.max_iter", "25", "iteration cap per step",
         [](C& c, S k, S v) { c.newton_max_iter = to_int<int>(k, v); },
         [](const C& c) -> std::optional<std::string> { return std::to_string(c.newton_max_iter); }},
        {"newton.line_search", "false", "backtracking by halving",
         [](C& c, S k, S v) { c.newton_line_search = to_bool(k, v); },
         [](const C& c) -> std::optional<std::string> { return fmt(c.newton_line_search); }},
        {"newton.max_halvings", "8", "backtracking cap",
         [](C& c, S k, S v) { c.newton_max_halvings = to_int<int>(k, v); },
         [](const C& c) -> std::optional<std::string> { return std::to_string(c.newton_max_halvings); }},
        {"newton.jacobian", "exact", "exact | reuse (keep the factorization while the residual contracts)",
         [](C& c, S k, S v) { c.newton_jacobian = parse_policy(k, v); },
         [](const C& c) -> std::optional<std::string> {
             return std::string(c.newton_jacobian == JacobianPolicy::Exact ? "exact" : "reuse");
         }},
        {"newton.adaptive_depth", "0", "split a failed step into halves at most this deep",
         [](C& c, S k, S v) { c.adaptive_depth = to_int<int>(k, v); },
         [](const C& c) -> std::optional<std::string> { return std::to_string(c.adaptive_depth); }},
        {"initial", "zero", "zero | constant:c | ellipse | cross | random | manufactured | expr:<expression>",
         [](C& c, S, S v) {
             InitialDatum::parse(v);
             c.initial = v;
         },
         [](const C& c) -> std::optional<std::string> { return c.initial; }},
        {"seed", "42", "random datum seed", [](C& c, S k, S v) { c.seed = to_int<std::uint64_t>(k, v); },
         [](const C& c) -> std::optional<std::string> { return std::to_string(c.seed); }},
        {"smoothing", "0", "box mollifier width for discontinuous data (0: gradients set to zero)",
         [](C& c, S k, S v) { c.smoothing = to_double(k, v); },
         [](const C& c) -> std::optional<std::string> { return fmt(c.smoothing); }},
        {"forcing", "none", "none | manufactured", [](C& c, S, S v) { c.forcing = ExactSpec::parse(v); },
         [](const C& c) -> std::optional<std::string> { return c.forcing.to_string(); }},
        {"exact", "none", "convergence reference: none | manufactured | constant:c",
         [](C& c, S, S v) { c.exact = ExactSpec::parse(v); },
         [](const C& c) -> std::optional<std::string> { return c.exact.to_string(); }},
        {"output.dir", "output", "directory for snapshots, series.csv and manifest.json",
         [](C& c, S, S v) { c.output_dir = v; },
         [](const C& c) -> std::optional<std::string> { return c.output_dir; }},
        {"output.snapshots", "(empty)", "comma-separated snapshot times",
         [](C& c, S k, S v) {
             c.snapshots.clear();
             for (const auto& s : split_list(v)) c.snapshots.push_back(to_double(k, s));
         },
         [](const C& c) -> std::optional<std::string> { return fmt_list(c.snapshots); }},
        {"output.vtk", "true", "write VTK snapshots", [](C& c, S k, S v) { c.write_vtk = to_bool(k, v); },
         [](const C& c) -> std::optional<std::string> { return fmt(c.write_vtk); }},
        {"output.log_every", "1", "console line every this many steps (0: quiet)",
         [](C& c, S k, S v) { c.log_every = to_int<int>(k, v); },
         [](const C& c) -> std::optional<std::string> { return std::to_string(c.log_every); }},
        {"diagnostics.energy_every", "1", "energy evaluation cadence in steps (0: never)",
         [](C& c, S k, S v) { c.energy_every = to_int<int>(k, v); },
         [](const C& c) -> std::optional<std::string> { return std::to_string(c.energy_every); }},
        {"solver.linear", "direct", "direct | bicgstab", [](C& c, S, S v) { c.linear = parse_linear_solver(v); },
         [](const C& c) -> std::optional<std::string> { return to_string(c.linear); }},
        {"threads", "0", "assembly workers (0: hardware concurrency)",
         [](C& c, S k, S v) { c.threads = to_int<int>(k, v); },
         [](const C& c) -> std::optional<std::string> { return std::to_string(c.threads); }},
        {"deterministic", "true", "order-fixed reductions for bitwise reproducibility",
         [](C& c, S k, S v) { c.deterministic = to_bool(k, v); },
         [](const C& c) -> std::optional<std::string> { return fmt(c.deterministic); }},
        {"convergence.family", "quad", "quad | tri mesh family for the convergence driver",
         [](C& c, S k, S v) {
             if (v != "quad" && v != "tri") throw ConfigError("config key '" + k + "': expected quad or tri");
             c.convergence_family = v;
         },
         [](const C& c) -> std::optional<std::string> { return c.convergence_family; }},
        {"convergence.levels", "(empty)", "comma-separated subdivisions n",
         [](C& c, S k, S v) {
             c.convergence_levels.clear();
             for (const auto& s : split_list(v)) c.convergence_levels.push_back(to_int<int>(k, s));
         },
         [](const C& c) -> std::optional<std::string> { return fmt_list(c.convergence_levels); }},
    };
    return table;
}

const Key* find_key(const std::string& name)
{
    for (const auto& k : keys())
        if (name == k.name) return &k;
    return nullptr;
}

void assign(RunConfig& c, const Key& key, const std::string& value)
{
    try {
        key.set(c, key.name, value);
    } catch (const ConfigError&) {
        throw;
    } catch (const ParseError& e) {
        throw ConfigError(std::string("config key '") + key.name + "': " + e.what());
    }
}

} // namespace

MeshSource MeshSource::parse(const std::string& spec)
{
    MeshSource m;
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ConfigError("mesh spec '" + spec + "': expected quad:n, tri:n or file:<path>");
    const std::string head = spec.substr(0, colon), arg = spec.substr(colon + 1);
    if (head == "file") {
        if (arg.empty()) throw ConfigError("mesh spec '" + spec + "': empty path");
        m.kind = Kind::File;
        m.path = arg;
        m.n = 0;
        return m;
    }
    if (head == "quad") m.kind = Kind::Quad;
    else if (head == "tri") m.kind = Kind::Tri;
    else throw ConfigError("mesh spec '" + spec + "': unknown generator '" + head + "'");
    m.n = to_int<int>("mesh", arg);
    if (m.n < 1) throw ConfigError("mesh spec '" + spec + "': n must be positive");
    return m;
}

std::string MeshSource::to_string() const
{
    switch (kind) {
    case Kind::Quad: return "quad:" + std::to_string(n);
    case Kind::Tri: return "tri:" + std::to_string(n);
    case Kind::File: return "file:" + path;
    }
    return {};
}

PolygonalMesh MeshSource::build() const
{
    switch (kind) {
    case Kind::Quad: return generate_quad_mesh(n);
    case Kind::Tri: return generate_tri_mesh(n);
    case Kind::File: {
        std::ifstream probe(path);
        if (!probe) throw IoError("cannot open mesh file '" + path + "'");
        return load_mesh_file(path);
    }
    }
    return {};
}

ExactSpec ExactSpec::parse(const std::string& spec)
{
    ExactSpec e;
    if (spec == "none") return e;
    if (spec == "manufactured") {
        e.kind = Kind::Manufactured;
        return e;
    }
    if (spec.rfind("constant:", 0) == 0) {
        e.kind = Kind::Constant;
        e.constant = to_double("exact", spec.substr(9));
        return e;
    }
    throw ConfigError("unknown reference solution '" + spec + "'");
}

std::string ExactSpec::to_string() const
{
    switch (kind) {
    case Kind::None: return "none";
    case Kind::Manufactured: return "manufactured";
    case Kind::Constant: return "constant:" + fmt(constant);
    }
    return {};
}

int RunConfig::num_steps() const
{
    if (steps) return *steps;
    if (final_time) return static_cast<int>(std::llround((*final_time - t0) / dt));
    return 0;
}

double RunConfig::end_time() const { return t0 + num_steps() * dt; }

int RunConfig::resolved_threads() const
{
    if (threads > 0) return threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

InitialDatum RunConfig::initial_datum() const
{
    InitialDatum d = InitialDatum::parse(initial);
    d.seed = seed;
    d.gamma = gamma;
    d.t0 = t0;
    d.smoothing = smoothing;
    return d;
}

StepperOptions RunConfig::stepper_options() const
{
    StepperOptions o;
    o.gamma = gamma;
    o.k = dt;
    o.newton.tol = newton_tol;
    o.newton.max_iter = newton_max_iter;
    o.newton.line_search = newton_line_search;
    o.newton.max_halvings = newton_max_halvings;
    o.newton.jacobian = newton_jacobian;
    o.linear = linear;
    o.threads = resolved_threads();
    o.deterministic = deterministic;
    o.energy_every = energy_every;
    o.adaptive_depth = adaptive_depth;
    return o;
}

void RunConfig::validate() const
{
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive, got " + fmt(gamma));
    require(std::isfinite(dt) && dt > 0.0, "dt must be positive, got " + fmt(dt));
    require(std::isfinite(t0), "t0 must be finite");
    require(final_time.has_value() != steps.has_value(), "exactly one of final_time and steps must be given");
    if (steps) require(*steps >= 0, "steps must be non-negative");
    if (final_time) {
        require(std::isfinite(*final_time) && *final_time >= t0, "final_time must not precede t0");
        const double n = (*final_time - t0) / dt;
        require(std::abs(n - std::round(n)) <= 1e-6 * std::max(1.0, n),
                "final_time - t0 = " + fmt(*final_time - t0) + " is not a multiple of dt = " + fmt(dt));
    }
    const double T = end_time();
    for (double s : snapshots)
        require(s >= t0 - 0.5 * dt && s <= T + 0.5 * dt,
                "snapshot time " + fmt(s) + " outside [" + fmt(t0) + ", " + fmt(T) + "]");
    require(newton_tol > 0.0, "newton.tol must be positive");
    require(newton_max_iter >= 1, "newton.max_iter must be at least 1");
    require(newton_max_halvings >= 0, "newton.max_halvings must be non-negative");
    require(adaptive_depth >= 0, "newton.adaptive_depth must be non-negative");
    require(smoothing >= 0.0, "smoothing must be non-negative");
    require(log_every >= 0 && energy_every >= 0, "cadences must be non-negative");
    require(threads >= 0, "threads must be non-negative");
    require(forcing.kind != ExactSpec::Kind::Constant, "forcing must be none or manufactured");
    require(!output_dir.empty(), "output.dir must not be empty");
    for (int n : convergence_levels) require(n >= 1, "convergence levels must be positive");
    InitialDatum::parse(initial);
}

RunConfig parse_config(const std::string& text)
{
    RunConfig c;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string name = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        const Key* key = find_key(name);
        if (!key) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + name + "'");
        if (!seen.insert(name).second)
            throw ConfigError("config line " + std::to_string(lineno) + ": repeated key '" + name + "'");
        assign(c, *key, value);
    }
    return c;
}

RunConfig load_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c)
{
    std::string out;
    for (const auto& k : keys())
        if (const auto v = k.get(c)) out += std::string(k.name) + " = " + *v + "\n";
    return out;
}

std::string env_name(const std::string& key)
{
    std::string out = "C1VEM_";
    for (char ch : key) out += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

std::vector<std::string> apply_env_overrides(RunConfig& c, const EnvLookup& lookup)
{
    std::vector<std::string> applied;
    for (const auto& k : keys())
        if (const auto v = lookup(env_name(k.name))) {
            const std::string name = k.name;
            // final_time and steps are exclusive; an override of one clears the other
            if (name == "final_time") c.steps.reset();
            if (name == "steps") c.final_time.reset();
            assign(c, k, trim(*v));
            applied.push_back(name);
        }
    return applied;
}

std::vector<std::string> apply_env_overrides(RunConfig& c)
{
    return apply_env_overrides(c, [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    });
}

std::string config_schema()
{
    std::ostringstream os;
    for (const auto& k : keys()) os << k.name << " [" << k.fallback << "]: " << k.help << "\n";
    return os.str();
}

} // namespace c1vem

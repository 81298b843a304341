#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "parsplit/applications.hpp"
#include "parsplit/block_vector.hpp"
#include "parsplit/coupling.hpp"
#include "parsplit/operators.hpp"
#include "parsplit/prox.hpp"
#include "parsplit/solver.hpp"

namespace parsplit {

using json = nlohmann::json;

/// Schema or semantic problem in a configuration; the message names the field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// c/(n+1)^2 perturbations; every budget is c * pi^2 / 6.
struct ErrorSettings {
    double a = 0.0;
    double b = 0.0;
    double lambda = 0.0;

    bool any() const noexcept { return a != 0.0 || b != 0.0 || lambda != 0.0; }
    bool operator==(const ErrorSettings&) const = default;
};

struct SolverSettings {
    std::optional<double> gamma;  ///< constant step; default beta
    std::optional<double> epsilon;
    double lambda = 0.0;
    double tol = 1e-8;
    std::size_t max_iter = 100000;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
    ErrorSettings errors;

    bool operator==(const SolverSettings&) const = default;
};

/// One problem file. `problem` keeps the kind-specific table verbatim; it is
/// validated when the problem is built.
struct ProblemConfig {
    std::string name;
    std::string kind;
    json problem = json::object();
    std::optional<double> beta_override;
    /// null: zeros, "random": seeded Gaussian, otherwise one array per block
    json x0;
    SolverSettings solver;

    bool operator==(const ProblemConfig&) const = default;
};

inline const std::vector<std::string>& config_kinds()
{
    static const std::vector<std::string> kinds = {"best_approx", "image_decomposition", "source_separation",
                                                   "traffic",     "two_agent",           "coupled_inclusion"};
    return kinds;
}

namespace config_detail {

inline void require_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed)
{
    if (!j.is_object()) {
        throw ConfigError(path + ": expected an object");
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!ok.count(key)) {
            throw ConfigError(path + "." + key + ": unknown field");
        }
    }
}

inline const json& field(const json& j, const std::string& key, const std::string& path)
{
    if (!j.is_object()) {
        throw ConfigError(path + ": expected an object");
    }
    auto it = j.find(key);
    if (it == j.end()) {
        throw ConfigError(path + "." + key + ": missing required field");
    }
    return *it;
}

inline double number(const json& j, const std::string& path)
{
    if (!j.is_number()) {
        throw ConfigError(path + ": expected a number");
    }
    return j.get<double>();
}

inline std::size_t count(const json& j, const std::string& path)
{
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
        throw ConfigError(path + ": expected a nonnegative integer");
    }
    return j.get<std::size_t>();
}

inline Vector vector(const json& j, const std::string& path)
{
    if (!j.is_array()) {
        throw ConfigError(path + ": expected an array of numbers");
    }
    Vector v;
    for (std::size_t k = 0; k < j.size(); ++k) {
        v.push_back(number(j[k], path + "[" + std::to_string(k) + "]"));
    }
    return v;
}

inline std::vector<Vector> rows(const json& j, const std::string& path)
{
    if (!j.is_array()) {
        throw ConfigError(path + ": expected an array of arrays");
    }
    std::vector<Vector> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        out.push_back(vector(j[k], path + "[" + std::to_string(k) + "]"));
    }
    return out;
}

inline std::vector<std::size_t> indices(const json& j, const std::string& path)
{
    if (!j.is_array()) {
        throw ConfigError(path + ": expected an array of indices");
    }
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        out.push_back(count(j[k], path + "[" + std::to_string(k) + "]"));
    }
    return out;
}

inline std::string text(const json& j, const std::string& path)
{
    if (!j.is_string()) {
        throw ConfigError(path + ": expected a string");
    }
    return j.get<std::string>();
}

// Runs a library constructor and reports its complaint against the field path.
template <class F>
auto guarded(const std::string& path, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline ConvexSet parse_set(const json& j, const std::string& path)
{
    const std::string type = text(field(j, "type", path), path + ".type");
    if (type == "box") {
        require_keys(j, path, {"type", "lo", "hi"});
        Vector lo = vector(field(j, "lo", path), path + ".lo");
        Vector hi = vector(field(j, "hi", path), path + ".hi");
        return guarded(path, [&] { return ConvexSet::box(lo, hi); });
    }
    if (type == "ball") {
        require_keys(j, path, {"type", "center", "radius"});
        Vector c = vector(field(j, "center", path), path + ".center");
        double r = number(field(j, "radius", path), path + ".radius");
        return guarded(path, [&] { return ConvexSet::ball(c, r); });
    }
    if (type == "halfspace" || type == "hyperplane") {
        require_keys(j, path, {"type", "a", "b"});
        Vector a = vector(field(j, "a", path), path + ".a");
        double b = number(field(j, "b", path), path + ".b");
        return guarded(path, [&] { return type == "halfspace" ? ConvexSet::halfspace(a, b) : ConvexSet::hyperplane(a, b); });
    }
    if (type == "singleton") {
        require_keys(j, path, {"type", "point"});
        Vector p = vector(field(j, "point", path), path + ".point");
        return guarded(path, [&] { return ConvexSet::singleton(p); });
    }
    if (type == "simplex") {
        require_keys(j, path, {"type", "dim", "groups", "masses"});
        std::size_t d = count(field(j, "dim", path), path + ".dim");
        const json& g = field(j, "groups", path);
        if (!g.is_array()) {
            throw ConfigError(path + ".groups: expected an array of index arrays");
        }
        std::vector<std::vector<std::size_t>> groups;
        for (std::size_t k = 0; k < g.size(); ++k) {
            groups.push_back(indices(g[k], path + ".groups[" + std::to_string(k) + "]"));
        }
        Vector masses = vector(field(j, "masses", path), path + ".masses");
        return guarded(path, [&] { return ConvexSet::scaled_simplex(d, groups, masses); });
    }
    if (type == "affine") {
        require_keys(j, path, {"type", "origin", "spanning"});
        Vector o = vector(field(j, "origin", path), path + ".origin");
        auto s = rows(field(j, "spanning", path), path + ".spanning");
        return guarded(path, [&] { return ConvexSet::affine_subspace(o, s); });
    }
    throw ConfigError(path + ".type: unknown set type '" + type + "'");
}

inline ProxFunction parse_prox(const json& j, const std::string& path)
{
    const std::string type = text(field(j, "type", path), path + ".type");
    if (type == "zero") {
        require_keys(j, path, {"type", "dim"});
        std::size_t d = count(field(j, "dim", path), path + ".dim");
        return guarded(path, [&] { return ProxFunction::zero(d); });
    }
    if (type == "l1") {
        require_keys(j, path, {"type", "dim", "weight"});
        std::size_t d = count(field(j, "dim", path), path + ".dim");
        double w = number(field(j, "weight", path), path + ".weight");
        return guarded(path, [&] { return prox::l1_norm(d, w); });
    }
    if (type == "half_sq_distance") {
        require_keys(j, path, {"type", "z"});
        Vector z = vector(field(j, "z", path), path + ".z");
        return guarded(path, [&] { return prox::half_sq_distance(z); });
    }
    if (type == "indicator") {
        require_keys(j, path, {"type", "set"});
        return prox::indicator(parse_set(field(j, "set", path), path + ".set"));
    }
    throw ConfigError(path + ".type: unknown prox type '" + type + "'");
}

inline LinearMap parse_map(const json& j, const std::string& path)
{
    const std::string type = text(field(j, "type", path), path + ".type");
    if (type == "identity") {
        require_keys(j, path, {"type", "dim"});
        std::size_t d = count(field(j, "dim", path), path + ".dim");
        return guarded(path, [&] { return LinearMap::identity(d); });
    }
    if (type == "scaled_identity") {
        require_keys(j, path, {"type", "dim", "scale"});
        std::size_t d = count(field(j, "dim", path), path + ".dim");
        double c = number(field(j, "scale", path), path + ".scale");
        return guarded(path, [&] { return LinearMap::scaled_identity(d, c); });
    }
    if (type == "zero") {
        require_keys(j, path, {"type", "rows", "cols"});
        std::size_t r = count(field(j, "rows", path), path + ".rows");
        std::size_t c = count(field(j, "cols", path), path + ".cols");
        return guarded(path, [&] { return LinearMap::zero(r, c); });
    }
    if (type == "matrix") {
        require_keys(j, path, {"type", "rows"});
        auto r = rows(field(j, "rows", path), path + ".rows");
        return guarded(path, [&] { return LinearMap::from_matrix(DenseMatrix(r)); });
    }
    throw ConfigError(path + ".type: unknown linear map type '" + type + "'");
}

inline LinearGrid parse_grid(const json& j, const std::string& path)
{
    if (!j.is_array() || j.empty()) {
        throw ConfigError(path + ": expected a nonempty array of rows");
    }
    LinearGrid grid;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const std::string rp = path + "[" + std::to_string(k) + "]";
        if (!j[k].is_array()) {
            throw ConfigError(rp + ": expected an array of linear maps");
        }
        std::vector<LinearMap> row;
        for (std::size_t i = 0; i < j[k].size(); ++i) {
            row.push_back(parse_map(j[k][i], rp + "[" + std::to_string(i) + "]"));
        }
        grid.push_back(std::move(row));
    }
    return grid;
}

inline std::vector<ProxFunction> parse_prox_list(const json& j, const std::string& path)
{
    if (!j.is_array() || j.empty()) {
        throw ConfigError(path + ": expected a nonempty array");
    }
    std::vector<ProxFunction> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        out.push_back(parse_prox(j[k], path + "[" + std::to_string(k) + "]"));
    }
    return out;
}

} // namespace config_detail

inline void to_json(json& j, const SolverSettings& s)
{
    j = json::object();
    if (s.gamma) {
        j["gamma"] = *s.gamma;
    }
    if (s.epsilon) {
        j["epsilon"] = *s.epsilon;
    }
    j["lambda"] = s.lambda;
    j["tol"] = s.tol;
    j["max_iter"] = s.max_iter;
    j["workers"] = s.workers;
    j["seed"] = s.seed;
    if (s.errors.any()) {
        j["errors"] = {{"a", s.errors.a}, {"b", s.errors.b}, {"lambda", s.errors.lambda}};
    }
}

inline void from_json(const json& j, SolverSettings& s)
{
    using namespace config_detail;
    const std::string p = "solver";
    require_keys(j, p, {"gamma", "epsilon", "lambda", "tol", "max_iter", "workers", "seed", "errors"});
    s = SolverSettings{};
    if (j.contains("gamma") && !j["gamma"].is_null()) {
        s.gamma = number(j["gamma"], p + ".gamma");
    }
    if (j.contains("epsilon") && !j["epsilon"].is_null()) {
        s.epsilon = number(j["epsilon"], p + ".epsilon");
    }
    if (j.contains("lambda")) {
        s.lambda = number(j["lambda"], p + ".lambda");
    }
    if (j.contains("tol")) {
        s.tol = number(j["tol"], p + ".tol");
    }
    if (j.contains("max_iter")) {
        s.max_iter = count(j["max_iter"], p + ".max_iter");
    }
    if (j.contains("workers")) {
        s.workers = count(j["workers"], p + ".workers");
        if (s.workers == 0) {
            throw ConfigError(p + ".workers: must be at least 1");
        }
    }
    if (j.contains("seed")) {
        const json& v = j["seed"];
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw ConfigError(p + ".seed: expected a nonnegative integer");
        }
        s.seed = v.get<std::uint64_t>();
    }
    if (j.contains("errors")) {
        const json& e = j["errors"];
        require_keys(e, p + ".errors", {"a", "b", "lambda"});
        if (e.contains("a")) {
            s.errors.a = number(e["a"], p + ".errors.a");
        }
        if (e.contains("b")) {
            s.errors.b = number(e["b"], p + ".errors.b");
        }
        if (e.contains("lambda")) {
            s.errors.lambda = number(e["lambda"], p + ".errors.lambda");
        }
        if (s.errors.a < 0.0 || s.errors.b < 0.0 || s.errors.lambda < 0.0) {
            throw ConfigError(p + ".errors: magnitudes must be nonnegative");
        }
    }
}

inline void to_json(json& j, const ProblemConfig& c)
{
    j = json::object();
    if (!c.name.empty()) {
        j["name"] = c.name;
    }
    j["kind"] = c.kind;
    j["problem"] = c.problem;
    if (c.beta_override) {
        j["beta_override"] = *c.beta_override;
    }
    if (!c.x0.is_null()) {
        j["x0"] = c.x0;
    }
    j["solver"] = c.solver;
}

inline void from_json(const json& j, ProblemConfig& c)
{
    using namespace config_detail;
    require_keys(j, "config", {"name", "kind", "problem", "beta_override", "x0", "solver"});
    c = ProblemConfig{};
    if (j.contains("name")) {
        c.name = text(j["name"], "config.name");
    }
    c.kind = text(field(j, "kind", "config"), "config.kind");
    bool known = false;
    for (const auto& k : config_kinds()) {
        known = known || k == c.kind;
    }
    if (!known) {
        throw ConfigError("config.kind: unknown problem kind '" + c.kind + "'");
    }
    c.problem = field(j, "problem", "config");
    if (!c.problem.is_object()) {
        throw ConfigError("config.problem: expected an object");
    }
    if (j.contains("beta_override") && !j["beta_override"].is_null()) {
        c.beta_override = number(j["beta_override"], "config.beta_override");
        if (!(*c.beta_override > 0.0)) {
            throw ConfigError("config.beta_override: must be positive");
        }
    }
    if (j.contains("x0")) {
        c.x0 = j["x0"];
        if (!(c.x0.is_null() || c.x0 == "random" || c.x0.is_array())) {
            throw ConfigError("config.x0: expected null, \"random\" or an array of blocks");
        }
    }
    if (j.contains("solver")) {
        j["solver"].get_to(c.solver);
    }
}

/// Parses configuration text; syntax errors carry nlohmann's byte/line position.
inline ProblemConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    try {
        return j.get<ProblemConfig>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline ProblemConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot read '" + path + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

inline std::string dump_config(const ProblemConfig& c)
{
    return json(c).dump(2);
}

/// The assembled problem; `application` is empty for coupled_inclusion.
struct BuiltProblem {
    std::optional<Application> application;
    ProblemInstance instance;
};

namespace config_detail {

inline CouplingOperator parse_inclusion_coupling(const json& j, const std::string& path)
{
    const std::string type = text(field(j, "type", path), path + ".type");
    if (type == "mean_deviation") {
        require_keys(j, path, {"type", "blocks", "dim"});
        std::size_t m = count(field(j, "blocks", path), path + ".blocks");
        std::size_t d = count(field(j, "dim", path), path + ".dim");
        return guarded(path, [&] { return mean_deviation_coupling(m, d); });
    }
    if (type == "psd") {
        require_keys(j, path, {"type", "matrix", "dim"});
        auto xi = rows(field(j, "matrix", path), path + ".matrix");
        std::size_t d = count(field(j, "dim", path), path + ".dim");
        return guarded(path, [&] { return psd_matrix_coupling(DenseMatrix(xi), d); });
    }
    throw ConfigError(path + ".type: unknown coupling type '" + type + "'");
}

inline TrafficNetwork parse_network(const json& j, const std::string& path)
{
    require_keys(j, path, {"incidence", "links", "od_paths", "demands", "mode"});
    TrafficNetwork net;
    auto inc = rows(field(j, "incidence", path), path + ".incidence");
    net.incidence = guarded(path + ".incidence", [&] { return DenseMatrix(inc); });
    const json& links = field(j, "links", path);
    if (!links.is_array()) {
        throw ConfigError(path + ".links: expected an array of {slope, intercept}");
    }
    std::string mode = j.contains("mode") ? text(j["mode"], path + ".mode") : "wardrop";
    if (mode != "wardrop" && mode != "social") {
        throw ConfigError(path + ".mode: expected 'wardrop' or 'social'");
    }
    net.mode = mode == "social" ? TrafficMode::social : TrafficMode::wardrop;
    for (std::size_t k = 0; k < links.size(); ++k) {
        const std::string lp = path + ".links[" + std::to_string(k) + "]";
        require_keys(links[k], lp, {"slope", "intercept"});
        double a = number(field(links[k], "slope", lp), lp + ".slope");
        double b = number(field(links[k], "intercept", lp), lp + ".intercept");
        net.costs.push_back(guarded(lp, [&] { return LinkCost::affine(a, b); }));
        // d/dnu (nu (a nu + b)) = 2 a nu + b
        net.marginal_costs.push_back(guarded(lp, [&] { return LinkCost::affine(2.0 * a, b); }));
    }
    const json& od = field(j, "od_paths", path);
    if (!od.is_array()) {
        throw ConfigError(path + ".od_paths: expected an array of path index arrays");
    }
    for (std::size_t k = 0; k < od.size(); ++k) {
        net.od_paths.push_back(indices(od[k], path + ".od_paths[" + std::to_string(k) + "]"));
    }
    net.demands = rows(field(j, "demands", path), path + ".demands");
    return net;
}

inline Application build_application(const std::string& kind, const json& j)
{
    const std::string p = "problem";
    if (kind == "best_approx") {
        require_keys(j, p, {"sets", "weights"});
        const json& s = field(j, "sets", p);
        if (!s.is_array()) {
            throw ConfigError(p + ".sets: expected an array of sets");
        }
        std::vector<ConvexSet> sets;
        for (std::size_t k = 0; k < s.size(); ++k) {
            sets.push_back(parse_set(s[k], p + ".sets[" + std::to_string(k) + "]"));
        }
        Vector w = vector(field(j, "weights", p), p + ".weights");
        return guarded(p, [&] { return build_best_approximation(sets, w); });
    }
    if (kind == "image_decomposition") {
        require_keys(j, p, {"z", "priors"});
        Vector z = vector(field(j, "z", p), p + ".z");
        auto f = parse_prox_list(field(j, "priors", p), p + ".priors");
        return guarded(p, [&] { return build_image_decomposition(z, f); });
    }
    if (kind == "source_separation") {
        require_keys(j, p, {"grid", "observations", "priors"});
        LinearGrid grid = parse_grid(field(j, "grid", p), p + ".grid");
        auto z = rows(field(j, "observations", p), p + ".observations");
        auto f = parse_prox_list(field(j, "priors", p), p + ".priors");
        return guarded(p, [&] { return build_source_separation(grid, z, f); });
    }
    if (kind == "traffic") {
        TrafficNetwork net = parse_network(j, p);
        return guarded(p, [&] { return build_traffic(net); });
    }
    if (kind == "two_agent") {
        require_keys(j, p, {"f1", "f2", "L11", "L12", "psi"});
        ProxFunction f1 = parse_prox(field(j, "f1", p), p + ".f1");
        ProxFunction f2 = parse_prox(field(j, "f2", p), p + ".f2");
        LinearMap l11 = parse_map(field(j, "L11", p), p + ".L11");
        LinearMap l12 = parse_map(field(j, "L12", p), p + ".L12");
        TwoAgentPsi psi;
        if (j.contains("psi") && !j["psi"].is_null()) {
            const json& q = j["psi"];
            require_keys(q, p + ".psi", {"prox", "set"});
            if (q.contains("prox") == q.contains("set")) {
                throw ConfigError(p + ".psi: give exactly one of 'prox' or 'set'");
            }
            if (q.contains("prox")) {
                psi = parse_prox(q["prox"], p + ".psi.prox");
            } else {
                psi = parse_set(q["set"], p + ".psi.set");
            }
        }
        return guarded(p, [&] { return build_two_agent(f1, f2, l11, l12, psi); });
    }
    throw ConfigError("config.kind: '" + kind + "' is not an application kind");
}

} // namespace config_detail

inline BuiltProblem build_problem(const ProblemConfig& c)
{
    using namespace config_detail;
    std::optional<BuiltProblem> built;
    if (c.kind == "coupled_inclusion") {
        const std::string p = "problem";
        require_keys(c.problem, p, {"coupling", "resolvents"});
        CouplingOperator coupling = parse_inclusion_coupling(field(c.problem, "coupling", p), p + ".coupling");
        auto f = parse_prox_list(field(c.problem, "resolvents", p), p + ".resolvents");
        std::vector<ResolventOperator> res;
        for (const auto& fi : f) {
            res.push_back(prox_to_resolvent(fi));
        }
        built.emplace(BuiltProblem{std::nullopt, guarded(p, [&] { return ProblemInstance(res, coupling); })});
    } else {
        Application app = build_application(c.kind, c.problem);
        ProblemInstance inst = app.instance;
        built.emplace(BuiltProblem{std::move(app), std::move(inst)});
    }
    if (c.beta_override) {
        const double b = *c.beta_override;
        ProblemInstance overridden(built->instance.resolvents(), built->instance.coupling().with_beta(b));
        built->instance = std::move(overridden);
    }
    return std::move(*built);
}

inline BlockVector initial_point(const ProblemConfig& c, const std::vector<std::size_t>& dims)
{
    if (c.x0.is_null()) {
        return BlockVector(dims);
    }
    if (c.x0.is_string()) {
        std::mt19937_64 rng(c.solver.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<Vector> blocks;
        for (auto d : dims) {
            Vector v(d);
            for (auto& e : v) {
                e = normal(rng);
            }
            blocks.push_back(std::move(v));
        }
        return BlockVector(std::move(blocks));
    }
    auto blocks = config_detail::rows(c.x0, "config.x0");
    if (blocks.size() != dims.size()) {
        throw ConfigError("config.x0: expected " + std::to_string(dims.size()) + " blocks");
    }
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (blocks[i].size() != dims[i]) {
            throw ConfigError("config.x0[" + std::to_string(i) + "]: expected dimension " + std::to_string(dims[i]));
        }
    }
    return BlockVector(std::move(blocks));
}

/// Translates file settings into engine options.
inline SolverOptions solver_options(const ProblemConfig& c, const std::vector<std::size_t>& dims)
{
    const SolverSettings& s = c.solver;
    SolverOptions o;
    o.epsilon = s.epsilon;
    if (s.gamma) {
        o.gamma = constant_sequence(*s.gamma);
    }
    o.lambda = constant_sequence(s.lambda);
    o.tolerance = s.tol;
    o.max_iterations = s.max_iter;
    o.workers = s.workers;
    const double zeta2 = std::numbers::pi * std::numbers::pi / 6.0;
    auto along_ones = [](double c) {
        return [c](std::size_t, std::size_t n, std::size_t d) {
            const double r = c / (static_cast<double>(n + 1) * static_cast<double>(n + 1));
            return Vector(d, r / std::sqrt(static_cast<double>(d)));
        };
    };
    if (s.errors.a > 0.0) {
        o.a_errors = ErrorInjection{along_ones(s.errors.a), s.errors.a * zeta2};
    }
    if (s.errors.b > 0.0) {
        o.b_errors = ErrorInjection{along_ones(s.errors.b), s.errors.b * zeta2};
    }
    if (s.errors.lambda > 0.0) {
        const double base = s.lambda;
        const double c0 = s.errors.lambda;
        o.block_lambda = BlockRelaxation{[base, c0](std::size_t, std::size_t n) {
                                             return base + c0 / (static_cast<double>(n + 1) * static_cast<double>(n + 1));
                                         },
                                         c0 * zeta2};
    }
    (void)dims;
    return o;
}

/// Built-in demos, in listing order.
inline const std::vector<std::pair<std::string, std::string>>& demo_sources()
{
    static const std::vector<std::pair<std::string, std::string>> demos = {
        {"best-approx-demo", R"({
  "name": "best-approx-demo",
  "kind": "best_approx",
  "problem": {
    "sets": [
      {"type": "hyperplane", "a": [0, 1], "b": 0},
      {"type": "hyperplane", "a": [0, 1], "b": 1}
    ],
    "weights": [1]
  },
  "x0": [[3, -2], [-1, 4]],
  "solver": {"gamma": 0.3, "tol": 1e-10, "max_iter": 10000}
})"},
        {"image-demo", R"({
  "name": "image-demo",
  "kind": "image_decomposition",
  "problem": {
    "z": [1.0, 0.2, -0.4, 0.8],
    "priors": [
      {"type": "l1", "dim": 4, "weight": 0.1},
      {"type": "indicator", "set": {"type": "box", "lo": [0, 0, 0, 0], "hi": [0.5, 0.5, 0.5, 0.5]}},
      {"type": "half_sq_distance", "z": [0, 0, 0, 0]}
    ]
  },
  "solver": {"max_iter": 20000}
})"},
        {"source-separation-demo", R"({
  "name": "source-separation-demo",
  "kind": "source_separation",
  "problem": {
    "grid": [[{"type": "identity", "dim": 4}, {"type": "identity", "dim": 4}]],
    "observations": [[1.0, -0.5, 0.25, 2.0]],
    "priors": [
      {"type": "l1", "dim": 4, "weight": 0.1},
      {"type": "half_sq_distance", "z": [0.5, 0.5, 0.5, 0.5]}
    ]
  },
  "solver": {"max_iter": 20000}
})"},
        {"traffic-demo", R"({
  "name": "traffic-demo",
  "kind": "traffic",
  "problem": {
    "incidence": [[1, 0], [0, 1]],
    "links": [{"slope": 1, "intercept": 0}, {"slope": 2, "intercept": 0}],
    "od_paths": [[0, 1]],
    "demands": [[1]]
  },
  "solver": {"max_iter": 20000}
})"},
        {"two-agent-demo", R"({
  "name": "two-agent-demo",
  "kind": "two_agent",
  "problem": {
    "f1": {"type": "indicator", "set": {"type": "ball", "center": [0, 0], "radius": 1}},
    "f2": {"type": "indicator", "set": {"type": "box", "lo": [2, -1], "hi": [3, 1]}},
    "L11": {"type": "identity", "dim": 2},
    "L12": {"type": "scaled_identity", "dim": 2, "scale": -1}
  },
  "x0": [[0, 0], [3, 1]],
  "solver": {"max_iter": 20000}
})"},
        {"mean-deviation-demo", R"({
  "name": "mean-deviation-demo",
  "kind": "coupled_inclusion",
  "problem": {
    "coupling": {"type": "mean_deviation", "blocks": 3, "dim": 2},
    "resolvents": [
      {"type": "half_sq_distance", "z": [1, 0]},
      {"type": "half_sq_distance", "z": [0, 1]},
      {"type": "indicator", "set": {"type": "ball", "center": [2, 2], "radius": 0.5}}
    ]
  },
  "solver": {"max_iter": 20000}
})"},
    };
    return demos;
}

inline ProblemConfig demo_config(const std::string& name)
{
    for (const auto& [n, src] : demo_sources()) {
        if (n == name) {
            return parse_config(src);
        }
    }
    throw ConfigError("unknown demo '" + name + "'");
}

} // namespace parsplit

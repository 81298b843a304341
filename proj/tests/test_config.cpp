#include <gtest/gtest.h>

#include <string>

#include "parsplit/config.hpp"
#include "test_util.hpp"

using namespace parsplit;

namespace {

// Expects a ConfigError whose message starts with `prefix`.
template <class F>
void expect_config_error(F&& f, const std::string& prefix)
{
    try {
        f();
        ADD_FAILURE() << "no error, expected '" << prefix << "'";
    } catch (const ConfigError& e) {
        EXPECT_EQ(std::string(e.what()).rfind(prefix, 0), 0u) << e.what();
    }
}

ProblemConfig traffic_with(const std::string& links)
{
    return parse_config(R"({"kind": "traffic", "problem": {"incidence": [[1, 0], [0, 1]], "links": )" + links +
                        R"(, "od_paths": [[0, 1]], "demands": [[1]]}})");
}

} // namespace

TEST(Demos, RoundTripAndBuild)
{
    ASSERT_EQ(demo_sources().size(), 6u);
    for (const auto& [name, src] : demo_sources()) {
        ProblemConfig c = demo_config(name);
        EXPECT_EQ(c.name, name);
        ProblemConfig again = parse_config(dump_config(c));
        EXPECT_EQ(again, c) << name;
        BuiltProblem built = build_problem(c);
        EXPECT_GT(built.instance.beta(), 0.0);
        BlockVector x0 = initial_point(c, built.instance.dims());
        EXPECT_EQ(x0.dims(), built.instance.dims());
        EXPECT_NO_THROW(SolverConfig(built.instance.beta(), solver_options(c, built.instance.dims())));
    }
    EXPECT_THROW(demo_config("nope"), ConfigError);
}

TEST(Demos, CertificateValues)
{
    EXPECT_DOUBLE_EQ(build_problem(demo_config("image-demo")).instance.beta(), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(build_problem(demo_config("best-approx-demo")).instance.beta(), 0.5);
    EXPECT_NEAR(build_problem(demo_config("mean-deviation-demo")).instance.beta(), 1.0, 1e-12);
    EXPECT_FALSE(build_problem(demo_config("mean-deviation-demo")).application.has_value());
}

TEST(Parse, SolverDefaults)
{
    ProblemConfig c = parse_config(R"({"kind": "image_decomposition", "problem": {"z": [1], "priors": [{"type": "zero", "dim": 1}, {"type": "zero", "dim": 1}]}})");
    EXPECT_EQ(c.solver, SolverSettings{});
    EXPECT_FALSE(c.solver.gamma);
    EXPECT_EQ(c.solver.tol, 1e-8);
    EXPECT_EQ(c.solver.max_iter, 100000u);
    EXPECT_TRUE(c.x0.is_null());
    SolverOptions o = solver_options(c, {1, 1});
    EXPECT_FALSE(o.gamma);
    EXPECT_EQ(o.lambda(0), 0.0);
    EXPECT_FALSE(o.a_errors);
}

TEST(Parse, FieldPathErrors)
{
    expect_config_error([] { parse_config("{\"kind\": "); }, "config: ");
    expect_config_error([] { parse_config(R"({"kind": "nope", "problem": {}})"); }, "config.kind: unknown problem kind");
    expect_config_error([] { parse_config(R"({"problem": {}})"); }, "config.kind: missing required field");
    expect_config_error([] { parse_config(R"({"kind": "traffic", "problem": {}, "extra": 1})"); }, "config.extra: unknown field");
    expect_config_error([] { parse_config(R"({"kind": "traffic", "problem": {}, "solver": {"tol": "x"}})"); },
                        "solver.tol: expected a number");
    expect_config_error([] { parse_config(R"({"kind": "traffic", "problem": {}, "solver": {"workers": 0}})"); },
                        "solver.workers: must be at least 1");
    expect_config_error([] { parse_config(R"({"kind": "traffic", "problem": {}, "solver": {"errors": {"a": -1}}})"); },
                        "solver.errors: magnitudes must be nonnegative");
    expect_config_error([] { parse_config(R"({"kind": "traffic", "problem": {}, "beta_override": 0})"); },
                        "config.beta_override: must be positive");
    expect_config_error([] { parse_config(R"({"kind": "traffic", "problem": {}, "x0": 3})"); }, "config.x0: expected");
}

TEST(Parse, JsonSyntaxErrorsCarryPosition)
{
    try {
        parse_config("{\n  \"kind\": \"traffic\",\n  oops\n}");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Build, ProblemFieldErrors)
{
    expect_config_error([] { build_problem(traffic_with(R"([{"slope": "a", "intercept": 0}, {"slope": 1, "intercept": 0}])")); },
                        "problem.links[0].slope: expected a number");
    expect_config_error([] { build_problem(traffic_with(R"([{"slope": 1, "intercept": 0}, {"slope": -1, "intercept": 0}])")); },
                        "problem.links[1]: ");
    expect_config_error([] { build_problem(traffic_with(R"([{"slope": 1, "intercept": 0}])")); }, "problem: ");
    expect_config_error(
        [] {
            build_problem(parse_config(
                R"({"kind": "best_approx", "problem": {"sets": [{"type": "ball", "center": [0], "radius": -1}, {"type": "box", "lo": [0], "hi": [1]}], "weights": [1]}})"));
        },
        "problem.sets[0]: ");
    expect_config_error(
        [] {
            build_problem(parse_config(
                R"({"kind": "best_approx", "problem": {"sets": [{"type": "cone"}], "weights": []}})"));
        },
        "problem.sets[0].type: unknown set type");
    expect_config_error(
        [] {
            build_problem(parse_config(
                R"({"kind": "two_agent", "problem": {"f1": {"type": "zero", "dim": 1}, "f2": {"type": "zero", "dim": 1}, "L11": {"type": "identity", "dim": 1}, "L12": {"type": "identity", "dim": 1}, "psi": {}}})"));
        },
        "problem.psi: give exactly one");
    expect_config_error(
        [] {
            build_problem(parse_config(
                R"({"kind": "coupled_inclusion", "problem": {"coupling": {"type": "mean_deviation", "blocks": 2, "dim": 2}, "resolvents": [{"type": "zero", "dim": 2}]}})"));
        },
        "problem: ");
}

TEST(Build, EveryElementType)
{
    ProblemConfig c = parse_config(R"({"kind": "best_approx", "problem": {"sets": [
        {"type": "box", "lo": [0, 0, 0], "hi": [1, 1, 1]},
        {"type": "ball", "center": [0, 0, 0], "radius": 2},
        {"type": "halfspace", "a": [1, 0, 0], "b": 1},
        {"type": "hyperplane", "a": [0, 0, 1], "b": 0.5},
        {"type": "singleton", "point": [0.5, 0.5, 0.5]},
        {"type": "simplex", "dim": 3, "groups": [[0, 1], [2]], "masses": [1, 0.5]},
        {"type": "affine", "origin": [0.5, 0, 0], "spanning": [[0, 1, 0], [0, 0, 1]]}
    ], "weights": [1, 1, 1, 1, 1, 1]}})");
    BuiltProblem b = build_problem(c);
    EXPECT_EQ(b.instance.num_blocks(), 7u);
    EXPECT_DOUBLE_EQ(b.instance.beta(), 1.0 / 12.0);
    // (0.5, 0.5, 0.5) lies in every set, so stacking it is a fixed point
    Vector p{0.5, 0.5, 0.5};
    BlockVector x(std::vector<Vector>(7, p));
    EXPECT_LE(fixed_point_residual(b.instance, x, b.instance.beta()), 1e-15);

    ProblemConfig psd = parse_config(R"({"kind": "coupled_inclusion", "problem": {
        "coupling": {"type": "psd", "matrix": [[2, -1], [-1, 2]], "dim": 1},
        "resolvents": [{"type": "l1", "dim": 1, "weight": 0.5}, {"type": "zero", "dim": 1}]}})");
    EXPECT_NEAR(build_problem(psd).instance.beta(), 1.0 / 3.0, 1e-9);

    ProblemConfig maps = parse_config(R"({"kind": "source_separation", "problem": {
        "grid": [[{"type": "matrix", "rows": [[1, 0], [0, 2]]}, {"type": "zero", "rows": 2, "cols": 1}],
                 [{"type": "scaled_identity", "dim": 2, "scale": 0.5}, {"type": "matrix", "rows": [[1], [1]]}]],
        "observations": [[1, 0], [0, 1]],
        "priors": [{"type": "zero", "dim": 2}, {"type": "zero", "dim": 1}]}})");
    EXPECT_EQ(build_problem(maps).instance.dims(), (std::vector<std::size_t>{2, 1}));
}

TEST(Build, BetaOverrideReplacesTheCertificate)
{
    ProblemConfig c = demo_config("image-demo");
    c.beta_override = 0.1;
    BuiltProblem b = build_problem(c);
    EXPECT_DOUBLE_EQ(b.instance.beta(), 0.1);
    EXPECT_EQ(b.instance.coupling().certificate().provenance(), CertificateProvenance::manual);
}

TEST(Build, SocialModeMarginalCost)
{
    ProblemConfig c = traffic_with(R"([{"slope": 1, "intercept": 0.5}, {"slope": 2, "intercept": 0}])");
    c.problem["mode"] = "social";
    BuiltProblem b = build_problem(c);
    ASSERT_TRUE(b.application);
    const auto& net = *b.application->network;
    EXPECT_EQ(net.mode, TrafficMode::social);
    EXPECT_DOUBLE_EQ(net.marginal_costs[0].cost(3.0), 2.0 * 3.0 + 0.5);
    EXPECT_DOUBLE_EQ(net.marginal_costs[1].lipschitz, 4.0);
}

TEST(InitialPoint, ZerosExplicitAndRandom)
{
    ProblemConfig c = demo_config("image-demo");
    std::vector<std::size_t> dims = {4, 4, 4};
    EXPECT_EQ(initial_point(c, dims), BlockVector(dims));
    c.x0 = "random";
    c.solver.seed = 11;
    BlockVector r1 = initial_point(c, dims), r2 = initial_point(c, dims);
    EXPECT_EQ(r1, r2);
    c.solver.seed = 12;
    EXPECT_NE(initial_point(c, dims), r1);
    c.x0 = json::parse("[[1, 2], [3]]");
    expect_config_error([&] { initial_point(c, {2, 2}); }, "config.x0[1]: expected dimension 2");
    expect_config_error([&] { initial_point(c, {2, 1, 1}); }, "config.x0: expected 3 blocks");
    EXPECT_EQ(initial_point(c, {2, 1}), testutil::bv({{1.0, 2.0}, {3.0}}));
}

TEST(SolverOptionsFromFile, ErrorSchedules)
{
    ProblemConfig c = demo_config("best-approx-demo");
    c.solver.lambda = 0.2;
    c.solver.errors = {0.5, 0.25, 0.1};
    SolverOptions o = solver_options(c, {2, 2});
    ASSERT_TRUE(o.a_errors && o.b_errors && o.block_lambda);
    Vector e = o.a_errors->values(0, 1, 4);
    EXPECT_DOUBLE_EQ(e[0], 0.5 / 4.0 / 2.0);
    EXPECT_DOUBLE_EQ(vec::norm(o.b_errors->values(1, 0, 2)), 0.25);
    EXPECT_NEAR(o.a_errors->declared_budget, 0.5 * 1.6449340668482264, 1e-15);
    EXPECT_DOUBLE_EQ(o.block_lambda->values(1, 0), 0.3);
    EXPECT_DOUBLE_EQ(o.block_lambda->values(0, 9), 0.2 + 0.1 / 100.0);
}

TEST(SolverOptionsFromFile, RangeErrorsSurfaceInTheConfig)
{
    ProblemConfig c = demo_config("image-demo");
    c.solver.gamma = 3.0 * 2.0 / 3.0;
    BuiltProblem b = build_problem(c);
    EXPECT_THROW(SolverConfig(b.instance.beta(), solver_options(c, b.instance.dims())), std::invalid_argument);
    c.solver.gamma.reset();
    c.solver.lambda = 1.0;
    EXPECT_THROW(SolverConfig(b.instance.beta(), solver_options(c, b.instance.dims())), std::invalid_argument);
}

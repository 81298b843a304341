#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "parsplit/applications.hpp"
#include "parsplit/prox.hpp"
#include "parsplit/solver.hpp"
#include "test_util.hpp"

using namespace parsplit;
using testutil::bv;

namespace {

CouplingOperator zero_coupling(std::vector<std::size_t> dims)
{
    return {std::move(dims), [](const BlockVector& x) { return block_scale(0.0, x); },
            CocoercivityCertificate(1.0, CertificateProvenance::manual)};
}

ResolventOperator singleton(Vector c)
{
    return prox_to_resolvent(prox::indicator(ConvexSet::singleton(std::move(c))));
}

// B_1 = -B_2 = x_1 - x_2 on R^d
CouplingOperator strong_coupling(std::size_t d)
{
    return structured_coupling({{LinearMap::identity(d), LinearMap::scaled_identity(d, -1.0)}});
}

Application parallel_lines()
{
    return build_best_approximation({ConvexSet::hyperplane({0.0, 1.0}, 0.0), ConvexSet::hyperplane({0.0, 1.0}, 1.0)},
                                    {1.0});
}

SolverOptions opts_with(double gamma, std::size_t max_iter = 100000)
{
    SolverOptions o;
    o.gamma = constant_sequence(gamma);
    o.max_iterations = max_iter;
    return o;
}

} // namespace

TEST(ProblemInstanceShape, RejectsMismatchedDims)
{
    EXPECT_THROW(ProblemInstance({ResolventOperator::identity(2)}, zero_coupling({1})), std::invalid_argument);
    EXPECT_THROW(ProblemInstance({ResolventOperator::identity(1)}, zero_coupling({1, 1})), std::invalid_argument);
}

TEST(Step, ConstantResolventsReachTheirPointsAtOnce)
{
    ProblemInstance p({singleton({1.0, 2.0}), singleton({-3.0})}, zero_coupling({2, 1}));
    SolverConfig c(1.0, {});
    SolverState s{bv({{9.0, 9.0}, {9.0}}), 0};
    SolverState next = step(p, c, s);
    EXPECT_EQ(next.x, bv({{1.0, 2.0}, {-3.0}}));
    EXPECT_EQ(next.n, 1u);
}

TEST(Step, StrongCouplingIsParallelProx)
{
    ProxFunction f1 = prox::l1_norm(2, 0.7);
    ProxFunction f2 = prox::indicator(ConvexSet::box({-1.0, 0.0}, {0.5, 2.0}));
    ProblemInstance p({prox_to_resolvent(f1), prox_to_resolvent(f2)}, strong_coupling(2));
    EXPECT_DOUBLE_EQ(p.beta(), 0.5);
    SolverConfig c(0.5, opts_with(0.5));
    std::mt19937_64 rng(4);
    SolverState s{testutil::gaussian_blocks(rng, {2, 2}, 2.0), 0};
    for (int n = 0; n < 50; ++n) {
        Vector mid = vec::scale(0.5, vec::add(s.x[0], s.x[1]));
        Vector e1 = f1.prox(0.5, mid), e2 = f2.prox(0.5, mid);
        s = step(p, c, s);
        EXPECT_LE(testutil::max_abs_diff(s.x[0], e1), 1e-12);
        EXPECT_LE(testutil::max_abs_diff(s.x[1], e2), 1e-12);
    }
}

TEST(Step, NearFrozenBlockBarelyMoves)
{
    ProblemInstance p({singleton({5.0}), singleton({-5.0})}, zero_coupling({1, 1}));
    SolverOptions o;
    o.block_lambda = BlockRelaxation{[](std::size_t i, std::size_t) { return i == 0 ? 1.0 - 1e-9 : 0.0; }, 10.0};
    SolverConfig c(1.0, o);
    SolverState next = step(p, c, {bv({{1.0}, {1.0}}), 0});
    EXPECT_LE(std::abs(next.x[0][0] - 1.0), 1e-8 * (1.0 + 5.0));
    EXPECT_EQ(next.x[1][0], -5.0);
}

TEST(Step, ResolventFailureCarriesBlockIndex)
{
    ResolventOperator failing(1, [](double, std::span<const double>) -> Vector { throw std::runtime_error("boom"); });
    ProblemInstance p({ResolventOperator::identity(1), failing}, zero_coupling({1, 1}));
    SolverConfig c(1.0, {});
    try {
        step(p, c, {bv({{0.0}, {0.0}}), 0});
        FAIL() << "expected BlockEvaluationError";
    } catch (const BlockEvaluationError& e) {
        EXPECT_EQ(e.block(), 1u);
        EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
    }
}

TEST(FixedPointResidual, ZeroAtAnalyticSolution)
{
    Vector a{1.0, 2.0}, b{4.0, -1.0};
    // two singletons with the strong coupling: the only feasible point (a, b) is a solution
    ProblemInstance p({singleton(a), singleton(b)}, strong_coupling(2));
    EXPECT_LE(fixed_point_residual(p, bv({a, b}), 0.5), 1e-12);
    EXPECT_THROW(fixed_point_residual(p, bv({a, b}), 0.0), std::invalid_argument);
}

TEST(FixedPointResidual, SingletonsFromOrigin)
{
    Vector c1{1.0, -2.0}, c2{0.5, 3.0};
    ProblemInstance p({singleton(c1), singleton(c2)}, strong_coupling(2));
    // at x = 0 the coupling vanishes, so J(x - gamma B x) = c_i for every gamma
    for (double gamma : {0.1, 0.5, 0.9}) {
        EXPECT_NEAR(fixed_point_residual(p, BlockVector(std::vector<std::size_t>{2, 2}), gamma),
                    block_norm(bv({c1, c2})), 1e-15);
    }
}

TEST(FixedPointResidual, ReportedForExactOperatorsUnderApproximation)
{
    Application app = parallel_lines();
    SolverOptions o = opts_with(0.3, 5);
    o.approximations = {ApproximationSchedule::yosida([](std::size_t n) { return 0.1 / ((n + 1.0) * (n + 1.0)); }, 1.0),
                        ApproximationSchedule::exact()};
    SolverConfig c(app.beta(), o);
    BlockVector x0 = bv({{3.0, -2.0}, {-1.0, 4.0}});
    SolveResult r = solve(app.instance, c, x0);
    ASSERT_FALSE(r.trace.records.empty());
    EXPECT_DOUBLE_EQ(r.trace.records[0].residual, fixed_point_residual(app.instance, x0, 0.3));
}

TEST(Solve, ParallelLinesConverge)
{
    Application app = parallel_lines();
    EXPECT_DOUBLE_EQ(app.beta(), 0.5);
    SolverConfig c(app.beta(), opts_with(0.5, 10000));
    SolveResult r = solve(app.instance, c, bv({{3.0, -2.0}, {-1.0, 4.0}}));
    EXPECT_EQ(r.status, SolveStatus::converged);
    EXPECT_LE(r.final_residual, 1e-8);
    // oracle: the pair must be vertically aligned on the two lines
    EXPECT_NEAR(r.x[0][1], 0.0, 1e-12);
    EXPECT_NEAR(r.x[1][1], 1.0, 1e-12);
    EXPECT_NEAR(r.x[0][0], r.x[1][0], 1e-8);
    EXPECT_NEAR(block_distance(bv({r.x[0]}), bv({r.x[1]})), 1.0, 1e-6);
}

TEST(Solve, SingletonsConvergeInOneIteration)
{
    Vector a{1.0, 2.0}, b{-1.0, 0.0};
    ProblemInstance p({singleton(a), singleton(b)}, strong_coupling(2));
    SolveResult r = solve(p, SolverConfig(p.beta(), {}));
    EXPECT_EQ(r.status, SolveStatus::converged);
    EXPECT_EQ(r.iterations, 1u);
    EXPECT_EQ(r.x, bv({a, b}));
}

namespace {

SolverOptions noisy_options(SolverOptions base, Vector unit)
{
    const double budget = 0.1 * 1.6449340668482264;
    auto err = [unit](std::size_t, std::size_t n, std::size_t) { return vec::scale(0.1 / ((n + 1.0) * (n + 1.0)), unit); };
    base.a_errors = ErrorInjection{err, budget};
    base.b_errors = ErrorInjection{err, budget};
    base.block_lambda = BlockRelaxation{[](std::size_t, std::size_t n) { return 0.1 / ((n + 1.0) * (n + 1.0)); }, budget};
    return base;
}

} // namespace

TEST(Solve, SummableErrorsReachTheCleanLimit)
{
    Application app = parallel_lines();
    BlockVector x0 = bv({{3.0, -2.0}, {-1.0, 4.0}});
    SolverOptions clean = opts_with(0.3, 100000);
    SolveResult ref = solve(app.instance, SolverConfig(app.beta(), clean), x0);
    ASSERT_EQ(ref.status, SolveStatus::converged);

    // errors normal to the lines leave the horizontal mean untouched
    SolveResult r = solve(app.instance, SolverConfig(app.beta(), noisy_options(clean, {0.0, 1.0})), x0);
    EXPECT_EQ(r.status, SolveStatus::converged);
    EXPECT_LE(block_distance(r.x, ref.x), 1e-6);
}

TEST(Solve, SummableErrorsAlongTheSolutionSetStillConverge)
{
    Application app = parallel_lines();
    BlockVector x0 = bv({{3.0, -2.0}, {-1.0, 4.0}});
    const double s = 1.0 / std::sqrt(2.0);
    SolveResult r = solve(app.instance, SolverConfig(app.beta(), noisy_options(opts_with(0.3), {s, s})), x0);
    EXPECT_EQ(r.status, SolveStatus::converged);
    // a different optimal pair: still aligned with gap 1
    EXPECT_NEAR(r.x[0][0], r.x[1][0], 1e-7);
    EXPECT_NEAR(r.x[1][1] - r.x[0][1], 1.0, 1e-7);
}

TEST(Solve, MaxIterStatus)
{
    Application app = parallel_lines();
    SolveResult r = solve(app.instance, SolverConfig(app.beta(), opts_with(0.3, 1)), bv({{3.0, -2.0}, {-1.0, 4.0}}));
    EXPECT_EQ(r.status, SolveStatus::max_iter);
    EXPECT_EQ(r.iterations, 1u);
    EXPECT_EQ(r.trace.size(), 1u);
}

TEST(Solve, DivergenceGuardFlagsMisCertifiedBeta)
{
    // B = Id has beta = 1; claiming 100 lets gamma = 100 amplify by 99 each step
    CouplingOperator b({1}, [](const BlockVector& x) { return x; }, CocoercivityCertificate(100.0, CertificateProvenance::manual));
    ProblemInstance p({ResolventOperator::identity(1)}, b);
    SolveResult r = solve(p, SolverConfig(100.0, opts_with(100.0, 1000)), bv({{1.0}}));
    EXPECT_EQ(r.status, SolveStatus::diverged);
    EXPECT_LT(r.iterations, 10u);
}

TEST(Solve, RejectsConfigForLargerBeta)
{
    Application app = parallel_lines();
    EXPECT_THROW(solve(app.instance, SolverConfig(1.0, {})), std::invalid_argument);
}

TEST(Solve, JacobiOrderDoesNotMatter)
{
    Application app = build_image_decomposition(
        {1.0, -0.5, 0.25}, {prox::l1_norm(3, 0.2), prox::indicator(ConvexSet::box({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0})),
                            prox::half_sq_distance({0.1, 0.2, 0.3})});
    SolverOptions a = opts_with(1.0, 200);
    SolverOptions b = a;
    b.evaluation_order = {2, 0, 1};
    std::mt19937_64 rng(3);
    BlockVector x0 = testutil::gaussian_blocks(rng, app.instance.dims());
    SolveResult ra = solve(app.instance, SolverConfig(app.beta(), a), x0);
    SolveResult rb = solve(app.instance, SolverConfig(app.beta(), b), x0);
    EXPECT_EQ(ra.x, rb.x);
    EXPECT_EQ(ra.trace.to_csv(3), rb.trace.to_csv(3));
    b.evaluation_order = {0, 0, 1};
    EXPECT_THROW(solve(app.instance, SolverConfig(app.beta(), b), x0), std::invalid_argument);
}

TEST(Solve, BitwiseIdenticalAcrossWorkerCounts)
{
    Application app = build_best_approximation({ConvexSet::ball({0.0, 0.0}, 1.0), ConvexSet::box({2.0, -1.0}, {3.0, 1.0}),
                                                ConvexSet::halfspace({1.0, 1.0}, -2.0), ConvexSet::singleton({0.0, 4.0})},
                                               {1.0, 0.5, 0.25});
    std::mt19937_64 rng(9);
    BlockVector x0 = testutil::gaussian_blocks(rng, app.instance.dims(), 3.0);
    std::string reference;
    for (std::size_t w : {1u, 2u, 3u, 8u}) {
        SolverOptions o;
        o.workers = w;
        o.max_iterations = 500;
        SolveResult r = solve(app.instance, SolverConfig(app.beta(), o), x0);
        std::string csv = r.trace.to_csv(4);
        if (reference.empty()) {
            reference = csv;
        }
        EXPECT_EQ(csv, reference) << "workers=" << w;
    }
}

TEST(Solve, ResidualTrendsDownward)
{
    std::vector<Application> apps;
    apps.push_back(parallel_lines());
    apps.push_back(build_image_decomposition({1.0, 2.0}, {prox::l1_norm(2, 0.5), prox::half_sq_distance({0.0, 0.0})}));
    apps.push_back(build_two_agent(prox::indicator(ConvexSet::ball({0.0, 0.0}, 1.0)),
                                   prox::indicator(ConvexSet::box({2.0, -1.0}, {3.0, 1.0})), LinearMap::identity(2),
                                   LinearMap::scaled_identity(2, -1.0)));
    for (const auto& app : apps) {
        SolverOptions o;
        o.max_iterations = 400;
        o.tolerance = 0.0;
        std::mt19937_64 rng(1);
        SolveResult r = solve(app.instance, SolverConfig(app.beta(), o), testutil::gaussian_blocks(rng, app.instance.dims(), 3.0));
        const auto& rec = r.trace.records;
        for (std::size_t k = 1; 10 * k < rec.size(); ++k) {
            EXPECT_LE(rec[10 * k].residual, rec[k].residual + 1e-15) << to_string(app.kind) << " k=" << k;
        }
    }
}

TEST(SolverConfigValidation, StepAndRelaxationBounds)
{
    const double beta = 0.5;
    const double eps = 0.005;
    EXPECT_NO_THROW(SolverConfig(beta, opts_with(2 * beta - eps)));
    EXPECT_THROW(SolverConfig(beta, opts_with(2 * beta - eps / 2)), std::invalid_argument);
    EXPECT_THROW(SolverConfig(beta, opts_with(eps / 2)), std::invalid_argument);
    try {
        SolverConfig(beta, opts_with(3 * beta));
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("[epsilon, 2 beta - epsilon]"), std::string::npos);
    }
    SolverOptions lam;
    lam.lambda = constant_sequence(1.0 - eps / 2);
    EXPECT_THROW(SolverConfig(beta, lam), std::invalid_argument);
    SolverOptions late = opts_with(beta, 100);
    late.gamma = [beta](std::size_t n) { return n == 99 ? 3 * beta : beta; };
    EXPECT_THROW(SolverConfig(beta, late), std::invalid_argument);
    SolverOptions e;
    e.epsilon = 0.6;
    EXPECT_THROW(SolverConfig(beta, e), std::invalid_argument);
    EXPECT_THROW(SolverConfig(0.0, {}), std::invalid_argument);
}

TEST(SolverConfigValidation, Defaults)
{
    SolverConfig c(0.25, {});
    EXPECT_DOUBLE_EQ(c.epsilon(), 0.0025);
    EXPECT_DOUBLE_EQ(c.gamma(17), 0.25);
    EXPECT_DOUBLE_EQ(c.lambda(17), 0.0);
    EXPECT_EQ(c.options().max_iterations, 100000u);
    EXPECT_EQ(c.options().tolerance, 1e-8);
}

TEST(Schedules, BudgetOverrunStopsTheRun)
{
    Application app = parallel_lines();
    SolverOptions o = opts_with(0.3, 100);
    o.a_errors = ErrorInjection{[](std::size_t, std::size_t, std::size_t d) { return Vector(d, 0.1); }, 0.5};
    EXPECT_THROW(solve(app.instance, SolverConfig(app.beta(), o), bv({{3.0, -2.0}, {-1.0, 4.0}})), ScheduleError);
}

TEST(Schedules, CouplingPerturbationMustVanishAtAnchor)
{
    Application app = parallel_lines();
    SolverOptions o = opts_with(0.3, 50);
    const BlockVector anchor(std::vector<std::size_t>{2, 2});
    // linear perturbations vanish at zero
    o.coupling_perturbation = CouplingPerturbation{
        [](std::size_t n, const BlockVector& x) { return block_scale(0.01 / ((n + 1.0) * (n + 1.0)), x); }, anchor,
        [](std::size_t n) { return 0.01 / ((n + 1.0) * (n + 1.0)); }, 0.02};
    EXPECT_NO_THROW(solve(app.instance, SolverConfig(app.beta(), o), bv({{3.0, -2.0}, {-1.0, 4.0}})));

    o.coupling_perturbation->delta = [](std::size_t, const BlockVector& x) {
        return block_add(block_scale(0.0, x), bv({{0.001, 0.0}, {0.0, 0.0}}));
    };
    EXPECT_THROW(solve(app.instance, SolverConfig(app.beta(), o), bv({{3.0, -2.0}, {-1.0, 4.0}})), ScheduleError);
}

TEST(Trace, CsvFormat)
{
    IterationTrace t;
    t.records.push_back({0, 0.5, 0.0, 0.1, {1.0 / 3.0, 2.0}, std::nullopt});
    std::string csv = t.to_csv(2);
    EXPECT_EQ(csv, "iter,gamma,lambda,residual,block_delta_1,block_delta_2\n"
                   "0,0.5,0,0.10000000000000001,0.33333333333333331,2\n");
}

TEST(Trace, OneRecordPerIterationWithObjective)
{
    Application app = build_image_decomposition({1.0, 2.0}, {prox::l1_norm(2, 0.5), prox::half_sq_distance({0.0, 0.0})});
    SolverOptions o = opts_with(1.0, 25);
    o.tolerance = 0.0;
    o.objective = [&app](const BlockVector& x) { return app.variational.objective(x); };
    SolveResult r = solve(app.instance, SolverConfig(app.beta(), o));
    ASSERT_EQ(r.trace.size(), 25u);
    for (std::size_t n = 0; n < r.trace.size(); ++n) {
        EXPECT_EQ(r.trace.records[n].n, n);
        EXPECT_TRUE(r.trace.records[n].objective.has_value());
    }
    EXPECT_LE(*r.trace.records.back().objective, *r.trace.records.front().objective);
}

TEST(VariationalSolve, RequiresASmoothTerm)
{
    VariationalProblem vp;
    vp.f = {ProxFunction::zero(1)};
    EXPECT_THROW(variational_solve(vp, {}), std::invalid_argument);
}

TEST(VariationalSolve, SingleQuadraticRecoversObservation)
{
    VariationalProblem vp;
    vp.f = {ProxFunction::zero(3)};
    vp.phi = {smooth::quadratic_fit({1.0, -2.0, 0.5}, 1.0)};
    vp.L = {{LinearMap::identity(3)}};
    SolveResult r = variational_solve(vp, {});
    EXPECT_EQ(r.status, SolveStatus::converged);
    EXPECT_DOUBLE_EQ(r.beta, 0.5);
    EXPECT_LE(testutil::max_abs_diff(r.x[0], {1.0, -2.0, 0.5}), 1e-8);
}

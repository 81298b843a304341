#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "parsplit/power_iteration.hpp"
#include "test_util.hpp"

using namespace parsplit;

namespace {

FlatOperator matrix_op(const DenseMatrix& m)
{
    return [m](std::span<const double> x) { return m.multiply(x); };
}

} // namespace

TEST(PowerIteration, IdentityOnR5)
{
    DenseMatrix id = DenseMatrix::identity(5);
    auto r = power_iteration(matrix_op(id), 5);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 1.0, 1e-10);
}

TEST(PowerIteration, Diagonal)
{
    DenseMatrix d({{3.0, 0.0}, {0.0, 1.0}});
    EXPECT_NEAR(power_iteration(matrix_op(d), 2).value, 3.0, 1e-9);
}

TEST(PowerIteration, DifferenceMatrix)
{
    DenseMatrix d({{1.0, -1.0}, {-1.0, 1.0}});
    EXPECT_NEAR(power_iteration(matrix_op(d), 2).value, 2.0, 1e-9);
}

TEST(PowerIteration, ZeroOperatorConvergesToZero)
{
    DenseMatrix z(3, 3);
    auto r = power_iteration(matrix_op(z), 3);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.value, 0.0);
}

TEST(PowerIteration, DeterministicForFixedSeed)
{
    DenseMatrix m({{2.0, 1.0, 0.0}, {1.0, 3.0, 1.0}, {0.0, 1.0, 4.0}});
    auto a = power_iteration(matrix_op(m), 3);
    auto b = power_iteration(matrix_op(m), 3);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.iterations, b.iterations);
}

TEST(PowerIteration, MatchesCharacteristicPolynomial)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        // random PSD 3x3 matrix G^T G
        std::vector<Vector> g(3, Vector(3));
        for (auto& row : g) {
            row = testutil::gaussian(rng, 3);
        }
        std::vector<Vector> a(3, Vector(3, 0.0));
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                for (int k = 0; k < 3; ++k) {
                    a[i][j] += g[k][i] * g[k][j];
                }
            }
        }
        const double lmax = testutil::symmetric_eigenvalues(a).back();
        PowerIterationOptions opts;
        opts.tol = 1e-14;
        opts.max_iters = 100000;
        auto r = power_iteration(matrix_op(DenseMatrix(a)), 3, opts);
        EXPECT_NEAR(r.value, lmax, 1e-8 * lmax);
    }
}

TEST(SpectralNorm, RectangularMatrix)
{
    // singular values of [[3, 0], [0, 4], [0, 0]] are {4, 3}
    DenseMatrix m({{3.0, 0.0}, {0.0, 4.0}, {0.0, 0.0}});
    double s = spectral_norm([&](std::span<const double> x) { return m.multiply(x); },
                             [&](std::span<const double> y) { return m.transpose_multiply(y); }, 2);
    EXPECT_NEAR(s, 4.0, 1e-8);
}

TEST(SpectralNorm, NonConvergenceIsReported)
{
    // nearly equal top eigenvalues and a tiny budget: the Rayleigh quotient has not settled
    DenseMatrix m({{1.0, 0.0, 0.0}, {0.0, 0.999, 0.0}, {0.0, 0.0, 0.1}});
    PowerIterationOptions opts;
    opts.max_iters = 3;
    opts.tol = 1e-15;
    auto r = power_iteration(matrix_op(m), 3, opts);
    EXPECT_FALSE(r.converged);
    EXPECT_THROW(spectral_norm(matrix_op(m), matrix_op(m), 3, opts), std::runtime_error);
}

TEST(DenseMatrixOps, MultiplyAndTranspose)
{
    DenseMatrix m({{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}});
    EXPECT_EQ(m.multiply(Vector{1.0, 0.0, -1.0}), (Vector{-2.0, -2.0}));
    EXPECT_EQ(m.transpose_multiply(Vector{1.0, 1.0}), (Vector{5.0, 7.0, 9.0}));
    EXPECT_THROW(DenseMatrix(std::vector<Vector>{{1.0, 2.0}, {3.0}}), std::invalid_argument);
}

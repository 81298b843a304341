#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "parsplit/block_vector.hpp"
#include "test_util.hpp"

using namespace parsplit;
using testutil::bv;

TEST(BlockNorm, ZeroVector)
{
    EXPECT_EQ(block_norm(bv({{0.0, 0.0}, {0.0}})), 0.0);
}

TEST(BlockNorm, Pythagorean)
{
    EXPECT_EQ(block_norm(bv({{3.0}, {4.0}})), 5.0);
}

TEST(BlockNorm, TwoByTwoOnes)
{
    EXPECT_DOUBLE_EQ(block_norm(bv({{1.0, 1.0}, {1.0, 1.0}})), 2.0);
}

TEST(BlockNorm, MatchesFlattenedEuclideanNorm)
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> dim(1, 5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::size_t> dims(1 + trial % 4);
        for (auto& d : dims) {
            d = dim(rng);
        }
        BlockVector x = testutil::gaussian_blocks(rng, dims);
        double s = 0.0;
        for (double v : x.flatten()) {
            s += v * v;
        }
        EXPECT_NEAR(block_norm(x), std::sqrt(s), 1e-14 * (1.0 + std::sqrt(s)));
    }
}

TEST(BlockVectorShape, RejectsZeroDimensionalBlocks)
{
    EXPECT_THROW(BlockVector(std::vector<std::size_t>{2, 0}), std::invalid_argument);
    EXPECT_THROW(bv({{1.0}, {}}), std::invalid_argument);
}

TEST(BlockVectorShape, FlattenRoundTrip)
{
    BlockVector x = bv({{1.0, 2.0}, {3.0}, {4.0, 5.0, 6.0}});
    EXPECT_EQ(x.total_dim(), 6u);
    EXPECT_EQ(BlockVector::unflatten(x.flatten(), x.dims()), x);
    EXPECT_THROW(BlockVector::unflatten(x.flatten(), {2, 2}), std::invalid_argument);
}

TEST(BlockVectorShape, SetBlockKeepsDimension)
{
    BlockVector x(std::vector<std::size_t>{2, 1});
    x.set_block(0, {1.0, 2.0});
    EXPECT_EQ(x[0], (Vector{1.0, 2.0}));
    EXPECT_THROW(x.set_block(1, {1.0, 2.0}), std::invalid_argument);
}

TEST(BlockArithmetic, ElementwiseOperations)
{
    BlockVector x = bv({{1.0, 2.0}, {3.0}});
    BlockVector y = bv({{0.5, -1.0}, {2.0}});
    EXPECT_EQ(block_add(x, y), bv({{1.5, 1.0}, {5.0}}));
    EXPECT_EQ(block_sub(x, y), bv({{0.5, 3.0}, {1.0}}));
    EXPECT_EQ(block_scale(2.0, x), bv({{2.0, 4.0}, {6.0}}));
    EXPECT_DOUBLE_EQ(block_dot(x, y), 0.5 - 2.0 + 6.0);
    EXPECT_DOUBLE_EQ(block_distance(x, y), std::sqrt(0.25 + 9.0 + 1.0));
}

TEST(BlockArithmetic, ShapeMismatchThrows)
{
    BlockVector x = bv({{1.0, 2.0}, {3.0}});
    BlockVector y = bv({{1.0}, {2.0, 3.0}});
    EXPECT_FALSE(x.same_shape(y));
    EXPECT_THROW(block_add(x, y), std::invalid_argument);
    EXPECT_THROW(block_dot(x, y), std::invalid_argument);
}

TEST(VecHelpers, AxpyAndSizeChecks)
{
    Vector y{1.0, 1.0};
    vec::axpy(2.0, Vector{1.0, -1.0}, y);
    EXPECT_EQ(y, (Vector{3.0, -1.0}));
    EXPECT_THROW(vec::dot(Vector{1.0}, Vector{1.0, 2.0}), std::invalid_argument);
}

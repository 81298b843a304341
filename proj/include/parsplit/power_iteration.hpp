#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "parsplit/block_vector.hpp"

namespace parsplit {

using FlatOperator = std::function<Vector(std::span<const double>)>;

struct PowerIterationOptions {
    double tol = 1e-10;
    std::size_t max_iters = 10000;
    std::uint64_t seed = 0x5eed5eedULL;
};

struct PowerIterationResult {
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Largest eigenvalue of a self-adjoint positive semidefinite operator on R^dim.
///
/// Starts from a seeded Gaussian vector and stops once successive Rayleigh
/// quotients agree to `tol` relative. A zero operator converges immediately
/// with value 0.
inline PowerIterationResult power_iteration(const FlatOperator& op, std::size_t dim,
                                            const PowerIterationOptions& opts = {})
{
    if (dim == 0) {
        throw std::invalid_argument("power_iteration: dim must be positive");
    }
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(dim);
    for (auto& c : v) {
        c = normal(rng);
    }
    double nv = vec::norm(v);
    for (auto& c : v) {
        c /= nv;
    }

    PowerIterationResult result;
    double previous = 0.0;
    for (std::size_t k = 1; k <= opts.max_iters; ++k) {
        Vector w = op(v);
        if (w.size() != dim) {
            throw std::invalid_argument("power_iteration: operator changed dimension");
        }
        double rayleigh = vec::dot(v, w);
        double nw = vec::norm(w);
        result.iterations = k;
        result.value = rayleigh;
        if (nw == 0.0) {
            result.value = 0.0;
            result.converged = true;
            return result;
        }
        if (k > 1 && std::abs(rayleigh - previous) <= opts.tol * std::abs(rayleigh)) {
            result.converged = true;
            return result;
        }
        previous = rayleigh;
        for (std::size_t j = 0; j < dim; ++j) {
            v[j] = w[j] / nw;
        }
    }
    return result;
}

/// Operator norm of `forward` (R^cols -> R^rows) via power iteration on A^T A.
/// Throws when the iteration does not settle within `opts.max_iters`.
inline double spectral_norm(const FlatOperator& forward, const FlatOperator& adjoint,
                            std::size_t cols, const PowerIterationOptions& opts = {})
{
    auto gram = [&](std::span<const double> x) { return adjoint(forward(x)); };
    auto r = power_iteration(gram, cols, opts);
    if (!r.converged) {
        throw std::runtime_error("spectral_norm: power iteration did not converge in "
                                 + std::to_string(opts.max_iters) + " iterations");
    }
    return std::sqrt(std::max(r.value, 0.0));
}

/// Dense row-major matrix; only what the operator factories need.
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0)
    {
    }

    /// From nested rows; all rows must have equal length.
    explicit DenseMatrix(const std::vector<Vector>& rows)
    {
        rows_ = rows.size();
        cols_ = rows.empty() ? 0 : rows.front().size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) {
                throw std::invalid_argument("DenseMatrix: ragged rows");
            }
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static DenseMatrix identity(std::size_t n)
    {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    Vector multiply(std::span<const double> x) const
    {
        if (x.size() != cols_) {
            throw std::invalid_argument("DenseMatrix::multiply: size mismatch");
        }
        Vector y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) {
                s += data_[i * cols_ + j] * x[j];
            }
            y[i] = s;
        }
        return y;
    }

    Vector transpose_multiply(std::span<const double> y) const
    {
        if (y.size() != rows_) {
            throw std::invalid_argument("DenseMatrix::transpose_multiply: size mismatch");
        }
        Vector x(cols_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                x[j] += data_[i * cols_ + j] * y[i];
            }
        }
        return x;
    }

    bool is_zero() const
    {
        for (double v : data_) {
            if (v != 0.0) {
                return false;
            }
        }
        return true;
    }

    std::vector<Vector> to_rows() const
    {
        std::vector<Vector> out(rows_, Vector(cols_));
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) {
                out[i][j] = (*this)(i, j);
            }
        }
        return out;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

} // namespace parsplit

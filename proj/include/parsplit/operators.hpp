#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "parsplit/block_vector.hpp"
#include "parsplit/power_iteration.hpp"

namespace parsplit {

/// x -> J_{gamma A} x
using ResolventOracle = std::function<Vector(double gamma, std::span<const double> x)>;

/// A maximal monotone operator A on R^dim, known only through its resolvents.
///
/// The oracle must be total and pure: it is called concurrently by the
/// solver's workers.
class ResolventOperator {
public:
    ResolventOperator(std::size_t dim, ResolventOracle oracle) : dim_(dim), oracle_(std::move(oracle))
    {
        if (dim_ == 0) {
            throw std::invalid_argument("ResolventOperator: dim must be positive");
        }
        if (!oracle_) {
            throw std::invalid_argument("ResolventOperator: empty oracle");
        }
    }

    std::size_t dim() const noexcept { return dim_; }

    Vector operator()(double gamma, std::span<const double> x) const
    {
        if (!(gamma > 0.0)) {
            throw std::invalid_argument("ResolventOperator: gamma must be positive");
        }
        if (x.size() != dim_) {
            throw std::invalid_argument("ResolventOperator: input has dimension "
                                        + std::to_string(x.size()) + ", expected "
                                        + std::to_string(dim_));
        }
        Vector y = oracle_(gamma, x);
        if (y.size() != dim_) {
            throw std::runtime_error("ResolventOperator: oracle returned wrong dimension");
        }
        return y;
    }

    /// Resolvent of A = 0.
    static ResolventOperator identity(std::size_t dim)
    {
        return {dim, [](double, std::span<const double> x) { return Vector(x.begin(), x.end()); }};
    }

private:
    std::size_t dim_;
    ResolventOracle oracle_;
};

/// A function f in Gamma_0(R^dim) given by prox_{gamma f} and optionally its values.
class ProxFunction {
public:
    using ProxOracle = std::function<Vector(double gamma, std::span<const double> x)>;
    using ValueOracle = std::function<double(std::span<const double> x)>;

    ProxFunction(std::size_t dim, ProxOracle prox, ValueOracle value = {})
        : dim_(dim), prox_(std::move(prox)), value_(std::move(value))
    {
        if (dim_ == 0) {
            throw std::invalid_argument("ProxFunction: dim must be positive");
        }
        if (!prox_) {
            throw std::invalid_argument("ProxFunction: empty prox oracle");
        }
    }

    std::size_t dim() const noexcept { return dim_; }

    Vector prox(double gamma, std::span<const double> x) const
    {
        if (!(gamma > 0.0)) {
            throw std::invalid_argument("ProxFunction: gamma must be positive");
        }
        if (x.size() != dim_) {
            throw std::invalid_argument("ProxFunction: dimension mismatch");
        }
        return prox_(gamma, x);
    }

    bool has_value() const noexcept { return static_cast<bool>(value_); }

    /// f(x); +infinity outside the domain.
    double value(std::span<const double> x) const
    {
        if (!value_) {
            throw std::logic_error("ProxFunction: no value oracle");
        }
        return value_(x);
    }

    const ProxOracle& prox_oracle() const noexcept { return prox_; }

    static ProxFunction zero(std::size_t dim)
    {
        return {dim, [](double, std::span<const double> x) { return Vector(x.begin(), x.end()); },
                [](std::span<const double>) { return 0.0; }};
    }

private:
    std::size_t dim_;
    ProxOracle prox_;
    ValueOracle value_;
};

/// prox_f = J_{df}: the resolvent oracle forwards gamma unchanged.
inline ResolventOperator prox_to_resolvent(const ProxFunction& f)
{
    return {f.dim(), f.prox_oracle()};
}

/// Bounded linear map R^cols -> R^rows with its adjoint and a norm upper bound.
class LinearMap {
public:
    LinearMap(std::size_t rows, std::size_t cols, FlatOperator forward, FlatOperator adjoint,
              double norm_bound)
        : rows_(rows), cols_(cols), forward_(std::move(forward)), adjoint_(std::move(adjoint)),
          norm_bound_(norm_bound)
    {
        if (rows_ == 0 || cols_ == 0) {
            throw std::invalid_argument("LinearMap: dimensions must be positive");
        }
        if (!(norm_bound_ >= 0.0) || !std::isfinite(norm_bound_)) {
            throw std::invalid_argument("LinearMap: norm bound must be finite and nonnegative");
        }
        if (!forward_ || !adjoint_) {
            throw std::invalid_argument("LinearMap: empty oracle");
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double norm_bound() const noexcept { return norm_bound_; }
    bool is_zero() const noexcept { return zero_; }

    Vector apply(std::span<const double> x) const
    {
        if (x.size() != cols_) {
            throw std::invalid_argument("LinearMap::apply: dimension mismatch");
        }
        return forward_(x);
    }

    Vector apply_adjoint(std::span<const double> y) const
    {
        if (y.size() != rows_) {
            throw std::invalid_argument("LinearMap::apply_adjoint: dimension mismatch");
        }
        return adjoint_(y);
    }

    /// Adjoint as a map in its own right (forward and adjoint swapped).
    LinearMap adjoint() const
    {
        LinearMap a(cols_, rows_, adjoint_, forward_, norm_bound_);
        a.zero_ = zero_;
        return a;
    }

    const FlatOperator& forward_oracle() const noexcept { return forward_; }
    const FlatOperator& adjoint_oracle() const noexcept { return adjoint_; }

    static LinearMap scaled_identity(std::size_t dim, double c)
    {
        auto f = [c](std::span<const double> x) { return vec::scale(c, x); };
        LinearMap m(dim, dim, f, f, std::abs(c));
        m.zero_ = (c == 0.0);
        return m;
    }

    static LinearMap identity(std::size_t dim) { return scaled_identity(dim, 1.0); }

    static LinearMap zero(std::size_t rows, std::size_t cols)
    {
        LinearMap m(
            rows, cols, [rows](std::span<const double>) { return Vector(rows, 0.0); },
            [cols](std::span<const double>) { return Vector(cols, 0.0); }, 0.0);
        m.zero_ = true;
        return m;
    }

    /// Dense matrix; the norm bound is the power-iteration estimate of ||M||.
    static LinearMap from_matrix(DenseMatrix m)
    {
        if (m.rows() == 0 || m.cols() == 0) {
            throw std::invalid_argument("LinearMap::from_matrix: empty matrix");
        }
        if (m.is_zero()) {
            return zero(m.rows(), m.cols());
        }
        auto shared = std::make_shared<const DenseMatrix>(std::move(m));
        FlatOperator fwd = [shared](std::span<const double> x) { return shared->multiply(x); };
        FlatOperator adj = [shared](std::span<const double> y) { return shared->transpose_multiply(y); };
        double bound = spectral_norm(fwd, adj, shared->cols());
        return {shared->rows(), shared->cols(), fwd, adj, bound};
    }

    /// Same map, caller-supplied norm bound (must not underestimate ||L||).
    LinearMap with_norm_bound(double bound) const
    {
        LinearMap m(rows_, cols_, forward_, adjoint_, bound);
        m.zero_ = zero_;
        return m;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    FlatOperator forward_;
    FlatOperator adjoint_;
    double norm_bound_;
    bool zero_ = false;
};

/// A convex function on R^dim with a tau-Lipschitz gradient.
class SmoothFunction {
public:
    using GradientOracle = std::function<Vector(std::span<const double>)>;
    using ValueOracle = std::function<double(std::span<const double>)>;

    SmoothFunction(std::size_t dim, GradientOracle gradient, double lipschitz, ValueOracle value = {})
        : dim_(dim), gradient_(std::move(gradient)), lipschitz_(lipschitz), value_(std::move(value))
    {
        if (dim_ == 0) {
            throw std::invalid_argument("SmoothFunction: dim must be positive");
        }
        if (!(lipschitz_ > 0.0) || !std::isfinite(lipschitz_)) {
            throw std::invalid_argument("SmoothFunction: Lipschitz constant must be positive and finite");
        }
        if (!gradient_) {
            throw std::invalid_argument("SmoothFunction: empty gradient oracle");
        }
    }

    std::size_t dim() const noexcept { return dim_; }
    double lipschitz() const noexcept { return lipschitz_; }

    Vector gradient(std::span<const double> x) const
    {
        if (x.size() != dim_) {
            throw std::invalid_argument("SmoothFunction::gradient: dimension mismatch");
        }
        return gradient_(x);
    }

    bool has_value() const noexcept { return static_cast<bool>(value_); }
    double value(std::span<const double> x) const
    {
        if (!value_) {
            throw std::logic_error("SmoothFunction: no value oracle");
        }
        return value_(x);
    }

private:
    std::size_t dim_;
    GradientOracle gradient_;
    double lipschitz_;
    ValueOracle value_;
};

/// Draws (x, y) pairs of Gaussian vectors; used by the sampling validators.
using PairSampler = std::function<std::pair<Vector, Vector>(std::mt19937_64&)>;

inline PairSampler gaussian_pair_sampler(std::size_t dim, double scale = 1.0)
{
    return [dim, scale](std::mt19937_64& rng) {
        std::normal_distribution<double> normal(0.0, scale);
        Vector x(dim), y(dim);
        for (auto& v : x) {
            v = normal(rng);
        }
        for (auto& v : y) {
            v = normal(rng);
        }
        return std::make_pair(std::move(x), std::move(y));
    };
}

struct NonexpansivenessReport {
    /// max over pairs of ||Jx - Jy||^2 - <x - y, Jx - Jy>
    double max_violation = -std::numeric_limits<double>::infinity();
    /// max over pairs of violation / (1 + max(||x||^2, ||y||^2))
    double max_relative_violation = -std::numeric_limits<double>::infinity();
    std::size_t samples = 0;
};

/// Samples the firm nonexpansiveness inequality of J_{gamma A}.
inline NonexpansivenessReport check_firmly_nonexpansive(const ResolventOperator& op, double gamma,
                                                        const PairSampler& sampler,
                                                        std::size_t n_samples,
                                                        std::uint64_t seed = 1)
{
    if (n_samples == 0) {
        throw std::invalid_argument("check_firmly_nonexpansive: n_samples must be >= 1");
    }
    std::mt19937_64 rng(seed);
    NonexpansivenessReport report;
    for (std::size_t s = 0; s < n_samples; ++s) {
        auto [x, y] = sampler(rng);
        Vector jx = op(gamma, x);
        Vector jy = op(gamma, y);
        Vector dj = vec::sub(jx, jy);
        Vector dx = vec::sub(x, y);
        double violation = vec::norm_sq(dj) - vec::dot(dx, dj);
        double scale = 1.0 + std::max(vec::norm_sq(x), vec::norm_sq(y));
        report.max_violation = std::max(report.max_violation, violation);
        report.max_relative_violation = std::max(report.max_relative_violation, violation / scale);
    }
    report.samples = n_samples;
    return report;
}

} // namespace parsplit

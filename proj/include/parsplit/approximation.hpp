#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "parsplit/block_vector.hpp"
#include "parsplit/operators.hpp"

namespace parsplit {

/// A real sequence indexed by the iteration counter n = 0, 1, 2, ...
using Sequence = std::function<double(std::size_t)>;

inline Sequence constant_sequence(double c)
{
    return [c](std::size_t) { return c; };
}

/// Raised when an executed schedule leaves its admissible range or
/// exceeds its declared summability budget.
class ScheduleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The Yosida approximation (x - J_{mu A} x) / mu.
inline Vector yosida_apply(const ResolventOperator& a, double mu, std::span<const double> x)
{
    if (!(mu > 0.0)) {
        throw std::invalid_argument("yosida_apply: mu must be positive");
    }
    Vector j = a(mu, x);
    Vector y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        y[k] = (x[k] - j[k]) / mu;
    }
    return y;
}

/// Resolvent of the Yosida approximation of index mu:
///   J_{gamma A_mu} x = x + gamma (J_{(gamma+mu) A} x - x) / (gamma + mu),
/// one base-resolvent call per evaluation.
inline ResolventOperator yosida_resolvent(ResolventOperator a, double mu)
{
    if (!(mu > 0.0)) {
        throw std::invalid_argument("yosida_resolvent: mu must be positive");
    }
    const std::size_t dim = a.dim();
    auto base = std::make_shared<const ResolventOperator>(std::move(a));
    return {dim, [base, mu](double gamma, std::span<const double> x) {
                Vector j = (*base)(gamma + mu, x);
                const double w = gamma / (gamma + mu);
                Vector y(x.size());
                for (std::size_t k = 0; k < x.size(); ++k) {
                    y[k] = x[k] + w * (j[k] - x[k]);
                }
                return y;
            }};
}

/// || J_{mu A} x - J_{gamma A}(x + (1 - gamma/mu)(J_{mu A} x - x)) ||.
///
/// Zero for any genuine family of resolvents; a consistency diagnostic for
/// user-written parameterized oracles.
inline double rescale_resolvent_identity_check(const ResolventOperator& a, double gamma, double mu,
                                               std::span<const double> x)
{
    if (!(gamma > 0.0) || !(mu > 0.0)) {
        throw std::invalid_argument("rescale_resolvent_identity_check: gamma and mu must be positive");
    }
    Vector jmu = a(mu, x);
    Vector shifted(x.size());
    const double c = 1.0 - gamma / mu;
    for (std::size_t k = 0; k < x.size(); ++k) {
        shifted[k] = x[k] + c * (jmu[k] - x[k]);
    }
    return vec::distance(jmu, a(gamma, shifted));
}

/// How block i's operator A_{i,n} is realized at iteration n.
///
///  - exact:         A_{i,n} = A_i
///  - scaled_index:  A_{i,n} = (gamma_{i,n} / gamma_n) A_i, so J_{gamma_n A_{i,n}} = J_{gamma_{i,n} A_i}
///  - yosida:        A_{i,n} = Yosida approximation of A_i with index mu_{i,n}
///
/// Only the executed prefix of a sequence can be audited; `declared_budget`
/// bounds its partial sums (sum |gamma_{i,n} - gamma_n| or sum mu_{i,n}).
class ApproximationSchedule {
public:
    enum class Kind { exact, scaled_index, yosida };

    ApproximationSchedule() = default;

    static ApproximationSchedule exact() { return {}; }

    static ApproximationSchedule scaled_index(Sequence gammas, double declared_budget)
    {
        return ApproximationSchedule(Kind::scaled_index, std::move(gammas), declared_budget);
    }

    static ApproximationSchedule yosida(Sequence mus, double declared_budget)
    {
        return ApproximationSchedule(Kind::yosida, std::move(mus), declared_budget);
    }

    Kind kind() const noexcept { return kind_; }
    bool is_exact() const noexcept { return kind_ == Kind::exact; }
    double declared_budget() const noexcept { return budget_; }
    double value(std::size_t n) const { return sequence_ ? sequence_(n) : 0.0; }

    /// J_{gamma_n A_{i,n}} x
    Vector resolve(const ResolventOperator& a, double gamma_n, std::size_t n, std::span<const double> x) const
    {
        switch (kind_) {
        case Kind::exact: return a(gamma_n, x);
        case Kind::scaled_index: return a(sequence_(n), x);
        case Kind::yosida: {
            const double mu = sequence_(n);
            if (!(mu > 0.0)) {
                throw ScheduleError("yosida schedule: mu_n must be positive");
            }
            Vector j = a(gamma_n + mu, x);
            const double w = gamma_n / (gamma_n + mu);
            Vector y(x.size());
            for (std::size_t k = 0; k < x.size(); ++k) {
                y[k] = x[k] + w * (j[k] - x[k]);
            }
            return y;
        }
        }
        throw std::logic_error("ApproximationSchedule: unknown kind");
    }

    /// Checks iteration n and adds its contribution to `partial_sum`.
    void audit(std::size_t n, double gamma_n, double beta, double& partial_sum) const
    {
        if (kind_ == Kind::exact) {
            return;
        }
        const double v = sequence_(n);
        if (kind_ == Kind::scaled_index) {
            if (!(v > 0.0) || !(v < 2.0 * beta)) {
                throw ScheduleError("scaled_index schedule: gamma_{i," + std::to_string(n)
                                    + "} outside ]0, 2 beta[");
            }
            partial_sum += std::abs(v - gamma_n);
        } else {
            if (!(v > 0.0)) {
                throw ScheduleError("yosida schedule: mu_{i," + std::to_string(n) + "} must be positive");
            }
            partial_sum += v;
        }
        if (partial_sum > budget_) {
            throw ScheduleError("approximation schedule exceeded its declared budget at n = "
                                + std::to_string(n));
        }
    }

private:
    ApproximationSchedule(Kind kind, Sequence seq, double budget)
        : kind_(kind), sequence_(std::move(seq)), budget_(budget)
    {
        if (!sequence_) {
            throw std::invalid_argument("ApproximationSchedule: empty sequence");
        }
        if (!(budget_ >= 0.0)) {
            throw std::invalid_argument("ApproximationSchedule: budget must be nonnegative");
        }
    }

    Kind kind_ = Kind::exact;
    Sequence sequence_;
    double budget_ = 0.0;
};

} // namespace parsplit

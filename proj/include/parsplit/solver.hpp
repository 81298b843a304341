#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "parsplit/approximation.hpp"
#include "parsplit/block_vector.hpp"
#include "parsplit/coupling.hpp"
#include "parsplit/operators.hpp"
#include "parsplit/parallel.hpp"

namespace parsplit {

/// Find x with 0 in A_i x_i + B_i(x_1, ..., x_m) for every block i.
class ProblemInstance {
public:
    ProblemInstance(std::vector<ResolventOperator> resolvents, CouplingOperator coupling)
        : resolvents_(std::move(resolvents)), coupling_(std::move(coupling))
    {
        if (resolvents_.size() != coupling_.num_blocks()) {
            throw std::invalid_argument("ProblemInstance: " + std::to_string(resolvents_.size())
                                        + " resolvents for a coupling on "
                                        + std::to_string(coupling_.num_blocks()) + " blocks");
        }
        for (std::size_t i = 0; i < resolvents_.size(); ++i) {
            if (resolvents_[i].dim() != coupling_.dims()[i]) {
                throw std::invalid_argument("ProblemInstance: block " + std::to_string(i)
                                            + " dimension differs between resolvent and coupling");
            }
        }
    }

    std::size_t num_blocks() const noexcept { return resolvents_.size(); }
    const std::vector<std::size_t>& dims() const noexcept { return coupling_.dims(); }
    double beta() const noexcept { return coupling_.beta(); }
    const std::vector<ResolventOperator>& resolvents() const noexcept { return resolvents_; }
    const ResolventOperator& resolvent(std::size_t i) const { return resolvents_.at(i); }
    const CouplingOperator& coupling() const noexcept { return coupling_; }

private:
    std::vector<ResolventOperator> resolvents_;
    CouplingOperator coupling_;
};

/// lambda_{i,n}; arguments are (block, iteration).
using BlockSequence = std::function<double(std::size_t, std::size_t)>;
/// a_{i,n} or b_{i,n}; arguments are (block, iteration, block dimension).
using ErrorSchedule = std::function<Vector(std::size_t, std::size_t, std::size_t)>;

struct BlockRelaxation {
    BlockSequence values;
    /// bound on sum_n |lambda_{i,n} - lambda_n| for every block
    double declared_budget = 0.0;
};

struct ErrorInjection {
    ErrorSchedule values;
    /// bound on sum_n ||e_{i,n}|| for every block
    double declared_budget = 0.0;
};

/// B_{i,n} = B_i + delta_n, with delta_n kappa_n-Lipschitz and delta_n(anchor) = 0.
struct CouplingPerturbation {
    std::function<BlockVector(std::size_t, const BlockVector&)> delta;
    BlockVector anchor;
    Sequence lipschitz;
    double declared_budget = 0.0;
};

/// Error raised when a block's resolvent oracle fails; carries the block index.
class BlockEvaluationError : public std::runtime_error {
public:
    BlockEvaluationError(std::size_t block, const std::string& what)
        : std::runtime_error("block " + std::to_string(block) + ": " + what), block_(block)
    {
    }
    std::size_t block() const noexcept { return block_; }

private:
    std::size_t block_;
};

/// Unvalidated solver settings; SolverConfig checks them against beta.
struct SolverOptions {
    std::optional<double> epsilon;          ///< default min(1, beta) / 100
    std::optional<Sequence> gamma;          ///< default gamma_n = beta
    Sequence lambda = constant_sequence(0.0);
    std::optional<BlockRelaxation> block_lambda;  ///< default lambda_{i,n} = lambda_n
    std::optional<ErrorInjection> a_errors;
    std::optional<ErrorInjection> b_errors;
    std::vector<ApproximationSchedule> approximations;  ///< empty means exact for every block
    std::optional<CouplingPerturbation> coupling_perturbation;
    std::size_t max_iterations = 100000;
    double tolerance = 1e-8;
    std::size_t workers = 1;
    double divergence_factor = 1e6;
    std::function<double(const BlockVector&)> objective;
    /// Order in which blocks are evaluated when workers == 1; empty means 0..m-1.
    std::vector<std::size_t> evaluation_order;
};

/// Solver settings validated against a cocoercivity constant beta:
/// epsilon in ]0, min{1, beta}[, gamma_n in [epsilon, 2 beta - epsilon] and
/// lambda_n in [0, 1 - epsilon] for every n < max_iterations.
class SolverConfig {
public:
    SolverConfig(double beta, SolverOptions options) : beta_(beta), options_(std::move(options))
    {
        if (!(beta_ > 0.0) || !std::isfinite(beta_)) {
            throw std::invalid_argument("SolverConfig: beta must be positive and finite");
        }
        epsilon_ = options_.epsilon.value_or(std::min(1.0, beta_) / 100.0);
        if (!(epsilon_ > 0.0) || !(epsilon_ < std::min(1.0, beta_))) {
            throw std::invalid_argument("SolverConfig: epsilon must lie in ]0, min{1, beta}[");
        }
        if (!options_.gamma) {
            options_.gamma = constant_sequence(beta_);
        }
        if (!options_.lambda) {
            options_.lambda = constant_sequence(0.0);
        }
        if (!(options_.tolerance >= 0.0)) {
            throw std::invalid_argument("SolverConfig: tolerance must be nonnegative");
        }
        if (!(options_.divergence_factor > 1.0)) {
            throw std::invalid_argument("SolverConfig: divergence factor must exceed 1");
        }
        const double gamma_hi = 2.0 * beta_ - epsilon_;
        const double lambda_hi = 1.0 - epsilon_;
        for (std::size_t n = 0; n < options_.max_iterations; ++n) {
            const double g = (*options_.gamma)(n);
            if (!(g >= epsilon_ && g <= gamma_hi)) {
                std::ostringstream msg;
                msg.precision(17);
                msg << "SolverConfig: gamma_" << n << " = " << g << " violates [epsilon, 2 beta - epsilon] = ["
                    << epsilon_ << ", " << gamma_hi << "]";
                throw std::invalid_argument(msg.str());
            }
            const double l = options_.lambda(n);
            if (!(l >= 0.0 && l <= lambda_hi)) {
                std::ostringstream msg;
                msg.precision(17);
                msg << "SolverConfig: lambda_" << n << " = " << l << " violates [0, 1 - epsilon] = [0, "
                    << lambda_hi << "]";
                throw std::invalid_argument(msg.str());
            }
        }
        if (options_.block_lambda && !options_.block_lambda->values) {
            throw std::invalid_argument("SolverConfig: block relaxation without values");
        }
        for (const auto* e : {&options_.a_errors, &options_.b_errors}) {
            if (*e && !(*e)->values) {
                throw std::invalid_argument("SolverConfig: error schedule without values");
            }
        }
        if (options_.coupling_perturbation
            && (!options_.coupling_perturbation->delta || !options_.coupling_perturbation->lipschitz)) {
            throw std::invalid_argument("SolverConfig: incomplete coupling perturbation");
        }
    }

    double beta() const noexcept { return beta_; }
    double epsilon() const noexcept { return epsilon_; }
    double gamma(std::size_t n) const { return (*options_.gamma)(n); }
    double lambda(std::size_t n) const { return options_.lambda(n); }
    double block_lambda(std::size_t i, std::size_t n) const
    {
        return options_.block_lambda ? options_.block_lambda->values(i, n) : options_.lambda(n);
    }
    const SolverOptions& options() const noexcept { return options_; }

    const ApproximationSchedule& approximation(std::size_t i) const
    {
        static const ApproximationSchedule exact = ApproximationSchedule::exact();
        return i < options_.approximations.size() ? options_.approximations[i] : exact;
    }

    /// True when block i at iteration n uses anything but the exact forward-backward map.
    bool inexact(std::size_t i, std::size_t n) const
    {
        (void)n;
        return options_.a_errors || options_.b_errors || options_.coupling_perturbation
               || !approximation(i).is_exact();
    }

private:
    double beta_;
    double epsilon_ = 0.0;
    SolverOptions options_;
};

struct IterationRecord {
    std::size_t n = 0;
    double gamma = 0.0;
    double lambda = 0.0;
    /// fixed-point residual at x_n with gamma_n
    double residual = 0.0;
    /// ||x_{i,n+1} - x_{i,n}|| per block
    Vector block_deltas;
    std::optional<double> objective;
};

namespace detail {

inline std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

} // namespace detail

struct IterationTrace {
    std::vector<IterationRecord> records;

    std::size_t size() const noexcept { return records.size(); }

    /// Header `iter,gamma,lambda,residual,block_delta_1,...`; 17 significant digits.
    void write_csv(std::ostream& out, std::size_t num_blocks) const
    {
        out << "iter,gamma,lambda,residual";
        for (std::size_t i = 0; i < num_blocks; ++i) {
            out << ",block_delta_" << (i + 1);
        }
        out << '\n';
        for (const auto& r : records) {
            out << r.n << ',' << detail::format_double(r.gamma) << ',' << detail::format_double(r.lambda) << ','
                << detail::format_double(r.residual);
            for (double d : r.block_deltas) {
                out << ',' << detail::format_double(d);
            }
            out << '\n';
        }
    }

    std::string to_csv(std::size_t num_blocks) const
    {
        std::ostringstream out;
        write_csv(out, num_blocks);
        return out.str();
    }
};

struct SolverState {
    BlockVector x;
    std::size_t n = 0;
};

enum class SolveStatus { converged, max_iter, diverged };

inline std::string to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::diverged: return "diverged";
    }
    return "unknown";
}

struct SolveResult {
    BlockVector x;
    IterationTrace trace;
    SolveStatus status = SolveStatus::max_iter;
    double final_residual = 0.0;
    std::size_t iterations = 0;
    double beta = 0.0;
    CertificateProvenance provenance = CertificateProvenance::manual;
};

/// block_norm of (x_i - J_{gamma A_i}(x_i - gamma B_i x))_i with the exact operators.
inline double fixed_point_residual(const ProblemInstance& problem, const BlockVector& x, double gamma)
{
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("fixed_point_residual: gamma must be positive");
    }
    BlockVector bx = problem.coupling().apply(x);
    double s = 0.0;
    for (std::size_t i = 0; i < problem.num_blocks(); ++i) {
        Vector forward = x[i];
        vec::axpy(-gamma, bx[i], forward);
        Vector j = problem.resolvent(i)(gamma, forward);
        s += vec::norm_sq(vec::sub(x[i], j));
    }
    return std::sqrt(s);
}

namespace detail {

struct IterationOutcome {
    BlockVector next;
    Vector residual_sq;  ///< per block, exact operators; empty when not requested
};

/// One Jacobi sweep: the coupling is evaluated once on the frozen iterate,
/// then every block reads only that snapshot and writes only its own slot.
inline IterationOutcome iterate(const ProblemInstance& problem, const SolverConfig& config, const BlockVector& x,
                                std::size_t n, WorkerPool& pool, bool with_residual)
{
    const std::size_t m = problem.num_blocks();
    const double gamma = config.gamma(n);
    const auto& opts = config.options();
    const BlockVector bx = problem.coupling().apply(x);
    std::optional<BlockVector> delta;
    if (opts.coupling_perturbation) {
        delta = opts.coupling_perturbation->delta(n, x);
        if (!delta->same_shape(x)) {
            throw std::runtime_error("coupling perturbation returned wrong block dimensions");
        }
    }

    std::vector<Vector> next(m);
    Vector residual_sq(with_residual ? m : 0, 0.0);

    auto task = [&](std::size_t i) {
        try {
            const auto& xi = x[i];
            const std::size_t d = xi.size();
            Vector exact_j;
            if (with_residual || !config.inexact(i, n)) {
                Vector forward = xi;
                vec::axpy(-gamma, bx[i], forward);
                exact_j = problem.resolvent(i)(gamma, forward);
                if (with_residual) {
                    residual_sq[i] = vec::norm_sq(vec::sub(xi, exact_j));
                }
            }
            Vector y;
            if (!config.inexact(i, n)) {
                y = std::move(exact_j);
            } else {
                Vector coupling_term = bx[i];
                if (delta) {
                    vec::axpy(1.0, (*delta)[i], coupling_term);
                }
                if (opts.b_errors) {
                    Vector b = opts.b_errors->values(i, n, d);
                    if (b.size() != d) {
                        throw std::runtime_error("b error schedule returned wrong dimension");
                    }
                    vec::axpy(1.0, b, coupling_term);
                }
                Vector forward = xi;
                vec::axpy(-gamma, coupling_term, forward);
                y = config.approximation(i).resolve(problem.resolvent(i), gamma, n, forward);
                if (opts.a_errors) {
                    Vector a = opts.a_errors->values(i, n, d);
                    if (a.size() != d) {
                        throw std::runtime_error("a error schedule returned wrong dimension");
                    }
                    vec::axpy(1.0, a, y);
                }
            }
            const double li = config.block_lambda(i, n);
            if (!(li >= 0.0 && li < 1.0)) {
                throw ScheduleError("lambda_{" + std::to_string(i) + "," + std::to_string(n)
                                    + "} outside [0, 1[");
            }
            Vector out(d);
            for (std::size_t k = 0; k < d; ++k) {
                out[k] = li * xi[k] + (1.0 - li) * y[k];
            }
            next[i] = std::move(out);
        } catch (const ScheduleError&) {
            throw;
        } catch (const std::exception& e) {
            throw BlockEvaluationError(i, e.what());
        }
    };

    if (pool.workers() == 1 && !opts.evaluation_order.empty()) {
        if (opts.evaluation_order.size() != m) {
            throw std::invalid_argument("evaluation_order must list every block once");
        }
        std::vector<bool> seen(m, false);
        for (auto i : opts.evaluation_order) {
            if (i >= m || seen[i]) {
                throw std::invalid_argument("evaluation_order must be a permutation of the blocks");
            }
            seen[i] = true;
            task(i);
        }
    } else {
        pool.run(m, task);
    }
    return {BlockVector(std::move(next)), std::move(residual_sq)};
}

inline double sum_sqrt(const Vector& squares)
{
    double s = 0.0;
    for (double v : squares) {
        s += v;
    }
    return std::sqrt(s);
}

} // namespace detail

/// One iteration of the parallel inexact forward-backward scheme.
inline SolverState step(const ProblemInstance& problem, const SolverConfig& config, const SolverState& state)
{
    if (state.x.dims() != problem.dims()) {
        throw std::invalid_argument("step: iterate dimensions do not match the problem");
    }
    if (state.n >= config.options().max_iterations) {
        throw std::invalid_argument("step: iteration counter reached max_iterations");
    }
    WorkerPool pool(std::min(config.options().workers, problem.num_blocks()));
    auto out = detail::iterate(problem, config, state.x, state.n, pool, false);
    return {std::move(out.next), state.n + 1};
}

/// Iterates until the fixed-point residual at the current gamma_n drops to the
/// tolerance, max_iterations steps have run, or the residual grows past
/// divergence_factor times its initial value.
inline SolveResult solve(const ProblemInstance& problem, const SolverConfig& config, BlockVector x0)
{
    const auto& opts = config.options();
    const std::size_t m = problem.num_blocks();
    if (x0.dims() != problem.dims()) {
        throw std::invalid_argument("solve: starting point dimensions do not match the problem");
    }
    if (config.beta() > problem.beta() * (1.0 + 1e-12)) {
        throw std::invalid_argument("solve: configuration validated for beta larger than the problem's certificate");
    }
    if (!opts.approximations.empty() && opts.approximations.size() != m) {
        throw std::invalid_argument("solve: need one approximation schedule per block");
    }
    if (opts.coupling_perturbation && opts.coupling_perturbation->anchor.dims() != problem.dims()) {
        throw std::invalid_argument("solve: coupling perturbation anchor has wrong dimensions");
    }

    WorkerPool pool(std::min(opts.workers, m));
    SolveResult result;
    result.beta = problem.beta();
    result.provenance = problem.coupling().certificate().provenance();
    BlockVector x = std::move(x0);

    Vector approx_sums(m, 0.0), lambda_sums(m, 0.0), a_sums(m, 0.0), b_sums(m, 0.0);
    double kappa_sum = 0.0;
    double initial_residual = -1.0;

    auto audit = [&](std::size_t n) {
        const double gamma = config.gamma(n);
        for (std::size_t i = 0; i < m; ++i) {
            config.approximation(i).audit(n, gamma, problem.beta(), approx_sums[i]);
            if (opts.block_lambda) {
                lambda_sums[i] += std::abs(config.block_lambda(i, n) - config.lambda(n));
                if (lambda_sums[i] > opts.block_lambda->declared_budget) {
                    throw ScheduleError("block relaxation exceeded its declared budget on block " + std::to_string(i));
                }
            }
            const std::size_t d = problem.dims()[i];
            if (opts.a_errors) {
                a_sums[i] += vec::norm(opts.a_errors->values(i, n, d));
                if (a_sums[i] > opts.a_errors->declared_budget) {
                    throw ScheduleError("a error schedule exceeded its declared budget on block " + std::to_string(i));
                }
            }
            if (opts.b_errors) {
                b_sums[i] += vec::norm(opts.b_errors->values(i, n, d));
                if (b_sums[i] > opts.b_errors->declared_budget) {
                    throw ScheduleError("b error schedule exceeded its declared budget on block " + std::to_string(i));
                }
            }
        }
        if (opts.coupling_perturbation) {
            const auto& cp = *opts.coupling_perturbation;
            kappa_sum += cp.lipschitz(n);
            if (kappa_sum > cp.declared_budget) {
                throw ScheduleError("coupling perturbation exceeded its declared Lipschitz budget");
            }
            BlockVector at_anchor = cp.delta(n, cp.anchor);
            if (block_norm(at_anchor) > 1e-12 * (1.0 + block_norm(cp.anchor))) {
                throw ScheduleError("coupling perturbation does not vanish at the declared anchor (n = "
                                    + std::to_string(n) + ")");
            }
        }
    };

    for (std::size_t n = 0;; ++n) {
        if (n == opts.max_iterations) {
            const double gamma = config.gamma(n == 0 ? 0 : n - 1);
            result.final_residual = fixed_point_residual(problem, x, gamma);
            result.status = result.final_residual <= opts.tolerance ? SolveStatus::converged : SolveStatus::max_iter;
            break;
        }
        audit(n);
        auto out = detail::iterate(problem, config, x, n, pool, true);
        const double residual = detail::sum_sqrt(out.residual_sq);
        if (initial_residual < 0.0) {
            initial_residual = residual;
        }
        if (residual <= opts.tolerance) {
            result.final_residual = residual;
            result.status = SolveStatus::converged;
            break;
        }
        if (!std::isfinite(residual) || residual > opts.divergence_factor * initial_residual) {
            result.final_residual = residual;
            result.status = SolveStatus::diverged;
            break;
        }
        IterationRecord rec;
        rec.n = n;
        rec.gamma = config.gamma(n);
        rec.lambda = config.lambda(n);
        rec.residual = residual;
        rec.block_deltas.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            rec.block_deltas[i] = vec::distance(out.next[i], x[i]);
        }
        x = std::move(out.next);
        if (opts.objective) {
            rec.objective = opts.objective(x);
        }
        result.trace.records.push_back(std::move(rec));
        ++result.iterations;
    }
    result.x = std::move(x);
    return result;
}

inline SolveResult solve(const ProblemInstance& problem, const SolverConfig& config)
{
    return solve(problem, config, BlockVector(problem.dims()));
}

/// minimize sum_i f_i(x_i) + sum_k phi_k(sum_i L_ki x_i).
struct VariationalProblem {
    std::vector<ProxFunction> f;
    std::vector<SmoothFunction> phi;
    LinearGrid L;  ///< p x m

    /// A_i = df_i (through prox_f = J_df) and B built by gradient_composition.
    ProblemInstance to_instance() const
    {
        if (phi.empty() || L.empty()) {
            throw std::invalid_argument("VariationalProblem: at least one smooth term (p >= 1) is required");
        }
        CouplingOperator coupling = gradient_composition(phi, L);
        if (f.size() != coupling.num_blocks()) {
            throw std::invalid_argument("VariationalProblem: " + std::to_string(f.size())
                                        + " functions for a grid with " + std::to_string(coupling.num_blocks())
                                        + " columns");
        }
        std::vector<ResolventOperator> resolvents;
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (f[i].dim() != coupling.dims()[i]) {
                throw std::invalid_argument("VariationalProblem: f_" + std::to_string(i + 1)
                                            + " does not match the grid column dimension");
            }
            resolvents.push_back(prox_to_resolvent(f[i]));
        }
        return {std::move(resolvents), std::move(coupling)};
    }

    /// Objective value when every term has a value oracle.
    double objective(const BlockVector& x) const
    {
        double v = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            v += f[i].value(x[i]);
        }
        auto s = detail::grid_forward(L, [this] {
            std::vector<std::size_t> rows;
            for (const auto& row : L) {
                rows.push_back(row.front().rows());
            }
            return rows;
        }(), x);
        for (std::size_t k = 0; k < phi.size(); ++k) {
            v += phi[k].value(s[k]);
        }
        return v;
    }
};

/// Builds the coupling with beta = 1/(p max_k tau_k sum_i ||L_ki||^2) and solves.
inline SolveResult variational_solve(const VariationalProblem& vp, SolverOptions options,
                                     std::optional<BlockVector> x0 = std::nullopt)
{
    ProblemInstance problem = vp.to_instance();
    SolverConfig config(problem.beta(), std::move(options));
    return solve(problem, config, x0 ? std::move(*x0) : BlockVector(problem.dims()));
}

} // namespace parsplit

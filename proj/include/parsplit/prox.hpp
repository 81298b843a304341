#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "parsplit/block_vector.hpp"
#include "parsplit/operators.hpp"

namespace parsplit {

/// Nonempty closed convex subset of R^dim with an exact projection.
class ConvexSet {
public:
    struct Box {
        Vector lo;
        Vector hi;
    };
    struct Ball {
        Vector center;
        double radius;
    };
    /// {x : <a, x> <= b}
    struct Halfspace {
        Vector a;
        double b;
    };
    /// {x : <a, x> = b}
    struct Hyperplane {
        Vector a;
        double b;
    };
    struct Singleton {
        Vector point;
    };
    /// {x >= 0 : sum_{l in groups[k]} x_l = masses[k] for every k}.
    /// Coordinates outside every group are only sign constrained.
    struct ScaledSimplex {
        std::size_t dim;
        std::vector<std::vector<std::size_t>> groups;
        Vector masses;
    };
    /// origin + span(basis); the stored basis is orthonormal.
    struct AffineSubspace {
        Vector origin;
        std::vector<Vector> basis;
    };

    using Shape = std::variant<Box, Ball, Halfspace, Hyperplane, Singleton, ScaledSimplex, AffineSubspace>;

    static ConvexSet box(Vector lo, Vector hi)
    {
        if (lo.size() != hi.size() || lo.empty()) {
            throw std::invalid_argument("ConvexSet::box: bounds must be nonempty and of equal size");
        }
        for (std::size_t k = 0; k < lo.size(); ++k) {
            if (!(lo[k] <= hi[k])) {
                throw std::invalid_argument("ConvexSet::box: empty box (lo > hi at index "
                                            + std::to_string(k) + ")");
            }
        }
        return ConvexSet(Box{std::move(lo), std::move(hi)});
    }

    static ConvexSet ball(Vector center, double radius)
    {
        if (center.empty() || !(radius >= 0.0)) {
            throw std::invalid_argument("ConvexSet::ball: need nonempty center and radius >= 0");
        }
        return ConvexSet(Ball{std::move(center), radius});
    }

    static ConvexSet halfspace(Vector a, double b)
    {
        require_nonzero(a, "halfspace");
        return ConvexSet(Halfspace{std::move(a), b});
    }

    static ConvexSet hyperplane(Vector a, double b)
    {
        require_nonzero(a, "hyperplane");
        return ConvexSet(Hyperplane{std::move(a), b});
    }

    static ConvexSet singleton(Vector point)
    {
        if (point.empty()) {
            throw std::invalid_argument("ConvexSet::singleton: empty point");
        }
        return ConvexSet(Singleton{std::move(point)});
    }

    static ConvexSet scaled_simplex(std::size_t dim, std::vector<std::vector<std::size_t>> groups,
                                    Vector masses)
    {
        if (dim == 0) {
            throw std::invalid_argument("ConvexSet::scaled_simplex: dim must be positive");
        }
        if (groups.size() != masses.size()) {
            throw std::invalid_argument("ConvexSet::scaled_simplex: one mass per group required");
        }
        std::vector<bool> seen(dim, false);
        for (std::size_t k = 0; k < groups.size(); ++k) {
            if (groups[k].empty()) {
                throw std::invalid_argument("ConvexSet::scaled_simplex: empty group "
                                            + std::to_string(k));
            }
            if (!(masses[k] >= 0.0)) {
                throw std::invalid_argument("ConvexSet::scaled_simplex: negative mass in group "
                                            + std::to_string(k));
            }
            for (auto l : groups[k]) {
                if (l >= dim) {
                    throw std::invalid_argument("ConvexSet::scaled_simplex: index out of range");
                }
                if (seen[l]) {
                    throw std::invalid_argument("ConvexSet::scaled_simplex: groups overlap at index "
                                                + std::to_string(l));
                }
                seen[l] = true;
            }
        }
        return ConvexSet(ScaledSimplex{dim, std::move(groups), std::move(masses)});
    }

    /// Probability-style simplex {x >= 0, sum x = mass} on all of R^dim.
    static ConvexSet simplex(std::size_t dim, double mass = 1.0)
    {
        std::vector<std::size_t> all(dim);
        std::iota(all.begin(), all.end(), std::size_t{0});
        return scaled_simplex(dim, {std::move(all)}, {mass});
    }

    /// Affine hull of origin + span(spanning). Dependent spanning vectors are dropped.
    static ConvexSet affine_subspace(Vector origin, const std::vector<Vector>& spanning)
    {
        if (origin.empty()) {
            throw std::invalid_argument("ConvexSet::affine_subspace: empty origin");
        }
        std::vector<Vector> basis;
        for (const auto& v : spanning) {
            if (v.size() != origin.size()) {
                throw std::invalid_argument("ConvexSet::affine_subspace: basis dimension mismatch");
            }
            Vector w = v;
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto& q : basis) {
                    vec::axpy(-vec::dot(q, w), q, w);
                }
            }
            double nw = vec::norm(w);
            if (nw > 1e-12 * std::max(1.0, vec::norm(v))) {
                for (auto& c : w) {
                    c /= nw;
                }
                basis.push_back(std::move(w));
            }
        }
        return ConvexSet(AffineSubspace{std::move(origin), std::move(basis)});
    }

    const Shape& shape() const noexcept { return shape_; }

    std::size_t dim() const
    {
        return std::visit(
            [](const auto& s) -> std::size_t {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Box>) {
                    return s.lo.size();
                } else if constexpr (std::is_same_v<T, Ball>) {
                    return s.center.size();
                } else if constexpr (std::is_same_v<T, Halfspace> || std::is_same_v<T, Hyperplane>) {
                    return s.a.size();
                } else if constexpr (std::is_same_v<T, Singleton>) {
                    return s.point.size();
                } else if constexpr (std::is_same_v<T, ScaledSimplex>) {
                    return s.dim;
                } else {
                    return s.origin.size();
                }
            },
            shape_);
    }

    std::string kind() const
    {
        static constexpr const char* names[] = {"box",       "ball",           "halfspace",
                                                "hyperplane", "singleton",     "scaled_simplex",
                                                "affine_subspace"};
        return names[shape_.index()];
    }

    /// True when the distance to the set is at most tol * (1 + ||x||).
    bool contains(std::span<const double> x, double tol = 1e-12) const;

private:
    explicit ConvexSet(Shape s) : shape_(std::move(s)) {}

    static void require_nonzero(const Vector& a, const char* what)
    {
        if (a.empty() || vec::norm(a) == 0.0) {
            throw std::invalid_argument(std::string("ConvexSet::") + what + ": normal must be nonzero");
        }
    }

    Shape shape_;
};

namespace detail {

/// Euclidean projection onto {y >= 0 : sum y = mass}, by sorting and thresholding.
inline void project_onto_simplex(std::span<const double> values, double mass, std::span<double> out)
{
    const std::size_t n = values.size();
    if (mass == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    Vector sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double running = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        running += sorted[j];
        double candidate = (running - mass) / static_cast<double>(j + 1);
        if (sorted[j] - candidate > 0.0) {
            theta = candidate;
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = std::max(values[j] - theta, 0.0);
    }
}

} // namespace detail

/// Euclidean projection P_S x.
inline Vector project(const ConvexSet& set, std::span<const double> x)
{
    if (x.size() != set.dim()) {
        throw std::invalid_argument("project: dimension mismatch (" + std::to_string(x.size())
                                    + " vs " + std::to_string(set.dim()) + ")");
    }
    return std::visit(
        [x](const auto& s) -> Vector {
            using T = std::decay_t<decltype(s)>;
            Vector y(x.begin(), x.end());
            if constexpr (std::is_same_v<T, ConvexSet::Box>) {
                for (std::size_t k = 0; k < y.size(); ++k) {
                    y[k] = std::clamp(y[k], s.lo[k], s.hi[k]);
                }
            } else if constexpr (std::is_same_v<T, ConvexSet::Ball>) {
                Vector d = vec::sub(x, s.center);
                double nd = vec::norm(d);
                if (nd > s.radius) {
                    y = s.center;
                    vec::axpy(s.radius / nd, d, y);
                }
            } else if constexpr (std::is_same_v<T, ConvexSet::Halfspace>) {
                double excess = vec::dot(s.a, x) - s.b;
                if (excess > 0.0) {
                    vec::axpy(-excess / vec::norm_sq(s.a), s.a, y);
                }
            } else if constexpr (std::is_same_v<T, ConvexSet::Hyperplane>) {
                double excess = vec::dot(s.a, x) - s.b;
                vec::axpy(-excess / vec::norm_sq(s.a), s.a, y);
            } else if constexpr (std::is_same_v<T, ConvexSet::Singleton>) {
                y = s.point;
            } else if constexpr (std::is_same_v<T, ConvexSet::ScaledSimplex>) {
                for (auto& v : y) {
                    v = std::max(v, 0.0);
                }
                for (std::size_t k = 0; k < s.groups.size(); ++k) {
                    const auto& g = s.groups[k];
                    Vector in(g.size()), out(g.size());
                    for (std::size_t j = 0; j < g.size(); ++j) {
                        in[j] = x[g[j]];
                    }
                    detail::project_onto_simplex(in, s.masses[k], out);
                    for (std::size_t j = 0; j < g.size(); ++j) {
                        y[g[j]] = out[j];
                    }
                }
            } else {
                Vector d = vec::sub(x, s.origin);
                y = s.origin;
                for (const auto& q : s.basis) {
                    vec::axpy(vec::dot(q, d), q, y);
                }
            }
            return y;
        },
        set.shape());
}

inline bool ConvexSet::contains(std::span<const double> x, double tol) const
{
    if (x.size() != dim()) {
        return false;
    }
    return vec::distance(project(*this, x), x) <= tol * (1.0 + vec::norm(x));
}

/// Componentwise soft threshold sign(x) max(|x| - gamma*weight, 0).
inline Vector prox_l1(double gamma, double weight, std::span<const double> x)
{
    if (!(weight >= 0.0)) {
        throw std::invalid_argument("prox_l1: weight must be nonnegative");
    }
    const double t = gamma * weight;
    Vector y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        double mag = std::max(std::abs(x[k]) - t, 0.0);
        y[k] = std::copysign(mag, x[k]);
        if (mag == 0.0) {
            y[k] = 0.0;
        }
    }
    return y;
}

/// prox of gamma * (1/2)||. - z||^2, i.e. (x + gamma z) / (1 + gamma).
inline Vector prox_quadratic(double gamma, std::span<const double> z, std::span<const double> x)
{
    if (z.size() != x.size()) {
        throw std::invalid_argument("prox_quadratic: dimension mismatch");
    }
    Vector y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        y[k] = (x[k] + gamma * z[k]) / (1.0 + gamma);
    }
    return y;
}

/// Gradient of (1/2) d_S^2, namely x - P_S x.
inline Vector grad_half_dist_sq(const ConvexSet& set, std::span<const double> x)
{
    return vec::sub(x, project(set, x));
}

/// Gradient of the Moreau envelope of psi, namely x - prox_psi x.
inline Vector moreau_gradient(const ProxFunction& psi, std::span<const double> x)
{
    return vec::sub(x, psi.prox(1.0, x));
}

/// Scalar link cost h -> phi_j(h), nondecreasing and Lipschitz with the declared constant.
struct LinkCost {
    std::function<double(double)> cost;
    double lipschitz = 1.0;

    static LinkCost affine(double slope, double intercept)
    {
        if (!(slope >= 0.0)) {
            throw std::invalid_argument("LinkCost::affine: slope must be nonnegative");
        }
        return {[slope, intercept](double h) { return slope * h + intercept; }, slope};
    }
};

/// Gradient (phi_j(nu_j))_j of the potential sum_j int_0^{nu_j} phi_j.
inline Vector traffic_potential_gradient(const std::vector<LinkCost>& costs, std::span<const double> flows)
{
    if (costs.size() != flows.size()) {
        throw std::invalid_argument("traffic_potential_gradient: one cost per link required");
    }
    Vector g(flows.size());
    for (std::size_t j = 0; j < flows.size(); ++j) {
        g[j] = costs[j].cost(flows[j]);
    }
    return g;
}

inline double max_link_lipschitz(const std::vector<LinkCost>& costs)
{
    double tau = 0.0;
    for (const auto& c : costs) {
        tau = std::max(tau, c.lipschitz);
    }
    return tau;
}

// ---------------------------------------------------------------------------
// ProxFunction and SmoothFunction factories.

namespace prox {

inline ProxFunction indicator(ConvexSet set)
{
    const std::size_t dim = set.dim();
    auto shared = std::make_shared<const ConvexSet>(std::move(set));
    return {dim, [shared](double, std::span<const double> x) { return project(*shared, x); },
            [shared](std::span<const double> x) {
                return shared->contains(x, 1e-9) ? 0.0 : std::numeric_limits<double>::infinity();
            }};
}

/// weight * ||x||_1
inline ProxFunction l1_norm(std::size_t dim, double weight)
{
    if (!(weight >= 0.0)) {
        throw std::invalid_argument("prox::l1_norm: weight must be nonnegative");
    }
    return {dim, [weight](double gamma, std::span<const double> x) { return prox_l1(gamma, weight, x); },
            [weight](std::span<const double> x) {
                double s = 0.0;
                for (double v : x) {
                    s += std::abs(v);
                }
                return weight * s;
            }};
}

/// (1/2)||x - z||^2
inline ProxFunction half_sq_distance(Vector z)
{
    const std::size_t dim = z.size();
    return {dim, [z](double gamma, std::span<const double> x) { return prox_quadratic(gamma, z, x); },
            [z](std::span<const double> x) { return 0.5 * vec::norm_sq(vec::sub(x, z)); }};
}

} // namespace prox

namespace smooth {

/// (weight/2)||y||^2; gradient weight*y.
inline SmoothFunction weighted_half_sq_norm(std::size_t dim, double weight)
{
    return {dim, [weight](std::span<const double> y) { return vec::scale(weight, y); }, weight,
            [weight](std::span<const double> y) { return 0.5 * weight * vec::norm_sq(y); }};
}

/// scale * ||y - z||^2; gradient 2*scale*(y - z), Lipschitz constant 2*scale.
inline SmoothFunction quadratic_fit(Vector z, double scale)
{
    if (!(scale > 0.0)) {
        throw std::invalid_argument("smooth::quadratic_fit: scale must be positive");
    }
    const std::size_t dim = z.size();
    return {dim, [z, scale](std::span<const double> y) { return vec::scale(2.0 * scale, vec::sub(y, z)); },
            2.0 * scale, [z, scale](std::span<const double> y) { return scale * vec::norm_sq(vec::sub(y, z)); }};
}

/// Moreau envelope of psi; gradient Id - prox_psi is 1-Lipschitz.
inline SmoothFunction moreau_envelope(ProxFunction psi)
{
    const std::size_t dim = psi.dim();
    auto shared = std::make_shared<const ProxFunction>(std::move(psi));
    SmoothFunction::ValueOracle value;
    if (shared->has_value()) {
        value = [shared](std::span<const double> y) {
            Vector p = shared->prox(1.0, y);
            return shared->value(p) + 0.5 * vec::norm_sq(vec::sub(y, p));
        };
    }
    return {dim, [shared](std::span<const double> y) { return moreau_gradient(*shared, y); }, 1.0,
            std::move(value)};
}

/// (1/2) d_C^2; gradient Id - P_C is 1-Lipschitz.
inline SmoothFunction half_dist_sq(ConvexSet set)
{
    const std::size_t dim = set.dim();
    auto shared = std::make_shared<const ConvexSet>(std::move(set));
    return {dim, [shared](std::span<const double> y) { return grad_half_dist_sq(*shared, y); }, 1.0,
            [shared](std::span<const double> y) { return 0.5 * vec::norm_sq(grad_half_dist_sq(*shared, y)); }};
}

/// Link potential sum_j int_0^{nu_j} phi_j with Lipschitz constant max_j of the declared ones.
inline SmoothFunction traffic_potential(std::vector<LinkCost> costs)
{
    if (costs.empty()) {
        throw std::invalid_argument("smooth::traffic_potential: no links");
    }
    const std::size_t dim = costs.size();
    const double tau = max_link_lipschitz(costs);
    auto shared = std::make_shared<const std::vector<LinkCost>>(std::move(costs));
    return {dim, [shared](std::span<const double> nu) { return traffic_potential_gradient(*shared, nu); },
            tau};
}

} // namespace smooth

} // namespace parsplit

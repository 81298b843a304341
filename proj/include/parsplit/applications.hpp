#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "parsplit/block_vector.hpp"
#include "parsplit/coupling.hpp"
#include "parsplit/operators.hpp"
#include "parsplit/power_iteration.hpp"
#include "parsplit/prox.hpp"
#include "parsplit/solver.hpp"

namespace parsplit {

enum class ApplicationKind { best_approx, image_decomposition, source_separation, traffic, two_agent };

inline std::string to_string(ApplicationKind k)
{
    switch (k) {
    case ApplicationKind::best_approx: return "best_approx";
    case ApplicationKind::image_decomposition: return "image_decomposition";
    case ApplicationKind::source_separation: return "source_separation";
    case ApplicationKind::traffic: return "traffic";
    case ApplicationKind::two_agent: return "two_agent";
    }
    return "unknown";
}

struct ApplicationInfo {
    ApplicationKind kind;
    std::string description;
    std::string beta_formula;
};

inline const std::vector<ApplicationInfo>& builtin_applications()
{
    static const std::vector<ApplicationInfo> infos = {
        {ApplicationKind::best_approx, "weighted best approximation from m closed convex sets",
         "1/(2(m-1))"},
        {ApplicationKind::image_decomposition, "split an observation z into m components with priors f_i",
         "2/m"},
        {ApplicationKind::source_separation, "recover m sources from p quadratic-fit observations z_k",
         "1/(2 p max_k sum_i ||L_ki||^2)"},
        {ApplicationKind::traffic, "multiclass Wardrop (or social optimum) traffic assignment on paths",
         "1/(tau m ||L||^2)"},
        {ApplicationKind::two_agent, "two agents coupled through phi(L11 x1 + L12 x2)",
         "1/(||L11||^2 + ||L12||^2)"},
    };
    return infos;
}

enum class TrafficMode { wardrop, social };

/// Path-based network: `incidence` is links x paths with 0/1 entries.
struct TrafficNetwork {
    DenseMatrix incidence;
    std::vector<LinkCost> costs;
    /// N_k: the paths serving origin-destination pair k
    std::vector<std::vector<std::size_t>> od_paths;
    /// demands[i][k] = delta_{ik} for user class i
    std::vector<Vector> demands;
    TrafficMode mode = TrafficMode::wardrop;
    /// social mode only: derivative of nu -> nu phi_j(nu) with its Lipschitz constant
    std::vector<LinkCost> marginal_costs;

    std::size_t num_links() const noexcept { return incidence.rows(); }
    std::size_t num_paths() const noexcept { return incidence.cols(); }
    std::size_t num_classes() const noexcept { return demands.size(); }

    /// The link functions whose values enter the gradient.
    const std::vector<LinkCost>& active_costs() const { return mode == TrafficMode::social ? marginal_costs : costs; }

    void validate() const
    {
        const std::size_t nl = num_links(), np = num_paths();
        if (nl == 0 || np == 0) {
            throw std::invalid_argument("TrafficNetwork: empty incidence matrix");
        }
        for (std::size_t j = 0; j < nl; ++j) {
            for (std::size_t l = 0; l < np; ++l) {
                const double v = incidence(j, l);
                if (v != 0.0 && v != 1.0) {
                    throw std::invalid_argument("TrafficNetwork: incidence entries must be 0 or 1");
                }
            }
        }
        for (std::size_t l = 0; l < np; ++l) {
            bool any = false;
            for (std::size_t j = 0; j < nl; ++j) {
                any = any || incidence(j, l) != 0.0;
            }
            if (!any) {
                throw std::invalid_argument("TrafficNetwork: path " + std::to_string(l) + " uses no link");
            }
        }
        if (costs.size() != nl) {
            throw std::invalid_argument("TrafficNetwork: one cost per link required");
        }
        if (mode == TrafficMode::social && marginal_costs.size() != nl) {
            throw std::invalid_argument("TrafficNetwork: social mode needs one marginal cost per link");
        }
        for (const auto& c : active_costs()) {
            if (!c.cost || !(c.lipschitz >= 0.0)) {
                throw std::invalid_argument("TrafficNetwork: link costs need a nonnegative Lipschitz constant");
            }
        }
        if (!(max_link_lipschitz(active_costs()) > 0.0)) {
            throw std::invalid_argument("TrafficNetwork: at least one link cost must be nonconstant");
        }
        if (demands.empty()) {
            throw std::invalid_argument("TrafficNetwork: at least one user class required");
        }
        for (const auto& d : demands) {
            if (d.size() != od_paths.size()) {
                throw std::invalid_argument("TrafficNetwork: one demand per O-D pair and class required");
            }
            for (double v : d) {
                if (!(v >= 0.0)) {
                    throw std::invalid_argument("TrafficNetwork: demands must be nonnegative");
                }
            }
        }
        // disjointness and nonemptiness are checked by ConvexSet::scaled_simplex
    }

    ConvexSet feasible_set(std::size_t i) const
    {
        return ConvexSet::scaled_simplex(num_paths(), od_paths, demands.at(i));
    }

    /// nu = L sum_i x_i
    Vector link_flows(const BlockVector& x) const
    {
        Vector total(num_paths(), 0.0);
        for (std::size_t i = 0; i < x.num_blocks(); ++i) {
            vec::axpy(1.0, x[i], total);
        }
        return incidence.multiply(total);
    }

    /// Cost of every path under the (non-marginal) link costs: L^T phi(nu).
    Vector path_costs(const BlockVector& x) const
    {
        return incidence.transpose_multiply(traffic_potential_gradient(costs, link_flows(x)));
    }

    /// Largest excess of a used path's cost over the cheapest path of its O-D pair.
    /// A path counts as used when its class flow exceeds `used_tol`.
    double wardrop_violation(const BlockVector& x, double used_tol = 1e-7) const
    {
        const Vector c = path_costs(x);
        double worst = 0.0;
        for (std::size_t i = 0; i < x.num_blocks(); ++i) {
            for (const auto& group : od_paths) {
                double cheapest = std::numeric_limits<double>::infinity();
                for (auto l : group) {
                    cheapest = std::min(cheapest, c[l]);
                }
                for (auto l : group) {
                    if (x[i][l] > used_tol) {
                        worst = std::max(worst, c[l] - cheapest);
                    }
                }
            }
        }
        return worst;
    }
};

/// psi for the two-agent coupling: none (pure quadratic), a prox function
/// (Moreau envelope) or a set (half squared distance).
using TwoAgentPsi = std::variant<std::monostate, ProxFunction, ConvexSet>;

/// An assembled application: the variational data, the coupled instance and
/// the raw ingredients used by the closed-form reference recursions.
struct Application {
    ApplicationKind kind;
    VariationalProblem variational;
    ProblemInstance instance;

    std::vector<ConvexSet> sets;  ///< best_approx: C_1..C_m; traffic: C_i per class
    Vector weights;               ///< best_approx: omega_2..omega_m
    Vector observation;           ///< image_decomposition: z
    std::optional<LinearMap> l11, l12;
    TwoAgentPsi psi;
    std::optional<TrafficNetwork> network;

    double beta() const noexcept { return instance.beta(); }
};

namespace detail {

inline Application assemble(ApplicationKind kind, VariationalProblem vp)
{
    ProblemInstance inst = vp.to_instance();
    return Application{kind, std::move(vp), std::move(inst), {}, {}, {}, std::nullopt, std::nullopt, {}, std::nullopt};
}

inline void require_same_dims(const std::vector<ProxFunction>& f, std::size_t d, const char* who)
{
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i].dim() != d) {
            throw std::invalid_argument(std::string(who) + ": f_" + std::to_string(i + 1)
                                        + " has dimension " + std::to_string(f[i].dim()) + ", expected "
                                        + std::to_string(d));
        }
    }
}

} // namespace detail

/// minimize sum_i iota_{C_i}(x_i) + (1/2) sum_{k>=2} omega_k ||x_1 - x_k||^2.
/// `weights` holds omega_2..omega_m, all positive with maximum 1.
inline Application build_best_approximation(std::vector<ConvexSet> sets, Vector weights)
{
    const std::size_t m = sets.size();
    if (m < 2) {
        throw std::invalid_argument("build_best_approximation: at least two sets required");
    }
    if (weights.size() != m - 1) {
        throw std::invalid_argument("build_best_approximation: need m-1 weights omega_2..omega_m");
    }
    double wmax = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) {
            throw std::invalid_argument("build_best_approximation: weights must be positive");
        }
        wmax = std::max(wmax, w);
    }
    if (wmax != 1.0) {
        throw std::invalid_argument("build_best_approximation: the largest weight must equal 1");
    }
    const std::size_t d = sets.front().dim();
    for (const auto& c : sets) {
        if (c.dim() != d) {
            throw std::invalid_argument("build_best_approximation: all sets must live in the same space");
        }
    }
    VariationalProblem vp;
    for (const auto& c : sets) {
        vp.f.push_back(prox::indicator(c));
    }
    for (std::size_t k = 0; k + 1 < m; ++k) {
        vp.phi.push_back(smooth::weighted_half_sq_norm(d, weights[k]));
        std::vector<LinearMap> row;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == 0) {
                row.push_back(LinearMap::identity(d));
            } else if (j == k + 1) {
                row.push_back(LinearMap::scaled_identity(d, -1.0));
            } else {
                row.push_back(LinearMap::zero(d, d));
            }
        }
        vp.L.push_back(std::move(row));
    }
    Application app = detail::assemble(ApplicationKind::best_approx, std::move(vp));
    app.sets = std::move(sets);
    app.weights = std::move(weights);
    return app;
}

/// minimize sum_i f_i(x_i) + (1/4)||z - sum_i x_i||^2.
inline Application build_image_decomposition(Vector z, std::vector<ProxFunction> f)
{
    if (f.empty()) {
        throw std::invalid_argument("build_image_decomposition: at least one component required");
    }
    const std::size_t d = z.size();
    detail::require_same_dims(f, d, "build_image_decomposition");
    VariationalProblem vp;
    vp.f = std::move(f);
    vp.phi.push_back(smooth::quadratic_fit(z, 0.25));
    std::vector<LinearMap> row;
    for (std::size_t i = 0; i < vp.f.size(); ++i) {
        row.push_back(LinearMap::identity(d));
    }
    vp.L.push_back(std::move(row));
    Application app = detail::assemble(ApplicationKind::image_decomposition, std::move(vp));
    app.observation = std::move(z);
    return app;
}

/// minimize sum_i f_i(x_i) + sum_k ||sum_i L_ki x_i - z_k||^2.
inline Application build_source_separation(LinearGrid grid, std::vector<Vector> observations,
                                           std::vector<ProxFunction> f)
{
    if (grid.size() != observations.size()) {
        throw std::invalid_argument("build_source_separation: one observation per grid row required");
    }
    VariationalProblem vp;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (grid[k].empty() || grid[k].front().rows() != observations[k].size()) {
            throw std::invalid_argument("build_source_separation: observation " + std::to_string(k + 1)
                                        + " does not match the grid row codomain");
        }
        vp.phi.push_back(smooth::quadratic_fit(observations[k], 1.0));
    }
    vp.f = std::move(f);
    vp.L = std::move(grid);
    return detail::assemble(ApplicationKind::source_separation, std::move(vp));
}

/// Wardrop mode: phi_1 = sum_j int_0^{nu_j} phi_j; social mode uses the
/// caller's marginal costs. f_i = iota_{C_i} with C_i the demand simplices.
inline Application build_traffic(TrafficNetwork net)
{
    net.validate();
    const std::size_t m = net.num_classes();
    std::vector<ConvexSet> sets;
    VariationalProblem vp;
    for (std::size_t i = 0; i < m; ++i) {
        sets.push_back(net.feasible_set(i));
        vp.f.push_back(prox::indicator(sets.back()));
    }
    vp.phi.push_back(smooth::traffic_potential(net.active_costs()));
    LinearMap l = LinearMap::from_matrix(net.incidence);
    vp.L.push_back(std::vector<LinearMap>(m, l));
    Application app = detail::assemble(ApplicationKind::traffic, std::move(vp));
    app.sets = std::move(sets);
    app.network = std::move(net);
    return app;
}

/// minimize f_1(x_1) + f_2(x_2) + phi(L11 x_1 + L12 x_2).
inline Application build_two_agent(ProxFunction f1, ProxFunction f2, LinearMap l11, LinearMap l12,
                                   TwoAgentPsi psi = {})
{
    if (l11.rows() != l12.rows()) {
        throw std::invalid_argument("build_two_agent: L11 and L12 must share a codomain");
    }
    const std::size_t g = l11.rows();
    VariationalProblem vp;
    vp.f = {std::move(f1), std::move(f2)};
    if (std::holds_alternative<ProxFunction>(psi)) {
        const auto& p = std::get<ProxFunction>(psi);
        if (p.dim() != g) {
            throw std::invalid_argument("build_two_agent: psi does not live on the codomain of L11");
        }
        vp.phi.push_back(smooth::moreau_envelope(p));
    } else if (std::holds_alternative<ConvexSet>(psi)) {
        const auto& c = std::get<ConvexSet>(psi);
        if (c.dim() != g) {
            throw std::invalid_argument("build_two_agent: C does not live on the codomain of L11");
        }
        vp.phi.push_back(smooth::half_dist_sq(c));
    } else {
        vp.phi.push_back(smooth::weighted_half_sq_norm(g, 1.0));
    }
    vp.L.push_back({l11, l12});
    Application app = detail::assemble(ApplicationKind::two_agent, std::move(vp));
    app.l11 = std::move(l11);
    app.l12 = std::move(l12);
    app.psi = std::move(psi);
    return app;
}

enum class ReferenceKind { best_approx, image_m3, two_agent, parallel_prox, traffic };

inline std::string to_string(ReferenceKind k)
{
    switch (k) {
    case ReferenceKind::best_approx: return "best_approx";
    case ReferenceKind::image_m3: return "image_m3";
    case ReferenceKind::two_agent: return "two_agent";
    case ReferenceKind::parallel_prox: return "parallel_prox";
    case ReferenceKind::traffic: return "traffic";
    }
    return "unknown";
}

namespace detail {

inline void require_kind(const Application& app, ApplicationKind expected, ReferenceKind ref)
{
    if (app.kind != expected) {
        throw std::invalid_argument("reference_iteration: " + to_string(ref) + " needs a " + to_string(expected)
                                    + " application, got " + to_string(app.kind));
    }
}

// x_1 <- P_{C_1}((1 - g sum w) x_1 + g sum w_i x_i),  x_i <- P_{C_i}(g w_i x_1 + (1 - g w_i) x_i)
inline BlockVector reference_best_approx(const Application& app, const BlockVector& x, double g)
{
    const std::size_t m = x.num_blocks();
    const std::size_t d = x[0].size();
    double wsum = 0.0;
    for (double w : app.weights) {
        wsum += w;
    }
    std::vector<Vector> out(m);
    Vector u(d);
    for (std::size_t k = 0; k < d; ++k) {
        double acc = 0.0;
        for (std::size_t i = 1; i < m; ++i) {
            acc += app.weights[i - 1] * x[i][k];
        }
        u[k] = (1.0 - g * wsum) * x[0][k] + g * acc;
    }
    out[0] = project(app.sets[0], u);
    for (std::size_t i = 1; i < m; ++i) {
        const double w = app.weights[i - 1];
        Vector v(d);
        for (std::size_t k = 0; k < d; ++k) {
            v[k] = g * w * x[0][k] + (1.0 - g * w) * x[i][k];
        }
        out[i] = project(app.sets[i], v);
    }
    return BlockVector(std::move(out));
}

// x_1 <- prox_{g f_1}(x_1 - g (x_1 + x_2 + x_3 - z)/2), likewise for blocks 2 and 3;
// at g = 1 this is prox_{f_1}((z + x_1 - x_2 - x_3)/2).
inline BlockVector reference_image_m3(const Application& app, const BlockVector& x, double g)
{
    if (x.num_blocks() != 3) {
        throw std::invalid_argument("reference_iteration: image_m3 needs exactly three components");
    }
    const Vector& z = app.observation;
    const std::size_t d = z.size();
    std::vector<Vector> out(3);
    for (std::size_t i = 0; i < 3; ++i) {
        const Vector& a = x[i];
        const Vector& b = x[(i + 1) % 3];
        const Vector& c = x[(i + 2) % 3];
        Vector u(d);
        for (std::size_t k = 0; k < d; ++k) {
            u[k] = a[k] - 0.5 * g * (a[k] + b[k] + c[k] - z[k]);
        }
        out[i] = app.variational.f[i].prox(g, u);
    }
    return BlockVector(std::move(out));
}

// x_1 <- prox_{g f_1}(x_1 + g L11^*(prox_psi - Id)(L11 x_1 + L12 x_2)), and symmetrically;
// with psi absent the inner term is -(L11 x_1 + L12 x_2).
inline BlockVector reference_two_agent(const Application& app, const BlockVector& x, double g)
{
    const LinearMap& a = *app.l11;
    const LinearMap& b = *app.l12;
    Vector s = a.apply(x[0]);
    Vector t = b.apply(x[1]);
    for (std::size_t k = 0; k < s.size(); ++k) {
        s[k] += t[k];
    }
    Vector r(s.size());
    if (std::holds_alternative<ProxFunction>(app.psi)) {
        Vector p = std::get<ProxFunction>(app.psi).prox(1.0, s);
        for (std::size_t k = 0; k < s.size(); ++k) {
            r[k] = p[k] - s[k];
        }
    } else if (std::holds_alternative<ConvexSet>(app.psi)) {
        Vector p = project(std::get<ConvexSet>(app.psi), s);
        for (std::size_t k = 0; k < s.size(); ++k) {
            r[k] = p[k] - s[k];
        }
    } else {
        for (std::size_t k = 0; k < s.size(); ++k) {
            r[k] = -s[k];
        }
    }
    Vector u1 = a.apply_adjoint(r);
    Vector u2 = b.apply_adjoint(r);
    for (std::size_t k = 0; k < u1.size(); ++k) {
        u1[k] = x[0][k] + g * u1[k];
    }
    for (std::size_t k = 0; k < u2.size(); ++k) {
        u2[k] = x[1][k] + g * u2[k];
    }
    return BlockVector(std::vector<Vector>{app.variational.f[0].prox(g, u1), app.variational.f[1].prox(g, u2)});
}

// x_i <- prox_{f_i/2}((x_1 + x_2)/2)
inline BlockVector reference_parallel_prox(const Application& app, const BlockVector& x, double g)
{
    if (g != 0.5) {
        throw std::invalid_argument("reference_iteration: parallel_prox runs with gamma = 1/2 only");
    }
    if (!std::holds_alternative<std::monostate>(app.psi)) {
        throw std::invalid_argument("reference_iteration: parallel_prox needs the pure quadratic coupling");
    }
    if (x[0].size() != x[1].size()) {
        throw std::invalid_argument("reference_iteration: parallel_prox needs equal block dimensions");
    }
    Vector mid(x[0].size());
    for (std::size_t k = 0; k < mid.size(); ++k) {
        mid[k] = 0.5 * (x[0][k] + x[1][k]);
    }
    return BlockVector(std::vector<Vector>{app.variational.f[0].prox(0.5, mid), app.variational.f[1].prox(0.5, mid)});
}

// x_i <- P_{C_i}(x_i - g L^T phi(L sum_j x_j))
inline BlockVector reference_traffic(const Application& app, const BlockVector& x, double g)
{
    const TrafficNetwork& net = *app.network;
    Vector total(net.num_paths(), 0.0);
    for (std::size_t i = 0; i < x.num_blocks(); ++i) {
        for (std::size_t l = 0; l < total.size(); ++l) {
            total[l] += x[i][l];
        }
    }
    const Vector nu = net.incidence.multiply(total);
    Vector phi(nu.size());
    const auto& costs = net.active_costs();
    for (std::size_t j = 0; j < nu.size(); ++j) {
        phi[j] = costs[j].cost(nu[j]);
    }
    const Vector grad = net.incidence.transpose_multiply(phi);
    std::vector<Vector> out(x.num_blocks());
    for (std::size_t i = 0; i < x.num_blocks(); ++i) {
        Vector u(x[i].size());
        for (std::size_t l = 0; l < u.size(); ++l) {
            u[l] = x[i][l] - g * grad[l];
        }
        out[i] = project(app.sets[i], u);
    }
    return BlockVector(std::move(out));
}

} // namespace detail

/// One step of the closed-form recursion for `kind`, written without the
/// generic engine. Relaxation is zero and the step is gamma.
inline BlockVector reference_iteration(ReferenceKind kind, const Application& app, const BlockVector& x, double gamma)
{
    if (x.dims() != app.instance.dims()) {
        throw std::invalid_argument("reference_iteration: iterate dimensions do not match the application");
    }
    switch (kind) {
    case ReferenceKind::best_approx:
        detail::require_kind(app, ApplicationKind::best_approx, kind);
        return detail::reference_best_approx(app, x, gamma);
    case ReferenceKind::image_m3:
        detail::require_kind(app, ApplicationKind::image_decomposition, kind);
        return detail::reference_image_m3(app, x, gamma);
    case ReferenceKind::two_agent:
        detail::require_kind(app, ApplicationKind::two_agent, kind);
        return detail::reference_two_agent(app, x, gamma);
    case ReferenceKind::parallel_prox:
        detail::require_kind(app, ApplicationKind::two_agent, kind);
        return detail::reference_parallel_prox(app, x, gamma);
    case ReferenceKind::traffic:
        detail::require_kind(app, ApplicationKind::traffic, kind);
        return detail::reference_traffic(app, x, gamma);
    }
    throw std::invalid_argument("reference_iteration: unsupported kind");
}

} // namespace parsplit

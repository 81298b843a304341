#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "parsplit/block_vector.hpp"
#include "parsplit/operators.hpp"
#include "parsplit/power_iteration.hpp"

namespace parsplit {

/// Which construction produced a cocoercivity constant.
enum class CertificateProvenance { frobenius, spectral, eigen, structured, composition, gradient, product, manual };

inline std::string to_string(CertificateProvenance p)
{
    switch (p) {
    case CertificateProvenance::frobenius: return "frobenius";
    case CertificateProvenance::spectral: return "spectral";
    case CertificateProvenance::eigen: return "eigen";
    case CertificateProvenance::structured: return "structured";
    case CertificateProvenance::composition: return "composition";
    case CertificateProvenance::gradient: return "gradient";
    case CertificateProvenance::product: return "product";
    case CertificateProvenance::manual: return "manual";
    }
    return "unknown";
}

/// beta > 0 such that sum_i <B_i x - B_i y, x_i - y_i> >= beta sum_i ||B_i x - B_i y||^2.
class CocoercivityCertificate {
public:
    CocoercivityCertificate(double beta, CertificateProvenance provenance) : beta_(beta), provenance_(provenance)
    {
        if (!(beta_ > 0.0) || !std::isfinite(beta_)) {
            throw std::invalid_argument("CocoercivityCertificate: beta must be positive and finite");
        }
    }

    double beta() const noexcept { return beta_; }
    CertificateProvenance provenance() const noexcept { return provenance_; }

private:
    double beta_;
    CertificateProvenance provenance_;
};

using CouplingApply = std::function<BlockVector(const BlockVector&)>;

/// The coupling B = (B_1, ..., B_m) of a system of inclusions, with its certificate.
///
/// apply() is pure and may be called from several threads at once.
class CouplingOperator {
public:
    CouplingOperator(std::vector<std::size_t> dims, CouplingApply apply, CocoercivityCertificate certificate)
        : dims_(std::move(dims)), apply_(std::move(apply)), certificate_(certificate)
    {
        if (dims_.empty()) {
            throw std::invalid_argument("CouplingOperator: no blocks");
        }
        for (auto d : dims_) {
            if (d == 0) {
                throw std::invalid_argument("CouplingOperator: zero-dimensional block");
            }
        }
        if (!apply_) {
            throw std::invalid_argument("CouplingOperator: empty apply oracle");
        }
    }

    const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    std::size_t num_blocks() const noexcept { return dims_.size(); }
    double beta() const noexcept { return certificate_.beta(); }
    const CocoercivityCertificate& certificate() const noexcept { return certificate_; }

    BlockVector apply(const BlockVector& x) const
    {
        if (x.dims() != dims_) {
            throw std::invalid_argument("CouplingOperator::apply: block dimensions do not match");
        }
        BlockVector y = apply_(x);
        if (y.dims() != dims_) {
            throw std::runtime_error("CouplingOperator::apply: oracle changed block dimensions");
        }
        return y;
    }

    /// Same operator, caller-asserted constant.
    CouplingOperator with_beta(double beta) const
    {
        return {dims_, apply_, CocoercivityCertificate(beta, CertificateProvenance::manual)};
    }

private:
    std::vector<std::size_t> dims_;
    CouplingApply apply_;
    CocoercivityCertificate certificate_;
};

/// Row-major grid of linear maps: grid[r][c].
using LinearGrid = std::vector<std::vector<LinearMap>>;

/// Norm estimate of a linear map by power iteration on L*L.
inline double spectral_norm(const LinearMap& map, const PowerIterationOptions& opts = {})
{
    if (map.is_zero()) {
        return 0.0;
    }
    return spectral_norm(map.forward_oracle(), map.adjoint_oracle(), map.cols(), opts);
}

namespace detail {

struct GridShape {
    std::vector<std::size_t> row_dims;
    std::vector<std::size_t> col_dims;
};

/// Checks that every row shares a codomain and every column a domain.
inline GridShape grid_shape(const LinearGrid& grid, const char* who)
{
    if (grid.empty() || grid.front().empty()) {
        throw std::invalid_argument(std::string(who) + ": empty grid");
    }
    const std::size_t cols = grid.front().size();
    GridShape shape;
    shape.col_dims.assign(cols, 0);
    for (std::size_t r = 0; r < grid.size(); ++r) {
        if (grid[r].size() != cols) {
            throw std::invalid_argument(std::string(who) + ": ragged grid at row " + std::to_string(r));
        }
        shape.row_dims.push_back(grid[r][0].rows());
        for (std::size_t c = 0; c < cols; ++c) {
            const auto& map = grid[r][c];
            if (map.rows() != shape.row_dims[r]) {
                throw std::invalid_argument(std::string(who) + ": codomain mismatch in row " + std::to_string(r));
            }
            if (shape.col_dims[c] == 0) {
                shape.col_dims[c] = map.cols();
            } else if (map.cols() != shape.col_dims[c]) {
                throw std::invalid_argument(std::string(who) + ": domain mismatch in column "
                                            + std::to_string(c));
            }
        }
    }
    return shape;
}

/// sum_i ||L_ki||^2 from the norm bounds, one entry per row k.
inline Vector row_norm_sums(const LinearGrid& grid)
{
    Vector sums;
    sums.reserve(grid.size());
    for (const auto& row : grid) {
        double s = 0.0;
        for (const auto& map : row) {
            s += map.norm_bound() * map.norm_bound();
        }
        sums.push_back(s);
    }
    return sums;
}

inline void require_rows_nonzero(const Vector& sums, const char* who)
{
    for (std::size_t k = 0; k < sums.size(); ++k) {
        if (!(sums[k] > 0.0)) {
            throw std::invalid_argument(std::string(who) + ": row " + std::to_string(k)
                                        + " of the grid is identically zero");
        }
    }
}

/// y_k = sum_j L_kj x_j for each row k.
inline std::vector<Vector> grid_forward(const LinearGrid& grid, const std::vector<std::size_t>& row_dims,
                                        const BlockVector& x)
{
    std::vector<Vector> out;
    out.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        Vector s(row_dims[k], 0.0);
        for (std::size_t j = 0; j < grid[k].size(); ++j) {
            if (grid[k][j].is_zero()) {
                continue;
            }
            vec::axpy(1.0, grid[k][j].apply(x[j]), s);
        }
        out.push_back(std::move(s));
    }
    return out;
}

/// (sum_k L_ki^* u_k)_i
inline BlockVector grid_adjoint(const LinearGrid& grid, const std::vector<std::size_t>& col_dims,
                                const std::vector<Vector>& u)
{
    std::vector<Vector> out;
    out.reserve(col_dims.size());
    for (std::size_t i = 0; i < col_dims.size(); ++i) {
        Vector s(col_dims[i], 0.0);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (grid[k][i].is_zero()) {
                continue;
            }
            vec::axpy(1.0, grid[k][i].apply_adjoint(u[k]), s);
        }
        out.push_back(std::move(s));
    }
    return BlockVector(std::move(out));
}

inline FlatOperator flatten_coupling(CouplingApply apply, std::vector<std::size_t> dims)
{
    return [apply = std::move(apply), dims = std::move(dims)](std::span<const double> flat) {
        return apply(BlockVector::unflatten(flat, dims)).flatten();
    };
}

} // namespace detail

enum class LinearCertificateMode { frobenius, spectral };

/// B_i x = sum_j M_ij x_j for a symmetric positive grid (M_ji = M_ij^*).
///
/// Frobenius mode certifies beta = 1/sqrt(sum_ij ||M_ij||^2) from the norm
/// bounds. Spectral mode estimates |||B||| by power iteration and keeps the
/// larger of 1/|||B||| and the Frobenius constant, both being valid.
/// Symmetry and positivity are checked on `validation_samples` random draws.
inline CouplingOperator linear_block_coupling(const LinearGrid& grid, LinearCertificateMode mode,
                                              std::size_t validation_samples = 32)
{
    auto shape = detail::grid_shape(grid, "linear_block_coupling");
    const std::size_t m = grid.size();
    if (shape.col_dims.size() != m || shape.row_dims != shape.col_dims) {
        throw std::invalid_argument("linear_block_coupling: grid must be m x m with M_ij : H_j -> H_i");
    }

    double frob_sq = 0.0;
    bool any_nonzero = false;
    for (const auto& row : grid) {
        for (const auto& map : row) {
            frob_sq += map.norm_bound() * map.norm_bound();
            any_nonzero = any_nonzero || (!map.is_zero() && map.norm_bound() > 0.0);
        }
    }
    if (!any_nonzero || !(frob_sq > 0.0)) {
        throw std::invalid_argument("linear_block_coupling: all-zero grid, beta undefined");
    }
    const double frob_beta = 1.0 / std::sqrt(frob_sq);

    auto shared = std::make_shared<const LinearGrid>(grid);
    auto dims = shape.col_dims;
    CouplingApply apply = [shared, dims](const BlockVector& x) {
        std::vector<Vector> out;
        out.reserve(dims.size());
        for (std::size_t i = 0; i < dims.size(); ++i) {
            Vector s(dims[i], 0.0);
            for (std::size_t j = 0; j < dims.size(); ++j) {
                if ((*shared)[i][j].is_zero()) {
                    continue;
                }
                vec::axpy(1.0, (*shared)[i][j].apply(x[j]), s);
            }
            out.push_back(std::move(s));
        }
        return BlockVector(std::move(out));
    };

    if (validation_samples > 0) {
        std::mt19937_64 rng(0xc0c0a1ULL);
        std::normal_distribution<double> normal(0.0, 1.0);
        auto draw = [&](std::size_t d) {
            Vector v(d);
            for (auto& c : v) {
                c = normal(rng);
            }
            return v;
        };
        for (std::size_t s = 0; s < validation_samples; ++s) {
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = i; j < m; ++j) {
                    Vector u = draw(dims[j]);
                    Vector v = draw(dims[i]);
                    double lhs = vec::dot(grid[i][j].apply(u), v);
                    double rhs = vec::dot(u, grid[j][i].apply(v));
                    double scale = (grid[i][j].norm_bound() + grid[j][i].norm_bound() + 1.0) * vec::norm(u)
                                   * vec::norm(v);
                    if (std::abs(lhs - rhs) > 1e-9 * scale) {
                        throw std::invalid_argument("linear_block_coupling: grid is not symmetric (M_"
                                                    + std::to_string(j + 1) + std::to_string(i + 1)
                                                    + " != M_" + std::to_string(i + 1)
                                                    + std::to_string(j + 1) + "^*)");
                    }
                }
            }
            std::vector<Vector> blocks;
            for (auto d : dims) {
                blocks.push_back(draw(d));
            }
            BlockVector x(std::move(blocks));
            double quad = block_dot(apply(x), x);
            if (quad < -1e-9 * std::sqrt(frob_sq) * block_dot(x, x)) {
                throw std::invalid_argument("linear_block_coupling: grid is not positive (sum <M_ij x_j, x_i> < 0)");
            }
        }
    }

    if (mode == LinearCertificateMode::frobenius) {
        return {dims, std::move(apply), CocoercivityCertificate(frob_beta, CertificateProvenance::frobenius)};
    }
    std::size_t total = 0;
    for (auto d : dims) {
        total += d;
    }
    auto r = power_iteration(detail::flatten_coupling(apply, dims), total);
    if (!r.converged) {
        throw std::runtime_error("linear_block_coupling: power iteration for |||B||| did not converge");
    }
    double beta = r.value > 0.0 ? std::max(1.0 / r.value, frob_beta) : frob_beta;
    return {dims, std::move(apply), CocoercivityCertificate(beta, CertificateProvenance::spectral)};
}

/// B_i x = sum_j xi_ij x_j on (R^d)^m for a symmetric PSD matrix xi; beta = 1/lambda_max.
inline CouplingOperator psd_matrix_coupling(const DenseMatrix& xi, std::size_t block_dim)
{
    const std::size_t m = xi.rows();
    if (m == 0 || xi.cols() != m) {
        throw std::invalid_argument("psd_matrix_coupling: matrix must be square and nonempty");
    }
    if (block_dim == 0) {
        throw std::invalid_argument("psd_matrix_coupling: block_dim must be positive");
    }
    if (xi.is_zero()) {
        throw std::invalid_argument("psd_matrix_coupling: zero matrix");
    }
    double max_abs = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            max_abs = std::max(max_abs, std::abs(xi(i, j)));
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            if (std::abs(xi(i, j) - xi(j, i)) > 1e-12 * max_abs) {
                throw std::invalid_argument("psd_matrix_coupling: matrix is not symmetric");
            }
        }
    }
    std::mt19937_64 rng(0x95dULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int s = 0; s < 64; ++s) {
        Vector v(m);
        for (auto& c : v) {
            c = normal(rng);
        }
        if (vec::dot(v, xi.multiply(v)) < -1e-10 * max_abs * static_cast<double>(m) * vec::norm_sq(v)) {
            throw std::invalid_argument("psd_matrix_coupling: matrix is not positive semidefinite");
        }
    }
    auto r = power_iteration([&xi](std::span<const double> v) { return xi.multiply(v); }, m);
    if (!r.converged || !(r.value > 0.0)) {
        throw std::runtime_error("psd_matrix_coupling: could not estimate the largest eigenvalue");
    }
    auto shared = std::make_shared<const DenseMatrix>(xi);
    std::vector<std::size_t> dims(m, block_dim);
    CouplingApply apply = [shared, m, block_dim](const BlockVector& x) {
        std::vector<Vector> out(m, Vector(block_dim, 0.0));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                double c = (*shared)(i, j);
                if (c != 0.0) {
                    vec::axpy(c, x[j], out[i]);
                }
            }
        }
        return BlockVector(std::move(out));
    };
    return {dims, std::move(apply), CocoercivityCertificate(1.0 / r.value, CertificateProvenance::eigen)};
}

/// B_i x = x_i - (1/m) sum_j x_j; cocoercivity holds with equality at beta = 1.
inline CouplingOperator mean_deviation_coupling(std::size_t m, std::size_t block_dim)
{
    if (m < 2) {
        throw std::invalid_argument("mean_deviation_coupling: need m >= 2");
    }
    if (block_dim == 0) {
        throw std::invalid_argument("mean_deviation_coupling: block_dim must be positive");
    }
    CouplingApply apply = [m, block_dim](const BlockVector& x) {
        Vector mean(block_dim, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            vec::axpy(1.0, x[j], mean);
        }
        for (auto& c : mean) {
            c /= static_cast<double>(m);
        }
        std::vector<Vector> out;
        out.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            out.push_back(vec::sub(x[i], mean));
        }
        return BlockVector(std::move(out));
    };
    return {std::vector<std::size_t>(m, block_dim), std::move(apply),
            CocoercivityCertificate(1.0, CertificateProvenance::eigen)};
}

/// B_i x = sum_k L_ki^* (sum_j L_kj x_j); beta = 1 / sum_k sum_i ||L_ki||^2.
inline CouplingOperator structured_coupling(const LinearGrid& grid)
{
    auto shape = detail::grid_shape(grid, "structured_coupling");
    auto sums = detail::row_norm_sums(grid);
    detail::require_rows_nonzero(sums, "structured_coupling");
    double total = 0.0;
    for (double s : sums) {
        total += s;
    }
    auto shared = std::make_shared<const LinearGrid>(grid);
    CouplingApply apply = [shared, shape](const BlockVector& x) {
        auto s = detail::grid_forward(*shared, shape.row_dims, x);
        return detail::grid_adjoint(*shared, shape.col_dims, s);
    };
    return {shape.col_dims, std::move(apply),
            CocoercivityCertificate(1.0 / total, CertificateProvenance::structured)};
}

/// A beta-cocoercive map T on R^dim.
struct CocoerciveMap {
    std::size_t dim;
    FlatOperator apply;
    double beta;
};

/// B_i x = sum_k L_ki^* T_k(sum_j L_kj x_j);
/// beta = (1/p) min_k beta_k / sum_i ||L_ki||^2.
inline CouplingOperator cocoercive_composition(std::vector<CocoerciveMap> maps, const LinearGrid& grid)
{
    auto shape = detail::grid_shape(grid, "cocoercive_composition");
    const std::size_t p = grid.size();
    if (maps.size() != p) {
        throw std::invalid_argument("cocoercive_composition: one map per grid row required");
    }
    auto sums = detail::row_norm_sums(grid);
    detail::require_rows_nonzero(sums, "cocoercive_composition");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < p; ++k) {
        if (!(maps[k].beta > 0.0)) {
            throw std::invalid_argument("cocoercive_composition: beta_" + std::to_string(k + 1)
                                        + " must be positive");
        }
        if (maps[k].dim != shape.row_dims[k]) {
            throw std::invalid_argument("cocoercive_composition: map " + std::to_string(k + 1)
                                        + " does not act on the row codomain");
        }
        best = std::min(best, maps[k].beta / sums[k]);
    }
    const double beta = best / static_cast<double>(p);
    auto shared_grid = std::make_shared<const LinearGrid>(grid);
    auto shared_maps = std::make_shared<const std::vector<CocoerciveMap>>(std::move(maps));
    CouplingApply apply = [shared_grid, shared_maps, shape](const BlockVector& x) {
        auto s = detail::grid_forward(*shared_grid, shape.row_dims, x);
        for (std::size_t k = 0; k < s.size(); ++k) {
            s[k] = (*shared_maps)[k].apply(s[k]);
        }
        return detail::grid_adjoint(*shared_grid, shape.col_dims, s);
    };
    return {shape.col_dims, std::move(apply), CocoercivityCertificate(beta, CertificateProvenance::composition)};
}

/// B_i x = sum_k L_ki^* grad phi_k(sum_j L_kj x_j);
/// beta = 1 / (p max_k tau_k sum_i ||L_ki||^2).
inline CouplingOperator gradient_composition(std::vector<SmoothFunction> phis, const LinearGrid& grid)
{
    auto shape = detail::grid_shape(grid, "gradient_composition");
    const std::size_t p = grid.size();
    if (phis.size() != p) {
        throw std::invalid_argument("gradient_composition: one smooth function per grid row required");
    }
    auto sums = detail::row_norm_sums(grid);
    detail::require_rows_nonzero(sums, "gradient_composition");
    double worst = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
        if (phis[k].dim() != shape.row_dims[k]) {
            throw std::invalid_argument("gradient_composition: phi_" + std::to_string(k + 1)
                                        + " does not act on the row codomain");
        }
        worst = std::max(worst, phis[k].lipschitz() * sums[k]);
    }
    const double beta = 1.0 / (static_cast<double>(p) * worst);
    auto shared_grid = std::make_shared<const LinearGrid>(grid);
    auto shared_phis = std::make_shared<const std::vector<SmoothFunction>>(std::move(phis));
    CouplingApply apply = [shared_grid, shared_phis, shape](const BlockVector& x) {
        auto s = detail::grid_forward(*shared_grid, shape.row_dims, x);
        for (std::size_t k = 0; k < s.size(); ++k) {
            s[k] = (*shared_phis)[k].gradient(s[k]);
        }
        return detail::grid_adjoint(*shared_grid, shape.col_dims, s);
    };
    return {shape.col_dims, std::move(apply), CocoercivityCertificate(beta, CertificateProvenance::gradient)};
}

/// Block i of the result acts on (y_i, z_i): (B1_i(y), B2_i(z)); beta = min(beta_1, beta_2).
inline CouplingOperator product_coupling(const CouplingOperator& first, const CouplingOperator& second)
{
    if (first.num_blocks() != second.num_blocks()) {
        throw std::invalid_argument("product_coupling: block counts differ ("
                                    + std::to_string(first.num_blocks()) + " vs "
                                    + std::to_string(second.num_blocks()) + ")");
    }
    const auto d1 = first.dims();
    const auto d2 = second.dims();
    std::vector<std::size_t> dims(d1.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
        dims[i] = d1[i] + d2[i];
    }
    CouplingApply apply = [first, second, d1, d2](const BlockVector& x) {
        std::vector<Vector> ys, zs;
        for (std::size_t i = 0; i < d1.size(); ++i) {
            const auto& xi = x[i];
            ys.emplace_back(xi.begin(), xi.begin() + static_cast<std::ptrdiff_t>(d1[i]));
            zs.emplace_back(xi.begin() + static_cast<std::ptrdiff_t>(d1[i]), xi.end());
        }
        BlockVector by = first.apply(BlockVector(std::move(ys)));
        BlockVector bz = second.apply(BlockVector(std::move(zs)));
        std::vector<Vector> out;
        for (std::size_t i = 0; i < d1.size(); ++i) {
            Vector b = by[i];
            b.insert(b.end(), bz[i].begin(), bz[i].end());
            out.push_back(std::move(b));
        }
        return BlockVector(std::move(out));
    };
    return {dims, std::move(apply),
            CocoercivityCertificate(std::min(first.beta(), second.beta()), CertificateProvenance::product)};
}

using BlockPairSampler = std::function<std::pair<BlockVector, BlockVector>(std::mt19937_64&)>;

inline BlockPairSampler gaussian_block_pair_sampler(std::vector<std::size_t> dims, double scale = 1.0)
{
    return [dims = std::move(dims), scale](std::mt19937_64& rng) {
        std::normal_distribution<double> normal(0.0, scale);
        auto draw = [&]() {
            std::vector<Vector> blocks;
            for (auto d : dims) {
                Vector v(d);
                for (auto& c : v) {
                    c = normal(rng);
                }
                blocks.push_back(std::move(v));
            }
            return BlockVector(std::move(blocks));
        };
        BlockVector x = draw();
        BlockVector y = draw();
        return std::make_pair(std::move(x), std::move(y));
    };
}

struct CocoercivityReport {
    /// min over pairs of sum <Bx - By, x - y> - beta sum ||Bx - By||^2
    double worst_margin = std::numeric_limits<double>::infinity();
    /// min over pairs of margin / (1 + max(|||x|||^2, |||y|||^2))
    double worst_relative_margin = std::numeric_limits<double>::infinity();
    double max_pair_norm_sq = 0.0;
    std::size_t samples = 0;

    /// worst_margin >= -tol * (1 + max_pair_norm_sq)
    bool passes(double tol = 1e-9) const { return worst_margin >= -tol * (1.0 + max_pair_norm_sq); }
};

/// Samples the cocoercivity inequality of `coupling` at its certified beta.
inline CocoercivityReport certify_cocoercivity(const CouplingOperator& coupling, const BlockPairSampler& sampler,
                                               std::size_t n_pairs, std::uint64_t seed = 7)
{
    if (n_pairs == 0) {
        throw std::invalid_argument("certify_cocoercivity: n_pairs must be >= 1");
    }
    std::mt19937_64 rng(seed);
    CocoercivityReport report;
    const double beta = coupling.beta();
    for (std::size_t s = 0; s < n_pairs; ++s) {
        auto [x, y] = sampler(rng);
        BlockVector dB = block_sub(coupling.apply(x), coupling.apply(y));
        BlockVector dx = block_sub(x, y);
        double nb = block_norm(dB);
        double margin = block_dot(dB, dx) - beta * nb * nb;
        double nx = block_norm(x);
        double ny = block_norm(y);
        double pair_sq = std::max(nx * nx, ny * ny);
        report.max_pair_norm_sq = std::max(report.max_pair_norm_sq, pair_sq);
        report.worst_margin = std::min(report.worst_margin, margin);
        report.worst_relative_margin = std::min(report.worst_relative_margin, margin / (1.0 + pair_sq));
    }
    report.samples = n_pairs;
    return report;
}

} // namespace parsplit

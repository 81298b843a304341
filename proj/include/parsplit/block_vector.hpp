#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace parsplit {

using Vector = std::vector<double>;

namespace vec {

inline double dot(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("vec::dot: size mismatch");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += a[k] * b[k];
    }
    return s;
}

inline double norm_sq(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(norm_sq(a)); }

inline Vector sub(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("vec::sub: size mismatch");
    }
    Vector r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        r[k] = a[k] - b[k];
    }
    return r;
}

inline Vector add(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("vec::add: size mismatch");
    }
    Vector r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        r[k] = a[k] + b[k];
    }
    return r;
}

inline Vector scale(double c, std::span<const double> a)
{
    Vector r(a.begin(), a.end());
    for (auto& v : r) {
        v *= c;
    }
    return r;
}

/// y += c * x
inline void axpy(double c, std::span<const double> x, std::span<double> y)
{
    if (x.size() != y.size()) {
        throw std::invalid_argument("vec::axpy: size mismatch");
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
        y[k] += c * x[k];
    }
}

inline double distance(std::span<const double> a, std::span<const double> b)
{
    return norm(sub(a, b));
}

} // namespace vec

/// Element of a finite product of Euclidean spaces R^{d_1} x ... x R^{d_m}.
///
/// Each block owns its own storage, so concurrent writers that touch
/// distinct blocks never alias.
class BlockVector {
public:
    BlockVector() = default;

    /// Zero vector with the given block dimensions.
    explicit BlockVector(std::vector<std::size_t> dims)
    {
        validate_dims(dims);
        blocks_.reserve(dims.size());
        for (auto d : dims) {
            blocks_.emplace_back(d, 0.0);
        }
    }

    explicit BlockVector(std::vector<Vector> blocks) : blocks_(std::move(blocks))
    {
        for (const auto& b : blocks_) {
            if (b.empty()) {
                throw std::invalid_argument("BlockVector: zero-dimensional block");
            }
        }
    }

    std::size_t num_blocks() const noexcept { return blocks_.size(); }

    std::size_t total_dim() const noexcept
    {
        std::size_t n = 0;
        for (const auto& b : blocks_) {
            n += b.size();
        }
        return n;
    }

    std::vector<std::size_t> dims() const
    {
        std::vector<std::size_t> d;
        d.reserve(blocks_.size());
        for (const auto& b : blocks_) {
            d.push_back(b.size());
        }
        return d;
    }

    const Vector& operator[](std::size_t i) const { return blocks_[i]; }
    Vector& operator[](std::size_t i) { return blocks_[i]; }

    const Vector& block(std::size_t i) const { return blocks_.at(i); }

    /// Replace block i; the new block must keep the dimension.
    void set_block(std::size_t i, Vector v)
    {
        if (v.size() != blocks_.at(i).size()) {
            throw std::invalid_argument("BlockVector::set_block: dimension change for block "
                                        + std::to_string(i));
        }
        blocks_[i] = std::move(v);
    }

    const std::vector<Vector>& blocks() const noexcept { return blocks_; }

    Vector flatten() const
    {
        Vector flat;
        flat.reserve(total_dim());
        for (const auto& b : blocks_) {
            flat.insert(flat.end(), b.begin(), b.end());
        }
        return flat;
    }

    static BlockVector unflatten(std::span<const double> flat, const std::vector<std::size_t>& dims)
    {
        validate_dims(dims);
        std::size_t total = std::accumulate(dims.begin(), dims.end(), std::size_t{0});
        if (flat.size() != total) {
            throw std::invalid_argument("BlockVector::unflatten: size does not match dims");
        }
        std::vector<Vector> blocks;
        blocks.reserve(dims.size());
        std::size_t offset = 0;
        for (auto d : dims) {
            blocks.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                                flat.begin() + static_cast<std::ptrdiff_t>(offset + d));
            offset += d;
        }
        return BlockVector(std::move(blocks));
    }

    bool same_shape(const BlockVector& other) const
    {
        if (other.blocks_.size() != blocks_.size()) {
            return false;
        }
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            if (blocks_[i].size() != other.blocks_[i].size()) {
                return false;
            }
        }
        return true;
    }

    friend bool operator==(const BlockVector&, const BlockVector&) = default;

private:
    static void validate_dims(const std::vector<std::size_t>& dims)
    {
        for (auto d : dims) {
            if (d == 0) {
                throw std::invalid_argument("BlockVector: zero-dimensional block");
            }
        }
    }

    std::vector<Vector> blocks_;
};

/// Product-space inner product sum_i <x_i, y_i>.
inline double block_dot(const BlockVector& x, const BlockVector& y)
{
    if (!x.same_shape(y)) {
        throw std::invalid_argument("block_dot: shape mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < x.num_blocks(); ++i) {
        s += vec::dot(x[i], y[i]);
    }
    return s;
}

/// sqrt(sum_i ||x_i||^2), accumulated in block order.
inline double block_norm(const BlockVector& x)
{
    double s = 0.0;
    for (std::size_t i = 0; i < x.num_blocks(); ++i) {
        s += vec::norm_sq(x[i]);
    }
    return std::sqrt(s);
}

inline BlockVector block_sub(const BlockVector& x, const BlockVector& y)
{
    if (!x.same_shape(y)) {
        throw std::invalid_argument("block_sub: shape mismatch");
    }
    std::vector<Vector> out;
    out.reserve(x.num_blocks());
    for (std::size_t i = 0; i < x.num_blocks(); ++i) {
        out.push_back(vec::sub(x[i], y[i]));
    }
    return BlockVector(std::move(out));
}

inline BlockVector block_add(const BlockVector& x, const BlockVector& y)
{
    if (!x.same_shape(y)) {
        throw std::invalid_argument("block_add: shape mismatch");
    }
    std::vector<Vector> out;
    out.reserve(x.num_blocks());
    for (std::size_t i = 0; i < x.num_blocks(); ++i) {
        out.push_back(vec::add(x[i], y[i]));
    }
    return BlockVector(std::move(out));
}

inline BlockVector block_scale(double c, const BlockVector& x)
{
    std::vector<Vector> out;
    out.reserve(x.num_blocks());
    for (std::size_t i = 0; i < x.num_blocks(); ++i) {
        out.push_back(vec::scale(c, x[i]));
    }
    return BlockVector(std::move(out));
}

inline double block_distance(const BlockVector& x, const BlockVector& y)
{
    return block_norm(block_sub(x, y));
}

} // namespace parsplit

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttkit {

using Index = Eigen::Index;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Shape = std::vector<Index>;

inline Index prod(const Shape& s, std::size_t from = 0, std::size_t to = SIZE_MAX) {
    Index p = 1;
    to = std::min(to, s.size());
    for (std::size_t k = from; k < to; ++k) p *= s[k];
    return p;
}

/// N-way dense array. Values are stored column-major (first index fastest),
/// which makes vec/fold and Eigen maps coincide.
struct DenseTensor {
    Shape shape;
    Vec data;

    DenseTensor() = default;
    explicit DenseTensor(Shape s) : shape(std::move(s)), data(Vec::Zero(prod(shape))) {
        for (Index n : shape)
            if (n <= 0) throw std::invalid_argument("DenseTensor: mode sizes must be positive");
    }
    DenseTensor(Shape s, Vec v) : shape(std::move(s)), data(std::move(v)) {
        if (data.size() != prod(shape)) throw std::invalid_argument("DenseTensor: value count mismatch");
    }

    [[nodiscard]] std::size_t order() const { return shape.size(); }
    [[nodiscard]] Index numel() const { return data.size(); }

    [[nodiscard]] Index linear(const std::vector<Index>& idx) const {
        Index li = 0, stride = 1;
        for (std::size_t n = 0; n < shape.size(); ++n) {
            li += idx[n] * stride;
            stride *= shape[n];
        }
        return li;
    }
    double& operator()(const std::vector<Index>& idx) { return data[linear(idx)]; }
    double operator()(const std::vector<Index>& idx) const { return data[linear(idx)]; }

    [[nodiscard]] double norm() const { return data.norm(); }
};

/// Multi-index of a linear position (column-major).
inline std::vector<Index> multi_index(Index li, const Shape& shape) {
    std::vector<Index> idx(shape.size());
    for (std::size_t n = 0; n < shape.size(); ++n) {
        idx[n] = li % shape[n];
        li /= shape[n];
    }
    return idx;
}

inline DenseTensor fold(const Vec& v, const Shape& mode_sizes) {
    if (v.size() != prod(mode_sizes)) throw std::invalid_argument("fold: length does not match mode sizes");
    return DenseTensor(mode_sizes, v);
}

inline Vec unfold(const DenseTensor& x) { return x.data; }

/// Mode-n matricization X_(n): rows i_n, columns the remaining indices with
/// the lowest mode varying fastest.
inline Mat unfold_mode(const DenseTensor& x, std::size_t n) {
    const Index In = x.shape[n];
    const Index left = prod(x.shape, 0, n);
    const Index right = prod(x.shape, n + 1);
    Mat m(In, left * right);
    for (Index r = 0; r < right; ++r)
        for (Index i = 0; i < In; ++i)
            for (Index l = 0; l < left; ++l)
                m(i, l + left * r) = x.data[l + left * (i + In * r)];
    return m;
}

inline DenseTensor fold_mode(const Mat& m, std::size_t n, const Shape& shape) {
    DenseTensor x(shape);
    const Index In = shape[n];
    const Index left = prod(shape, 0, n);
    const Index right = prod(shape, n + 1);
    if (m.rows() != In || m.cols() != left * right) throw std::invalid_argument("fold_mode: shape mismatch");
    for (Index r = 0; r < right; ++r)
        for (Index i = 0; i < In; ++i)
            for (Index l = 0; l < left; ++l)
                x.data[l + left * (i + In * r)] = m(i, l + left * r);
    return x;
}

/// Mode-n product X ×_n U, U of shape (J, I_n).
inline DenseTensor mode_product(const DenseTensor& x, const Mat& U, std::size_t n) {
    if (U.cols() != x.shape[n]) throw std::invalid_argument("mode_product: size mismatch");
    Shape s = x.shape;
    s[n] = U.rows();
    return fold_mode(U * unfold_mode(x, n), n, s);
}

/// Contraction X ×̄_n v with a vector; removes mode n.
inline DenseTensor mode_vector_product(const DenseTensor& x, const Vec& v, std::size_t n) {
    if (v.size() != x.shape[n]) throw std::invalid_argument("mode_vector_product: size mismatch");
    const Index In = x.shape[n];
    const Index left = prod(x.shape, 0, n);
    const Index right = prod(x.shape, n + 1);
    Shape s;
    for (std::size_t k = 0; k < x.shape.size(); ++k)
        if (k != n) s.push_back(x.shape[k]);
    if (s.empty()) s.push_back(1);
    DenseTensor y(s);
    for (Index r = 0; r < right; ++r)
        for (Index i = 0; i < In; ++i)
            for (Index l = 0; l < left; ++l)
                y.data[l + left * r] += x.data[l + left * (i + In * r)] * v[i];
    return y;
}

/// Outer product of vectors, first vector indexes the first mode.
inline DenseTensor outer(const std::vector<Vec>& vs) {
    Shape s;
    for (const auto& v : vs) s.push_back(v.size());
    DenseTensor x(s);
    for (Index li = 0; li < x.numel(); ++li) {
        auto idx = multi_index(li, s);
        double p = 1.0;
        for (std::size_t n = 0; n < vs.size(); ++n) p *= vs[n][idx[n]];
        x.data[li] = p;
    }
    return x;
}

/// Permute modes: result mode k is input mode perm[k].
inline DenseTensor permute(const DenseTensor& x, const std::vector<std::size_t>& perm) {
    Shape s(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) s[k] = x.shape[perm[k]];
    DenseTensor y(s);
    std::vector<Index> src(x.order());
    for (Index li = 0; li < y.numel(); ++li) {
        auto idx = multi_index(li, s);
        for (std::size_t k = 0; k < perm.size(); ++k) src[perm[k]] = idx[k];
        y.data[li] = x(src);
    }
    return y;
}

/// Khatri-Rao product, column-wise Kronecker A ⊙ B (B index fastest).
inline Mat khatri_rao(const Mat& A, const Mat& B) {
    if (A.cols() != B.cols()) throw std::invalid_argument("khatri_rao: column mismatch");
    Mat C(A.rows() * B.rows(), A.cols());
    for (Index r = 0; r < A.cols(); ++r)
        for (Index i = 0; i < A.rows(); ++i)
            C.col(r).segment(i * B.rows(), B.rows()) = A(i, r) * B.col(r);
    return C;
}

inline Mat kron(const Mat& A, const Mat& B) {
    Mat C(A.rows() * B.rows(), A.cols() * B.cols());
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j)
            C.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return C;
}

/// Seeded standard-normal generator used by every random initializer.
struct Rng {
    std::mt19937_64 gen;
    std::normal_distribution<double> normal{0.0, 1.0};
    std::uniform_real_distribution<double> unif{0.0, 1.0};
    explicit Rng(std::uint64_t seed = 0) : gen(seed) {}
    double randn() { return normal(gen); }
    double rand() { return unif(gen); }
    Index randint(Index n) { return std::uniform_int_distribution<Index>(0, n - 1)(gen); }
    Mat randn(Index r, Index c) {
        Mat m(r, c);
        for (Index j = 0; j < c; ++j)
            for (Index i = 0; i < r; ++i) m(i, j) = randn();
        return m;
    }
    Vec randn_vec(Index n) { return randn(n, 1); }
};

inline DenseTensor random_tensor(const Shape& s, Rng& rng) { return DenseTensor(s, rng.randn_vec(prod(s))); }

}  // namespace ttkit

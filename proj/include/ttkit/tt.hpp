#pragma once

#include "dense.hpp"
#include "linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ttkit {

inline constexpr Index kNoRankCap = std::numeric_limits<Index>::max() / 4;

/// Third-order core (r0, n, r1), column-major: entry (a,i,b) at a + r0*(i + n*b).
/// With this layout the left unfolding (r0·n × r1) and the right unfolding
/// (r0 × n·r1) are plain maps of the storage.
struct Core {
    Index r0 = 1, n = 1, r1 = 1;
    Vec data;

    Core() : data(Vec::Zero(1)) {}
    Core(Index r0_, Index n_, Index r1_) : r0(r0_), n(n_), r1(r1_), data(Vec::Zero(r0_ * n_ * r1_)) {}
    Core(Index r0_, Index n_, Index r1_, Vec d) : r0(r0_), n(n_), r1(r1_), data(std::move(d)) {
        if (data.size() != r0 * n * r1) throw std::invalid_argument("Core: size mismatch");
    }

    double& operator()(Index a, Index i, Index b) { return data[a + r0 * (i + n * b)]; }
    double operator()(Index a, Index i, Index b) const { return data[a + r0 * (i + n * b)]; }

    [[nodiscard]] Eigen::Map<const Mat> left() const { return {data.data(), r0 * n, r1}; }
    [[nodiscard]] Eigen::Map<const Mat> right() const { return {data.data(), r0, n * r1}; }
    [[nodiscard]] Mat slice(Index i) const {
        Mat s(r0, r1);
        for (Index b = 0; b < r1; ++b)
            for (Index a = 0; a < r0; ++a) s(a, b) = (*this)(a, i, b);
        return s;
    }
    void set_slice(Index i, const Mat& s) {
        for (Index b = 0; b < r1; ++b)
            for (Index a = 0; a < r0; ++a) (*this)(a, i, b) = s(a, b);
    }
    static Core from_left(const Mat& m, Index r0, Index n) {
        return Core(r0, n, m.cols(), Eigen::Map<const Vec>(m.data(), m.size()));
    }
    static Core from_right(const Mat& m, Index n, Index r1) {
        return Core(m.rows(), n, r1, Eigen::Map<const Vec>(m.data(), m.size()));
    }
};

/// A vector/tensor in TT format.
struct TTTrain {
    std::vector<Core> cores;

    TTTrain() = default;
    explicit TTTrain(std::vector<Core> c) : cores(std::move(c)) { validate(); }

    [[nodiscard]] std::size_t order() const { return cores.size(); }
    [[nodiscard]] Shape mode_sizes() const {
        Shape s;
        for (const auto& c : cores) s.push_back(c.n);
        return s;
    }
    [[nodiscard]] std::vector<Index> ranks() const {
        std::vector<Index> r;
        if (cores.empty()) return r;
        r.push_back(cores.front().r0);
        for (const auto& c : cores) r.push_back(c.r1);
        return r;
    }
    [[nodiscard]] Index numel() const { return prod(mode_sizes()); }
    [[nodiscard]] Index storage() const {
        Index s = 0;
        for (const auto& c : cores) s += c.data.size();
        return s;
    }
    void validate() const {
        if (cores.empty()) throw std::invalid_argument("TTTrain: no cores");
        if (cores.front().r0 != 1 || cores.back().r1 != 1) throw std::invalid_argument("TTTrain: boundary ranks must be 1");
        for (std::size_t k = 1; k < cores.size(); ++k)
            if (cores[k].r0 != cores[k - 1].r1) throw std::invalid_argument("TTTrain: rank chain mismatch");
    }
    /// Entry at a multi-index via the slice-product formula.
    [[nodiscard]] double at(const std::vector<Index>& idx) const {
        Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
        for (std::size_t k = 0; k < cores.size(); ++k) v = v * cores[k].slice(idx[k]);
        return v(0);
    }
};

/// A matrix in TT/MPO format. Core k holds (r0, I_k, J_k, r1) stored as a
/// third-order core with merged mode i + I_k*j.
struct TTOperator {
    std::vector<Core> cores;
    Shape rows, cols;

    TTOperator() = default;
    TTOperator(std::vector<Core> c, Shape r, Shape cl) : cores(std::move(c)), rows(std::move(r)), cols(std::move(cl)) {
        if (cores.size() != rows.size() || rows.size() != cols.size()) throw std::invalid_argument("TTOperator: order mismatch");
        for (std::size_t k = 0; k < cores.size(); ++k)
            if (cores[k].n != rows[k] * cols[k]) throw std::invalid_argument("TTOperator: core mode mismatch");
        as_train().validate();
    }
    [[nodiscard]] std::size_t order() const { return cores.size(); }
    [[nodiscard]] std::vector<Index> ranks() const { return as_train().ranks(); }
    [[nodiscard]] double at(std::size_t k, Index a, Index i, Index j, Index b) const {
        return cores[k](a, i + rows[k] * j, b);
    }
    [[nodiscard]] TTTrain as_train() const {
        TTTrain t;
        t.cores = cores;
        return t;
    }
};

/// TT train whose core at `pos` carries an extra block index of size K.
/// The block core stores (r0, n, r1, K) column-major; column k of the
/// (r0·n·r1 × K) view is the core of the k-th represented train.
struct BlockTT {
    std::vector<Core> cores;  // cores[pos].data has r0*n*r1*K entries
    std::size_t pos = 0;
    Index K = 1;

    [[nodiscard]] std::size_t order() const { return cores.size(); }
    [[nodiscard]] Shape mode_sizes() const {
        Shape s;
        for (const auto& c : cores) s.push_back(c.n);
        return s;
    }
    [[nodiscard]] std::vector<Index> ranks() const {
        std::vector<Index> r{cores.front().r0};
        for (const auto& c : cores) r.push_back(c.r1);
        return r;
    }
    [[nodiscard]] Index block_rows() const {
        const Core& c = cores[pos];
        return c.r0 * c.n * c.r1;
    }
    [[nodiscard]] Eigen::Map<const Mat> block() const { return {cores[pos].data.data(), block_rows(), K}; }
    void set_block(const Mat& X) {
        if (X.rows() != block_rows() || X.cols() != K) throw std::invalid_argument("BlockTT: block size mismatch");
        cores[pos].data = Eigen::Map<const Vec>(X.data(), X.size());
    }
    /// The k-th represented train.
    [[nodiscard]] TTTrain train(Index k) const {
        TTTrain t;
        t.cores = cores;
        const Core& c = cores[pos];
        const Index m = c.r0 * c.n * c.r1;
        t.cores[pos] = Core(c.r0, c.n, c.r1, c.data.segment(k * m, m));
        t.validate();
        return t;
    }
};

// ============================================================================
// Construction helpers
// ============================================================================

inline TTTrain random_tt(const Shape& modes, const std::vector<Index>& inner_ranks, Rng& rng) {
    if (inner_ranks.size() + 1 != modes.size()) throw std::invalid_argument("random_tt: need N-1 inner ranks");
    std::vector<Core> cores;
    Index r0 = 1;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        Index r1 = k + 1 < modes.size() ? inner_ranks[k] : 1;
        Core c(r0, modes[k], r1);
        for (Index t = 0; t < c.data.size(); ++t) c.data[t] = rng.randn();
        cores.push_back(std::move(c));
        r0 = r1;
    }
    return TTTrain(std::move(cores));
}

inline TTTrain rank1_tt(const std::vector<Vec>& vs) {
    std::vector<Core> cores;
    for (const auto& v : vs) cores.emplace_back(1, v.size(), 1, v);
    return TTTrain(std::move(cores));
}

inline TTTrain zeros_tt(const Shape& modes) {
    std::vector<Core> cores;
    for (Index n : modes) cores.emplace_back(1, n, 1);
    return TTTrain(std::move(cores));
}

inline TTOperator identity_op(const Shape& modes) {
    std::vector<Core> cores;
    for (Index n : modes) {
        Core c(1, n * n, 1);
        for (Index i = 0; i < n; ++i) c(0, i + n * i, 0) = 1.0;
        cores.push_back(std::move(c));
    }
    return TTOperator(std::move(cores), modes, modes);
}

/// Diagonal operator diag(vec(d)) with the same ranks as d.
inline TTOperator diag_op(const TTTrain& d) {
    std::vector<Core> cores;
    for (const auto& c : d.cores) {
        Core o(c.r0, c.n * c.n, c.r1);
        for (Index b = 0; b < c.r1; ++b)
            for (Index i = 0; i < c.n; ++i)
                for (Index a = 0; a < c.r0; ++a) o(a, i + c.n * i, b) = c(a, i, b);
        cores.push_back(std::move(o));
    }
    Shape m = d.mode_sizes();
    return TTOperator(std::move(cores), m, m);
}

// ============================================================================
// Dense conversion
// ============================================================================

inline DenseTensor contract_full(const TTTrain& x) {
    Mat M = Mat::Ones(1, 1);  // (prod of visited modes) × r
    for (const auto& c : x.cores) {
        Mat T = M * c.right();  // P × (n r1), index p + P*(i + n*b)
        M = Eigen::Map<Mat>(T.data(), M.rows() * c.n, c.r1);
    }
    return DenseTensor(x.mode_sizes(), Eigen::Map<Vec>(M.data(), M.size()));
}

/// Row index (i_1..i_N) and column index (j_1..j_N) are both column-major.
inline Mat to_dense(const TTOperator& A) {
    const std::size_t N = A.order();
    Shape merged;
    for (std::size_t k = 0; k < N; ++k) merged.push_back(A.rows[k] * A.cols[k]);
    DenseTensor full = contract_full(A.as_train());
    const Index R = prod(A.rows), C = prod(A.cols);
    Mat M(R, C);
    for (Index li = 0; li < full.numel(); ++li) {
        auto idx = multi_index(li, merged);
        Index r = 0, c = 0, sr = 1, sc = 1;
        for (std::size_t k = 0; k < N; ++k) {
            r += (idx[k] % A.rows[k]) * sr;
            c += (idx[k] / A.rows[k]) * sc;
            sr *= A.rows[k];
            sc *= A.cols[k];
        }
        M(r, c) = full.data[li];
    }
    return M;
}

// ============================================================================
// TT-SVD, orthogonalization, rounding
// ============================================================================

inline TTTrain tt_svd(const DenseTensor& x, double tol, Index max_rank = kNoRankCap) {
    if (x.numel() == 0 || x.shape.empty()) throw std::invalid_argument("tt_svd: empty tensor");
    if (tol < 0) throw std::invalid_argument("tt_svd: tol must be nonnegative");
    const std::size_t N = x.order();
    const double nrm = x.norm();
    if (nrm == 0.0) return zeros_tt(x.shape);
    const double delta = N > 1 ? tol / std::sqrt(double(N - 1)) * nrm : 0.0;
    std::vector<Core> cores;
    Mat C = Eigen::Map<const Mat>(x.data.data(), x.shape[0], x.numel() / x.shape[0]);
    Index r0 = 1;
    for (std::size_t k = 0; k + 1 < N; ++k) {
        const Index n = x.shape[k];
        Mat M = Eigen::Map<Mat>(C.data(), r0 * n, C.size() / (r0 * n));
        TruncSVD f = svd_truncated(M, delta, max_rank);
        const Index r1 = f.s.size();
        cores.push_back(Core::from_left(f.U, r0, n));
        C = f.s.asDiagonal() * f.V.transpose();
        r0 = r1;
    }
    cores.push_back(Core(r0, x.shape[N - 1], 1, Eigen::Map<Vec>(C.data(), C.size())));
    return TTTrain(std::move(cores));
}

/// Left-orthogonalize core k and push the R factor into core k+1.
inline void orth_left_step(std::vector<Core>& cores, std::size_t k) {
    Core& c = cores[k];
    auto [Q, R] = qr_thin(Mat(c.left()));
    const Index r = Q.cols();
    Core& d = cores[k + 1];
    Mat next = R * d.right();
    c = Core::from_left(Q, c.r0, c.n);
    d = Core::from_right(next, d.n, d.r1);
    (void)r;
}

/// Right-orthogonalize core k and push the factor into core k-1.
inline void orth_right_step(std::vector<Core>& cores, std::size_t k) {
    Core& c = cores[k];
    auto [Q, R] = qr_thin(Mat(c.right().transpose()));
    Core& p = cores[k - 1];
    Mat prev = p.left() * R.transpose();
    c = Core::from_right(Q.transpose(), c.n, c.r1);
    p = Core::from_left(prev, p.r0, p.n);
}

/// Cores left of the pivot become left-orthogonal, cores right of it
/// right-orthogonal. The pivot is 0-based.
inline TTTrain orthogonalize(const TTTrain& x, std::size_t pivot) {
    if (pivot >= x.order()) throw std::out_of_range("orthogonalize: pivot outside 0..N-1");
    TTTrain y = x;
    for (std::size_t k = 0; k < pivot; ++k) orth_left_step(y.cores, k);
    for (std::size_t k = y.order() - 1; k > pivot; --k) orth_right_step(y.cores, k);
    return y;
}

inline double norm(const TTTrain& x) {
    TTTrain y = orthogonalize(x, x.order() - 1);
    return y.cores.back().data.norm();
}

inline TTTrain round(const TTTrain& x, double tol, Index max_rank = kNoRankCap) {
    const std::size_t N = x.order();
    TTTrain y = orthogonalize(x, 0);
    const double nrm = y.cores[0].data.norm();
    if (nrm == 0.0) return zeros_tt(x.mode_sizes());
    if (N == 1) return y;
    const double delta = tol / std::sqrt(double(N - 1)) * nrm;
    for (std::size_t k = 0; k + 1 < N; ++k) {
        Core& c = y.cores[k];
        TruncSVD f = svd_truncated(Mat(c.left()), delta, std::min(max_rank, c.r1));
        Core& d = y.cores[k + 1];
        Mat next = f.s.asDiagonal() * f.V.transpose() * d.right();
        c = Core::from_left(f.U, c.r0, c.n);
        d = Core::from_right(next, d.n, d.r1);
    }
    return y;
}

inline TTOperator round(const TTOperator& A, double tol, Index max_rank = kNoRankCap) {
    TTTrain t = round(A.as_train(), tol, max_rank);
    return TTOperator(t.cores, A.rows, A.cols);
}

/// Quantize a dense matrix into a TT operator with the given row/col modes.
inline TTOperator operator_from_dense(const Mat& M, const Shape& rows, const Shape& cols, double tol = 0.0,
                                      Index max_rank = kNoRankCap) {
    const std::size_t N = rows.size();
    if (cols.size() != N || prod(rows) != M.rows() || prod(cols) != M.cols())
        throw std::invalid_argument("operator_from_dense: mode sizes do not match matrix");
    Shape merged;
    for (std::size_t k = 0; k < N; ++k) merged.push_back(rows[k] * cols[k]);
    DenseTensor t(merged);
    for (Index li = 0; li < t.numel(); ++li) {
        auto idx = multi_index(li, merged);
        Index r = 0, c = 0, sr = 1, sc = 1;
        for (std::size_t k = 0; k < N; ++k) {
            r += (idx[k] % rows[k]) * sr;
            c += (idx[k] / rows[k]) * sc;
            sr *= rows[k];
            sc *= cols[k];
        }
        t.data[li] = M(r, c);
    }
    TTTrain tt = tt_svd(t, tol, max_rank);
    return TTOperator(tt.cores, rows, cols);
}

// ============================================================================
// Arithmetic
// ============================================================================

inline void check_same_modes(const TTTrain& x, const TTTrain& y, const char* what) {
    if (x.mode_sizes() != y.mode_sizes()) throw std::invalid_argument(std::string(what) + ": mode-size mismatch");
}

inline TTTrain scale(const TTTrain& x, double a) {
    TTTrain y = x;
    y.cores.back().data *= a;
    return y;
}

inline TTTrain add(const TTTrain& x, const TTTrain& y) {
    check_same_modes(x, y, "add");
    const std::size_t N = x.order();
    if (N == 1) {
        TTTrain z = x;
        z.cores[0].data += y.cores[0].data;
        return z;
    }
    std::vector<Core> cores;
    for (std::size_t k = 0; k < N; ++k) {
        const Core& a = x.cores[k];
        const Core& b = y.cores[k];
        const Index r0 = k == 0 ? 1 : a.r0 + b.r0;
        const Index r1 = k + 1 == N ? 1 : a.r1 + b.r1;
        Core c(r0, a.n, r1);
        const Index ao0 = 0, bo0 = k == 0 ? 0 : a.r0;
        const Index ao1 = 0, bo1 = k + 1 == N ? 0 : a.r1;
        for (Index i = 0; i < a.n; ++i) {
            for (Index q = 0; q < a.r1; ++q)
                for (Index p = 0; p < a.r0; ++p) c(ao0 + p, i, ao1 + q) += a(p, i, q);
            for (Index q = 0; q < b.r1; ++q)
                for (Index p = 0; p < b.r0; ++p) c(bo0 + p, i, bo1 + q) += b(p, i, q);
        }
        cores.push_back(std::move(c));
    }
    return TTTrain(std::move(cores));
}

inline TTTrain sub(const TTTrain& x, const TTTrain& y) { return add(x, scale(y, -1.0)); }

inline TTTrain hadamard(const TTTrain& x, const TTTrain& y) {
    check_same_modes(x, y, "hadamard");
    std::vector<Core> cores;
    for (std::size_t k = 0; k < x.order(); ++k) {
        const Core& a = x.cores[k];
        const Core& b = y.cores[k];
        Core c(a.r0 * b.r0, a.n, a.r1 * b.r1);
        for (Index i = 0; i < a.n; ++i)
            for (Index q1 = 0; q1 < a.r1; ++q1)
                for (Index q2 = 0; q2 < b.r1; ++q2)
                    for (Index p1 = 0; p1 < a.r0; ++p1)
                        for (Index p2 = 0; p2 < b.r0; ++p2)
                            c(p2 + b.r0 * p1, i, q2 + b.r1 * q1) = a(p1, i, q1) * b(p2, i, q2);
        cores.push_back(std::move(c));
    }
    return TTTrain(std::move(cores));
}

inline double dot(const TTTrain& x, const TTTrain& y) {
    check_same_modes(x, y, "dot");
    Mat L = Mat::Ones(1, 1);  // (rx × ry)
    for (std::size_t k = 0; k < x.order(); ++k) {
        const Core& a = x.cores[k];
        const Core& b = y.cores[k];
        Mat Ln = Mat::Zero(a.r1, b.r1);
        for (Index i = 0; i < a.n; ++i) Ln.noalias() += a.slice(i).transpose() * L * b.slice(i);
        L = std::move(Ln);
    }
    return L(0, 0);
}

/// y = A x; ranks multiply.
inline TTTrain apply_op(const TTOperator& A, const TTTrain& x) {
    if (A.order() != x.order()) throw std::invalid_argument("apply_op: order mismatch");
    for (std::size_t k = 0; k < A.order(); ++k)
        if (A.cols[k] != x.cores[k].n) throw std::invalid_argument("apply_op: mode-size mismatch");
    std::vector<Core> cores;
    for (std::size_t k = 0; k < A.order(); ++k) {
        const Core& a = A.cores[k];
        const Core& v = x.cores[k];
        const Index I = A.rows[k], J = A.cols[k];
        Core c(a.r0 * v.r0, I, a.r1 * v.r1);
        for (Index bb = 0; bb < a.r1; ++bb)
            for (Index j = 0; j < J; ++j)
                for (Index i = 0; i < I; ++i)
                    for (Index aa = 0; aa < a.r0; ++aa) {
                        const double w = a(aa, i + I * j, bb);
                        if (w == 0.0) continue;
                        for (Index q = 0; q < v.r1; ++q)
                            for (Index p = 0; p < v.r0; ++p) c(p + v.r0 * aa, i, q + v.r1 * bb) += w * v(p, j, q);
                    }
        cores.push_back(std::move(c));
    }
    return TTTrain(std::move(cores));
}

inline TTOperator transpose(const TTOperator& A) {
    std::vector<Core> cores;
    for (std::size_t k = 0; k < A.order(); ++k) {
        const Core& a = A.cores[k];
        const Index I = A.rows[k], J = A.cols[k];
        Core c(a.r0, I * J, a.r1);
        for (Index b = 0; b < a.r1; ++b)
            for (Index j = 0; j < J; ++j)
                for (Index i = 0; i < I; ++i)
                    for (Index aa = 0; aa < a.r0; ++aa) c(aa, j + J * i, b) = a(aa, i + I * j, b);
        cores.push_back(std::move(c));
    }
    return TTOperator(std::move(cores), A.cols, A.rows);
}

/// C = A B in TT format; ranks multiply.
inline TTOperator op_product(const TTOperator& A, const TTOperator& B) {
    if (A.order() != B.order()) throw std::invalid_argument("op_product: order mismatch");
    std::vector<Core> cores;
    for (std::size_t k = 0; k < A.order(); ++k) {
        if (A.cols[k] != B.rows[k]) throw std::invalid_argument("op_product: mode-size mismatch");
        const Core& a = A.cores[k];
        const Core& b = B.cores[k];
        const Index I = A.rows[k], J = A.cols[k], L = B.cols[k];
        Core c(a.r0 * b.r0, I * L, a.r1 * b.r1);
        for (Index a1 = 0; a1 < a.r1; ++a1)
            for (Index b1 = 0; b1 < b.r1; ++b1)
                for (Index l = 0; l < L; ++l)
                    for (Index j = 0; j < J; ++j)
                        for (Index b0 = 0; b0 < b.r0; ++b0) {
                            const double wb = b(b0, j + J * l, b1);
                            if (wb == 0.0) continue;
                            for (Index i = 0; i < I; ++i)
                                for (Index a0 = 0; a0 < a.r0; ++a0)
                                    c(b0 + b.r0 * a0, i + I * l, b1 + b.r1 * a1) += a(a0, i + I * j, a1) * wb;
                        }
        cores.push_back(std::move(c));
    }
    return TTOperator(std::move(cores), A.rows, B.cols);
}

inline TTOperator op_add(const TTOperator& A, const TTOperator& B) {
    if (A.rows != B.rows || A.cols != B.cols) throw std::invalid_argument("op_add: mode-size mismatch");
    TTTrain s = add(A.as_train(), B.as_train());
    return TTOperator(s.cores, A.rows, A.cols);
}

inline TTOperator op_scale(const TTOperator& A, double a) {
    TTOperator B = A;
    B.cores.back().data *= a;
    return B;
}

/// x + step·z followed by rounding.
inline TTTrain truncated_gradient_step(const TTTrain& x, const TTTrain& z, double step, double tol,
                                       Index max_rank = kNoRankCap) {
    if (step == 0.0) return round(x, tol, max_rank);
    return round(add(x, scale(z, step)), tol, max_rank);
}

// ============================================================================
// Interface and frame matrices
// ============================================================================

/// G^{<n}: (I_0···I_{n-1}) × R_n, built from cores 0..n-1.
inline Mat left_interface(const TTTrain& x, std::size_t n) {
    Mat M = Mat::Ones(1, 1);
    for (std::size_t k = 0; k < n; ++k) {
        const Core& c = x.cores[k];
        Mat T = M * c.right();
        M = Eigen::Map<Mat>(T.data(), M.rows() * c.n, c.r1);
    }
    return M;
}

/// G^{>n}: R_{n+1} × (I_{n+1}···I_{N-1}), built from cores n+1..N-1.
inline Mat right_interface(const TTTrain& x, std::size_t n) {
    Mat M = Mat::Ones(1, 1);  // r × P with column index over the trailing modes
    for (std::size_t k = x.order(); k-- > n + 1;) {
        const Core& c = x.cores[k];
        // (r0 n) × r1 times r1 × P gives index (a + r0 i, p); regroup columns as i + n p
        Mat T = c.left() * M;
        Mat R(c.r0, c.n * M.cols());
        for (Index p = 0; p < M.cols(); ++p)
            for (Index i = 0; i < c.n; ++i) R.col(i + c.n * p) = T.block(c.r0 * i, p, c.r0, 1);
        M = std::move(R);
    }
    return M;
}

inline bool is_left_orthogonal(const Core& c, double tol = 1e-10) {
    Mat G = c.left().transpose() * c.left();
    return (G - Mat::Identity(G.rows(), G.cols())).norm() <= tol * std::sqrt(double(G.rows()));
}
inline bool is_right_orthogonal(const Core& c, double tol = 1e-10) {
    Mat G = c.right() * c.right().transpose();
    return (G - Mat::Identity(G.rows(), G.cols())).norm() <= tol * std::sqrt(double(G.rows()));
}
inline bool is_n_orthogonal(const TTTrain& x, std::size_t n, double tol = 1e-10) {
    for (std::size_t k = 0; k < n; ++k)
        if (!is_left_orthogonal(x.cores[k], tol)) return false;
    for (std::size_t k = n + 1; k < x.order(); ++k)
        if (!is_right_orthogonal(x.cores[k], tol)) return false;
    return true;
}

/// X_{≠n} v computed by contraction; v is laid out like core n.
inline Vec frame_apply(const TTTrain& x, std::size_t n, const Vec& v) {
    const Core& c = x.cores.at(n);
    if (v.size() != c.r0 * c.n * c.r1) throw std::invalid_argument("frame_apply: vector length mismatch");
    if (!is_n_orthogonal(x, n)) throw std::invalid_argument("frame_apply: train is not n-orthogonal");
    TTTrain y = x;
    y.cores[n] = Core(c.r0, c.n, c.r1, v);
    return contract_full(y).data;
}

/// Explicit frame matrix X^{<n} ⊗ I ⊗ (X^{>n})ᵀ in the vec(x) ordering.
inline Mat frame_matrix(const TTTrain& x, std::size_t n) {
    const Core& c = x.cores[n];
    Mat Lf = left_interface(x, n);   // P_L × r0
    Mat Rf = right_interface(x, n);  // r1 × P_R
    const Index PL = Lf.rows(), PR = Rf.cols();
    Mat F = Mat::Zero(PL * c.n * PR, c.r0 * c.n * c.r1);
    for (Index pr = 0; pr < PR; ++pr)
        for (Index i = 0; i < c.n; ++i)
            for (Index pl = 0; pl < PL; ++pl)
                for (Index b = 0; b < c.r1; ++b)
                    for (Index a = 0; a < c.r0; ++a)
                        F(pl + PL * (i + c.n * pr), a + c.r0 * (i + c.n * b)) = Lf(pl, a) * Rf(b, pr);
    return F;
}

// ============================================================================
// Block-TT
// ============================================================================

/// Build a block-TT at position 0 from K trains sharing all other cores.
inline BlockTT make_block(const TTTrain& base, Index K, std::size_t pos, Rng& rng) {
    BlockTT b;
    b.cores = base.cores;
    b.pos = pos;
    b.K = K;
    Core& c = b.cores[pos];
    Vec d(c.r0 * c.n * c.r1 * K);
    for (Index t = 0; t < d.size(); ++t) d[t] = rng.randn();
    c.data = d;
    return b;
}

inline BlockTT block_shift_right(const BlockTT& x) {
    if (x.pos + 1 >= x.order()) throw std::invalid_argument("block_shift_right: block already at last core");
    BlockTT y = x;
    const Core& c = x.cores[x.pos];
    const Index K = x.K;
    // (r0 n) × (r1 K): the K blocks side by side
    Mat M = Eigen::Map<const Mat>(c.data.data(), c.r0 * c.n, c.r1 * K);
    auto [Q, B] = factor_min_rank(M);
    const Index r = Q.cols();
    y.cores[x.pos] = Core::from_left(Q, c.r0, c.n);
    const Core& d = x.cores[x.pos + 1];
    Vec nd(r * d.n * d.r1 * K);
    for (Index k = 0; k < K; ++k) {
        Mat Wk = B.middleCols(k * c.r1, c.r1) * d.right();  // r × (n r1)
        nd.segment(k * r * d.n * d.r1, r * d.n * d.r1) = Eigen::Map<Vec>(Wk.data(), Wk.size());
    }
    y.cores[x.pos + 1] = Core(r, d.n, d.r1);
    y.cores[x.pos + 1].data = nd;
    y.pos = x.pos + 1;
    return y;
}

inline BlockTT block_shift_left(const BlockTT& x) {
    if (x.pos == 0) throw std::invalid_argument("block_shift_left: block already at first core");
    BlockTT y = x;
    const Core& c = x.cores[x.pos];
    const Index K = x.K;
    const Index m = c.r0 * c.n * c.r1;
    // rows (a, k), columns (i, b)
    Mat M(c.r0 * K, c.n * c.r1);
    for (Index k = 0; k < K; ++k)
        for (Index ib = 0; ib < c.n * c.r1; ++ib)
            for (Index a = 0; a < c.r0; ++a) M(a + c.r0 * k, ib) = c.data[k * m + a + c.r0 * ib];
    auto [Q, B] = factor_min_rank(M.transpose());  // M = Bᵀ Qᵀ
    const Index r = Q.cols();
    y.cores[x.pos] = Core::from_right(Q.transpose(), c.n, c.r1);
    const Core& p = x.cores[x.pos - 1];
    Mat Bt = B.transpose();  // (r0 K) × r
    Vec nd(p.r0 * p.n * r * K);
    for (Index k = 0; k < K; ++k) {
        Mat Wk = p.left() * Bt.middleRows(k * c.r0, c.r0);  // (r_{-1} n_{-1}) × r
        nd.segment(k * p.r0 * p.n * r, p.r0 * p.n * r) = Eigen::Map<Vec>(Wk.data(), Wk.size());
    }
    y.cores[x.pos - 1] = Core(p.r0, p.n, r);
    y.cores[x.pos - 1].data = nd;
    y.pos = x.pos - 1;
    return y;
}

inline std::string ranks_string(const std::vector<Index>& r) {
    std::ostringstream os;
    for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << r[k];
    return os.str();
}

}  // namespace ttkit

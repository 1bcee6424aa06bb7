#pragma once

#include "tt.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <set>
#include <string>

namespace ttkit {

// ============================================================================
// Reports
// ============================================================================

struct SolveReport {
    int sweeps = 0;
    std::vector<double> objective;        // every micro-step
    std::vector<double> sweep_objective;  // end of every full sweep
    std::vector<double> residuals;        // per sweep, where meaningful
    double final_residual = 0.0;
    std::vector<Index> final_ranks;
    double wall_time_s = 0.0;
    std::string status = "max_sweeps";
    std::vector<std::string> warnings;
};

namespace detail {

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

}  // namespace detail

// ============================================================================
// Contraction blocks
// ============================================================================

/// Partial contraction of ⟨x|A|y⟩ over the cores on one side of a bond.
/// Entry (a, p, b) with a the x rank, p the operator rank, b the y rank.
struct SandwichBlock {
    Index rx = 1, ra = 1, ry = 1;
    Vec v = Vec::Ones(1);
    [[nodiscard]] double operator()(Index a, Index p, Index b) const { return v[a + rx * (p + ra * b)]; }
    [[nodiscard]] Eigen::Map<const Mat> mat() const { return {v.data(), rx * ra, ry}; }
};

/// Partial contraction of ⟨x|y⟩: an rx × ry matrix.
using PairBlock = Mat;

/// T(a, i, q, b') = Σ L(a,p,a') A(p,i,j,q) Y(a',j,b'), as (rx·I) × (ra1·ry1).
inline Mat left_partial(const SandwichBlock& L, const Core& A, Index I, Index J, const Core& Y) {
    Mat T1 = L.mat() * Y.right();  // (rx ra) × (J ry1)
    const Index rx = L.rx, ra0 = A.r0, ra1 = A.r1, ry1 = Y.r1;
    Mat T2 = Mat::Zero(rx * I, ra1 * ry1);
    for (Index b = 0; b < ry1; ++b)
        for (Index q = 0; q < ra1; ++q)
            for (Index j = 0; j < J; ++j)
                for (Index p = 0; p < ra0; ++p)
                    for (Index i = 0; i < I; ++i) {
                        const double w = A(p, i + I * j, q);
                        if (w == 0.0) continue;
                        T2.col(q + ra1 * b).segment(rx * i, rx) += w * T1.col(j + J * b).segment(rx * p, rx);
                    }
    return T2;
}

inline SandwichBlock left_step(const SandwichBlock& L, const Core& X, const Core& A, Index I, Index J, const Core& Y) {
    Mat T2 = left_partial(L, A, I, J, Y);
    Mat Ln = X.left().transpose() * T2;  // rx1 × (ra1 ry1)
    return {X.r1, A.r1, Y.r1, Eigen::Map<Vec>(Ln.data(), Ln.size())};
}

/// U(a' + ry0 p, i + I b) = Σ A(p,i,j,q) Y(a',j,b') R(b,q,b'), as (ry0·ra0) × (I·rx1).
inline Mat right_partial(const Core& A, Index I, Index J, const Core& Y, const SandwichBlock& R) {
    const Index ry0 = Y.r0, ra0 = A.r0, ra1 = A.r1, rx1 = R.rx;
    Mat S1 = Y.left() * R.mat().transpose();  // (ry0 J) × (rx1 ra1), column b + rx1 q
    Mat U = Mat::Zero(ry0 * ra0, I * rx1);
    for (Index b = 0; b < rx1; ++b)
        for (Index q = 0; q < ra1; ++q)
            for (Index j = 0; j < J; ++j)
                for (Index p = 0; p < ra0; ++p)
                    for (Index i = 0; i < I; ++i) {
                        const double w = A(p, i + I * j, q);
                        if (w == 0.0) continue;
                        U.col(i + I * b).segment(ry0 * p, ry0) += w * S1.col(b + rx1 * q).segment(ry0 * j, ry0);
                    }
    return U;
}

inline SandwichBlock right_step(const Core& X, const Core& A, Index I, Index J, const Core& Y, const SandwichBlock& R) {
    Mat U = right_partial(A, I, J, Y, R);
    Mat Rn = X.right() * U.transpose();  // rx0 × (ry0 ra0), column a' + ry0 p
    SandwichBlock out{X.r0, A.r0, Y.r0, Vec(X.r0 * A.r0 * Y.r0)};
    for (Index p = 0; p < A.r0; ++p)
        for (Index ap = 0; ap < Y.r0; ++ap)
            for (Index a = 0; a < X.r0; ++a) out.v[a + X.r0 * (p + A.r0 * ap)] = Rn(a, ap + Y.r0 * p);
    return out;
}

inline PairBlock pair_left_step(const PairBlock& L, const Core& X, const Core& Y) {
    Mat out = Mat::Zero(X.r1, Y.r1);
    for (Index i = 0; i < X.n; ++i) out += X.slice(i).transpose() * L * Y.slice(i);
    return out;
}

inline PairBlock pair_right_step(const Core& X, const Core& Y, const PairBlock& R) {
    Mat out = Mat::Zero(X.r0, Y.r0);
    for (Index i = 0; i < X.n; ++i) out += X.slice(i) * R * Y.slice(i).transpose();
    return out;
}

/// Dense local operator for the core at one site, in core storage order.
inline Mat local_operator(const SandwichBlock& L, const Core& A, Index I, Index J, const SandwichBlock& R) {
    const Index r0 = L.rx, c0 = L.ry, r1 = R.rx, c1 = R.ry;
    Mat M = Mat::Zero(r0 * I * r1, c0 * J * c1);
    Mat Lp(r0, c0);
    for (Index p = 0; p < A.r0; ++p) {
        for (Index a = 0; a < r0; ++a)
            for (Index ap = 0; ap < c0; ++ap) Lp(a, ap) = L(a, p, ap);
        for (Index q = 0; q < A.r1; ++q)
            for (Index b = 0; b < r1; ++b)
                for (Index bp = 0; bp < c1; ++bp) {
                    const double rq = R(b, q, bp);
                    if (rq == 0.0) continue;
                    for (Index j = 0; j < J; ++j)
                        for (Index i = 0; i < I; ++i) {
                            const double w = A(p, i + I * j, q) * rq;
                            if (w == 0.0) continue;
                            M.block(r0 * (i + I * b), c0 * (j + J * bp), r0, c0) += w * Lp;
                        }
                }
    }
    return M;
}

inline Vec local_rhs(const PairBlock& L, const Core& B, const PairBlock& R) {
    Vec f(L.rows() * B.n * R.rows());
    for (Index i = 0; i < B.n; ++i) {
        Mat s = L * B.slice(i) * R.transpose();  // rx0 × rx1
        for (Index b = 0; b < s.cols(); ++b)
            for (Index a = 0; a < s.rows(); ++a) f[a + L.rows() * (i + B.n * b)] = s(a, b);
    }
    return f;
}

/// Left and right sandwich blocks ⟨x|A|x⟩ keyed by bond index 0..N.
struct ContractionCache {
    std::vector<SandwichBlock> left, right;

    void init(std::size_t N) {
        left.assign(N + 1, SandwichBlock{});
        right.assign(N + 1, SandwichBlock{});
    }
    void update_left(std::size_t k, const Core& x, const TTOperator& A) {
        left[k + 1] = left_step(left[k], x, A.cores[k], A.rows[k], A.cols[k], x);
    }
    void update_right(std::size_t k, const Core& x, const TTOperator& A) {
        right[k] = right_step(x, A.cores[k], A.rows[k], A.cols[k], x, right[k + 1]);
    }
};

/// ⟨x|b⟩ blocks.
struct PairCache {
    std::vector<PairBlock> left, right;
    void init(std::size_t N) {
        left.assign(N + 1, Mat::Ones(1, 1));
        right.assign(N + 1, Mat::Ones(1, 1));
    }
};

namespace detail {

inline void check_square(const TTOperator& A, const Shape& modes, const char* what) {
    if (A.rows != A.cols) throw std::invalid_argument(std::string(what) + ": operator must be square");
    if (A.rows != modes) throw std::invalid_argument(std::string(what) + ": mode sizes do not match the operator");
}

inline void check_local_size(Index n, Index cap, const char* what) {
    if (n > cap)
        throw std::runtime_error(std::string(what) + ": local problem of size " + std::to_string(n) +
                                 " exceeds the dense cap " + std::to_string(cap));
}

/// Merge neighboring operator cores into one core over (i1 + I1 i2, j1 + J1 j2).
inline Core merge_op_cores(const Core& A1, Index I1, Index J1, const Core& A2, Index I2, Index J2) {
    Core M(A1.r0, I1 * I2 * J1 * J2, A2.r1);
    const Index I = I1 * I2;
    for (Index q = 0; q < A2.r1; ++q)
        for (Index m = 0; m < A1.r1; ++m)
            for (Index j2 = 0; j2 < J2; ++j2)
                for (Index i2 = 0; i2 < I2; ++i2) {
                    const double w2 = A2(m, i2 + I2 * j2, q);
                    if (w2 == 0.0) continue;
                    for (Index j1 = 0; j1 < J1; ++j1)
                        for (Index i1 = 0; i1 < I1; ++i1)
                            for (Index p = 0; p < A1.r0; ++p)
                                M(p, (i1 + I1 * i2) + I * (j1 + J1 * j2), q) += A1(p, i1 + I1 * j1, m) * w2;
                }
    return M;
}

inline Core merge_cores(const Core& X1, const Core& X2) {
    Mat M = X1.left() * X2.right();  // (r0 n1) × (n2 r2)
    return Core(X1.r0, X1.n * X2.n, X2.r1, Eigen::Map<Vec>(M.data(), M.size()));
}

/// Smallest K eigenpairs of a symmetric matrix, eigenvectors sign-normalized.
inline std::pair<Vec, Mat> smallest_eigs(const Mat& M, Index K) {
    Mat S = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    if (es.info() != Eigen::Success) throw std::runtime_error("local eigensolver failed");
    Mat V = es.eigenvectors().leftCols(K);
    normalize_signs(V);
    return {es.eigenvalues().head(K), V};
}

/// Right-orthogonalize cores 1..N-1 of a block train whose block sits at 0.
inline void right_orthogonalize(BlockTT& X) {
    for (std::size_t k = X.order(); k-- > 1;) {
        Core& c = X.cores[k];
        auto [Q, R] = qr_thin(Mat(c.right().transpose()));  // right()ᵀ = Q R
        const Index r = Q.cols();
        Mat Qt = Q.transpose();
        Mat Rt = R.transpose();  // r0_old × r
        Core& p = X.cores[k - 1];
        const Index Kp = (k - 1 == X.pos) ? X.K : 1;
        const Index m = p.r0 * p.n * p.r1;
        Vec nd(p.r0 * p.n * r * Kp);
        for (Index q = 0; q < Kp; ++q) {
            Eigen::Map<const Mat> P(p.data.data() + q * m, p.r0 * p.n, p.r1);
            Mat W = P * Rt;
            nd.segment(q * p.r0 * p.n * r, p.r0 * p.n * r) = Eigen::Map<Vec>(W.data(), W.size());
        }
        c = Core::from_right(Qt, c.n, c.r1);
        const Index pr0 = p.r0, pn = p.n;
        p = Core(pr0, pn, r);
        p.data = nd;
    }
}

}  // namespace detail

inline BlockTT random_block_tt(const Shape& modes, const std::vector<Index>& inner_ranks, Index K, Rng& rng) {
    TTTrain base = random_tt(modes, inner_ranks, rng);
    BlockTT B = make_block(base, K, 0, rng);
    detail::right_orthogonalize(B);
    return B;
}

// ============================================================================
// Symmetric eigenproblems: ALS, MALS, EVAMEn
// ============================================================================

struct EigOptions {
    int sweeps = 50;
    double tol = 1e-10;        // relative objective change over a sweep
    Index enrich_rank = 0;     // EVAMEn enrichment (0 = plain ALS)
    bool two_site = false;     // MALS
    double split_tol = 1e-10;  // MALS δ-truncation relative to the supercore
    Index max_rank = kNoRankCap;
    Index local_cap = 4096;
};

struct EigResult {
    Vec eigvals;
    BlockTT X;
    SolveReport report;
};

namespace detail {

/// Factor the block core at k and move it to k+1, optionally truncating.
inline BlockTT shift_right_truncated(const BlockTT& x, double rel_tol, Index max_rank) {
    if (rel_tol <= 0.0 && max_rank >= kNoRankCap) return block_shift_right(x);
    const Core& c = x.cores[x.pos];
    Mat M = Eigen::Map<const Mat>(c.data.data(), c.r0 * c.n, c.r1 * x.K);
    TruncSVD f = svd_truncated(M, rel_tol * M.norm(), max_rank);
    BlockTT y = x;
    const Index r = f.U.cols();
    y.cores[x.pos] = Core::from_left(f.U, c.r0, c.n);
    Mat B = f.s.asDiagonal() * f.V.transpose();
    const Core& d = x.cores[x.pos + 1];
    Vec nd(r * d.n * d.r1 * x.K);
    for (Index k = 0; k < x.K; ++k) {
        Mat Wk = B.middleCols(k * c.r1, c.r1) * d.right();
        nd.segment(k * r * d.n * d.r1, r * d.n * d.r1) = Eigen::Map<Vec>(Wk.data(), Wk.size());
    }
    y.cores[x.pos + 1] = Core(r, d.n, d.r1);
    y.cores[x.pos + 1].data = nd;
    y.pos = x.pos + 1;
    return y;
}

inline BlockTT shift_left_truncated(const BlockTT& x, double rel_tol, Index max_rank) {
    if (rel_tol <= 0.0 && max_rank >= kNoRankCap) return block_shift_left(x);
    const Core& c = x.cores[x.pos];
    const Index K = x.K, m = c.r0 * c.n * c.r1;
    Mat M(c.r0 * K, c.n * c.r1);
    for (Index k = 0; k < K; ++k)
        for (Index ib = 0; ib < c.n * c.r1; ++ib)
            for (Index a = 0; a < c.r0; ++a) M(a + c.r0 * k, ib) = c.data[k * m + a + c.r0 * ib];
    TruncSVD f = svd_truncated(M, rel_tol * M.norm(), max_rank);
    const Index r = f.U.cols();
    BlockTT y = x;
    y.cores[x.pos] = Core::from_right(Mat(f.V.transpose()), c.n, c.r1);
    Mat US = f.U * f.s.asDiagonal();  // (r0 K) × r
    const Core& p = x.cores[x.pos - 1];
    Vec nd(p.r0 * p.n * r * K);
    for (Index k = 0; k < K; ++k) {
        Mat Wk = p.left() * US.middleRows(k * c.r0, c.r0);
        nd.segment(k * p.r0 * p.n * r, p.r0 * p.n * r) = Eigen::Map<Vec>(Wk.data(), Wk.size());
    }
    y.cores[x.pos - 1] = Core(p.r0, p.n, r);
    y.cores[x.pos - 1].data = nd;
    y.pos = x.pos - 1;
    return y;
}

/// Enrich the block core at pos with extra right-rank directions (zero-padding pos+1).
inline void enrich_right(BlockTT& X, const Mat& Z) {
    const std::size_t k = X.pos;
    const Core& c = X.cores[k];
    const Index rho = Z.cols(), r1 = c.r1, m = c.r0 * c.n * r1;
    const Index m2 = c.r0 * c.n * (r1 + rho);
    Vec nd(m2 * X.K);
    for (Index q = 0; q < X.K; ++q) {
        nd.segment(q * m2, m) = c.data.segment(q * m, m);
        nd.segment(q * m2 + m, c.r0 * c.n * rho) = Eigen::Map<const Vec>(Z.data(), Z.size());
    }
    Core nc(c.r0, c.n, r1 + rho);
    nc.data = nd;
    X.cores[k] = nc;
    const Core& d = X.cores[k + 1];
    Core nd2(r1 + rho, d.n, d.r1);
    for (Index b = 0; b < d.r1; ++b)
        for (Index i = 0; i < d.n; ++i)
            for (Index a = 0; a < r1; ++a) nd2(a, i, b) = d(a, i, b);
    X.cores[k + 1] = nd2;
}

/// Enrich the block core at pos with extra left-rank rows (zero-padding pos-1).
inline void enrich_left(BlockTT& X, const Mat& Zt) {
    // Zt: rho × (n r1)
    const std::size_t k = X.pos;
    const Core& c = X.cores[k];
    const Index rho = Zt.rows(), r0 = c.r0, m = r0 * c.n * c.r1;
    const Index nr0 = r0 + rho, m2 = nr0 * c.n * c.r1;
    Vec nd(m2 * X.K);
    for (Index q = 0; q < X.K; ++q)
        for (Index ib = 0; ib < c.n * c.r1; ++ib) {
            for (Index a = 0; a < r0; ++a) nd[q * m2 + a + nr0 * ib] = c.data[q * m + a + r0 * ib];
            for (Index a = 0; a < rho; ++a) nd[q * m2 + r0 + a + nr0 * ib] = Zt(a, ib);
        }
    Core nc(nr0, c.n, c.r1);
    nc.data = nd;
    X.cores[k] = nc;
    const Core& p = X.cores[k - 1];
    Core np(p.r0, p.n, nr0);
    for (Index b = 0; b < r0; ++b)
        for (Index i = 0; i < p.n; ++i)
            for (Index a = 0; a < p.r0; ++a) np(a, i, b) = p(a, i, b);
    X.cores[k - 1] = np;
}

inline Mat leading_columns(const Mat& Z, Index rho) {
    if (rho <= 0 || Z.size() == 0) return Mat(Z.rows(), 0);
    TruncSVD f = svd_truncated(Z, 0.0, std::min<Index>(rho, std::min(Z.rows(), Z.cols())));
    Index keep = 0;
    const double smax = f.s.size() ? f.s[0] : 0.0;
    for (Index i = 0; i < f.s.size(); ++i)
        if (f.s[i] > 1e-14 * smax && smax > 0) ++keep;
    return f.U.leftCols(keep);
}

}  // namespace detail

/// Shared sweep engine for the block eigensolvers.
inline EigResult eig_sweeps(const TTOperator& A, Index K, const BlockTT& x0, const EigOptions& opt) {
    detail::Stopwatch clock;
    const std::size_t N = x0.order();
    detail::check_square(A, x0.mode_sizes(), "eigensolver");
    if (x0.pos != 0) throw std::invalid_argument("eigensolver: initial block must sit at the first core");
    if (x0.K != K) throw std::invalid_argument("eigensolver: block size differs from K");
    if (opt.two_site && N < 2) throw std::invalid_argument("mals_evd: need at least two cores");
    BlockTT X = x0;
    detail::right_orthogonalize(X);
    ContractionCache cache;
    cache.init(N);
    for (std::size_t k = N; k-- > 1;) cache.update_right(k, X.cores[k], A);

    EigResult res;
    double prev = std::numeric_limits<double>::infinity();
    Vec lam;
    auto record = [&](const Vec& l) {
        lam = l;
        res.report.objective.push_back(l.sum());
    };

    auto solve_one = [&](std::size_t k) {
        const Core& c = X.cores[k];
        const Index n = c.r0 * c.n * c.r1;
        detail::check_local_size(n, opt.local_cap, "eigensolver");
        if (K > n) throw std::invalid_argument("eigensolver: K exceeds the local problem size");
        Mat M = local_operator(cache.left[k], A.cores[k], A.rows[k], A.cols[k], cache.right[k + 1]);
        auto [l, V] = detail::smallest_eigs(M, K);
        X.set_block(V);
        record(l);
    };
    // two-site solve on (k, k+1); block must sit at k (left-to-right) or k+1
    auto solve_pair = [&](std::size_t k, bool to_right) {
        const Core& c1 = X.cores[k];
        const Core& c2 = X.cores[k + 1];
        const Index n = c1.r0 * c1.n * c2.n * c2.r1;
        detail::check_local_size(n, opt.local_cap, "mals_evd");
        if (K > n) throw std::invalid_argument("mals_evd: K exceeds the local problem size");
        Core Am = detail::merge_op_cores(A.cores[k], A.rows[k], A.cols[k], A.cores[k + 1], A.rows[k + 1], A.cols[k + 1]);
        Mat M = local_operator(cache.left[k], Am, A.rows[k] * A.rows[k + 1], A.cols[k] * A.cols[k + 1],
                               cache.right[k + 2]);
        auto [l, V] = detail::smallest_eigs(M, K);
        record(l);
        const Index r0 = c1.r0, n1 = c1.n, n2 = c2.n, r2 = c2.r1;
        if (to_right) {
            Mat W(r0 * n1, n2 * r2 * K);
            for (Index q = 0; q < K; ++q) W.middleCols(q * n2 * r2, n2 * r2) = V.col(q).reshaped(r0 * n1, n2 * r2);
            TruncSVD f = svd_truncated(W, opt.split_tol * W.norm(), opt.max_rank);
            const Index r = f.U.cols();
            X.cores[k] = Core::from_left(f.U, r0, n1);
            Mat B = f.s.asDiagonal() * f.V.transpose();  // r × (n2 r2 K)
            Core nb(r, n2, r2);
            nb.data = Eigen::Map<Vec>(B.data(), B.size());
            X.cores[k + 1] = nb;
            X.pos = k + 1;
        } else {
            Mat W(r0 * n1 * K, n2 * r2);
            for (Index q = 0; q < K; ++q) W.middleRows(q * r0 * n1, r0 * n1) = V.col(q).reshaped(r0 * n1, n2 * r2);
            TruncSVD f = svd_truncated(W, opt.split_tol * W.norm(), opt.max_rank);
            const Index r = f.U.cols();
            X.cores[k + 1] = Core::from_right(Mat(f.V.transpose()), n2, r2);
            Mat US = f.U * f.s.asDiagonal();  // (r0 n1 K) × r
            Core nb(r0, n1, r);
            Vec d(r0 * n1 * r * K);
            for (Index q = 0; q < K; ++q) {
                Mat Wq = US.middleRows(q * r0 * n1, r0 * n1);
                d.segment(q * r0 * n1 * r, r0 * n1 * r) = Eigen::Map<Vec>(Wq.data(), Wq.size());
            }
            nb.data = d;
            X.cores[k] = nb;
            X.pos = k;
        }
    };

    for (int sweep = 0; sweep < opt.sweeps; ++sweep) {
        if (N == 1) {
            solve_one(0);
        } else if (opt.two_site) {
            for (std::size_t k = 0; k + 1 < N; ++k) {
                solve_pair(k, true);
                cache.update_left(k, X.cores[k], A);
            }
            for (std::size_t k = N - 1; k-- > 0;) {
                solve_pair(k, false);
                cache.update_right(k + 1, X.cores[k + 1], A);
            }
        } else {
            for (std::size_t k = 0; k + 1 < N; ++k) {
                solve_one(k);
                if (opt.enrich_rank > 0) {
                    const Core& c = X.cores[k];
                    const Index m = c.r0 * c.n * c.r1;
                    Mat Z(c.r0 * c.n, 0);
                    for (Index q = 0; q < K; ++q) {
                        Core v(c.r0, c.n, c.r1, c.data.segment(q * m, m));
                        Mat Zq = left_partial(cache.left[k], A.cores[k], A.rows[k], A.cols[k], v);
                        Mat tmp(Z.rows(), Z.cols() + Zq.cols());
                        tmp << Z, Zq;
                        Z = std::move(tmp);
                    }
                    detail::enrich_right(X, detail::leading_columns(Z, opt.enrich_rank));
                }
                X = detail::shift_right_truncated(X, 0.0, opt.max_rank);
                cache.update_left(k, X.cores[k], A);
            }
            for (std::size_t k = N - 1; k >= 1; --k) {
                solve_one(k);
                if (opt.enrich_rank > 0) {
                    const Core& c = X.cores[k];
                    const Index m = c.r0 * c.n * c.r1;
                    Mat Z(0, c.n * c.r1);
                    for (Index q = 0; q < K; ++q) {
                        Core v(c.r0, c.n, c.r1, c.data.segment(q * m, m));
                        Mat Uq = right_partial(A.cores[k], A.rows[k], A.cols[k], v, cache.right[k + 1]);
                        Mat tmp(Z.rows() + Uq.rows(), Z.cols());
                        tmp << Z, Uq;
                        Z = std::move(tmp);
                    }
                    Mat Zt = detail::leading_columns(Mat(Z.transpose()), opt.enrich_rank).transpose();
                    detail::enrich_left(X, Zt);
                }
                X = detail::shift_left_truncated(X, 0.0, opt.max_rank);
                cache.update_right(k, X.cores[k], A);
            }
        }
        res.report.sweeps = sweep + 1;
        const double obj = res.report.objective.back();
        res.report.sweep_objective.push_back(obj);
        if (std::abs(prev - obj) <= opt.tol * std::max(std::abs(obj), 1e-300)) {
            res.report.status = "converged";
            break;
        }
        prev = obj;
    }
    res.eigvals = lam;
    res.X = X;
    res.report.final_ranks = X.ranks();
    res.report.final_residual = res.report.sweep_objective.size() >= 2
                                    ? std::abs(res.report.sweep_objective.back() -
                                               res.report.sweep_objective[res.report.sweep_objective.size() - 2])
                                    : 0.0;
    res.report.wall_time_s = clock.seconds();
    return res;
}

inline EigResult als_evd(const TTOperator& A, Index K, const BlockTT& x0, int sweeps = 50, double tol = 1e-10) {
    EigOptions o;
    o.sweeps = sweeps;
    o.tol = tol;
    return eig_sweeps(A, K, x0, o);
}

inline EigResult mals_evd(const TTOperator& A, Index K, const BlockTT& x0, int sweeps = 50, double tol = 1e-10,
                          Index max_rank = kNoRankCap) {
    EigOptions o;
    o.sweeps = sweeps;
    o.tol = tol;
    o.split_tol = tol;
    o.two_site = true;
    o.max_rank = max_rank;
    return eig_sweeps(A, K, x0, o);
}

inline EigResult evamen(const TTOperator& A, Index K, const BlockTT& x0, int sweeps = 50, double tol = 1e-10,
                        Index enrich_rank = 2, Index max_rank = kNoRankCap) {
    EigOptions o;
    o.sweeps = sweeps;
    o.tol = tol;
    o.enrich_rank = enrich_rank;
    o.max_rank = max_rank;
    return eig_sweeps(A, K, x0, o);
}

/// Tridiagonal [-1 2 -1] matrix of size 2^D as a QTT operator (via TT-SVD of the dense matrix).
inline TTOperator laplacian_qtt(int D, double tol = 1e-13) {
    const Index n = Index(1) << D;
    Mat M = Mat::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        M(i, i) = 2.0;
        if (i + 1 < n) M(i, i + 1) = M(i + 1, i) = -1.0;
    }
    return operator_from_dense(M, Shape(D, 2), Shape(D, 2), tol);
}

// ============================================================================
// Linear systems: AMEn
// ============================================================================

struct AmenOptions {
    int sweeps = 50;
    double tol = 1e-10;         // target relative residual
    Index enrich_rank = 2;
    double trunc_tol = -1.0;    // local SVD truncation; negative = tol/sqrt(N)
    Index max_rank = kNoRankCap;
    Index local_cap = 4096;
    bool symmetric = true;      // local systems solved by LDLT when symmetric
};

struct LinearResult {
    TTTrain x;
    SolveReport report;
};

inline double relative_residual(const TTOperator& A, const TTTrain& x, const TTTrain& b, double round_tol) {
    TTTrain r = round(sub(b, apply_op(A, x)), round_tol);
    const double nb = norm(b);
    return nb > 0 ? norm(r) / nb : norm(r);
}

inline LinearResult amen_linear(const TTOperator& A, const TTTrain& b, const TTTrain& x0, const AmenOptions& opt = {}) {
    detail::Stopwatch clock;
    const std::size_t N = x0.order();
    detail::check_square(A, x0.mode_sizes(), "amen_linear");
    if (b.mode_sizes() != x0.mode_sizes()) throw std::invalid_argument("amen_linear: rhs modes differ");
    const double trunc = opt.trunc_tol >= 0 ? opt.trunc_tol : opt.tol / std::sqrt(double(std::max<std::size_t>(N, 1)));
    TTTrain x = orthogonalize(x0, 0);
    ContractionCache cA;
    PairCache cb;
    cA.init(N);
    cb.init(N);
    for (std::size_t k = N; k-- > 1;) {
        cA.update_right(k, x.cores[k], A);
        cb.right[k] = pair_right_step(x.cores[k], b.cores[k], cb.right[k + 1]);
    }
    LinearResult res;
    const double nb = norm(b);
    if (nb == 0.0) {
        res.x = zeros_tt(x0.mode_sizes());
        res.report.status = "converged";
        res.report.final_ranks = res.x.ranks();
        return res;
    }

    auto solve_at = [&](std::size_t k) {
        const Core& c = x.cores[k];
        const Index n = c.r0 * c.n * c.r1;
        detail::check_local_size(n, opt.local_cap, "amen_linear");
        Mat M = local_operator(cA.left[k], A.cores[k], A.rows[k], A.cols[k], cA.right[k + 1]);
        Vec f = local_rhs(cb.left[k], b.cores[k], cb.right[k + 1]);
        Vec v;
        if (opt.symmetric) {
            Eigen::LDLT<Mat> ldlt(0.5 * (M + M.transpose()));
            v = ldlt.solve(f);
            if (ldlt.info() != Eigen::Success || !v.allFinite()) v = Eigen::FullPivLU<Mat>(M).solve(f);
        } else {
            v = Eigen::FullPivLU<Mat>(M).solve(f);
        }
        x.cores[k].data = v;
        res.report.objective.push_back(0.5 * v.dot(M * v) - f.dot(v));
    };

    std::vector<double> hist;
    for (int sweep = 0; sweep < opt.sweeps; ++sweep) {
        for (std::size_t k = 0; k + 1 < N; ++k) {
            solve_at(k);
            Core& c = x.cores[k];
            TruncSVD f = svd_truncated(Mat(c.left()), trunc * c.data.norm(), opt.max_rank);
            Mat U = f.U;
            if (opt.enrich_rank > 0) {
                const Index rb1 = b.cores[k].r1;
                Mat Zb(c.r0 * c.n, rb1);
                for (Index i = 0; i < c.n; ++i) Zb.middleRows(c.r0 * i, c.r0) = cb.left[k] * b.cores[k].slice(i);
                Mat Zax = left_partial(cA.left[k], A.cores[k], A.rows[k], A.cols[k], c);
                Mat Z(Zb.rows(), Zb.cols() + Zax.cols());
                Z << Zb, -Zax;
                Z -= U * (U.transpose() * Z);
                Mat E = detail::leading_columns(Z, std::min<Index>(opt.enrich_rank, c.r0 * c.n - U.cols()));
                if (E.cols() > 0) {
                    E = qr_thin(Mat(E - U * (U.transpose() * E))).first;
                    Mat UE(U.rows(), U.cols() + E.cols());
                    UE << U, E;
                    U = UE;
                }
            }
            Mat SV = Mat::Zero(U.cols(), c.r1);
            SV.topRows(f.U.cols()) = f.s.asDiagonal() * f.V.transpose();
            Core& d = x.cores[k + 1];
            Mat nd = SV * d.right();
            const Index r0 = c.r0, n = c.n;
            c = Core::from_left(U, r0, n);
            d = Core::from_right(nd, d.n, d.r1);
            cA.update_left(k, x.cores[k], A);
            cb.left[k + 1] = pair_left_step(cb.left[k], x.cores[k], b.cores[k]);
        }
        for (std::size_t k = N - 1; k >= 1; --k) {
            solve_at(k);
            Core& c = x.cores[k];
            TruncSVD f = svd_truncated(Mat(c.right().transpose()), trunc * c.data.norm(), opt.max_rank);
            Mat U = f.U;  // (n r1) × r: rows of the new right-orthogonal core
            if (opt.enrich_rank > 0) {
                const Index rb0 = b.cores[k].r0;
                Mat Zb(rb0, c.n * c.r1);
                for (Index i = 0; i < c.n; ++i) {
                    Mat s = b.cores[k].slice(i) * cb.right[k + 1].transpose();  // rb0 × r1
                    for (Index bb = 0; bb < c.r1; ++bb) Zb.col(i + c.n * bb) = s.col(bb);
                }
                Mat Zax = right_partial(A.cores[k], A.rows[k], A.cols[k], c, cA.right[k + 1]);
                Mat Z(c.n * c.r1, Zb.rows() + Zax.rows());
                Z << Zb.transpose(), -Zax.transpose();
                Z -= U * (U.transpose() * Z);
                Mat E = detail::leading_columns(Z, std::min<Index>(opt.enrich_rank, c.n * c.r1 - U.cols()));
                if (E.cols() > 0) {
                    E = qr_thin(Mat(E - U * (U.transpose() * E))).first;
                    Mat UE(U.rows(), U.cols() + E.cols());
                    UE << U, E;
                    U = UE;
                }
            }
            Mat US = Mat::Zero(c.r0, U.cols());
            US.leftCols(f.U.cols()) = f.V * f.s.asDiagonal();  // right()ᵀ = U S Vᵀ, so right() = V S Uᵀ
            Core& p = x.cores[k - 1];
            Mat np = p.left() * US;
            const Index n = c.n, r1 = c.r1;
            c = Core::from_right(Mat(U.transpose()), n, r1);
            p = Core::from_left(np, p.r0, p.n);
            cA.update_right(k, x.cores[k], A);
            cb.right[k] = pair_right_step(x.cores[k], b.cores[k], cb.right[k + 1]);
        }
        if (N == 1) solve_at(0);
        res.report.sweeps = sweep + 1;
        res.report.sweep_objective.push_back(res.report.objective.back());
        const double rr = relative_residual(A, x, b, opt.tol / 10.0);
        res.report.residuals.push_back(rr);
        hist.push_back(rr);
        if (rr <= opt.tol) {
            res.report.status = "converged";
            break;
        }
        if (hist.size() >= 4 && rr > 10.0 * hist[hist.size() - 4]) {
            res.report.status = "diverged";
            res.report.warnings.push_back("residual grew more than 10x over 3 sweeps");
            break;
        }
    }
    res.x = x;
    res.report.final_residual = res.report.residuals.empty() ? 0.0 : res.report.residuals.back();
    res.report.final_ranks = x.ranks();
    res.report.wall_time_s = clock.seconds();
    return res;
}

/// Regularized least squares min ‖Ax − b‖² + γ‖Lx‖² through the normal equations.
inline LinearResult amen_normal(const TTOperator& A, const TTTrain& b, const TTTrain& x0, double gamma,
                                const TTOperator* L, const AmenOptions& opt = {}) {
    TTOperator At = transpose(A);
    TTOperator M = op_product(At, A);
    if (gamma != 0.0) {
        TTOperator R = L ? op_product(transpose(*L), *L) : identity_op(A.cols);
        M = op_add(M, op_scale(R, gamma));
    }
    M = round(M, 1e-14);
    TTTrain f = round(apply_op(At, b), 1e-14);
    return amen_linear(M, f, x0, opt);
}

// ============================================================================
// TT least squares for operators: min ‖AX − B‖²_F + γ‖LX‖²_F
// ============================================================================

struct RegressionResult {
    TTOperator X;
    SolveReport report;
};

namespace detail {

/// M ⊗ I_K on merged modes j + J k.
inline TTOperator kron_identity_right(const TTOperator& M, const Shape& K) {
    std::vector<Core> cores;
    Shape modes;
    for (std::size_t n = 0; n < M.order(); ++n) {
        const Index J = M.rows[n], Kn = K[n];
        const Core& c = M.cores[n];
        const Index m = J * Kn;
        Core o(c.r0, m * m, c.r1);
        for (Index q = 0; q < c.r1; ++q)
            for (Index j2 = 0; j2 < J; ++j2)
                for (Index j1 = 0; j1 < J; ++j1)
                    for (Index p = 0; p < c.r0; ++p) {
                        const double w = c(p, j1 + J * j2, q);
                        if (w == 0.0) continue;
                        for (Index k = 0; k < Kn; ++k) o(p, (j1 + J * k) + m * (j2 + J * k), q) = w;
                    }
        cores.push_back(std::move(o));
        modes.push_back(m);
    }
    return TTOperator(std::move(cores), modes, modes);
}

}  // namespace detail

inline RegressionResult tt_regression(const TTOperator& A, const TTOperator& B, double gamma, const TTOperator* L,
                                      const TTOperator& X0, const AmenOptions& opt = {}) {
    if (A.rows != B.rows) throw std::invalid_argument("tt_regression: A and B row modes differ");
    if (X0.rows != A.cols || X0.cols != B.cols) throw std::invalid_argument("tt_regression: initial guess has wrong modes");
    TTOperator At = transpose(A);
    TTOperator M = op_product(At, A);
    if (gamma != 0.0) {
        TTOperator R = L ? op_product(transpose(*L), *L) : identity_op(A.cols);
        M = op_add(M, op_scale(R, gamma));
    }
    M = round(M, 1e-14);
    TTOperator Mk = detail::kron_identity_right(M, B.cols);
    TTTrain rhs = round(op_product(At, B).as_train(), 1e-14);
    LinearResult lr = amen_linear(Mk, rhs, X0.as_train(), opt);
    RegressionResult out;
    out.X = TTOperator(lr.x.cores, A.cols, B.cols);
    out.report = lr.report;
    return out;
}

// ============================================================================
// IRLS for ℓq-penalized least squares
// ============================================================================

struct IrlsOptions {
    int iters = 30;
    double eps = 1e-6;
    Index weight_rank = 1;  // 0 keeps the elementwise weights exactly
    double tol = 1e-12;     // stop on relative objective change
    AmenOptions inner;
};

struct IrlsResult {
    TTTrain x;
    SolveReport report;
};

inline double lq_objective(const Mat& A, const Vec& b, const Vec& x, double gamma, double q, double eps) {
    return (A * x - b).squaredNorm() + gamma * (x.array().square() + eps * eps).pow(q / 2).sum();
}

/// min ‖Ax − b‖² + γ Σ (x_j² + ε²)^{q/2} by majorize-minimize reweighting.
inline IrlsResult lasso_irls(const TTOperator& A, const TTTrain& b, double gamma, double q, const TTTrain& x0,
                             const IrlsOptions& opt = {}) {
    detail::Stopwatch clock;
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("lasso_irls: q must lie in (0, 1]");
    const double eps = std::max(opt.eps, 1e-8);
    const Index n = prod(A.cols);
    if (n > (Index(1) << 22)) throw std::invalid_argument("lasso_irls: weights are formed elementwise; problem too large");
    const Mat Ad = to_dense(A);
    const Vec bd = contract_full(b).data;
    TTTrain At_b = round(apply_op(transpose(A), b), 1e-14);
    TTOperator AtA = round(op_product(transpose(A), A), 1e-14);
    IrlsResult res;
    TTTrain x = x0;
    if (x.order() == 0) {
        // ridge start
        Rng rng(0);
        TTTrain z = random_tt(A.cols, std::vector<Index>(A.cols.size() - 1, 1), rng);
        x = amen_normal(A, b, z, std::max(gamma, 1e-12), nullptr, opt.inner).x;
    }
    Vec xd = contract_full(x).data;
    double J = lq_objective(Ad, bd, xd, gamma, q, eps);
    res.report.objective.push_back(J);
    for (int it = 0; it < opt.iters; ++it) {
        TTOperator M = AtA;
        if (gamma != 0.0) {
            Vec w = (0.5 * q * gamma) * (xd.array().square() + eps * eps).pow(q / 2 - 1).matrix();
            TTTrain wt = tt_svd(fold(w, A.cols), 0.0, opt.weight_rank > 0 ? opt.weight_rank : kNoRankCap);
            M = round(op_add(AtA, diag_op(wt)), 1e-14);
        }
        LinearResult lr = amen_linear(M, At_b, x, opt.inner);
        Vec xn = contract_full(lr.x).data;
        double Jn = lq_objective(Ad, bd, xn, gamma, q, eps);
        TTTrain xnew = lr.x;
        if (Jn > J) {
            // the approximate weights do not majorize exactly: backtrack toward the previous iterate
            double t = 0.5;
            bool ok = false;
            for (int s = 0; s < 30 && !ok; ++s, t *= 0.5) {
                Vec xt = xd + t * (xn - xd);
                double Jt = lq_objective(Ad, bd, xt, gamma, q, eps);
                if (Jt <= J) {
                    xnew = round(add(scale(x, 1.0 - t), scale(lr.x, t)), 1e-14);
                    xn = xt;
                    Jn = Jt;
                    ok = true;
                }
            }
            if (!ok) {
                res.report.warnings.push_back("reweighted step rejected");
                xnew = x;
                xn = xd;
                Jn = J;
            }
        }
        res.report.sweeps = it + 1;
        res.report.objective.push_back(Jn);
        const double change = std::abs(J - Jn) / std::max(std::abs(J), 1e-300);
        x = xnew;
        xd = xn;
        J = Jn;
        if (change < opt.tol) {
            res.report.status = "converged";
            break;
        }
    }
    res.x = x;
    res.report.sweep_objective = res.report.objective;
    res.report.final_residual = (Ad * xd - bd).norm() / std::max(bd.norm(), 1e-300);
    res.report.final_ranks = x.ranks();
    res.report.wall_time_s = clock.seconds();
    return res;
}

// ============================================================================
// TT completion
// ============================================================================

struct SamplingSet {
    std::vector<std::vector<Index>> idx;
    Vec values;

    void validate(const Shape& modes) const {
        if (idx.empty()) throw std::invalid_argument("SamplingSet: no observations");
        if (Index(idx.size()) != values.size()) throw std::invalid_argument("SamplingSet: index/value count mismatch");
        std::set<std::vector<Index>> seen;
        for (const auto& i : idx) {
            if (i.size() != modes.size()) throw std::invalid_argument("SamplingSet: index order mismatch");
            for (std::size_t n = 0; n < i.size(); ++n)
                if (i[n] < 0 || i[n] >= modes[n]) throw std::out_of_range("SamplingSet: index out of range");
            if (!seen.insert(i).second) throw std::invalid_argument("SamplingSet: duplicate index");
        }
    }
};

struct CompletionOptions {
    int sweeps = 1000;          // plain ALS sweeps per rank stage
    double tol = 1e-12;         // relative RMSE change within a stage
    bool increase_ranks = true; // start from all-ones ranks
    double ridge = 1e-10;
    std::uint64_t seed = 0;
    /// random starts; the run with the lowest observed RMSE is kept
    int restarts = 8;
    /// regularized warm start before each stage: Tikhonov weight decays by `decay` from mean(v²) to 1e-12 mean(v²)
    bool continuation = true;
    double decay = 0.9;
};

struct CompletionResult {
    TTTrain x;
    SolveReport report;
};

inline double observed_rmse(const TTTrain& x, const SamplingSet& s) {
    double e = 0.0;
    for (std::size_t t = 0; t < s.idx.size(); ++t) {
        double d = x.at(s.idx[t]) - s.values[Index(t)];
        e += d * d;
    }
    return std::sqrt(e / double(s.idx.size()));
}

namespace detail {

/// One ALS sweep (left-to-right, then right-to-left) over the observed entries.
inline void completion_sweep(TTTrain& x, const SamplingSet& s, double ridge, SolveReport& rep, bool& warned,
                             double reg = 0.0) {
    const std::size_t N = x.order();
    const std::size_t T = s.idx.size();
    auto right_rows = [&](std::size_t k) {
        // R[t]: row vector over the left rank of core k+1 ... N-1 contracted, for each sample
        std::vector<std::vector<Vec>> R(N + 1, std::vector<Vec>(T, Vec::Ones(1)));
        for (std::size_t m = N; m-- > k + 1;)
            for (std::size_t t = 0; t < T; ++t) R[m][t] = x.cores[m].slice(s.idx[t][m]) * R[m + 1][t];
        return R;
    };
    auto solve_core = [&](std::size_t k, const std::vector<Vec>& Lr, const std::vector<Vec>& Rr) {
        Core& c = x.cores[k];
        for (Index i = 0; i < c.n; ++i) {
            std::vector<std::size_t> rows;
            for (std::size_t t = 0; t < T; ++t)
                if (s.idx[t][k] == i) rows.push_back(t);
            const Index u = c.r0 * c.r1;
            if (rows.empty()) {
                if (!warned) rep.warnings.push_back("completion: slice without observations kept unchanged");
                warned = true;
                continue;
            }
            Mat Phi(Index(rows.size()), u);
            Vec y(Index(rows.size()));
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const Vec& l = Lr[rows[r]];
                const Vec& rr = Rr[rows[r]];
                for (Index b = 0; b < c.r1; ++b)
                    for (Index a = 0; a < c.r0; ++a) Phi(Index(r), a + c.r0 * b) = l[a] * rr[b];
                y[Index(r)] = s.values[Index(rows[r])];
            }
            Vec g;
            Eigen::ColPivHouseholderQR<Mat> qr(Phi);
            if (reg > 0.0) {
                Mat G = Phi.transpose() * Phi;
                G.diagonal().array() += reg;
                g = G.ldlt().solve(Phi.transpose() * y);
            } else if (Index(rows.size()) < u || qr.rank() < u) {
                if (!warned)
                    rep.warnings.push_back("completion: underdetermined local least squares, ridge-regularized");
                warned = true;
                Mat G = Phi.transpose() * Phi;
                G.diagonal().array() += ridge;
                g = G.ldlt().solve(Phi.transpose() * y);
            } else {
                g = qr.solve(y);
            }
            for (Index b = 0; b < c.r1; ++b)
                for (Index a = 0; a < c.r0; ++a) c(a, i, b) = g[a + c.r0 * b];
        }
    };
    // left-to-right
    auto R = right_rows(0);
    std::vector<Vec> L(T, Vec::Ones(1));
    for (std::size_t k = 0; k + 1 < N; ++k) {
        solve_core(k, L, R[k + 1]);
        orth_left_step(x.cores, k);
        for (std::size_t t = 0; t < T; ++t) L[t] = (L[t].transpose() * x.cores[k].slice(s.idx[t][k])).transpose();
    }
    // right-to-left
    std::vector<std::vector<Vec>> Ls(N, std::vector<Vec>(T, Vec::Ones(1)));
    for (std::size_t k = 0; k + 1 < N; ++k)
        for (std::size_t t = 0; t < T; ++t)
            Ls[k + 1][t] = (Ls[k][t].transpose() * x.cores[k].slice(s.idx[t][k])).transpose();
    std::vector<Vec> Rr(T, Vec::Ones(1));
    for (std::size_t k = N; k-- > 1;) {
        solve_core(k, Ls[k], Rr);
        orth_right_step(x.cores, k);
        for (std::size_t t = 0; t < T; ++t) Rr[t] = x.cores[k].slice(s.idx[t][k]) * Rr[t];
    }
    solve_core(0, Ls[0], Rr);
}

/// Grow bond k (between cores k and k+1) by one without changing the tensor.
inline void grow_bond(TTTrain& x, std::size_t k, Rng& rng) {
    Core& c = x.cores[k];
    Core& d = x.cores[k + 1];
    Core nc(c.r0, c.n, c.r1 + 1), nd(d.r0 + 1, d.n, d.r1);
    const double sc = 1e-3 * std::max(c.data.cwiseAbs().maxCoeff(), 1e-12);
    for (Index i = 0; i < c.n; ++i)
        for (Index a = 0; a < c.r0; ++a) {
            for (Index b = 0; b < c.r1; ++b) nc(a, i, b) = c(a, i, b);
            nc(a, i, c.r1) = sc * rng.randn();
        }
    for (Index b = 0; b < d.r1; ++b)
        for (Index i = 0; i < d.n; ++i)
            for (Index a = 0; a < d.r0; ++a) nd(a, i, b) = d(a, i, b);
    c = nc;
    d = nd;
}

}  // namespace detail

inline CompletionResult tt_complete(const Shape& modes, const SamplingSet& s, const std::vector<Index>& ranks,
                                    const CompletionOptions& opt = {}) {
    detail::Stopwatch clock;
    s.validate(modes);
    const std::size_t N = modes.size();
    if (ranks.size() + 1 != N) throw std::invalid_argument("tt_complete: need N-1 target ranks");
    for (Index r : ranks)
        if (r < 1) throw std::invalid_argument("tt_complete: ranks must be positive");
    CompletionResult res;
    if (s.values.cwiseAbs().maxCoeff() == 0.0) {
        res.x = zeros_tt(modes);
        res.report.status = "converged";
        res.report.objective.push_back(0.0);
        res.report.final_ranks = res.x.ranks();
        return res;
    }
    const double ms = s.values.squaredNorm() / double(s.values.size());
    const double exact = 1e-12 * std::sqrt(ms);
    std::vector<Index> target = ranks;
    if (N == 1) target.clear();

    auto one_run = [&](std::uint64_t seed) {
        CompletionResult run;
        Rng rng(seed);
        std::vector<Index> start = opt.increase_ranks ? std::vector<Index>(N - 1, 1) : target;
        TTTrain x = random_tt(modes, start, rng);
        bool warned = false;
        double prev = observed_rmse(x, s);
        run.report.objective.push_back(prev);
        auto plain = [&](TTTrain& y, double& e0, SolveReport& rep) {
            for (int sw = 0; sw < opt.sweeps; ++sw) {
                detail::completion_sweep(y, s, opt.ridge, rep, warned);
                const double e = observed_rmse(y, s);
                rep.objective.push_back(e);
                rep.sweeps += 1;
                const double ch = std::abs(e0 - e) / std::max(e0, 1e-300);
                e0 = e;
                if (ch < opt.tol || e < exact) break;
            }
        };
        auto stage = [&]() {
            if (opt.continuation && prev >= exact) {
                TTTrain y = x;
                SolveReport scratch;
                bool w = false;
                for (double reg = ms; reg > 1e-12 * ms; reg *= opt.decay)
                    detail::completion_sweep(y, s, opt.ridge, scratch, w, reg);
                const double e = observed_rmse(y, s);
                if (e <= prev) {
                    // warm start accepted; it counts as one sweep of the record
                    x = y;
                    prev = e;
                    run.report.objective.push_back(e);
                    run.report.sweeps += 1;
                }
            }
            if (prev >= exact) plain(x, prev, run.report);
            run.report.sweep_objective.push_back(prev);
        };
        stage();
        if (opt.increase_ranks) {
            std::size_t k = 0;
            for (;;) {
                auto cur = x.ranks();
                bool any = false;
                for (std::size_t m = 0; m + 1 < N; ++m)
                    if (cur[m + 1] < target[m]) any = true;
                if (!any) break;
                while (x.ranks()[k + 1] >= target[k]) k = (k + 1) % (N - 1);
                detail::grow_bond(x, k, rng);
                k = (k + 1) % (N - 1);
                stage();
            }
        }
        run.x = x;
        run.report.final_residual = prev;
        return run;
    };

    bool have = false;
    std::vector<std::string> warnings;
    for (int r = 0; r < std::max(opt.restarts, 1); ++r) {
        CompletionResult run = one_run(opt.seed + std::uint64_t(r));
        for (auto& w : run.report.warnings)
            if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
        if (!have || run.report.final_residual < res.report.final_residual) {
            res = std::move(run);
            have = true;
        }
        if (res.report.final_residual < exact) break;
    }
    res.report.warnings = warnings;
    res.report.final_ranks = res.x.ranks();
    res.report.status = res.report.final_residual < exact ? "converged" : "done";
    res.report.wall_time_s = clock.seconds();
    return res;
}

}  // namespace ttkit

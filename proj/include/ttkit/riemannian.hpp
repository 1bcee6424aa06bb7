#pragma once

#include "solvers.hpp"
#include "tt.hpp"

#include <Eigen/QR>
#include <functional>
#include <numeric>
#include <optional>

namespace ttkit {

/// Element of the tangent space of the fixed-rank TT manifold at x.
///
/// Represents Σ_k U_0..U_{k-1} dX_k V_{k+1}..V_{N-1}, where U are the
/// left-orthogonal cores of x and V the right-orthogonal ones. Gauge: for
/// k < N-1 the left unfolding of dX_k is orthogonal to that of U_k; dX_{N-1}
/// is free. Under this gauge the terms are mutually orthogonal, so the inner
/// product is the sum of core inner products.
struct TangentVector {
    std::vector<Core> U, V, dX;

    [[nodiscard]] std::size_t order() const { return dX.size(); }
    [[nodiscard]] Shape mode_sizes() const {
        Shape s;
        for (const auto& c : dX) s.push_back(c.n);
        return s;
    }
};

namespace detail {

struct Gauges {
    std::vector<Core> U, V;
};

inline Gauges tangent_gauges(const TTTrain& x) {
    const std::size_t N = x.order();
    TTTrain l = orthogonalize(orthogonalize(x, 0), N - 1);
    TTTrain r = orthogonalize(l, 0);
    if (l.ranks() != r.ranks()) throw std::invalid_argument("tangent space: base point has inconsistent ranks");
    return {l.cores, r.cores};
}

inline void check_same_base(const TangentVector& a, const TangentVector& b) {
    if (a.order() != b.order()) throw std::invalid_argument("tangent vectors: order mismatch");
    for (std::size_t k = 0; k < a.order(); ++k)
        if (a.dX[k].r0 != b.dX[k].r0 || a.dX[k].n != b.dX[k].n || a.dX[k].r1 != b.dX[k].r1)
            throw std::invalid_argument("tangent vectors: different base points");
}

/// Remove the U_k component of the left unfolding (gauge condition).
inline void gauge_fix(std::vector<Core>& d, const std::vector<Core>& U) {
    for (std::size_t k = 0; k + 1 < d.size(); ++k) {
        Mat L = d[k].left();
        const auto Uk = U[k].left();
        L -= Uk * (Uk.transpose() * L);
        d[k] = Core::from_left(L, d[k].r0, d[k].n);
    }
}

/// Σ_i v[i]·core(:,i,:)
inline Mat contract_mode(const Core& c, const Vec& v) {
    Mat M = Mat::Zero(c.r0, c.r1);
    for (Index i = 0; i < c.n; ++i)
        if (v[i] != 0.0) M += v[i] * c.slice(i);
    return M;
}

/// TT rounding with an exact rank cap on each inner bond.
inline TTTrain round_to_ranks(const TTTrain& x, const std::vector<Index>& caps) {
    const std::size_t N = x.order();
    TTTrain y = orthogonalize(x, 0);
    for (std::size_t k = 0; k + 1 < N; ++k) {
        Core& c = y.cores[k];
        TruncSVD f = svd_full(Mat(c.left()));
        const Index r = std::min<Index>(caps[k], f.s.size());
        Core& d = y.cores[k + 1];
        Mat next = f.s.head(r).asDiagonal() * f.V.leftCols(r).transpose() * d.right();
        c = Core::from_left(f.U.leftCols(r), c.r0, c.n);
        d = Core::from_right(next, d.n, d.r1);
    }
    return y;
}

}  // namespace detail

inline TangentVector zero_tangent(const TTTrain& x) {
    detail::Gauges g = detail::tangent_gauges(x);
    TangentVector t{g.U, g.V, {}};
    for (const auto& c : g.U) t.dX.emplace_back(c.r0, c.n, c.r1);
    return t;
}

/// Orthogonal projection of a TT tensor z onto the tangent space at x.
inline TangentVector tangent_project(const TTTrain& x, const TTTrain& z) {
    if (x.mode_sizes() != z.mode_sizes()) throw std::invalid_argument("tangent_project: mode sizes differ");
    TangentVector t = zero_tangent(x);
    const std::size_t N = x.order();
    // L[k]: U_{<k}ᵀ Z_{<k}, R[k]: Z_{>k} V_{>k}ᵀ
    std::vector<Mat> L(N), R(N);
    L[0] = Mat::Ones(1, 1);
    for (std::size_t k = 0; k + 1 < N; ++k) {
        Mat M = Mat::Zero(t.U[k].r1, z.cores[k].r1);
        for (Index i = 0; i < z.cores[k].n; ++i) M += t.U[k].slice(i).transpose() * L[k] * z.cores[k].slice(i);
        L[k + 1] = std::move(M);
    }
    R[N - 1] = Mat::Ones(1, 1);
    for (std::size_t k = N - 1; k > 0; --k) {
        Mat M = Mat::Zero(z.cores[k].r0, t.V[k].r0);
        for (Index i = 0; i < z.cores[k].n; ++i) M += z.cores[k].slice(i) * R[k] * t.V[k].slice(i).transpose();
        R[k - 1] = std::move(M);
    }
    for (std::size_t k = 0; k < N; ++k)
        for (Index i = 0; i < z.cores[k].n; ++i) t.dX[k].set_slice(i, L[k] * z.cores[k].slice(i) * R[k]);
    detail::gauge_fix(t.dX, t.U);
    return t;
}

inline TangentVector tangent_project(const TTTrain& x, const DenseTensor& z) {
    if (x.mode_sizes() != z.shape) throw std::invalid_argument("tangent_project: mode sizes differ");
    return tangent_project(x, tt_svd(z, 0.0));
}

/// Projection of Σ_m w_m ⊗_k vs[m][k] (a sum of rank-1 terms), computed term
/// by term in index order.
inline TangentVector tangent_project_rank1_sum(const TTTrain& x, const std::vector<std::vector<Vec>>& vs,
                                               const std::vector<double>& w) {
    if (vs.size() != w.size()) throw std::invalid_argument("tangent_project_rank1_sum: size mismatch");
    TangentVector t = zero_tangent(x);
    const std::size_t N = x.order();
    std::vector<Mat> left(N), right(N);
    for (std::size_t m = 0; m < vs.size(); ++m) {
        const auto& v = vs[m];
        if (v.size() != N) throw std::invalid_argument("tangent_project_rank1_sum: order mismatch");
        left[0] = Mat::Ones(1, 1);
        for (std::size_t k = 0; k + 1 < N; ++k) left[k + 1] = left[k] * detail::contract_mode(t.U[k], v[k]);
        right[N - 1] = Mat::Ones(1, 1);
        for (std::size_t k = N - 1; k > 0; --k) right[k - 1] = detail::contract_mode(t.V[k], v[k]) * right[k];
        for (std::size_t k = 0; k < N; ++k) {
            Mat outer = w[m] * left[k].transpose() * right[k].transpose();
            Core& d = t.dX[k];
            for (Index i = 0; i < d.n; ++i)
                if (v[k][i] != 0.0) d.set_slice(i, d.slice(i) + v[k][i] * outer);
        }
    }
    detail::gauge_fix(t.dX, t.U);
    return t;
}

/// Projection of a sparse tensor (entries at the sampled indices).
inline TangentVector tangent_project_sparse(const TTTrain& x, const std::vector<std::vector<Index>>& idx,
                                            const Vec& vals) {
    const Shape modes = x.mode_sizes();
    std::vector<std::vector<Vec>> vs(idx.size());
    std::vector<double> w(idx.size());
    for (std::size_t m = 0; m < idx.size(); ++m) {
        for (std::size_t k = 0; k < modes.size(); ++k) vs[m].push_back(Vec::Unit(modes[k], idx[m][k]));
        w[m] = vals[Index(m)];
    }
    return tangent_project_rank1_sum(x, vs, w);
}

/// The tangent vector as a TT train of ranks ≤ 2R.
inline TTTrain embed(const TangentVector& t) {
    const std::size_t N = t.order();
    if (N == 1) return TTTrain({t.dX[0]});
    std::vector<Core> cores;
    // bond channels: first block = variation already placed (continue with V),
    // second block = not yet placed (continue with U)
    {
        const Core &d = t.dX[0], &u = t.U[0];
        Core c(1, d.n, 2 * d.r1);
        for (Index i = 0; i < d.n; ++i)
            for (Index b = 0; b < d.r1; ++b) {
                c(0, i, b) = d(0, i, b);
                c(0, i, d.r1 + b) = u(0, i, b);
            }
        cores.push_back(std::move(c));
    }
    for (std::size_t k = 1; k + 1 < N; ++k) {
        const Core &d = t.dX[k], &u = t.U[k], &v = t.V[k];
        Core c(2 * d.r0, d.n, 2 * d.r1);
        for (Index i = 0; i < d.n; ++i)
            for (Index b = 0; b < d.r1; ++b)
                for (Index a = 0; a < d.r0; ++a) {
                    c(a, i, b) = v(a, i, b);
                    c(d.r0 + a, i, b) = d(a, i, b);
                    c(d.r0 + a, i, d.r1 + b) = u(a, i, b);
                }
        cores.push_back(std::move(c));
    }
    {
        const Core &d = t.dX[N - 1], &v = t.V[N - 1];
        Core c(2 * d.r0, d.n, 1);
        for (Index i = 0; i < d.n; ++i)
            for (Index a = 0; a < d.r0; ++a) {
                c(a, i, 0) = v(a, i, 0);
                c(d.r0 + a, i, 0) = d(a, i, 0);
            }
        cores.push_back(std::move(c));
    }
    return TTTrain(std::move(cores));
}

inline double inner(const TangentVector& a, const TangentVector& b) {
    detail::check_same_base(a, b);
    double s = 0.0;
    for (std::size_t k = 0; k < a.order(); ++k) s += a.dX[k].data.dot(b.dX[k].data);
    return s;
}

inline double norm(const TangentVector& a) { return std::sqrt(inner(a, a)); }

/// alpha·a + beta·b
inline TangentVector combine(double alpha, const TangentVector& a, double beta, const TangentVector& b) {
    detail::check_same_base(a, b);
    TangentVector r = a;
    for (std::size_t k = 0; k < a.order(); ++k) r.dX[k].data = alpha * a.dX[k].data + beta * b.dX[k].data;
    return r;
}

inline TangentVector scale(const TangentVector& a, double s) {
    TangentVector r = a;
    for (auto& c : r.dX) c.data *= s;
    return r;
}

/// Vector transport by re-projection onto the tangent space at y.
inline TangentVector transport(const TangentVector& v, const TTTrain& y) { return tangent_project(y, embed(v)); }

/// TT-SVD retraction: x + α·v rounded back to the ranks of x.
inline TTTrain retract(const TTTrain& x, const TangentVector& v, double alpha) {
    if (v.mode_sizes() != x.mode_sizes()) throw std::invalid_argument("retract: mode sizes differ");
    if (alpha == 0.0) return x;
    bool zero = true;
    for (const auto& c : v.dX) zero = zero && c.data.isZero(0.0);
    if (zero) return x;
    const auto r = x.ranks();
    std::vector<Index> caps(r.begin() + 1, r.end() - 1);
    return detail::round_to_ranks(add(x, scale(embed(v), alpha)), caps);
}

// ============================================================================
// Riemannian conjugate gradients
// ============================================================================

struct RiemannianObjective {
    std::function<double(const TTTrain&)> value;
    /// Euclidean gradient; projected onto the tangent space by the solver.
    std::function<TTTrain(const TTTrain&)> euclidean_grad;
    /// Optional direct Riemannian gradient (e.g. sparse projections); wins over euclidean_grad.
    std::function<TangentVector(const TTTrain&)> riemannian_grad;
    /// Optional first trial step for the direction eta given the gradient xi.
    std::function<double(const TTTrain&, const TangentVector& xi, const TangentVector& eta)> initial_step;

    [[nodiscard]] TangentVector grad(const TTTrain& x) const {
        if (riemannian_grad) return riemannian_grad(x);
        if (!euclidean_grad) throw std::invalid_argument("RiemannianObjective: no gradient callback");
        return tangent_project(x, euclidean_grad(x));
    }
};

struct RiemannianCGOptions {
    int iters = 500;
    double c1 = 1e-4;   // Armijo constant
    double rho = 0.5;   // backtracking factor
    int max_backtracks = 60;
    double alpha0 = 1.0;
    double gtol = 1e-12;  // absolute Riemannian gradient norm
    double ftol = 0.0;    // stop once the objective is at or below this
};

struct RiemannianResult {
    TTTrain x;
    SolveReport report;
    std::vector<double> grad_norms;
    std::vector<double> steps;
};

inline RiemannianResult riemannian_cg(const RiemannianObjective& J, const TTTrain& x0,
                                      const RiemannianCGOptions& opt = {}) {
    if (!J.value) throw std::invalid_argument("riemannian_cg: no objective");
    if (!(opt.c1 > 0 && opt.c1 < 1) || !(opt.rho > 0 && opt.rho < 1))
        throw std::invalid_argument("riemannian_cg: need 0 < c1 < 1 and 0 < rho < 1");
    detail::Stopwatch clock;
    RiemannianResult res;
    TTTrain x = x0;
    double f = J.value(x);
    TangentVector xi = J.grad(x);
    TangentVector eta = scale(xi, -1.0);
    double prev_slope = 0.0, prev_alpha = opt.alpha0;
    res.report.objective.push_back(f);
    res.grad_norms.push_back(norm(xi));
    res.report.status = "max_iters";
    for (int it = 0; it < opt.iters; ++it) {
        const double gn = norm(xi);
        if (gn <= opt.gtol || f <= opt.ftol) {
            res.report.status = "converged";
            break;
        }
        double slope = inner(xi, eta);
        if (slope >= 0) {  // not a descent direction: restart along -xi
            eta = scale(xi, -1.0);
            slope = -gn * gn;
        }
        double alpha;
        if (J.initial_step)
            alpha = J.initial_step(x, xi, eta);
        else if (it == 0)
            alpha = opt.alpha0;
        else
            alpha = prev_alpha * prev_slope / slope;
        if (!(alpha > 0) || !std::isfinite(alpha)) alpha = opt.alpha0;
        // smallest m ≥ 0 with the Armijo decrease at alpha·rho^m
        TTTrain xn;
        double fn = f;
        bool ok = false;
        for (int m = 0; m <= opt.max_backtracks; ++m) {
            xn = retract(x, eta, alpha);
            fn = J.value(xn);
            if (fn <= f + opt.c1 * alpha * slope) {
                ok = true;
                break;
            }
            alpha *= opt.rho;
        }
        if (!ok) {
            res.report.status = "linesearch_failed";
            break;
        }
        TangentVector xin = J.grad(xn);
        TangentVector xi_t = transport(xi, xn);
        TangentVector eta_t = transport(eta, xn);
        // Polak-Ribière, clipped at zero
        const double beta = std::max(0.0, inner(xin, combine(1.0, xin, -1.0, xi_t)) / (gn * gn));
        eta = combine(-1.0, xin, beta, eta_t);
        x = std::move(xn);
        f = fn;
        xi = std::move(xin);
        prev_alpha = alpha;
        prev_slope = slope;
        res.report.sweeps = it + 1;
        res.report.objective.push_back(f);
        res.grad_norms.push_back(norm(xi));
        res.steps.push_back(alpha);
    }
    if (res.report.status == "max_iters" && (norm(xi) <= opt.gtol || f <= opt.ftol)) res.report.status = "converged";
    res.report.final_residual = f;
    res.report.final_ranks = x.ranks();
    res.report.sweep_objective = res.report.objective;
    res.report.wall_time_s = clock.seconds();
    res.x = std::move(x);
    return res;
}

/// ½‖P_Ω(x) − P_Ω(a)‖² with exact line search along the embedded direction.
inline RiemannianObjective completion_objective(const SamplingSet& s) {
    RiemannianObjective J;
    J.value = [s](const TTTrain& x) {
        double e = 0.0;
        for (std::size_t m = 0; m < s.idx.size(); ++m) {
            const double d = x.at(s.idx[m]) - s.values[Index(m)];
            e += d * d;
        }
        return 0.5 * e;
    };
    J.riemannian_grad = [s](const TTTrain& x) {
        Vec r(s.values.size());
        for (std::size_t m = 0; m < s.idx.size(); ++m) r[Index(m)] = x.at(s.idx[m]) - s.values[Index(m)];
        return tangent_project_sparse(x, s.idx, r);
    };
    J.initial_step = [s](const TTTrain&, const TangentVector& xi, const TangentVector& eta) {
        const TTTrain e = embed(eta);
        double q = 0.0;
        for (const auto& i : s.idx) {
            const double v = e.at(i);
            q += v * v;
        }
        return q > 0 ? -inner(xi, eta) / q : 1.0;
    };
    return J;
}

// ============================================================================
// Projector-splitting integrator step (matrix case)
// ============================================================================

struct LowRankMatrix {
    Mat U, S, V;  // A ≈ U S Vᵀ, U and V with orthonormal columns
    [[nodiscard]] Mat dense() const { return U * S * V.transpose(); }
    [[nodiscard]] Index rank() const { return S.rows(); }
};

inline LowRankMatrix low_rank_svd(const Mat& A, Index r) {
    TruncSVD f = svd_full(A);
    r = std::min<Index>(r, f.s.size());
    return {f.U.leftCols(r), Mat(f.s.head(r).asDiagonal()), f.V.leftCols(r)};
}

/// One KSL step: K-step (P_U), backward S-step (P_UV), L-step (P_V).
inline LowRankMatrix projector_splitting_step(const LowRankMatrix& Y0, const Mat& A0, const Mat& A1) {
    if (A0.rows() != A1.rows() || A0.cols() != A1.cols() || Y0.U.rows() != A0.rows() || Y0.V.rows() != A0.cols())
        throw std::invalid_argument("projector_splitting_step: size mismatch");
    const Mat dA = A1 - A0;
    Mat K = Y0.U * Y0.S + dA * Y0.V;
    auto [U1, Sh] = qr_thin(K);
    Mat St = Sh - U1.transpose() * dA * Y0.V;
    Mat L = Y0.V * St.transpose() + dA.transpose() * U1;
    auto [V1, S1t] = qr_thin(L);
    return {U1, S1t.transpose(), V1};
}

// ============================================================================
// Exponential machines
// ============================================================================

enum class ExmLoss { squared, logistic };

struct ExmOptions {
    Index rank = 2;
    int iters = 500;
    Index batch = 0;  // 0 = full batch
    ExmLoss loss = ExmLoss::squared;
    double lambda = 0.0;
    double c1 = 1e-4;
    double rho = 0.5;
    int max_backtracks = 60;
    double init_noise = 1e-3;
    std::uint64_t seed = 0;
};

struct ExmTraceEntry {
    int iter = 0;
    double loss = 0.0;  // full-data penalized loss after the step
    double step = 0.0;
};

struct ExmModel {
    TTTrain W;
    double lambda = 0.0;
    ExmLoss loss = ExmLoss::squared;
    std::vector<Index> ranks;
    std::vector<ExmTraceEntry> trace;
    std::string status = "max_iters";
};

namespace detail {

inline std::vector<Vec> exm_features(const Mat& X, Index m) {
    std::vector<Vec> v;
    for (Index n = 0; n < X.cols(); ++n) v.push_back((Vec(2) << 1.0, X(m, n)).finished());
    return v;
}

inline double exm_score(const TTTrain& W, const std::vector<Vec>& f) {
    Mat v = Mat::Ones(1, 1);
    for (std::size_t k = 0; k < W.order(); ++k) v = v * contract_mode(W.cores[k], f[k]);
    return v(0, 0);
}

inline double exm_loss_value(ExmLoss kind, double yhat, double y) {
    if (kind == ExmLoss::squared) return (yhat - y) * (yhat - y);
    const double z = -y * yhat;
    return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double exm_loss_deriv(ExmLoss kind, double yhat, double y) {
    if (kind == ExmLoss::squared) return 2.0 * (yhat - y);
    const double z = -y * yhat;
    const double sig = z > 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return -y * sig;
}

/// Upper bound of the second derivative used for the trial step.
inline double exm_curvature(ExmLoss kind) { return kind == ExmLoss::squared ? 2.0 : 0.25; }

inline double exm_objective(const TTTrain& W, const Mat& X, const Vec& y, const std::vector<Index>& rows,
                            ExmLoss kind, double lambda) {
    double s = 0.0;
    for (Index m : rows) s += exm_loss_value(kind, exm_score(W, exm_features(X, m)), y[m]);
    const double nw = norm(W);
    return s / double(rows.size()) + lambda * nw * nw;
}

inline void exm_check(const Mat& X, const Vec& y) {
    if (X.rows() == 0 || X.cols() == 0) throw std::invalid_argument("exm: empty data");
    if (X.rows() != y.size()) throw std::invalid_argument("exm: X rows and y size differ");
}

}  // namespace detail

/// Linear least-squares model written as an exact rank-2 train, then cut or
/// padded to the target rank; every core entry gets N(0, noise²) added.
inline TTTrain exm_init(const Mat& X, const Vec& y, Index rank, double noise, std::uint64_t seed) {
    detail::exm_check(X, y);
    if (rank < 1) throw std::invalid_argument("exm: rank must be ≥ 1");
    const Index M = X.rows(), N = X.cols();
    Mat A(M, N + 1);
    A.col(0).setOnes();
    A.rightCols(N) = X;
    Vec w = A.completeOrthogonalDecomposition().solve(y);
    Shape modes(std::size_t(N), 2);
    TTTrain lin;
    if (N == 1) {
        lin = TTTrain({Core(1, 2, 1, (Vec(2) << w[0], w[1]).finished())});
    } else {
        std::vector<Core> cores;
        Core c0(1, 2, 2);
        c0(0, 0, 0) = 1.0;
        c0(0, 0, 1) = w[0];
        c0(0, 1, 1) = w[1];
        cores.push_back(c0);
        for (Index n = 1; n + 1 < N; ++n) {
            Core c(2, 2, 2);
            c(0, 0, 0) = 1.0;
            c(1, 0, 1) = 1.0;
            c(0, 1, 1) = w[n + 1];
            cores.push_back(c);
        }
        Core cl(2, 2, 1);
        cl(1, 0, 0) = 1.0;
        cl(0, 1, 0) = w[N];
        cores.push_back(cl);
        lin = TTTrain(std::move(cores));
    }
    // target ranks limited by the unfolding sizes
    std::vector<Index> target;
    for (Index k = 1; k < N; ++k) {
        const Index cap = Index(1) << std::min<Index>(std::min(k, N - k), 30);
        target.push_back(std::min(rank, cap));
    }
    if (N > 1 && rank < 2) lin = detail::round_to_ranks(lin, target);
    Rng rng(seed);
    std::vector<Core> cores;
    for (std::size_t k = 0; k < lin.order(); ++k) {
        const Index r0 = k == 0 ? 1 : target[k - 1];
        const Index r1 = k + 1 == lin.order() ? 1 : target[k];
        Core c(r0, 2, r1);
        const Core& src = lin.cores[k];
        for (Index b = 0; b < r1; ++b)
            for (Index i = 0; i < 2; ++i)
                for (Index a = 0; a < r0; ++a) {
                    const double base = (a < src.r0 && b < src.r1) ? src(a, i, b) : 0.0;
                    c(a, i, b) = base + noise * rng.randn();
                }
        cores.push_back(std::move(c));
    }
    return TTTrain(std::move(cores));
}

inline double exm_predict(const ExmModel& m, const Vec& x) {
    if (Index(m.W.order()) != x.size()) throw std::invalid_argument("exm_predict: feature count mismatch");
    Mat X = x.transpose();
    return detail::exm_score(m.W, detail::exm_features(X, 0));
}

inline Vec exm_predict(const ExmModel& m, const Mat& X) {
    if (Index(m.W.order()) != X.cols()) throw std::invalid_argument("exm_predict: feature count mismatch");
    Vec out(X.rows());
    for (Index i = 0; i < X.rows(); ++i) out[i] = detail::exm_score(m.W, detail::exm_features(X, i));
    return out;
}

inline double exm_loss(const ExmModel& m, const Mat& X, const Vec& y) {
    std::vector<Index> rows(static_cast<std::size_t>(X.rows()));
    std::iota(rows.begin(), rows.end(), Index(0));
    return detail::exm_objective(m.W, X, y, rows, m.loss, m.lambda);
}

/// Stochastic Riemannian gradient descent on the fixed-rank manifold. Each
/// iteration samples a minibatch, projects the minibatch gradient (a sum of
/// rank-1 terms plus the regularizer), and takes an Armijo step from the
/// curvature-bound trial step.
inline ExmModel exm_fit(const Mat& X, const Vec& y, const ExmOptions& opt = {},
                        const std::optional<TTTrain>& W0 = std::nullopt) {
    detail::exm_check(X, y);
    if (opt.lambda < 0) throw std::invalid_argument("exm_fit: lambda must be ≥ 0");
    if (opt.loss == ExmLoss::logistic)
        for (Index i = 0; i < y.size(); ++i)
            if (y[i] != 1.0 && y[i] != -1.0) throw std::invalid_argument("exm_fit: logistic loss needs ±1 labels");
    const Index M = X.rows(), N = X.cols();
    ExmModel model;
    model.lambda = opt.lambda;
    model.loss = opt.loss;
    model.W = W0 ? *W0 : exm_init(X, y, opt.rank, opt.init_noise, opt.seed);
    if (Index(model.W.order()) != N) throw std::invalid_argument("exm_fit: initial weights have wrong order");
    model.ranks = model.W.ranks();
    Rng rng(opt.seed + 1);
    std::vector<Index> all(static_cast<std::size_t>(M));
    std::iota(all.begin(), all.end(), Index(0));
    const Index P = (opt.batch <= 0 || opt.batch >= M) ? M : opt.batch;
    const double kappa = detail::exm_curvature(opt.loss);
    for (int it = 0; it < opt.iters; ++it) {
        std::vector<Index> rows;
        if (P == M) {
            rows = all;
        } else {
            std::vector<Index> perm = all;
            std::shuffle(perm.begin(), perm.end(), rng.gen);
            rows.assign(perm.begin(), perm.begin() + P);
        }
        std::vector<std::vector<Vec>> feats;
        std::vector<double> w;
        for (Index m : rows) {
            feats.push_back(detail::exm_features(X, m));
            w.push_back(detail::exm_loss_deriv(opt.loss, detail::exm_score(model.W, feats.back()), y[m]) / double(P));
        }
        TangentVector g = tangent_project_rank1_sum(model.W, feats, w);
        if (opt.lambda > 0) {
            // W lies in its own tangent space
            g = combine(1.0, g, 2.0 * opt.lambda, tangent_project(model.W, model.W));
        }
        const double gg = inner(g, g);
        if (gg <= 1e-30) {
            model.status = "converged";
            break;
        }
        const TTTrain e = embed(g);
        double q = 0.0;
        for (const auto& f : feats) {
            const double v = detail::exm_score(e, f);
            q += kappa * v * v / double(P);
        }
        q += 2.0 * opt.lambda * gg;
        double alpha = q > 0 ? gg / q : 1.0;
        const double f0 = detail::exm_objective(model.W, X, y, rows, opt.loss, opt.lambda);
        TTTrain Wn;
        bool ok = false;
        for (int m = 0; m <= opt.max_backtracks; ++m) {
            Wn = retract(model.W, g, -alpha);
            if (detail::exm_objective(Wn, X, y, rows, opt.loss, opt.lambda) <= f0 - opt.c1 * alpha * gg) {
                ok = true;
                break;
            }
            alpha *= opt.rho;
        }
        if (!ok) {
            model.status = "linesearch_failed";
            break;
        }
        model.W = std::move(Wn);
        model.trace.push_back({it + 1, exm_loss(model, X, y), alpha});
    }
    model.ranks = model.W.ranks();
    return model;
}

}  // namespace ttkit

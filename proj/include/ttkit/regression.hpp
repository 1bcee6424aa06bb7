#pragma once

#include "decomp.hpp"
#include "dense.hpp"
#include "linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttkit {

// ---------------------------------------------------------------------------
// kernels

struct KernelConfig {
    enum class Kind { linear, gaussian_rbf, chordal };
    Kind kind = Kind::linear;
    double beta = 1.0;

    void validate() const {
        if (kind != Kind::linear && !(beta > 0.0)) throw std::invalid_argument("KernelConfig: beta must be positive");
    }
};

namespace detail {

/// Right singular subspace projector of the mode-n unfolding.
inline Mat row_space_projector(const DenseTensor& x, std::size_t n, double rel = 1e-12) {
    Mat A = unfold_mode(x, n);
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinV);
    const Vec& s = svd.singularValues();
    Index r = 0;
    if (s.size() > 0 && s[0] > 0)
        while (r < s.size() && s[r] > rel * s[0]) ++r;
    Mat V = svd.matrixV().leftCols(r);
    return V * V.transpose();
}

}  // namespace detail

/// exp(−‖V Vᵀ − V′ V′ᵀ‖² / 2β²) for one mode.
inline double chordal_factor(const DenseTensor& a, const DenseTensor& b, std::size_t n, double beta) {
    Mat d = detail::row_space_projector(a, n) - detail::row_space_projector(b, n);
    return std::exp(-d.squaredNorm() / (2.0 * beta * beta));
}

inline double kernel(const DenseTensor& a, const DenseTensor& b, const KernelConfig& cfg) {
    cfg.validate();
    if (a.shape != b.shape) throw std::invalid_argument("kernel: shape mismatch");
    switch (cfg.kind) {
        case KernelConfig::Kind::linear:
            return a.data.dot(b.data);
        case KernelConfig::Kind::gaussian_rbf:
            return std::exp(-(a.data - b.data).squaredNorm() / (2.0 * cfg.beta * cfg.beta));
        case KernelConfig::Kind::chordal: {
            double k = 1.0;
            for (std::size_t n = 0; n < a.order(); ++n) k *= chordal_factor(a, b, n, cfg.beta);
            return k;
        }
    }
    return 0.0;
}

inline Mat kernel_cross(const std::vector<DenseTensor>& A, const std::vector<DenseTensor>& B, const KernelConfig& cfg) {
    cfg.validate();
    Mat K(Index(A.size()), Index(B.size()));
    if (cfg.kind == KernelConfig::Kind::chordal && !A.empty()) {
        // projectors once per tensor
        const std::size_t N = A.front().order();
        std::vector<std::vector<Mat>> PA(A.size()), PB(B.size());
        for (std::size_t i = 0; i < A.size(); ++i)
            for (std::size_t n = 0; n < N; ++n) PA[i].push_back(detail::row_space_projector(A[i], n));
        for (std::size_t j = 0; j < B.size(); ++j) {
            if (B[j].shape != A.front().shape) throw std::invalid_argument("kernel: shape mismatch");
            for (std::size_t n = 0; n < N; ++n) PB[j].push_back(detail::row_space_projector(B[j], n));
        }
        for (std::size_t i = 0; i < A.size(); ++i)
            for (std::size_t j = 0; j < B.size(); ++j) {
                double s = 0.0;
                for (std::size_t n = 0; n < N; ++n) s += (PA[i][n] - PB[j][n]).squaredNorm();
                K(Index(i), Index(j)) = std::exp(-s / (2.0 * cfg.beta * cfg.beta));
            }
        return K;
    }
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = 0; j < B.size(); ++j) K(Index(i), Index(j)) = kernel(A[i], B[j], cfg);
    return K;
}

inline Mat kernel_matrix(const std::vector<DenseTensor>& xs, const KernelConfig& cfg) {
    Mat K = kernel_cross(xs, xs, cfg);
    return 0.5 * (K + K.transpose());
}

/// Rows of X as order-1 tensors, for kernels on plain feature vectors.
inline std::vector<DenseTensor> rows_as_tensors(const Mat& X) {
    std::vector<DenseTensor> out;
    for (Index m = 0; m < X.rows(); ++m) out.emplace_back(Shape{X.cols()}, Vec(X.row(m).transpose()));
    return out;
}

// ---------------------------------------------------------------------------
// multilinear Tucker regression: Y = X ×₁ W₁ ⋯ ×_N W_N, samples in the last mode

struct MtrModel {
    std::vector<Mat> W;  // J_n × I_n
    std::vector<double> residual_trace;
    int iterations = 0;
};

inline DenseTensor mtr_predict(const MtrModel& m, const DenseTensor& X) {
    if (X.order() != m.W.size() + 1) throw std::invalid_argument("mtr_predict: expected N feature modes plus samples");
    return multi_mode_product(X, m.W, false);
}

inline MtrModel mtr_fit(const DenseTensor& X, const DenseTensor& Y, int iters = 200, double tol = 1e-13,
                        std::uint64_t seed = 0) {
    const std::size_t N = X.order() - 1;
    if (X.order() < 2 || Y.order() != X.order()) throw std::invalid_argument("mtr_fit: X and Y need the same order");
    if (X.shape.back() != Y.shape.back()) throw std::invalid_argument("mtr_fit: sample counts differ");
    Rng rng(seed);
    MtrModel m;
    for (std::size_t n = 0; n < N; ++n) m.W.push_back(rng.randn(Y.shape[n], X.shape[n]));
    const double ynorm = Y.norm();
    double prev = -1.0;
    for (int it = 0; it < iters; ++it) {
        for (std::size_t n = 0; n < N; ++n) {
            DenseTensor Xn = multi_mode_product(X, m.W, false, int(n));
            Mat A = unfold_mode(Xn, n);  // I_n × rest
            Mat B = unfold_mode(Y, n);   // J_n × rest
            // least squares W_n A ≈ B
            m.W[n] = A.transpose().completeOrthogonalDecomposition().solve(B.transpose()).transpose();
        }
        const double r = (mtr_predict(m, X).data - Y.data).norm();
        m.residual_trace.push_back(r);
        m.iterations = it + 1;
        if (prev >= 0 && std::abs(prev - r) <= tol * std::max(ynorm, 1e-300)) break;
        if (r <= 1e-15 * std::max(ynorm, 1e-300)) break;
        prev = r;
    }
    return m;
}

// ---------------------------------------------------------------------------
// HOLRR / KHOLRR: W = G ×₀ U⁽⁰⁾ ×₁ U⁽¹⁾ ⋯, samples in mode 0 of Y

struct HolrrModel {
    DenseTensor G;
    std::vector<Mat> U;  // U[0] is I₀ × R₀ (or M × R₀ for the kernel variant)
    double gamma = 0.0;
    std::vector<Index> ranks;
    bool kernelized = false;
    KernelConfig kernel_cfg;
    std::vector<DenseTensor> train_inputs;  // kept for kernel predictions from raw inputs

    DenseTensor weights() const { return multi_mode_product(G, U, false); }
};

namespace detail {

inline void check_holrr_ranks(const Shape& yshape, Index first, const std::vector<Index>& ranks) {
    if (ranks.size() != yshape.size()) throw std::invalid_argument("holrr: one rank per mode of Y (R₀ first)");
    if (ranks[0] < 1 || ranks[0] > first) throw std::invalid_argument("holrr: R₀ outside 1..I₀");
    for (std::size_t n = 1; n < ranks.size(); ++n)
        if (ranks[n] < 1 || ranks[n] > yshape[n]) throw std::invalid_argument("holrr: R_n outside 1..J_n");
}

inline Mat orthonormal_span(const Mat& V) {
    Mat Q = qr_thin(V).first;
    normalize_signs(Q);
    return Q;
}

/// Core from the mode-0 map T and output factors.
inline DenseTensor holrr_core(const DenseTensor& Y, const Mat& T, const std::vector<Mat>& U) {
    DenseTensor G = mode_product(Y, T, 0);
    for (std::size_t n = 1; n < U.size(); ++n) G = mode_product(G, Mat(U[n].transpose()), n);
    return G;
}

}  // namespace detail

inline HolrrModel holrr_fit(const Mat& X, const DenseTensor& Y, const std::vector<Index>& ranks, double gamma) {
    if (Y.order() < 2 || Y.shape[0] != X.rows()) throw std::invalid_argument("holrr_fit: Y must be M × J₁ × ⋯");
    if (gamma < 0) throw std::invalid_argument("holrr_fit: gamma must be non-negative");
    detail::check_holrr_ranks(Y.shape, X.cols(), ranks);
    const Index I0 = X.cols();
    Mat B = X.transpose() * X;
    B.diagonal().array() += gamma;
    Eigen::FullPivLU<Mat> lu(B);
    lu.setThreshold(1e-12);
    if (lu.rank() < I0)
        throw std::invalid_argument("holrr_fit: XᵀX + γI is singular; use gamma > 0");
    const Mat Y1 = unfold_mode(Y, 0);  // M × ∏J
    const Mat XtY = X.transpose() * Y1;
    const Mat A = XtY * XtY.transpose();
    // generalized symmetric problem A v = λ B v; top R₀ vectors span U⁽⁰⁾
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(A, B);
    Mat V = ges.eigenvectors().rightCols(ranks[0]).rowwise().reverse();
    HolrrModel m;
    m.gamma = gamma;
    m.ranks = ranks;
    m.U.resize(Y.order());
    m.U[0] = detail::orthonormal_span(V);
    for (std::size_t n = 1; n < Y.order(); ++n) m.U[n] = leading_left_singular(unfold_mode(Y, n), ranks[n]);
    Mat S = m.U[0].transpose() * B * m.U[0];
    Mat T = S.ldlt().solve(m.U[0].transpose() * X.transpose());
    m.G = detail::holrr_core(Y, T, m.U);
    return m;
}

/// Predictions for the rows of Xnew: result is M′ × J₁ × ⋯.
inline DenseTensor holrr_predict(const HolrrModel& m, const Mat& Xnew) {
    if (m.kernelized) throw std::invalid_argument("holrr_predict: model is kernelized; use kholrr_predict");
    return mode_product(m.weights(), Xnew, 0);
}

inline DenseTensor holrr_predict(const HolrrModel& m, const Vec& x) {
    DenseTensor y = holrr_predict(m, Mat(x.transpose()));
    Shape s(y.shape.begin() + 1, y.shape.end());
    return DenseTensor(s, y.data);
}

inline HolrrModel kholrr_fit(const Mat& K, const DenseTensor& Y, const std::vector<Index>& ranks, double gamma) {
    const Index M = K.rows();
    if (K.cols() != M) throw std::invalid_argument("kholrr_fit: Gram matrix must be square");
    if (Y.order() < 2 || Y.shape[0] != M) throw std::invalid_argument("kholrr_fit: Y must be M × J₁ × ⋯");
    if (gamma < 0) throw std::invalid_argument("kholrr_fit: gamma must be non-negative");
    detail::check_holrr_ranks(Y.shape, M, ranks);
    Mat B = K;
    B.diagonal().array() += gamma;
    const Mat Y1 = unfold_mode(Y, 0);
    Eigen::FullPivLU<Mat> lu(B);
    if (!lu.isInvertible()) throw std::invalid_argument("kholrr_fit: K + γI is singular; use gamma > 0");
    // (K+γI)⁻¹ Y₍₁₎Y₍₁₎ᵀ K has real non-negative spectrum
    Mat P = lu.solve(Y1 * (Y1.transpose() * K));
    Eigen::EigenSolver<Mat> es(P);
    std::vector<Index> order(M);
    for (Index i = 0; i < M; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return es.eigenvalues()[a].real() > es.eigenvalues()[b].real();
    });
    Mat V(M, ranks[0]);
    for (Index r = 0; r < ranks[0]; ++r) V.col(r) = es.eigenvectors().col(order[r]).real();
    HolrrModel m;
    m.kernelized = true;
    m.gamma = gamma;
    m.ranks = ranks;
    m.U.resize(Y.order());
    m.U[0] = detail::orthonormal_span(V);
    for (std::size_t n = 1; n < Y.order(); ++n) m.U[n] = leading_left_singular(unfold_mode(Y, n), ranks[n]);
    Mat S = m.U[0].transpose() * K * B * m.U[0];
    Mat T = S.completeOrthogonalDecomposition().solve(Mat(m.U[0].transpose() * K));
    m.G = detail::holrr_core(Y, T, m.U);
    return m;
}

/// k_star: M′ × M kernel values between test and training points.
inline DenseTensor kholrr_predict(const HolrrModel& m, const Mat& k_star) {
    if (!m.kernelized) throw std::invalid_argument("kholrr_predict: model is not kernelized");
    return mode_product(m.weights(), k_star, 0);
}

inline HolrrModel kholrr_fit(const std::vector<DenseTensor>& xs, const KernelConfig& cfg, const DenseTensor& Y,
                             const std::vector<Index>& ranks, double gamma) {
    HolrrModel m = kholrr_fit(kernel_matrix(xs, cfg), Y, ranks, gamma);
    m.kernel_cfg = cfg;
    m.train_inputs = xs;
    return m;
}

inline DenseTensor kholrr_predict(const HolrrModel& m, const std::vector<DenseTensor>& xs) {
    if (m.train_inputs.empty()) throw std::invalid_argument("kholrr_predict: model keeps no training inputs");
    return kholrr_predict(m, kernel_cross(xs, m.train_inputs, m.kernel_cfg));
}

// ---------------------------------------------------------------------------
// HOPLS: X ≈ Σ G_x,r ×₀ t_r ×ₙ P_r⁽ⁿ⁾, Y ≈ Σ G_y,r ×₀ t_r ×ₙ Q_r⁽ⁿ⁾, samples in mode 0

struct HoplsComponent {
    Vec t;
    std::vector<Mat> P, Q;
    DenseTensor Gx, Gy;
};

struct HoplsModel {
    std::vector<HoplsComponent> comps;
    Mat Wx;  // ∏I × R
    Mat Wy;  // R × ∏J
    Shape x_shape, y_shape;  // per-sample shapes
    bool centered = true;
    Vec x_mean, y_mean;      // per-sample means (flattened)
    std::vector<double> x_norms, y_norms;  // ‖X‖, ‖Y‖ after each deflation (index 0 = before)
};

struct HoplsOptions {
    bool center = true;
    int hooi_iters = 100;
    double pinv_tol = 1e-12;
};

namespace detail {

inline void center_samples(Mat& A, Vec& mean) {
    mean = A.colwise().mean().transpose();
    A.rowwise() -= mean.transpose();
}

/// Kronecker-ordered product of loading matrices (lowest mode fastest).
inline Mat kron_loadings(const std::vector<Mat>& P) {
    Mat K = P.front();
    for (std::size_t n = 1; n < P.size(); ++n) K = kron(P[n], K);
    return K;
}

/// Tucker block core ×₀ t ×ₙ P⁽ⁿ⁾ as a (M × ∏I) matrix.
inline Mat tucker_block(const Vec& t, const DenseTensor& G, const std::vector<Mat>& P) {
    Mat g = unfold_mode(G, 0);  // 1 × ∏L
    return t * (g * kron_loadings(P).transpose());
}

inline void hopls_prediction_maps(HoplsModel& m, double tol) {
    const Index R = Index(m.comps.size());
    m.Wx = Mat::Zero(prod(m.x_shape), R);
    m.Wy = Mat::Zero(R, prod(m.y_shape));
    for (Index r = 0; r < R; ++r) {
        const auto& c = m.comps[std::size_t(r)];
        Mat gx = unfold_mode(c.Gx, 0);
        Mat gy = unfold_mode(c.Gy, 0);
        m.Wx.col(r) = kron_loadings(c.P) * pinv(gx, tol);
        m.Wy.row(r) = gy * kron_loadings(c.Q).transpose();
    }
}

}  // namespace detail

inline HoplsModel hopls_fit(const DenseTensor& X, const DenseTensor& Y, int R, const std::vector<Index>& L,
                            const std::vector<Index>& K, const HoplsOptions& opt = {}) {
    if (X.order() < 2 || Y.order() < 2) throw std::invalid_argument("hopls_fit: X and Y need a sample mode plus features");
    if (X.shape[0] != Y.shape[0]) throw std::invalid_argument("hopls_fit: sample counts differ");
    if (R < 0) throw std::invalid_argument("hopls_fit: R must be non-negative");
    const std::size_t Nx = X.order() - 1, Ny = Y.order() - 1;
    if (L.size() != Nx || K.size() != Ny) throw std::invalid_argument("hopls_fit: one L per X mode and one K per Y mode");
    HoplsModel m;
    m.x_shape.assign(X.shape.begin() + 1, X.shape.end());
    m.y_shape.assign(Y.shape.begin() + 1, Y.shape.end());
    m.centered = opt.center;
    const Index M = X.shape[0];
    Mat Xm = unfold_mode(X, 0), Ym = unfold_mode(Y, 0);
    if (opt.center) {
        detail::center_samples(Xm, m.x_mean);
        detail::center_samples(Ym, m.y_mean);
    } else {
        m.x_mean = Vec::Zero(Xm.cols());
        m.y_mean = Vec::Zero(Ym.cols());
    }
    m.x_norms.push_back(Xm.norm());
    m.y_norms.push_back(Ym.norm());
    for (int r = 0; r < R; ++r) {
        // cross-covariance over the sample mode, shape I₁…I_N J₁…J_M
        Mat Cm = Xm.transpose() * Ym;
        Shape cs = m.x_shape;
        cs.insert(cs.end(), m.y_shape.begin(), m.y_shape.end());
        DenseTensor C(cs, Eigen::Map<const Vec>(Cm.data(), Cm.size()));
        std::vector<Index> cr = L;
        cr.insert(cr.end(), K.begin(), K.end());
        TuckerResult tk = tucker_hooi(C, cr, opt.hooi_iters, 1e-14);
        HoplsComponent c;
        c.P.assign(tk.factors.begin(), tk.factors.begin() + long(Nx));
        c.Q.assign(tk.factors.begin() + long(Nx), tk.factors.end());
        // t: dominant left singular vector of X ×ₙ P⁽ⁿ⁾ᵀ unfolded along samples
        Mat XP = Xm * detail::kron_loadings(c.P);
        Mat t = leading_left_singular(XP, 1);
        c.t = t.col(0);
        Shape gxs{1}, gys{1};
        gxs.insert(gxs.end(), L.begin(), L.end());
        gys.insert(gys.end(), K.begin(), K.end());
        Mat gx = c.t.transpose() * XP;
        Mat gy = c.t.transpose() * (Ym * detail::kron_loadings(c.Q));
        c.Gx = DenseTensor(gxs, Eigen::Map<const Vec>(gx.data(), gx.size()));
        c.Gy = DenseTensor(gys, Eigen::Map<const Vec>(gy.data(), gy.size()));
        Xm -= detail::tucker_block(c.t, c.Gx, c.P);
        Ym -= detail::tucker_block(c.t, c.Gy, c.Q);
        m.x_norms.push_back(Xm.norm());
        m.y_norms.push_back(Ym.norm());
        m.comps.push_back(std::move(c));
    }
    (void)M;
    detail::hopls_prediction_maps(m, opt.pinv_tol);
    return m;
}

inline DenseTensor hopls_predict(const HoplsModel& m, const DenseTensor& Xnew) {
    Shape xs(Xnew.shape.begin() + 1, Xnew.shape.end());
    if (xs != m.x_shape) throw std::invalid_argument("hopls_predict: feature shape mismatch");
    Mat Xm = unfold_mode(Xnew, 0);
    Xm.rowwise() -= m.x_mean.transpose();
    Mat Yp = m.comps.empty() ? Mat::Zero(Xm.rows(), prod(m.y_shape)) : Mat(Xm * m.Wx * m.Wy);
    Yp.rowwise() += m.y_mean.transpose();
    Shape ys{Xnew.shape[0]};
    ys.insert(ys.end(), m.y_shape.begin(), m.y_shape.end());
    return fold_mode(Yp, 0, ys);
}

/// N-way PLS by alternating weight estimation: a separate path from the HOOI route.
struct NplsModel {
    Mat T;                          // M × R latent vectors, unit norm
    std::vector<std::vector<Vec>> w;  // per component, one weight vector per X mode
    std::vector<Vec> c;             // Y loadings (flattened), unit norm
};

inline NplsModel npls_fit(const DenseTensor& X, const DenseTensor& Y, int R, bool center = true, int iters = 500,
                          double tol = 1e-14) {
    if (X.shape[0] != Y.shape[0]) throw std::invalid_argument("npls_fit: sample counts differ");
    const Index M = X.shape[0];
    Shape xs(X.shape.begin() + 1, X.shape.end());
    const std::size_t Nx = xs.size();
    Mat Xm = unfold_mode(X, 0), Ym = unfold_mode(Y, 0);
    if (center) {
        Vec mu;
        detail::center_samples(Xm, mu);
        detail::center_samples(Ym, mu);
    }
    NplsModel m;
    m.T = Mat::Zero(M, R);
    for (int r = 0; r < R; ++r) {
        // start from the dominant Y direction
        Vec u = leading_left_singular(Ym, 1).col(0);
        std::vector<Vec> w(Nx);
        for (std::size_t n = 0; n < Nx; ++n) w[n] = Vec::Ones(xs[n]) / std::sqrt(double(xs[n]));
        Vec t = Vec::Zero(M), c;
        for (int it = 0; it < iters; ++it) {
            // Z = X ×₀ uᵀ, then a rank-one fit of Z by alternating power steps
            Vec z = Xm.transpose() * u;
            DenseTensor Z(xs, z);
            for (int inner = 0; inner < 50; ++inner) {
                double change = 0.0;
                for (std::size_t n = 0; n < Nx; ++n) {
                    DenseTensor v = Z;
                    for (std::size_t k = Nx; k-- > 0;)
                        if (k != n) v = mode_vector_product(v, w[k], k);
                    Vec wn = v.data / std::max(v.data.norm(), 1e-300);
                    if (wn.dot(w[n]) < 0) wn = -wn;
                    change = std::max(change, (wn - w[n]).norm());
                    w[n] = wn;
                }
                if (change < 1e-15) break;
            }
            Mat Wk = w[0];
            for (std::size_t n = 1; n < Nx; ++n) Wk = kron(Mat(w[n]), Wk);
            Vec tn = Xm * Wk.col(0);
            tn /= std::max(tn.norm(), 1e-300);
            c = Ym.transpose() * tn;
            c /= std::max(c.norm(), 1e-300);
            u = Ym * c;
            const double d = std::min((tn - t).norm(), (tn + t).norm());
            t = tn;
            if (d < tol) break;
        }
        Mat Wk = w[0];
        for (std::size_t n = 1; n < Nx; ++n) Wk = kron(Mat(w[n]), Wk);
        // rank-one deflation matching the HOPLS block with unit loadings
        Xm -= t * (t.transpose() * Xm * Wk) * Wk.transpose();
        Ym -= t * (t.transpose() * Ym * c) * c.transpose();
        m.T.col(r) = t;
        m.w.push_back(w);
        m.c.push_back(c);
    }
    return m;
}

// ---------------------------------------------------------------------------
// LS-STM: rank-one weights, least squares SVM per mode

struct LsStmModel {
    std::vector<Vec> w;
    double b = 0.0;
    double gamma = 1.0;
    std::vector<double> objective;
    std::vector<std::string> warnings;
};

namespace detail {

inline Vec contract_except(const DenseTensor& X, const std::vector<Vec>& w, std::size_t n) {
    DenseTensor v = X;
    for (std::size_t k = w.size(); k-- > 0;)
        if (k != n) v = mode_vector_product(v, w[k], k);
    return v.data;
}

inline double lsstm_score(const DenseTensor& X, const std::vector<Vec>& w) {
    DenseTensor v = X;
    for (std::size_t k = w.size(); k-- > 0;) v = mode_vector_product(v, w[k], k);
    return v.data[0];
}

}  // namespace detail

inline double lsstm_objective(const LsStmModel& m, const std::vector<DenseTensor>& X, const Vec& y) {
    double p = 1.0;
    for (const auto& v : m.w) p *= v.squaredNorm();
    double e = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        double r = 1.0 - y[Index(i)] * (detail::lsstm_score(X[i], m.w) + m.b);
        e += r * r;
    }
    return 0.5 * p + 0.5 * m.gamma * e;
}

inline double lsstm_decision(const LsStmModel& m, const DenseTensor& X) { return detail::lsstm_score(X, m.w) + m.b; }

inline int lsstm_predict(const LsStmModel& m, const DenseTensor& X) { return lsstm_decision(m, X) >= 0 ? 1 : -1; }

inline LsStmModel lsstm_fit(const std::vector<DenseTensor>& X, const Vec& y, double gamma, int iters = 50,
                            double tol = 1e-12, std::uint64_t seed = 0) {
    if (X.empty() || Index(X.size()) != y.size()) throw std::invalid_argument("lsstm_fit: need one label per sample");
    if (!(gamma > 0)) throw std::invalid_argument("lsstm_fit: gamma must be positive");
    for (Index i = 0; i < y.size(); ++i)
        if (y[i] != 1.0 && y[i] != -1.0) throw std::invalid_argument("lsstm_fit: labels must be ±1");
    const Shape shape = X.front().shape;
    for (const auto& x : X)
        if (x.shape != shape) throw std::invalid_argument("lsstm_fit: all samples need the same shape");
    LsStmModel m;
    m.gamma = gamma;
    const Index M = y.size();
    if ((y.array() == y[0]).all()) {
        for (Index s : shape) m.w.push_back(Vec::Zero(s));
        m.b = y[0];
        m.warnings.push_back("lsstm_fit: all labels equal; bias-only classifier");
        m.objective.push_back(lsstm_objective(m, X, y));
        return m;
    }
    Rng rng(seed);
    for (Index s : shape) {
        Vec v = rng.randn_vec(s);
        m.w.push_back(v / v.norm());
    }
    m.objective.push_back(lsstm_objective(m, X, y));
    const std::size_t N = shape.size();
    for (int it = 0; it < iters; ++it) {
        for (std::size_t n = 0; n < N; ++n) {
            double eta = 1.0;
            for (std::size_t k = 0; k < N; ++k)
                if (k != n) eta *= m.w[k].squaredNorm();
            if (eta <= 0.0) eta = 1e-300;
            Mat Z(M, shape[n]);
            for (Index i = 0; i < M; ++i) Z.row(i) = detail::contract_except(X[std::size_t(i)], m.w, n).transpose();
            // LS-SVM KKT system [0 yᵀ; y Ω + I/γ] [b; α] = [0; 1], Ω = (y yᵀ) ∘ Z Zᵀ / η
            Mat Om = (y * y.transpose()).cwiseProduct(Z * Z.transpose()) / eta;
            Mat Kkt = Mat::Zero(M + 1, M + 1);
            Kkt.block(0, 1, 1, M) = y.transpose();
            Kkt.block(1, 0, M, 1) = y;
            Kkt.block(1, 1, M, M) = Om + Mat::Identity(M, M) / gamma;
            Vec rhs = Vec::Zero(M + 1);
            rhs.tail(M).setOnes();
            Vec sol = Kkt.partialPivLu().solve(rhs);
            m.b = sol[0];
            Vec alpha = sol.tail(M);
            m.w[n] = Z.transpose() * alpha.cwiseProduct(y) / eta;
        }
        const double J = lsstm_objective(m, X, y);
        const double prev = m.objective.back();
        m.objective.push_back(J);
        if (std::abs(prev - J) <= tol * std::max(std::abs(prev), 1e-300)) break;
    }
    return m;
}

}  // namespace ttkit

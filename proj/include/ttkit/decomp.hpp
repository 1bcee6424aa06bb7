#pragma once

#include "dense.hpp"
#include "linalg.hpp"

#include <cmath>

namespace ttkit {

struct CpResult {
    std::vector<Mat> factors;  // unit-norm columns
    Vec lambda;
    double fit = 0.0;
    std::vector<double> fit_trace;
    int iterations = 0;
};

struct CpOptions {
    int iters = 500;
    double tol = 1e-12;
    std::uint64_t seed = 0;
    /// number of leading modes tied together by averaging (0 = unconstrained)
    int symmetric_modes = 0;
    /// optional initial factors (one matrix per mode)
    std::vector<Mat> init;
};

namespace detail {

/// Khatri-Rao product of all factors except mode n, lowest mode fastest.
inline Mat khatri_rao_except(const std::vector<Mat>& A, std::size_t n) {
    Mat K;
    bool first = true;
    for (std::size_t k = 0; k < A.size(); ++k) {
        if (k == n) continue;
        if (first) {
            K = A[k];
            first = false;
        } else {
            K = khatri_rao(A[k], K);
        }
    }
    if (first) K = Mat::Ones(1, A[0].cols());
    return K;
}

inline Mat cp_full_unfold0(const std::vector<Mat>& A, const Vec& lambda) {
    Mat K = khatri_rao_except(A, 0);
    return A[0] * lambda.asDiagonal() * K.transpose();
}

}  // namespace detail

inline DenseTensor cp_reconstruct(const std::vector<Mat>& A, const Vec& lambda) {
    Shape s;
    for (const auto& a : A) s.push_back(a.rows());
    return fold_mode(detail::cp_full_unfold0(A, lambda), 0, s);
}

inline CpResult cp_als(const DenseTensor& x, Index R, const CpOptions& opt = {}) {
    const std::size_t N = x.order();
    if (N < 2) throw std::invalid_argument("cp_als: need at least two modes");
    if (R < 1) throw std::invalid_argument("cp_als: rank must be positive");
    Rng rng(opt.seed);
    std::vector<Mat> A(N);
    std::vector<Mat> Xn(N);
    for (std::size_t n = 0; n < N; ++n) {
        Xn[n] = unfold_mode(x, n);
        if (!opt.init.empty()) {
            A[n] = opt.init.at(n);
        } else {
            A[n] = rng.randn(x.shape[n], R);
        }
        for (Index r = 0; r < R; ++r) {
            double c = A[n].col(r).norm();
            if (c > 0) A[n].col(r) /= c;
        }
    }
    const int sym = std::min<int>(opt.symmetric_modes, int(N));
    if (sym > 1)
        for (int n = 1; n < sym; ++n) A[n] = A[0];
    const double xnorm = x.norm();
    CpResult res;
    Vec lambda = Vec::Ones(R);
    double prev_fit = -1e300;
    for (int it = 0; it < opt.iters; ++it) {
        for (std::size_t n = 0; n < N; ++n) {
            Mat G = Mat::Ones(R, R);
            for (std::size_t k = 0; k < N; ++k)
                if (k != n) G = G.cwiseProduct(A[k].transpose() * A[k]);
            Mat M = Xn[n] * detail::khatri_rao_except(A, n);
            A[n] = M * pinv(G, 1e-14);
            for (Index r = 0; r < R; ++r) {
                double c = A[n].col(r).norm();
                lambda[r] = c;
                if (c > 0) A[n].col(r) /= c;
            }
        }
        if (sym > 1) {
            // tie the leading modes: align column signs with mode 0, average, renormalize
            Mat avg = A[0];
            for (int n = 1; n < sym; ++n) {
                Mat B = A[n];
                for (Index r = 0; r < R; ++r)
                    if (B.col(r).dot(A[0].col(r)) < 0) B.col(r) *= -1.0;
                avg += B;
            }
            for (Index r = 0; r < R; ++r) {
                double c = avg.col(r).norm();
                if (c > 0) avg.col(r) /= c;
            }
            for (int n = 0; n < sym; ++n) A[n] = avg;
            // weights by least squares with all factors fixed
            Mat G = Mat::Ones(R, R);
            for (std::size_t k = 0; k < N; ++k) G = G.cwiseProduct(A[k].transpose() * A[k]);
            Mat KR = khatri_rao(detail::khatri_rao_except(A, 0), A[0]);
            lambda = pinv(G, 1e-14) * (KR.transpose() * x.data);
        }
        Mat Xhat = detail::cp_full_unfold0(A, lambda);
        double fit = xnorm > 0 ? 1.0 - (Xn[0] - Xhat).norm() / xnorm : 1.0;
        res.fit_trace.push_back(fit);
        res.iterations = it + 1;
        if (std::abs(fit - prev_fit) < opt.tol) {
            prev_fit = fit;
            break;
        }
        prev_fit = fit;
    }
    res.factors = A;
    res.lambda = lambda;
    res.fit = prev_fit;
    return res;
}

struct TuckerResult {
    DenseTensor core;
    std::vector<Mat> factors;
    std::vector<double> fit_trace;
};

inline DenseTensor multi_mode_product(const DenseTensor& x, const std::vector<Mat>& U, bool transpose_factors,
                                      int skip = -1) {
    DenseTensor y = x;
    for (std::size_t n = 0; n < U.size(); ++n) {
        if (int(n) == skip) continue;
        y = mode_product(y, transpose_factors ? Mat(U[n].transpose()) : U[n], n);
    }
    return y;
}

inline Mat leading_left_singular(const Mat& A, Index r) {
    TruncSVD f = svd_full(A);
    Mat U = f.U.leftCols(std::min<Index>(r, f.U.cols()));
    if (U.cols() < r) {
        // pad with an orthonormal complement when the unfolding is too small
        Mat Q = qr_thin(Mat::Identity(A.rows(), A.rows())).first;
        Mat P = Q - U * (U.transpose() * Q);
        Mat extra = orth(P).leftCols(r - U.cols());
        Mat out(A.rows(), r);
        out << U, extra;
        U = out;
    }
    normalize_signs(U);
    return U;
}

inline TuckerResult tucker_hooi(const DenseTensor& x, const std::vector<Index>& ranks, int iters = 50,
                                double tol = 1e-12) {
    const std::size_t N = x.order();
    if (ranks.size() != N) throw std::invalid_argument("tucker_hooi: one rank per mode");
    for (std::size_t n = 0; n < N; ++n)
        if (ranks[n] < 1 || ranks[n] > x.shape[n]) throw std::invalid_argument("tucker_hooi: rank outside 1..I_n");
    std::vector<Mat> U(N);
    for (std::size_t n = 0; n < N; ++n) U[n] = leading_left_singular(unfold_mode(x, n), ranks[n]);
    TuckerResult res;
    const double xnorm = x.norm();
    double prev = -1.0;
    for (int it = 0; it < iters; ++it) {
        for (std::size_t n = 0; n < N; ++n) {
            DenseTensor y = multi_mode_product(x, U, true, int(n));
            U[n] = leading_left_singular(unfold_mode(y, n), ranks[n]);
        }
        DenseTensor g = multi_mode_product(x, U, true);
        double fit = xnorm > 0 ? g.norm() / xnorm : 1.0;
        res.fit_trace.push_back(fit);
        if (std::abs(fit - prev) < tol) break;
        prev = fit;
    }
    res.core = multi_mode_product(x, U, true);
    res.factors = U;
    return res;
}

}  // namespace ttkit

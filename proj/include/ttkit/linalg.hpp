#pragma once

#include "dense.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace ttkit {

/// Smallest r with trailing singular-value energy ≤ delta², capped at max_rank.
inline Index truncation_rank(const Vec& sigma, double delta, Index max_rank) {
    const Index n = sigma.size();
    if (n == 0) return 0;
    Index r = n;
    double tail = 0.0;
    const double d2 = delta * delta;
    while (r > 1) {
        double t = tail + sigma[r - 1] * sigma[r - 1];
        if (t > d2) break;
        tail = t;
        --r;
    }
    return std::max<Index>(1, std::min(r, max_rank));
}

struct TruncSVD {
    Mat U;  // m × r, orthonormal columns
    Vec s;
    Mat V;  // n × r, orthonormal columns
};

inline TruncSVD svd_full(const Mat& A) {
    Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

/// Truncated SVD with absolute Frobenius tolerance delta.
inline TruncSVD svd_truncated(const Mat& A, double delta, Index max_rank) {
    TruncSVD f = svd_full(A);
    Index r = truncation_rank(f.s, delta, max_rank);
    return {f.U.leftCols(r), f.s.head(r), f.V.leftCols(r)};
}

/// Thin QR: A = Q R with Q of min(m,n) orthonormal columns.
inline std::pair<Mat, Mat> qr_thin(const Mat& A) {
    const Index m = A.rows(), n = A.cols(), k = std::min(m, n);
    Eigen::HouseholderQR<Mat> qr(A);
    Mat Q = qr.householderQ() * Mat::Identity(m, k);
    Mat R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    // fix signs so that diag(R) ≥ 0, which keeps results deterministic
    for (Index i = 0; i < k; ++i) {
        if (R(i, i) < 0) {
            R.row(i) *= -1.0;
            Q.col(i) *= -1.0;
        }
    }
    return {Q, R};
}

/// Minimum-rank factorization A = Q B with Q orthonormal. Uses pivoted QR and
/// falls back to SVD when the pivoted R is rank deficient at rel_tol·|R11|.
inline std::pair<Mat, Mat> factor_min_rank(const Mat& A, double rel_tol = 1e-13) {
    const Index m = A.rows(), n = A.cols(), k = std::min(m, n);
    if (k == 0) return {Mat(m, 0), Mat(0, n)};
    Eigen::ColPivHouseholderQR<Mat> qr(A);
    const Mat& QR = qr.matrixQR();
    const double r11 = std::abs(QR(0, 0));
    Index rank = 0;
    for (Index i = 0; i < k; ++i)
        if (std::abs(QR(i, i)) > rel_tol * r11) ++rank;
    if (r11 == 0.0) rank = 0;
    if (rank == k) {
        auto [Q, R] = qr_thin(A);
        return {Q, R};
    }
    TruncSVD f = svd_full(A);
    const double smax = f.s.size() ? f.s[0] : 0.0;
    Index r = 0;
    for (Index i = 0; i < f.s.size(); ++i)
        if (f.s[i] > rel_tol * smax) ++r;
    r = std::max<Index>(r, 1);
    Mat Q = f.U.leftCols(r);
    Mat B = f.s.head(r).asDiagonal() * f.V.leftCols(r).transpose();
    return {Q, B};
}

/// Pseudo-inverse with relative singular-value cutoff.
inline Mat pinv(const Mat& A, double rel_cut = 1e-12) {
    if (A.size() == 0) return Mat::Zero(A.cols(), A.rows());
    TruncSVD f = svd_full(A);
    const double smax = f.s.size() ? f.s[0] : 0.0;
    Vec sinv = Vec::Zero(f.s.size());
    for (Index i = 0; i < f.s.size(); ++i)
        if (f.s[i] > rel_cut * smax && f.s[i] > 0) sinv[i] = 1.0 / f.s[i];
    return f.V * sinv.asDiagonal() * f.U.transpose();
}

/// Flip the sign of each column so that its first nonzero entry is positive.
inline void normalize_signs(Mat& V, double eps = 1e-14) {
    for (Index j = 0; j < V.cols(); ++j) {
        for (Index i = 0; i < V.rows(); ++i) {
            if (std::abs(V(i, j)) > eps) {
                if (V(i, j) < 0) V.col(j) *= -1.0;
                break;
            }
        }
    }
}

/// Orthonormal basis of the columns of A (rank revealing).
inline Mat orth(const Mat& A, double rel_tol = 1e-12) {
    TruncSVD f = svd_full(A);
    const double smax = f.s.size() ? f.s[0] : 0.0;
    Index r = 0;
    for (Index i = 0; i < f.s.size(); ++i)
        if (f.s[i] > rel_tol * smax && f.s[i] > 0) ++r;
    return f.U.leftCols(r);
}

}  // namespace ttkit

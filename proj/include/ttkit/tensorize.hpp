#pragma once

#include "tt.hpp"

#include <cmath>
#include <functional>

namespace ttkit {

// ============================================================================
// Folding, Toeplitz and Hankel tensors
// ============================================================================

inline void check_generator_length(Index L, const Shape& sizes, const char* what) {
    if (sizes.empty()) throw std::invalid_argument(std::string(what) + ": no modes");
    Index s = 0;
    for (Index n : sizes) s += n;
    if (s - Index(sizes.size()) + 1 != L)
        throw std::invalid_argument(std::string(what) + ": sum(I_n) - N + 1 must equal the generator length");
}

/// T(i_1..i_N) = y(ī_1+…+ī_{N-1}+i_N), ī_n = I_n − i_n (one-based). In zero-based
/// indices this is y[Σ_{n<N}(I_n − 1 − a_n) + a_N].
inline DenseTensor toeplitz_tensor(const Vec& y, const Shape& sizes) {
    check_generator_length(y.size(), sizes, "toeplitz_tensor");
    DenseTensor T(sizes);
    const std::size_t N = sizes.size();
    for (Index li = 0; li < T.numel(); ++li) {
        auto a = multi_index(li, sizes);
        Index k = a[N - 1];
        for (std::size_t n = 0; n + 1 < N; ++n) k += sizes[n] - 1 - a[n];
        T.data[li] = y[k];
    }
    return T;
}

/// H(i_1..i_N) = y(i_1+…+i_N−N+1), i.e. y[Σ a_n] zero-based.
inline DenseTensor hankel_tensor(const Vec& y, const Shape& sizes) {
    check_generator_length(y.size(), sizes, "hankel_tensor");
    DenseTensor H(sizes);
    for (Index li = 0; li < H.numel(); ++li) {
        auto a = multi_index(li, sizes);
        Index k = 0;
        for (Index v : a) k += v;
        H.data[li] = y[k];
    }
    return H;
}

/// Generator recovery by concatenating fibers H(:,0,…,0), H(I_1−1,1:,0,…), …
inline Vec hankel_generator(const DenseTensor& H) {
    const std::size_t N = H.order();
    std::vector<double> y;
    std::vector<Index> idx(N, 0);
    for (std::size_t n = 0; n < N; ++n) {
        for (Index i = (n == 0 ? 0 : 1); i < H.shape[n]; ++i) {
            idx[n] = i;
            y.push_back(H(idx));
        }
        idx[n] = H.shape[n] - 1;
    }
    return Eigen::Map<Vec>(y.data(), Index(y.size()));
}

/// L_ij = (f(x_i) − f(y_j)) / (x_i − y_j).
inline Mat loewner_matrix(const Vec& fx, const Vec& fy, const Vec& x, const Vec& y) {
    if (fx.size() != x.size() || fy.size() != y.size()) throw std::invalid_argument("loewner_matrix: size mismatch");
    Mat L(x.size(), y.size());
    for (Index i = 0; i < x.size(); ++i)
        for (Index j = 0; j < y.size(); ++j) {
            if (x[i] == y[j]) throw std::invalid_argument("loewner_matrix: x_i and y_j must differ");
            L(i, j) = (fx[i] - fy[j]) / (x[i] - y[j]);
        }
    return L;
}

// ============================================================================
// Convolution tensor in QTT format
// ============================================================================

/// QTT of the zero-padded convolution tensor of size 2^D × … × 2^D × N·2^D.
/// Cores 0..D−1 are bit levels (least significant first); each carries the
/// N+1 bits (a_1..a_N, k) merged as a mode of size 2^{N+1} with a_1 fastest.
/// The last core (mode size N) holds the top digit of k.
struct ConvTensorQTT {
    int N = 2;
    int D = 1;
    TTTrain cores;
};

/// The elementary core tensor S (N × 2^{N+1} × N), built by the sub-tensor
/// shifting recursion. Entry (m, bits, n) is stored at m + N*(bits + 2^{N+1}*n),
/// where bits packs i_1..i_N (zero-based, i_1 lowest) and i_{N+1} as the top bit.
inline Core elementary_core(int N) {
    if (N < 2 || N > 17) throw std::invalid_argument("elementary_core: N must be in 2..17");
    const Index H = Index(1) << N;
    const Index M = 2 * H;
    Core S(N, M, N);
    // S_n: ones where Σ_{k<N} ī_k + i_N equals the level of S_n (one-based bits, ī = 2 − i)
    auto Sn = [&](int n, Index b) {
        int sum = 0;
        for (int k = 0; k + 1 < N; ++k) sum += 1 - int((b >> k) & 1);
        sum += int((b >> (N - 1)) & 1) + 1;
        const int target = (n % 2 == 1) ? std::max(N - n + 1, 0) : std::max(N - n + 3, 0);
        return sum == target ? 1.0 : 0.0;
    };
    for (int n = 1; n <= N; ++n)
        for (Index b = 0; b < H; ++b) {
            S(0, b, n - 1) = Sn(2 * n - 1, b);
            S(0, b + H, n - 1) = Sn(2 * n, b);
        }
    for (int m = 2; m <= N; ++m)
        for (Index b = 0; b < H; ++b) {
            for (int n = 1; n <= N; ++n) S(m - 1, b, n - 1) = S(m - 2, b + H, n - 1);
            S(m - 1, b + H, 0) = S(m - 2, b, N - 1);
            for (int n = 2; n <= N; ++n) S(m - 1, b + H, n - 1) = S(m - 2, b, n - 2);
        }
    return S;
}

inline ConvTensorQTT convolution_tensor_qtt(int N, int D) {
    if (N < 2 || N > 17) throw std::invalid_argument("convolution_tensor_qtt: N must be in 2..17");
    if (D < 1) throw std::invalid_argument("convolution_tensor_qtt: D must be positive");
    Core S = elementary_core(N);
    std::vector<Core> cores;
    Core first(1, S.n, N);
    for (Index n = 0; n < N; ++n)
        for (Index b = 0; b < S.n; ++b) first(0, b, n) = S(0, b, n);
    cores.push_back(first);
    for (int d = 1; d < D; ++d) cores.push_back(S);
    Core last(N, N, 1);  // exchange matrix
    for (Index m = 0; m < N; ++m) last(m, N - 1 - m, 0) = 1.0;
    cores.push_back(last);
    return {N, D, TTTrain(std::move(cores))};
}

/// Dense zero-padded convolution tensor C(a_1..a_N, k) = 1 iff
/// k = Σ_{n<N}(I − 1 − a_n) + a_N + N − 1 (zero-based).
inline DenseTensor convolution_tensor_dense(int N, int D) {
    const Index I = Index(1) << D;
    Shape s(N, I);
    s.push_back(N * I);
    DenseTensor C(s);
    for (Index li = 0; li < prod(Shape(N, I)); ++li) {
        auto a = multi_index(li, Shape(N, I));
        Index k = a[N - 1] + N - 1;
        for (int n = 0; n + 1 < N; ++n) k += I - 1 - a[n];
        a.push_back(k);
        C(a) = 1.0;
    }
    return C;
}

/// Convert the QTT (merged-bit) layout of the convolution tensor to dense.
inline DenseTensor conv_qtt_to_dense(const ConvTensorQTT& c) {
    DenseTensor q = contract_full(c.cores);
    const Index I = Index(1) << c.D;
    Shape s(c.N, I);
    s.push_back(c.N * I);
    DenseTensor C(s);
    for (Index li = 0; li < q.numel(); ++li) {
        auto idx = multi_index(li, q.shape);
        std::vector<Index> a(c.N + 1, 0);
        for (int d = 0; d < c.D; ++d) {
            for (int n = 0; n <= c.N; ++n) a[n] += ((idx[d] >> n) & 1) << d;
        }
        a[c.N] += idx[c.D] * I;
        C(a) = q.data[li];
    }
    return C;
}

/// T(y) = C ×̄_{N+1} y for y in QTT with modes [2]*D + [N] (first core least
/// significant bit, last core the top digit). The result has D cores of mode
/// size 2^N (bits of a_1..a_N merged, a_1 fastest).
inline TTTrain toeplitz_from_qtt(const ConvTensorQTT& c, const TTTrain& y) {
    const Index H = Index(1) << c.N;
    if (y.order() != std::size_t(c.D + 1)) throw std::invalid_argument("toeplitz_from_qtt: y must have D+1 cores");
    for (int d = 0; d < c.D; ++d)
        if (y.cores[d].n != 2) throw std::invalid_argument("toeplitz_from_qtt: y bit cores must have mode 2");
    if (y.cores[c.D].n != c.N) throw std::invalid_argument("toeplitz_from_qtt: last y core must have mode N");
    std::vector<Core> out;
    for (int d = 0; d < c.D; ++d) {
        const Core& a = c.cores.cores[d];
        const Core& b = y.cores[d];
        Core t(a.r0 * b.r0, H, a.r1 * b.r1);
        for (Index q1 = 0; q1 < a.r1; ++q1)
            for (Index s1 = 0; s1 < b.r1; ++s1)
                for (Index kb = 0; kb < 2; ++kb)
                    for (Index bits = 0; bits < H; ++bits)
                        for (Index q0 = 0; q0 < a.r0; ++q0) {
                            const double w = a(q0, bits + H * kb, q1);
                            if (w == 0.0) continue;
                            for (Index s0 = 0; s0 < b.r0; ++s0)
                                t(s0 + b.r0 * q0, bits, s1 + b.r1 * q1) += w * b(s0, kb, s1);
                        }
        out.push_back(std::move(t));
    }
    // contract the top digit and absorb into the last bit core
    const Core& a = c.cores.cores[c.D];
    const Core& b = y.cores[c.D];
    Mat tail = Mat::Zero(a.r0 * b.r0, 1);
    for (Index k = 0; k < c.N; ++k)
        for (Index q0 = 0; q0 < a.r0; ++q0)
            for (Index s0 = 0; s0 < b.r0; ++s0) tail(s0 + b.r0 * q0, 0) += a(q0, k, 0) * b(s0, k, 0);
    Core& lastc = out.back();
    Mat merged = lastc.left() * tail;
    lastc = Core::from_left(merged, lastc.r0, lastc.n);
    return TTTrain(std::move(out));
}

/// Dense N-way tensor (2^D)^N from the merged-bit QTT layout.
inline DenseTensor merged_qtt_to_dense(const TTTrain& t, int N) {
    const int D = int(t.order());
    const Index I = Index(1) << D;
    DenseTensor q = contract_full(t);
    DenseTensor T(Shape(N, I));
    for (Index li = 0; li < q.numel(); ++li) {
        auto idx = multi_index(li, q.shape);
        std::vector<Index> a(N, 0);
        for (int d = 0; d < D; ++d)
            for (int n = 0; n < N; ++n) a[n] += ((idx[d] >> n) & 1) << d;
        T(a) = q.data[li];
    }
    return T;
}

// ============================================================================
// Closed-form TT representations of a sinusoid
// ============================================================================

enum class SinusoidKind { folded, toeplitz, hankel };

/// S = [[sinφ, cosφ], [cosφ, −sinφ]].
inline Mat sinusoid_S(double phi) {
    Mat S(2, 2);
    S << std::sin(phi), std::cos(phi), std::cos(phi), -std::sin(phi);
    return S;
}

/// U_{ω,k} = [[1, 0], [cos kω, sin kω]].
inline Mat sinusoid_U(double omega, double k) {
    Mat U(2, 2);
    U << 1.0, 0.0, std::cos(k * omega), std::sin(k * omega);
    return U;
}

/// Generator samples for each kind: folded uses t = 0..L−1, Toeplitz and
/// Hankel forms use y(t) = sin(ωt + φ), t = 1..L.
inline Vec sinusoid_samples(SinusoidKind kind, double omega, double phi, Index L) {
    Vec y(L);
    const double off = kind == SinusoidKind::folded ? 0.0 : 1.0;
    for (Index t = 0; t < L; ++t) y[t] = std::sin(omega * (double(t) + off) + phi);
    return y;
}

/// Folded: D modes of size 2. Toeplitz/Hankel: quantized form of order L−1,
/// all modes of size 2, with L = 2^D.
inline TTTrain sinusoid_tt(SinusoidKind kind, double omega, double phi, int D) {
    if (D < 1 || D > 30) throw std::invalid_argument("sinusoid_tt: D must be in 1..30");
    if (std::abs(std::sin(omega)) < 1e-12) throw std::invalid_argument("sinusoid_tt: sin(omega) must be nonzero");
    std::vector<Core> cores;
    if (kind == SinusoidKind::folded) {
        if (D == 1) {
            cores.emplace_back(1, 2, 1, Vec{{std::sin(phi), std::sin(omega + phi)}});
            return TTTrain(std::move(cores));
        }
        Mat U1 = sinusoid_U(omega, 1.0);
        Core first(1, 2, 2);
        for (Index i = 0; i < 2; ++i)
            for (Index b = 0; b < 2; ++b) first(0, i, b) = U1(i, b);
        cores.push_back(first);
        for (int n = 2; n < D; ++n) {
            Mat U = sinusoid_U(omega, std::ldexp(1.0, n - 1));
            Core c(2, 2, 2);
            for (Index i = 0; i < 2; ++i) {
                Mat G(2, 2);
                G << U(i, 0), U(i, 1), -U(i, 1), U(i, 0);
                c.set_slice(i, G);
            }
            cores.push_back(c);
        }
        Mat last = sinusoid_S(phi) * sinusoid_U(omega, std::ldexp(1.0, D - 1)).transpose();
        Core lc(2, 2, 1);
        for (Index i = 0; i < 2; ++i)
            for (Index a = 0; a < 2; ++a) lc(a, i, 0) = last(a, i);
        cores.push_back(lc);
        return TTTrain(std::move(cores));
    }
    const Index L = Index(1) << D;
    const Index N = L - 1;
    const Vec y = sinusoid_samples(kind, omega, phi, L);
    auto yy = [&](Index t) { return y[t - 1]; };  // one-based
    const double c2 = 2.0 * std::cos(omega);
    Mat G[2], A(2, 2);
    Vec e(2);
    if (kind == SinusoidKind::toeplitz) {
        G[0] = Mat::Identity(2, 2);
        G[1].resize(2, 2);
        G[1] << 0.0, 1.0, -1.0, c2;
        A << yy(L - 1), yy(L), yy(L - 2), yy(L - 1);
        e << 1.0, 0.0;
    } else {
        G[0].resize(2, 2);
        G[0] << c2, -1.0, 1.0, 0.0;
        G[1] = Mat::Identity(2, 2);
        A << yy(L - 2), yy(L - 1), yy(L - 1), yy(L);
        e << 0.0, 1.0;
    }
    if (N == 1) {
        cores.emplace_back(1, 2, 1, Vec{{e.dot(A.col(0)), e.dot(A.col(1))}});
        return TTTrain(std::move(cores));
    }
    Core first(1, 2, 2);
    for (Index i = 0; i < 2; ++i) first.set_slice(i, e.transpose() * G[i]);
    cores.push_back(first);
    Core mid(2, 2, 2);
    for (Index i = 0; i < 2; ++i) mid.set_slice(i, G[i]);
    for (Index n = 1; n + 1 < N; ++n) cores.push_back(mid);
    Core lc(2, 2, 1);
    for (Index i = 0; i < 2; ++i) lc.set_slice(i, A.col(i));
    cores.push_back(lc);
    return TTTrain(std::move(cores));
}

// ============================================================================
// GCF derivative tensors and cumulants
// ============================================================================

namespace detail {

/// All set partitions of {0..n−1} as block-label vectors (restricted growth strings).
inline std::vector<std::vector<int>> enumerate_set_partitions(int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> a(n, 0);
    std::function<void(int, int)> rec = [&](int k, int m) {
        if (k == n) {
            out.push_back(a);
            return;
        }
        for (int b = 0; b <= m + 1 && b < n; ++b) {
            a[k] = b;
            rec(k + 1, std::max(m, b));
        }
    };
    if (n > 0) rec(1, 0);
    return out;
}

/// Cached for n = 0..7; built once, safe to share across threads.
inline const std::vector<std::vector<int>>& set_partitions(int n) {
    static const std::vector<std::vector<std::vector<int>>> cache = [] {
        std::vector<std::vector<std::vector<int>>> c;
        for (int k = 0; k < 8; ++k) c.push_back(enumerate_set_partitions(k));
        return c;
    }();
    return cache.at(n);
}

inline double factorial(int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

}  // namespace detail

/// Derivative of order N of Ψ(u) = log φ̂(u), φ̂(u) = (1/T) Σ_t exp(uᵀx_t).
/// The normalized moment tensors ψ^{(n)} = Σ_t w_t x_t^{∘n} / Σ_t w_t enter the
/// moment-to-cumulant expansion summed over all set partitions, which is the
/// symmetrized integer-partition expansion written out term by term.
inline DenseTensor gcf_derivative(const Mat& X, const Vec& u, int N) {
    if (N < 2 || N > 7) throw std::invalid_argument("gcf_derivative: order must be in 2..7");
    const Index I = X.rows(), T = X.cols();
    if (T < 1) throw std::invalid_argument("gcf_derivative: need at least one sample");
    if (u.size() != I) throw std::invalid_argument("gcf_derivative: point dimension mismatch");
    Vec s = X.transpose() * u;
    if (s.size() && s.cwiseAbs().maxCoeff() > 300.0) throw std::overflow_error("gcf_derivative: |u^T x| > 300");
    const double smax = s.maxCoeff();
    Vec w = (s.array() - smax).exp();
    w /= w.sum();
    // normalized moment tensors ψ^{(n)}, n = 1..N, flattened col-major over I^n
    std::vector<Vec> psi(N + 1);
    for (int n = 1; n <= N; ++n) {
        const Index sz = Index(std::pow(double(I), n));
        psi[n] = Vec::Zero(sz);
        std::vector<Index> idx(n);
        for (Index li = 0; li < sz; ++li) {
            Index r = li;
            for (int k = 0; k < n; ++k) {
                idx[k] = r % I;
                r /= I;
            }
            double acc = 0.0;
            for (Index t = 0; t < T; ++t) {
                double p = w[t];
                for (int k = 0; k < n; ++k) p *= X(idx[k], t);
                acc += p;
            }
            psi[n][li] = acc;
        }
    }
    const auto& parts = detail::set_partitions(N);
    DenseTensor out(Shape(N, I));
    std::vector<Index> idx(N);
    std::vector<Index> sub(N);
    for (Index li = 0; li < out.numel(); ++li) {
        Index r = li;
        for (int k = 0; k < N; ++k) {
            idx[k] = r % I;
            r /= I;
        }
        double total = 0.0;
        for (const auto& p : parts) {
            const int nb = *std::max_element(p.begin(), p.end()) + 1;
            double term = ((nb - 1) % 2 ? -1.0 : 1.0) * detail::factorial(nb - 1);
            for (int b = 0; b < nb && term != 0.0; ++b) {
                Index lin = 0, stride = 1;
                int sz = 0;
                for (int k = 0; k < N; ++k)
                    if (p[k] == b) {
                        lin += idx[k] * stride;
                        stride *= I;
                        ++sz;
                    }
                term *= psi[sz][lin];
            }
            total += term;
        }
        out.data[li] = total;
    }
    return out;
}

/// Sample cumulant tensor of order N (the GCF derivative at u = 0).
inline DenseTensor cumulant(const Mat& X, int N) { return gcf_derivative(X, Vec::Zero(X.rows()), N); }

/// Stack of derivative tensors along a trailing mode of size K; optionally the
/// average over k is subtracted from each slice.
inline DenseTensor derivative_stack(const Mat& X, const std::vector<Vec>& points, int N, bool mean_subtract = false) {
    if (points.empty()) throw std::invalid_argument("derivative_stack: no points");
    const Index I = X.rows(), K = Index(points.size());
    const Index sz = prod(Shape(N, I));
    Shape s(N, I);
    s.push_back(K);
    DenseTensor out(s);
    for (Index k = 0; k < K; ++k) out.data.segment(k * sz, sz) = gcf_derivative(X, points[k], N).data;
    if (mean_subtract) {
        Vec mean = Vec::Zero(sz);
        for (Index k = 0; k < K; ++k) mean += out.data.segment(k * sz, sz);
        mean /= double(K);
        for (Index k = 0; k < K; ++k) out.data.segment(k * sz, sz) -= mean;
    }
    return out;
}

}  // namespace ttkit

#pragma once

#include "decomp.hpp"
#include "tensorize.hpp"
#include "tt.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

namespace ttkit {

// ============================================================================
// Scoring
// ============================================================================

/// SAE in dB: −20·log10(arccos(|cos|)), cosine clamped to [0, 1]. Angles below
/// 1e-15 rad are floored, which caps a perfect match at 300 dB. A zero-norm
/// estimate scores −∞.
inline double sae_db(const Vec& truth, const Vec& est) {
    const double nt = truth.norm(), ne = est.norm();
    if (nt == 0.0 || ne == 0.0) return -std::numeric_limits<double>::infinity();
    const double c = std::clamp(std::abs(truth.dot(est)) / (nt * ne), 0.0, 1.0);
    return -20.0 * std::log10(std::max(std::acos(c), 1e-15));
}

struct MatchScore {
    std::vector<Index> assignment;  // truth column -> estimate column
    std::vector<double> sae;        // per truth column
    double msae = 0.0;
};

/// Greedy matching: repeatedly pair the unassigned truth/estimate columns with
/// the largest |correlation|.
inline MatchScore match_columns(const Mat& truth, const Mat& est) {
    const Index R = truth.cols();
    if (est.rows() != truth.rows() || est.cols() < R) throw std::invalid_argument("match_columns: size mismatch");
    MatchScore s;
    s.assignment.assign(std::size_t(R), -1);
    s.sae.assign(std::size_t(R), 0.0);
    std::vector<bool> used(std::size_t(est.cols()), false);
    for (Index step = 0; step < R; ++step) {
        double best = -1.0;
        Index bi = -1, bj = -1;
        for (Index i = 0; i < R; ++i) {
            if (s.assignment[std::size_t(i)] >= 0) continue;
            for (Index j = 0; j < est.cols(); ++j) {
                if (used[std::size_t(j)]) continue;
                const double d = truth.col(i).norm() * est.col(j).norm();
                const double c = d > 0 ? std::abs(truth.col(i).dot(est.col(j))) / d : 0.0;
                if (c > best) {
                    best = c;
                    bi = i;
                    bj = j;
                }
            }
        }
        s.assignment[std::size_t(bi)] = bj;
        used[std::size_t(bj)] = true;
    }
    for (Index i = 0; i < R; ++i) {
        s.sae[std::size_t(i)] = sae_db(truth.col(i), est.col(s.assignment[std::size_t(i)]));
        s.msae += s.sae[std::size_t(i)];
    }
    s.msae /= double(R);
    return s;
}

inline Vec add_noise(const Vec& clean, std::optional<double> snr_db, Rng& rng) {
    if (!snr_db) return clean;
    const double power = clean.squaredNorm() / double(clean.size());
    const double sd = std::sqrt(power / std::pow(10.0, *snr_db / 10.0));
    Vec y = clean;
    for (Index i = 0; i < y.size(); ++i) y[i] += sd * rng.randn();
    return y;
}

// ============================================================================
// Parallel seed batches
// ============================================================================

/// Worker count from TTKIT_THREADS, else the hardware concurrency.
inline unsigned worker_count() {
    if (const char* e = std::getenv("TTKIT_THREADS")) {
        const long v = std::strtol(e, nullptr, 10);
        if (v > 0) return unsigned(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on a worker pool; results are stored by index.
template <class F>
auto parallel_map(std::size_t n, F fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(n);
    const unsigned W = std::min<unsigned>(worker_count(), unsigned(std::max<std::size_t>(n, 1)));
    std::exception_ptr err;
    std::mutex m;
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next++) < n;) {
            try {
                slots[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> g(m);
                if (!err) err = std::current_exception();
            }
        }
    };
    if (W <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < W; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// ============================================================================
// Index-sum tensors: T(b) = y[offset + Σ_j w_j(b_j)]
// ============================================================================

/// Per-mode increments: weights[j][b] is added to the time index when mode j
/// takes value b.
struct IndexSumMap {
    std::vector<std::vector<Index>> weights;
    Index offset = 0;

    [[nodiscard]] Shape modes() const {
        Shape s;
        for (const auto& w : weights) s.push_back(Index(w.size()));
        return s;
    }
};

/// Toeplitz tensor of the given sizes with every mode split into binary digits
/// (least significant first), so the train has Σ log2(I_n) modes of size 2.
inline IndexSumMap quantized_toeplitz_map(const Shape& sizes) {
    IndexSumMap m;
    const std::size_t N = sizes.size();
    for (std::size_t n = 0; n < N; ++n) {
        const Index I = sizes[n];
        if (I < 2 || (I & (I - 1))) throw std::invalid_argument("quantized_toeplitz_map: sizes must be powers of two");
        const Index sign = n + 1 < N ? -1 : 1;
        if (n + 1 < N) m.offset += I - 1;
        for (Index bit = 1; bit < I; bit <<= 1) m.weights.push_back({0, sign * bit});
    }
    return m;
}

/// Exact TT of the index-sum tensor; bond states are the reachable partial sums.
inline TTTrain index_sum_tt(const Vec& y, const IndexSumMap& map, double round_tol = 1e-14) {
    const std::size_t D = map.weights.size();
    std::vector<std::vector<Index>> states(D + 1);
    states[0] = {0};
    for (std::size_t j = 0; j < D; ++j) {
        std::set<Index> next;
        for (Index s : states[j])
            for (Index w : map.weights[j]) next.insert(s + w);
        states[j + 1].assign(next.begin(), next.end());
    }
    for (Index s : states[D])
        if (map.offset + s < 0 || map.offset + s >= y.size()) throw std::invalid_argument("index_sum_tt: index outside signal");
    std::vector<Core> cores;
    for (std::size_t j = 0; j < D; ++j) {
        std::map<Index, Index> pos;
        const bool last = j + 1 == D;
        for (std::size_t k = 0; k < states[j + 1].size(); ++k) pos[states[j + 1][k]] = Index(k);
        const Index r0 = Index(states[j].size()), n = Index(map.weights[j].size());
        Core c(r0, n, last ? 1 : Index(states[j + 1].size()));
        for (Index a = 0; a < r0; ++a)
            for (Index b = 0; b < n; ++b) {
                const Index s = states[j][std::size_t(a)] + map.weights[j][std::size_t(b)];
                if (last)
                    c(a, b, 0) = y[map.offset + s];
                else
                    c(a, b, pos[s]) = 1.0;
            }
        cores.push_back(std::move(c));
    }
    TTTrain t(std::move(cores));
    return round_tol > 0 ? round(t, round_tol) : t;
}

/// Average of the train's entries over each time index (the adjoint of the
/// index-sum map divided by the multiplicities).
inline Vec index_sum_average(const TTTrain& x, const IndexSumMap& map, Index L) {
    if (x.mode_sizes() != map.modes()) throw std::invalid_argument("index_sum_average: mode mismatch");
    std::map<Index, Mat> acc{{0, Mat::Ones(1, 1)}};
    std::map<Index, double> cnt{{0, 1.0}};
    for (std::size_t j = 0; j < x.order(); ++j) {
        std::map<Index, Mat> nacc;
        std::map<Index, double> ncnt;
        const Core& c = x.cores[j];
        for (const auto& [s, v] : acc)
            for (Index b = 0; b < c.n; ++b) {
                const Index t = s + map.weights[j][std::size_t(b)];
                Mat add = v * c.slice(b);
                auto it = nacc.find(t);
                if (it == nacc.end()) {
                    nacc.emplace(t, add);
                    ncnt[t] = cnt[s];
                } else {
                    it->second += add;
                    ncnt[t] += cnt[s];
                }
            }
        acc = std::move(nacc);
        cnt = std::move(ncnt);
    }
    Vec out = Vec::Zero(L);
    for (const auto& [s, v] : acc) out[map.offset + s] = v(0, 0) / cnt[s];
    return out;
}

// ============================================================================
// Separation of damped sinusoids by a sum of rank-2 trains
// ============================================================================

enum class SeparationTensorization { folding, toeplitz };

struct SeparationConfig {
    std::vector<double> freqs{10, 12, 14};  // Hz
    double fs = 0.0;                        // 0 = 10·max frequency
    int d = 8;                              // folding: L = 2^d·P²
    std::optional<double> snr_db = 30.0;    // nullopt = noiseless
    Index rank = 2;
    int iters = 50;
    double tol = 1e-10;  // relative change of the fit error
    std::uint64_t seed = 0;
};

struct SeparationResult {
    Mat sources;    // L × P scaled true components
    Mat estimates;  // L × P
    MatchScore score;
    int iterations = 0;
    double rel_residual = 0.0;
};

/// Dense folding: y reshaped to 2P×2×…×2×2P.
inline Shape separation_fold_shape(Index P, int d) {
    if (d < 2) throw std::invalid_argument("separation: d must be ≥ 2");
    Shape s{2 * P};
    for (int k = 0; k < d - 2; ++k) s.push_back(2);
    s.push_back(2 * P);
    return s;
}

/// Cyclic fits X_p = best rank-R train of y − Σ_{s≠p} X_s on a dense tensor.
inline Mat separate_sum_tt(const Vec& y, const Shape& shape, Index P, Index rank, int iters, double tol,
                           int* iterations = nullptr, double* rel_residual = nullptr) {
    if (prod(shape) != y.size()) throw std::invalid_argument("separate_sum_tt: shape does not match the signal length");
    Mat X = Mat::Zero(y.size(), P);
    double prev = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < iters; ++it) {
        for (Index p = 0; p < P; ++p) {
            Vec r = y - X.rowwise().sum() + X.col(p);
            X.col(p) = contract_full(tt_svd(DenseTensor(shape, r), 0.0, rank)).data;
        }
        const double e = (y - X.rowwise().sum()).norm();
        if (std::abs(prev - e) <= tol * std::max(e, 1e-300)) {
            ++it;
            prev = e;
            break;
        }
        prev = e;
    }
    if (iterations) *iterations = it;
    if (rel_residual) *rel_residual = y.norm() > 0 ? prev / y.norm() : 0.0;
    return X;
}

/// Same fits on a Toeplitz-type train; component signals are the per-time
/// averages of each fitted train.
inline Mat separate_sum_tt(const Vec& y, const IndexSumMap& map, Index P, Index rank, int iters, double tol,
                           int* iterations = nullptr, double* rel_residual = nullptr) {
    const TTTrain Y = index_sum_tt(y, map);
    const double ny = norm(Y);
    std::vector<TTTrain> X(std::size_t(P), zeros_tt(Y.mode_sizes()));
    double prev = std::numeric_limits<double>::infinity();
    int it = 0;
    auto others = [&](Index p) {
        TTTrain r = Y;
        for (Index s = 0; s < P; ++s)
            if (s != p) r = sub(r, X[std::size_t(s)]);
        return r;
    };
    for (; it < iters; ++it) {
        for (Index p = 0; p < P; ++p) X[std::size_t(p)] = round(others(p), 0.0, rank);
        TTTrain res = others(-1);
        const double e = norm(res);
        if (std::abs(prev - e) <= tol * std::max(e, 1e-300)) {
            ++it;
            prev = e;
            break;
        }
        prev = e;
    }
    if (iterations) *iterations = it;
    if (rel_residual) *rel_residual = ny > 0 ? prev / ny : 0.0;
    Mat out(y.size(), P);
    for (Index p = 0; p < P; ++p) out.col(p) = index_sum_average(X[std::size_t(p)], map, y.size());
    return out;
}

/// x_p(t) = exp(−5t/(Lp))·sin(2π f_p t/f_s + (p−1)π/P), t = 0..L−1, each scaled
/// to unit norm so the components contribute equally.
inline Mat damped_sinusoids(const std::vector<double>& freqs, double fs, Index L) {
    const Index P = Index(freqs.size());
    Mat S(L, P);
    for (Index p = 0; p < P; ++p) {
        for (Index t = 0; t < L; ++t)
            S(t, p) = std::exp(-5.0 * double(t) / (double(L) * double(p + 1))) *
                      std::sin(2.0 * M_PI * freqs[std::size_t(p)] / fs * double(t) + double(p) * M_PI / double(P));
        S.col(p) /= S.col(p).norm();
    }
    return S;
}

inline SeparationResult run_separation(const SeparationConfig& cfg) {
    if (cfg.freqs.empty()) throw std::invalid_argument("separation: no frequencies");
    const Index P = Index(cfg.freqs.size());
    const double fs = cfg.fs > 0 ? cfg.fs : 10.0 * *std::max_element(cfg.freqs.begin(), cfg.freqs.end());
    const Index L = (Index(1) << cfg.d) * P * P;
    SeparationResult r;
    r.sources = damped_sinusoids(cfg.freqs, fs, L);
    Rng rng(cfg.seed);
    const Vec y = add_noise(r.sources.rowwise().sum(), cfg.snr_db, rng);
    r.estimates = separate_sum_tt(y, separation_fold_shape(P, cfg.d), P, cfg.rank, cfg.iters, cfg.tol, &r.iterations,
                                  &r.rel_residual);
    r.score = match_columns(r.sources, r.estimates);
    return r;
}

struct ShortSeparationConfig {
    SeparationTensorization kind = SeparationTensorization::toeplitz;
    std::optional<double> snr_db = 30.0;
    Index rank = 2;
    int iters = 100;
    double tol = 1e-10;
    std::uint64_t seed = 0;
};

/// 66 samples of x_p(t) = exp(−pt/30)·sin(2π f_p t/300 + pπ/7), f = 10, 11, 12 Hz,
/// mixed with weights a_p = p (t = 0..65).
inline Mat short_damped_sinusoids() {
    const Index L = 66;
    const double f[3] = {10, 11, 12};
    Mat S(L, 3);
    for (Index p = 1; p <= 3; ++p)
        for (Index t = 0; t < L; ++t)
            S(t, p - 1) = double(p) * std::exp(-double(p) * double(t) / 30.0) *
                          std::sin(2.0 * M_PI * f[p - 1] / 300.0 * double(t) + double(p) * M_PI / 7.0);
    return S;
}

/// Toeplitz: 16×8×8×8×8×8×16 tensor, quantized to 23 binary modes.
/// Folding: the 66 samples reshaped to 2×3×11.
inline SeparationResult run_short_separation(const ShortSeparationConfig& cfg) {
    SeparationResult r;
    r.sources = short_damped_sinusoids();
    Rng rng(cfg.seed);
    const Vec y = add_noise(r.sources.rowwise().sum(), cfg.snr_db, rng);
    if (cfg.kind == SeparationTensorization::toeplitz)
        r.estimates = separate_sum_tt(y, quantized_toeplitz_map({16, 8, 8, 8, 8, 8, 16}), 3, cfg.rank, cfg.iters, cfg.tol,
                                      &r.iterations, &r.rel_residual);
    else
        r.estimates = separate_sum_tt(y, Shape{2, 3, 11}, 3, cfg.rank, cfg.iters, cfg.tol, &r.iterations, &r.rel_residual);
    r.score = match_columns(r.sources, r.estimates);
    return r;
}

struct SeparationTrend {
    std::vector<int> ds;
    std::vector<double> mean_msae;            // per d, over seeds
    std::vector<std::vector<double>> msae;    // [d][seed]
    double slope_db_per_doubling = 0.0;       // least-squares fit of mean MSAE against d
};

inline SeparationTrend separation_trend(SeparationConfig base, const std::vector<int>& ds, int seeds) {
    if (ds.size() < 2) throw std::invalid_argument("separation_trend: need at least two lengths");
    SeparationTrend tr;
    tr.ds = ds;
    const std::size_t S = std::size_t(seeds);
    auto runs = parallel_map(ds.size() * S, [&](std::size_t i) {
        SeparationConfig c = base;
        c.d = ds[i / S];
        c.seed = base.seed + i % S;
        return run_separation(c).score.msae;
    });
    for (std::size_t k = 0; k < ds.size(); ++k) {
        std::vector<double> v(runs.begin() + long(k * S), runs.begin() + long((k + 1) * S));
        double m = 0;
        for (double x : v) m += x;
        tr.msae.push_back(v);
        tr.mean_msae.push_back(m / double(S));
    }
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < ds.size(); ++k) {
        mx += ds[k];
        my += tr.mean_msae[k];
    }
    mx /= double(ds.size());
    my /= double(ds.size());
    double num = 0, den = 0;
    for (std::size_t k = 0; k < ds.size(); ++k) {
        num += (ds[k] - mx) * (tr.mean_msae[k] - my);
        den += (ds[k] - mx) * (ds[k] - mx);
    }
    tr.slope_db_per_doubling = num / den;
    return tr;
}

// ============================================================================
// Blind identification from derivative tensors of the second GCF
// ============================================================================

struct BinaryFormCp {
    Mat H;  // 2 × R, unit columns
    Mat W;  // R × K slice weights
    double fit = 0.0;
};

/// Symmetric CP of a stack of K symmetric 2×…×2 tensors (order N) with R terms.
/// Each slice is a binary form Σ_r w_rk (h_rᵀz)^N; its coefficients c_j satisfy
/// Σ_i q_i c_{i+m} = 0 for the polynomial q with roots τ_r = h_r(1)/h_r(0)
/// (Sylvester). q is the least-squares null vector of all stacked catalecticant
/// rows; slice weights follow by least squares.
inline BinaryFormCp binary_form_cp(const DenseTensor& Y, int N, Index R) {
    if (Y.order() != std::size_t(N) + 1) throw std::invalid_argument("binary_form_cp: tensor order must be N+1");
    for (int n = 0; n < N; ++n)
        if (Y.shape[std::size_t(n)] != 2) throw std::invalid_argument("binary_form_cp: needs two mixtures (mode size 2)");
    if (R < 1 || R > N) throw std::invalid_argument("binary_form_cp: need 1 ≤ R ≤ N");
    const Index K = Y.shape[std::size_t(N)], sz = Index(1) << N;
    const Index rows = N - R + 1;
    if (K * rows < R) throw std::invalid_argument("binary_form_cp: too few equations for R terms");
    Mat A(K * rows, R + 1);
    for (Index k = 0; k < K; ++k) {
        Vec c(N + 1);
        for (int j = 0; j <= N; ++j) c[j] = Y.data[k * sz + ((Index(1) << j) - 1)];
        for (Index m = 0; m < rows; ++m)
            for (Index i = 0; i <= R; ++i) A(k * rows + m, i) = c[i + m];
    }
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
    Vec q = svd.matrixV().col(R);
    BinaryFormCp out;
    out.H.resize(2, R);
    if (std::abs(q[R]) < 1e-300) throw std::runtime_error("binary_form_cp: degenerate polynomial");
    if (R == 1) {
        out.H.col(0) << 1.0, -q[0] / q[1];
    } else {
        Mat C = Mat::Zero(R, R);
        for (Index i = 0; i < R; ++i) C(0, i) = -q[R - 1 - i] / q[R];
        for (Index i = 1; i < R; ++i) C(i, i - 1) = 1.0;
        Eigen::EigenSolver<Mat> es(C, false);
        for (Index r = 0; r < R; ++r) out.H.col(r) << 1.0, es.eigenvalues()[r].real();
    }
    for (Index r = 0; r < R; ++r) out.H.col(r).normalize();
    // slice weights
    Mat P(sz, R);
    for (Index r = 0; r < R; ++r)
        for (Index li = 0; li < sz; ++li) {
            double v = 1.0;
            for (int n = 0; n < N; ++n) v *= out.H((li >> n) & 1, r);
            P(li, r) = v;
        }
    Mat Ym = Eigen::Map<const Mat>(Y.data.data(), sz, K);
    out.W = P.completeOrthogonalDecomposition().solve(Ym).transpose();
    const double ny = Ym.norm();
    out.fit = ny > 0 ? 1.0 - (Ym - P * out.W.transpose()).norm() / ny : 1.0;
    return out;
}

struct BiConfig {
    Index R = 4;
    Index T = 0;  // 0 = 100·2^R
    std::optional<double> snr_db = 20.0;
    int order = 7;         // derivative order N; stacked tensors have order N+1
    int tensors = 50;      // stacks per run, each with a different random third point
    double point_scale = 0.35;
    bool mean_subtract = true;
    std::uint64_t seed = 0;
};

struct BiResult {
    Mat H;                      // true mixing matrix
    std::vector<double> msae;   // per stacked tensor
    double mean_msae = 0.0;
    double best_msae = 0.0;
    Mat best_estimate;
};

/// Binary sources with every sign pattern repeated T/2^R times (exact
/// independence in the sample), random Gaussian H.
inline void bi_data(const BiConfig& cfg, Rng& rng, Mat& H, Mat& X) {
    if (cfg.R < 1 || cfg.R > 20) throw std::invalid_argument("blind identification: R must be in 1..20");
    const Index patterns = Index(1) << cfg.R;
    const Index T = cfg.T > 0 ? cfg.T : 100 * patterns;
    H = rng.randn(2, cfg.R);
    Mat S(cfg.R, T);
    for (Index t = 0; t < T; ++t)
        for (Index r = 0; r < cfg.R; ++r) S(r, t) = ((t % patterns) >> r) & 1 ? 1.0 : -1.0;
    Mat clean = H * S;
    Vec noisy = add_noise(Eigen::Map<const Vec>(clean.data(), clean.size()), cfg.snr_db, rng);
    X = Eigen::Map<const Mat>(noisy.data(), 2, T);
}

/// Observations normalized to unit RMS; derivative tensors at the two leading
/// left singular vectors and at `tensors` unit points with collinearity
/// U(−0.99, 0.99) to the first, all of length point_scale. With mean_subtract
/// the average over all computed derivative tensors is removed from each.
inline BiResult run_blind_identification(const BiConfig& cfg) {
    if (cfg.tensors < 1) throw std::invalid_argument("blind identification: need at least one tensor");
    Rng rng(cfg.seed);
    BiResult res;
    Mat X;
    bi_data(cfg, rng, res.H, X);
    X /= std::sqrt(X.squaredNorm() / double(X.size()));
    Eigen::JacobiSVD<Mat> svd(X, Eigen::ComputeThinU);
    const Mat U = svd.matrixU();
    std::vector<Vec> pts{cfg.point_scale * U.col(0), cfg.point_scale * U.col(1)};
    for (int i = 0; i < cfg.tensors; ++i) {
        const double c = -0.99 + 1.98 * rng.rand();
        pts.push_back(cfg.point_scale * (c * U.col(0) + std::sqrt(1.0 - c * c) * U.col(1)));
    }
    const int N = cfg.order;
    std::vector<Vec> D;
    for (const auto& u : pts) D.push_back(gcf_derivative(X, u, N).data);
    const Index sz = D[0].size();
    Vec avg = Vec::Zero(sz);
    if (cfg.mean_subtract) {
        for (const auto& d : D) avg += d;
        avg /= double(D.size());
    }
    Shape shape(std::size_t(N), 2);
    shape.push_back(3);
    res.best_msae = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < cfg.tensors; ++i) {
        DenseTensor Y(shape);
        Y.data.segment(0, sz) = D[0] - avg;
        Y.data.segment(sz, sz) = D[1] - avg;
        Y.data.segment(2 * sz, sz) = D[std::size_t(2 + i)] - avg;
        const BinaryFormCp cp = binary_form_cp(Y, N, cfg.R);
        const double m = match_columns(res.H, cp.H).msae;
        res.msae.push_back(m);
        res.mean_msae += m;
        if (m > res.best_msae) {
            res.best_msae = m;
            res.best_estimate = cp.H;
        }
    }
    res.mean_msae /= double(cfg.tensors);
    return res;
}

struct BiComparison {
    std::vector<int> orders;
    std::vector<std::vector<double>> mean_msae;  // [order][seed]
    std::vector<double> average;                 // per order
    int wins = 0;                                // seeds where the last order ≥ the first
    int seeds = 0;
};

/// Paired runs: the same data (seed) for every order.
inline BiComparison bi_compare_orders(BiConfig base, const std::vector<int>& orders, int seeds) {
    if (orders.size() < 2) throw std::invalid_argument("bi_compare_orders: need two orders");
    BiComparison c;
    c.orders = orders;
    c.seeds = seeds;
    const std::size_t S = std::size_t(seeds);
    auto runs = parallel_map(orders.size() * S, [&](std::size_t i) {
        BiConfig cfg = base;
        cfg.order = orders[i / S];
        cfg.seed = base.seed + i % S;
        return run_blind_identification(cfg).mean_msae;
    });
    for (std::size_t k = 0; k < orders.size(); ++k) {
        std::vector<double> v(runs.begin() + long(k * S), runs.begin() + long((k + 1) * S));
        double m = 0;
        for (double x : v) m += x;
        c.mean_msae.push_back(v);
        c.average.push_back(m / double(S));
    }
    for (std::size_t s = 0; s < S; ++s)
        if (c.mean_msae.back()[s] >= c.mean_msae.front()[s]) ++c.wins;
    return c;
}

}  // namespace ttkit

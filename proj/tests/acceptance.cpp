// One PASS/FAIL line per primary acceptance criterion; exit status 1 if any fails.

#include <ttkit/experiments.hpp>
#include <ttkit/regression.hpp>
#include <ttkit/riemannian.hpp>
#include <ttkit/solvers.hpp>
#include <ttkit/tensorize.hpp>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace ttkit;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool ok = true;
    std::ostringstream why;

    void check(bool c, const std::string& what) {
        if (!c) {
            ok = false;
            why << " [fail: " << what << "]";
        }
    }
};

int failures = 0;

template <class F>
void criterion(const std::string& name, double budget_s, F body) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(v);
    } catch (const std::exception& e) {
        v.ok = false;
        v.why << " [exception: " << e.what() << "]";
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.check(dt < budget_s, "time budget " + std::to_string(budget_s) + " s");
    if (!v.ok) ++failures;
    std::printf("%s %s (%.2f s)%s\n", v.ok ? "PASS" : "FAIL", name.c_str(), dt, v.why.str().c_str());
    std::fflush(stdout);
}

double rel(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

Vec iota(Index n) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = double(i + 1);
    return v;
}

Mat horizontal_slice(const DenseTensor& x, Index i) {
    Mat m(x.shape[1], x.shape[2]);
    for (Index j = 0; j < x.shape[1]; ++j)
        for (Index k = 0; k < x.shape[2]; ++k) m(j, k) = x({i, j, k});
    return m;
}

// ---------------------------------------------------------------------------

void worked_examples(Verdict& v) {
    const DenseTensor T = toeplitz_tensor(iota(7), {3, 3, 3});
    const DenseTensor H = hankel_tensor(iota(7), {3, 3, 3});
    Mat t[3], h[3];
    for (auto& m : t) m.resize(3, 3);
    for (auto& m : h) m.resize(3, 3);
    t[0] << 5, 6, 7, 4, 5, 6, 3, 4, 5;
    t[1] << 4, 5, 6, 3, 4, 5, 2, 3, 4;
    t[2] << 3, 4, 5, 2, 3, 4, 1, 2, 3;
    h[0] << 1, 2, 3, 2, 3, 4, 3, 4, 5;
    h[1] << 2, 3, 4, 3, 4, 5, 4, 5, 6;
    h[2] << 3, 4, 5, 4, 5, 6, 5, 6, 7;
    for (Index i = 0; i < 3; ++i) {
        v.check(horizontal_slice(T, i) == t[i], "Toeplitz slice " + std::to_string(i));
        v.check(horizontal_slice(H, i) == h[i], "Hankel slice " + std::to_string(i));
    }
}

void convolution_ranks(Verdict& v) {
    // leading bond ranks; the rest repeat the last entry
    const std::map<int, std::vector<Index>> head{{2, {2}}, {3, {2, 3}}, {4, {3, 4}}, {5, {3, 4, 5}}, {6, {4, 5, 6}}};
    const int D = 6;
    for (const auto& [N, h] : head) {
        const auto rk = round(convolution_tensor_qtt(N, D).cores, 1e-10).ranks();
        std::vector<Index> expect, got(rk.begin() + 1, rk.begin() + 1 + D);
        for (int d = 0; d < D; ++d) expect.push_back(d < int(h.size()) ? h[d] : h.back());
        v.check(got == expect, "N=" + std::to_string(N) + " ranks " + ranks_string(got));
    }
}

void sinusoid_rank_law(Verdict& v) {
    Rng rng(2024);
    const int D = 10;
    const Index L = Index(1) << D;
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const double w = 0.05 + 3.0 * rng.rand(), p = 2.0 * M_PI * rng.rand();
        for (SinusoidKind kind : {SinusoidKind::folded, SinusoidKind::toeplitz, SinusoidKind::hankel}) {
            const TTTrain x = sinusoid_tt(kind, w, p, D);
            const auto rk = round(x, 1e-8).ranks();
            for (std::size_t k = 1; k + 1 < rk.size(); ++k) v.check(rk[k] == 2, "rank after rounding");
            const Vec y = sinusoid_samples(kind, w, p, L);
            if (kind == SinusoidKind::folded) {
                worst = std::max(worst, (contract_full(x).data - y).cwiseAbs().maxCoeff());
                continue;
            }
            // order L−1 with binary modes: pick index patterns that land on every sample
            const std::size_t N = x.order();
            for (Index t = 0; t < L; ++t) {
                std::vector<Index> idx(N, 0);
                if (kind == SinusoidKind::hankel) {
                    for (Index n = 0; n < t; ++n) idx[std::size_t(n)] = 1;
                } else if (t < L - 1) {
                    for (std::size_t n = std::size_t(t); n + 1 < N; ++n) idx[n] = 1;
                } else {
                    idx[N - 1] = 1;
                }
                worst = std::max(worst, std::abs(x.at(idx) - y[t]));
            }
        }
    }
    v.check(worst <= 1e-10, "sample error " + std::to_string(worst));
}

void hadamard_property(Verdict& v) {
    Rng rng(6);
    const Vec u = rng.randn_vec(15), w = rng.randn_vec(15);
    const Shape s{6, 6, 5};
    for (int kind = 0; kind < 2; ++kind) {
        auto gen = [&](const Vec& y) { return kind == 0 ? hankel_tensor(y, s) : toeplitz_tensor(y, s); };
        const DenseTensor a = gen(u), b = gen(w), c = gen(u.cwiseProduct(w));
        v.check((a.data.cwiseProduct(b.data) - c.data).cwiseAbs().maxCoeff() <= 1e-10, "dense identity");
        const TTTrain tw = hadamard(tt_svd(a, 0.0), tt_svd(b, 0.0));
        v.check((contract_full(tw).data - c.data).cwiseAbs().maxCoeff() <= 1e-10, "TT Hadamard product");
    }
}

SamplingSet sample_entries(const TTTrain& x, double frac, Rng& rng, SamplingSet* held_out = nullptr) {
    SamplingSet s;
    std::vector<double> vals, hv;
    const Shape m = x.mode_sizes();
    for (Index li = 0; li < prod(m); ++li) {
        auto idx = multi_index(li, m);
        if (rng.rand() < frac) {
            s.idx.push_back(idx);
            vals.push_back(x.at(idx));
        } else if (held_out) {
            held_out->idx.push_back(idx);
            hv.push_back(x.at(idx));
        }
    }
    s.values = Eigen::Map<Vec>(vals.data(), Index(vals.size()));
    if (held_out) held_out->values = Eigen::Map<Vec>(hv.data(), Index(hv.size()));
    return s;
}

TTOperator diag_values_op(const Shape& modes) {
    Vec d(prod(modes));
    for (Index i = 0; i < d.size(); ++i) d[i] = double(i + 1);
    return diag_op(tt_svd(fold(d, modes), 1e-14));
}

double lambda_min_laplacian(int D) { return 2.0 - 2.0 * std::cos(M_PI / double((1 << D) + 1)); }

void oracle_suite(Verdict& v) {
    // eigensolvers
    {
        Rng rng(5);
        const Shape m(6, 2);
        const TTOperator A = laplacian_qtt(6);
        Eigen::SelfAdjointEigenSolver<Mat> es(to_dense(A));
        const EigResult r = als_evd(A, 1, random_block_tt(m, {2, 4, 4, 4, 2}, 1, rng), 50, 1e-14);
        v.check(std::abs(r.eigvals[0] - es.eigenvalues()[0]) <= 1e-8, "ALS vs dense eigensolver");
        v.check(std::abs(es.eigenvalues()[0] - lambda_min_laplacian(6)) <= 1e-12, "dense vs analytic");
    }
    {
        Rng rng(7);
        const Shape m(4, 2);
        const TTOperator A = diag_values_op(m);
        Eigen::SelfAdjointEigenSolver<Mat> es(to_dense(A));
        const EigResult r = mals_evd(A, 2, random_block_tt(m, {1, 1, 1}, 2, rng), 20, 1e-12);
        for (Index k = 0; k < 2; ++k) v.check(std::abs(r.eigvals[k] - es.eigenvalues()[k]) <= 1e-8, "MALS vs dense");
    }
    {
        Rng rng(12);
        const Shape m(4, 2);
        const TTOperator A = diag_values_op(m);
        Eigen::SelfAdjointEigenSolver<Mat> es(to_dense(A));
        const EigResult e = evamen(A, 3, random_block_tt(m, {2, 2, 2}, 3, rng), 20, 1e-13, 2);
        for (Index k = 0; k < 3; ++k) v.check(std::abs(e.eigvals[k] - es.eigenvalues()[k]) <= 1e-9, "EVAMEn vs dense");
    }
    // linear systems
    {
        Rng rng(14);
        const Shape m(8, 2);
        const TTOperator A = laplacian_qtt(8);
        const TTTrain xt = random_tt(m, std::vector<Index>(7, 2), rng);
        const TTTrain b = round(apply_op(A, xt), 1e-14);
        AmenOptions o;
        o.tol = 1e-13;
        o.sweeps = 40;
        const LinearResult r = amen_linear(A, b, random_tt(m, std::vector<Index>(7, 1), rng), o);
        v.check(rel(contract_full(r.x).data, contract_full(xt).data) <= 1e-8, "AMEn constructed solution");
    }
    {
        Rng rng(15);
        const Mat Ad = rng.randn(8, 8);
        const Vec bd = rng.randn_vec(8);
        const Shape m(3, 2);
        AmenOptions o;
        o.tol = 1e-13;
        const LinearResult r = amen_normal(operator_from_dense(Ad, m, m), tt_svd(fold(bd, m), 0.0),
                                           random_tt(m, {1, 1}, rng), 0.1, nullptr, o);
        const Mat M = Ad.transpose() * Ad + 0.1 * Mat::Identity(8, 8);
        v.check(rel(contract_full(r.x).data, M.ldlt().solve(Ad.transpose() * bd)) <= 1e-9, "Tikhonov vs dense ridge");
    }
    // operator regression
    {
        Rng rng(18);
        const Shape m(3, 2);
        const Mat Ad = rng.randn(8, 8);
        AmenOptions o;
        o.tol = 1e-14;
        o.sweeps = 30;
        const RegressionResult r = tt_regression(operator_from_dense(Ad, m, m), identity_op(m), 1e-10, nullptr,
                                                 operator_from_dense(Mat::Identity(8, 8), m, m), o);
        const Mat P = Ad.completeOrthogonalDecomposition().pseudoInverse();
        v.check((to_dense(r.X) - P).norm() / P.norm() <= 1e-6, "TT regression vs pseudo-inverse");
    }
    {
        Rng rng(19);
        const Shape rows{2, 2, 2}, cols{2, 2, 2}, bc{2, 1, 2};
        const Mat Ad = rng.randn(8, 8), Bd = rng.randn(8, 4), Ld = rng.randn(8, 8);
        const TTOperator L = operator_from_dense(Ld, cols, cols);
        AmenOptions o;
        o.tol = 1e-14;
        const RegressionResult r = tt_regression(operator_from_dense(Ad, rows, cols), operator_from_dense(Bd, rows, bc),
                                                 0.3, &L, operator_from_dense(Mat::Ones(8, 4), cols, bc), o);
        const Mat X = (Ad.transpose() * Ad + 0.3 * Ld.transpose() * Ld).ldlt().solve(Ad.transpose() * Bd);
        v.check((to_dense(r.X) - X).norm() / X.norm() <= 1e-8, "TT regression vs dense generalized ridge");
    }
    // IRLS against the dense recursion from the same ridge start
    {
        Rng rng(22);
        const Mat Ad = rng.randn(12, 16);
        Vec xt = Vec::Zero(16);
        xt[2] = 1.5;
        xt[7] = -2.0;
        xt[13] = 0.8;
        const Vec bd = Ad * xt;
        const Shape rows{2, 2, 3}, cols{2, 2, 4};
        const double gamma = 1e-4, eps = 1e-6;
        IrlsOptions o;
        o.iters = 60;
        o.eps = eps;
        o.weight_rank = 0;
        o.inner.tol = 1e-13;
        o.inner.enrich_rank = 4;
        const Mat M0 = Ad.transpose() * Ad + gamma * Mat::Identity(16, 16);
        Vec xo = M0.ldlt().solve(Ad.transpose() * bd);
        const IrlsResult r = lasso_irls(operator_from_dense(Ad, rows, cols), tt_svd(fold(bd, rows), 0.0), gamma, 1.0,
                                        tt_svd(fold(xo, cols), 0.0), o);
        for (int it = 0; it < r.report.sweeps; ++it) {
            const Vec w = (0.5 * gamma) * (xo.array().square() + eps * eps).pow(-0.5).matrix();
            Mat M = Ad.transpose() * Ad;
            M.diagonal() += w;
            xo = M.ldlt().solve(Ad.transpose() * bd);
        }
        v.check((contract_full(r.x).data - xo).cwiseAbs().maxCoeff() <= 1e-3, "IRLS vs dense IRLS");
    }
    // completion
    {
        Rng rng(25);
        const TTTrain x = random_tt({4, 5, 3}, {2, 2}, rng);
        const CompletionResult r = tt_complete({4, 5, 3}, sample_entries(x, 2.0, rng), {2, 2});
        v.check(rel(contract_full(r.x).data, contract_full(x).data) <= 1e-10, "completion, full sampling");
    }
    {
        Rng rng(0);
        const TTTrain x = random_tt({8, 8, 8}, {2, 2}, rng);
        SamplingSet held;
        const SamplingSet s = sample_entries(x, 0.2, rng, &held);
        const CompletionResult r = tt_complete({8, 8, 8}, s, {2, 2});
        double e = 0.0, n = 0.0;
        for (std::size_t t = 0; t < held.idx.size(); ++t) {
            e += std::pow(r.x.at(held.idx[t]) - held.values[Index(t)], 2);
            n += std::pow(held.values[Index(t)], 2);
        }
        v.check(std::sqrt(e / n) <= 1e-6, "completion, 20% held-out error");
    }
}

void laplacian_spectrum(Verdict& v) {
    Rng rng(11);
    const BlockTT x0 = random_block_tt(Shape(8, 2), std::vector<Index>(7, 1), 1, rng);
    const EigResult e = evamen(laplacian_qtt(8), 1, x0, 30, 1e-12, 2);
    const double exact = lambda_min_laplacian(8);
    v.why << " err=" << std::abs(e.eigvals[0] - exact);
    v.check(std::abs(e.eigvals[0] - exact) <= 1e-8, "lambda_min");
}

void regression_algebra(Verdict& v) {
    Rng rng(8);
    {
        const Index M = 40, I0 = 5;
        const Mat X = rng.randn(M, I0);
        const DenseTensor Y = mode_product(random_tensor({I0, 3, 4}, rng), X, 0);
        const double gamma = 1e-8;
        const HolrrModel m = holrr_fit(X, Y, {I0, 3, 4}, gamma);
        const Mat B = X.transpose() * X + gamma * Mat::Identity(I0, I0);
        const Mat Wr = B.ldlt().solve(X.transpose() * unfold_mode(Y, 0));
        v.check((unfold_mode(m.weights(), 0) - Wr).norm() / Wr.norm() <= 1e-8, "HOLRR full rank vs ridge");
    }
    {
        const Index M = 40, I0 = 6;
        const Mat X = rng.randn(M, I0), Xte = rng.randn(7, I0);
        const DenseTensor Y = random_tensor({M, 4, 3}, rng);
        const HolrrModel h = holrr_fit(X, Y, {3, 2, 2}, 1e-2);
        const HolrrModel k = kholrr_fit(X * X.transpose(), Y, {3, 2, 2}, 1e-2);
        v.check(rel(kholrr_predict(k, Mat(Xte * X.transpose())).data, holrr_predict(h, Xte).data) <= 1e-6,
                "KHOLRR linear vs HOLRR");
    }
    {
        Rng r19(19);
        const DenseTensor X = random_tensor({40, 5, 4}, r19), Y = random_tensor({40, 3}, r19);
        const HoplsModel h = hopls_fit(X, Y, 3, {1, 1}, {1});
        const NplsModel n = npls_fit(X, Y, 3);
        for (int r = 0; r < 3; ++r) {
            const Vec& a = h.comps[std::size_t(r)].t;
            const Vec b = n.T.col(r);
            v.check(std::abs(a.dot(b)) / (a.norm() * b.norm()) >= 0.999, "HOPLS vs N-PLS congruence");
        }
    }
    {
        Rng r5(5);
        const DenseTensor X = random_tensor({3, 4, 30}, r5);
        const DenseTensor Y = multi_mode_product(X, {r5.randn(2, 3), r5.randn(3, 4)}, false);
        const MtrModel m = mtr_fit(X, Y);
        v.check(m.residual_trace.back() <= 1e-8, "MTR noiseless planted");
    }
}

void riemannian_properties(Verdict& v) {
    Rng rng(1);
    const Shape modes{4, 5, 3, 4};
    double idem = 0.0;
    for (int t = 0; t < 5; ++t) {
        const TTTrain x = random_tt(modes, {2, 3, 2}, rng);
        const TangentVector p = tangent_project(x, random_tt(modes, {3, 3, 3}, rng));
        idem = std::max(idem, norm(combine(1.0, p, -1.0, tangent_project(x, embed(p)))) / norm(p));
    }
    v.check(idem <= 1e-10, "tangent idempotency");
    {
        const TTTrain x = random_tt(modes, {2, 3, 2}, rng);
        const TangentVector d = tangent_project(x, random_tt(modes, {2, 2, 2}, rng));
        std::vector<double> la, le;
        for (double a : {1e-2, 1e-3, 1e-4}) {
            la.push_back(std::log10(a));
            le.push_back(std::log10(norm(sub(retract(x, d, a), add(x, scale(embed(d), a))))));
        }
        const double ma = (la[0] + la[1] + la[2]) / 3, me = (le[0] + le[1] + le[2]) / 3;
        double num = 0, den = 0;
        for (int i = 0; i < 3; ++i) {
            num += (la[i] - ma) * (le[i] - me);
            den += (la[i] - ma) * (la[i] - ma);
        }
        v.why << " slope=" << num / den;
        v.check(std::abs(num / den - 2.0) <= 0.3, "retraction order");
    }
    for (int t = 0; t < 5; ++t) {
        const Mat A0 = rng.randn(6, 2) * rng.randn(2, 5), A1 = rng.randn(6, 2) * rng.randn(2, 5);
        const LowRankMatrix Y1 = projector_splitting_step(low_rank_svd(A0, 2), A0, A1);
        v.check((Y1.dense() - A1).norm() <= 1e-10 * A1.norm(), "projector splitting exactness");
    }
    {
        Mat X(4, 2);
        X << -1, -1, -1, 1, 1, -1, 1, 1;
        Vec y(4);
        for (Index i = 0; i < 4; ++i) y[i] = X(i, 0) * X(i, 1);
        ExmOptions o;
        o.rank = 2;
        o.iters = 100;
        const double loss = exm_loss(exm_fit(X, y, o), X, y);
        v.why << " xor_loss=" << loss;
        v.check(loss <= 1e-6, "ExM XOR");
    }
}

void paper_trends(Verdict& v) {
    SeparationConfig sc;
    const SeparationTrend tr = separation_trend(sc, {8, 9, 10, 11}, 20);
    v.why << " slope=" << tr.slope_db_per_doubling << " dB/doubling";
    v.check(std::abs(tr.slope_db_per_doubling - 2.0) <= 1.0, "separation trend");
    const BiComparison bi = bi_compare_orders(BiConfig{}, {5, 7}, 20);
    v.why << " bi_wins=" << bi.wins << "/20 (order-5 " << bi.average[0] << " dB, order-7 " << bi.average[1] << " dB)";
    v.check(bi.wins >= 14, "BI order 7 >= order 5 in 70% of seeds");
}

// --- determinism through the CLI ---

int run_cli(const std::string& threads, const std::string& args) {
    const std::string cmd = "TTKIT_THREADS=" + threads + " " + TTKIT_CLI_PATH + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void drop_timing(nlohmann::json& j) {
    if (j.is_object()) {
        j.erase("wall_time_s");
        for (auto& [k, x] : j.items()) drop_timing(x);
    } else if (j.is_array()) {
        for (auto& x : j) drop_timing(x);
    }
}

void determinism(Verdict& v) {
    const fs::path dir = fs::temp_directory_path() / ("ttkit_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::vector<std::pair<std::string, nlohmann::json>> runs{
        {"separate", {{"d", {7, 8}}, {"seeds", 4}, {"seed", 3}}},
        {"identify", {{"order", {5, 7}}, {"seeds", 3}, {"tensors", 10}, {"seed", 3}}},
        {"eig", {{"operator", {{"type", "laplacian"}, {"D", 6}}}, {"K", 2}, {"init_rank", 2}, {"seed", 3}}},
        {"complete", {{"modes", {5, 5, 5}}, {"ranks", {2, 2}}, {"planted", {{"fraction", 0.5}}}, {"seed", 3}}}};
    for (const auto& [cmd, cfg] : runs) {
        const fs::path c = dir / (cmd + ".json");
        std::ofstream(c) << cfg.dump();
        std::vector<fs::path> outs;
        for (const char* threads : {"1", "3"}) {
            const fs::path o = dir / (cmd + "_" + threads);
            const int code = run_cli(threads, cmd + " --config " + c.string() + " --out " + o.string());
            v.check(code == 0, cmd + " exit code " + std::to_string(code));
            outs.push_back(o);
        }
        for (const auto& e : fs::directory_iterator(outs[0])) {
            const fs::path other = outs[1] / e.path().filename();
            if (!fs::exists(other)) {
                v.check(false, cmd + ": missing " + other.filename().string());
                continue;
            }
            if (e.path().extension() == ".json") {
                auto a = nlohmann::json::parse(slurp(e.path())), b = nlohmann::json::parse(slurp(other));
                drop_timing(a);
                drop_timing(b);
                v.check(a.dump() == b.dump(), cmd + ": " + e.path().filename().string());
            } else {
                v.check(slurp(e.path()) == slurp(other), cmd + ": " + e.path().filename().string());
            }
        }
        v.check(fs::exists(outs[0] / "report.json"), cmd + ": no report");
    }
    fs::remove_all(dir);
}

}  // namespace

int main() {
    criterion("worked-example fidelity (Toeplitz/Hankel 3x3x3 slices)", 1.0, worked_examples);
    criterion("QTT convolution ranks N=2..6, D=6", 10.0, convolution_ranks);
    criterion("sinusoid rank law (folded/Toeplitz/Hankel, L=2^10)", 5.0, sinusoid_rank_law);
    criterion("Hadamard property (Hankel and Toeplitz, length 15)", 1.0, hadamard_property);
    criterion("oracle equivalence suite", 60.0, oracle_suite);
    criterion("Laplacian spectrum 2^8 via EVAMEn from rank 1", 30.0, laplacian_spectrum);
    criterion("regression algebra (HOLRR/KHOLRR/HOPLS/MTR)", 30.0, regression_algebra);
    criterion("Riemannian properties", 30.0, riemannian_properties);
    criterion("paper-trend reproduction (separation slope, BI order 7 vs 5)", 300.0, paper_trends);
    criterion("determinism of CLI experiment reruns", 60.0, determinism);
    return failures == 0 ? 0 : 1;
}

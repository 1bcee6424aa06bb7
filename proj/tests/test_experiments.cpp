#include <gtest/gtest.h>

#include <ttkit/experiments.hpp>

#include <cstdlib>

using namespace ttkit;

namespace {

/// Fraction of ‖Y‖ explained by the least-squares fit onto span{h_r^{⊗N}}.
double span_fit(const DenseTensor& Y, const Mat& H, int N) {
    const Index sz = Y.data.size();
    Mat P(sz, H.cols());
    for (Index r = 0; r < H.cols(); ++r)
        for (Index li = 0; li < sz; ++li) {
            double v = 1.0;
            for (int n = 0; n < N; ++n) v *= H((li >> n) & 1, r);
            P(li, r) = v;
        }
    const Vec w = P.completeOrthogonalDecomposition().solve(Y.data);
    return 1.0 - (Y.data - P * w).norm() / Y.data.norm();
}

struct ThreadsEnv {
    explicit ThreadsEnv(const char* v) { setenv("TTKIT_THREADS", v, 1); }
    ~ThreadsEnv() { unsetenv("TTKIT_THREADS"); }
};

}  // namespace

TEST(Sae, KnownAngles) {
    Vec a(3), b(3);
    a << 1, 2, 3;
    EXPECT_DOUBLE_EQ(sae_db(a, a), 300.0);
    EXPECT_DOUBLE_EQ(sae_db(a, -2.0 * a), 300.0);
    a << 1, 0, 0;
    b << 0, 1, 0;
    EXPECT_NEAR(sae_db(a, b), -20.0 * std::log10(M_PI / 2), 1e-12);
    b << std::cos(0.01), std::sin(0.01), 0;
    EXPECT_NEAR(sae_db(a, b), 40.0, 1e-6);
    EXPECT_EQ(sae_db(a, Vec::Zero(3)), -std::numeric_limits<double>::infinity());
}

TEST(Sae, GreedyMatchingUndoesPermutation) {
    Rng rng(3);
    const Mat S = rng.randn(40, 4);
    Mat E(40, 4);
    const Index perm[4] = {2, 0, 3, 1};
    for (Index i = 0; i < 4; ++i) E.col(perm[i]) = (i % 2 ? -3.0 : 0.5) * S.col(i) + 1e-3 * rng.randn_vec(40);
    const MatchScore m = match_columns(S, E);
    for (Index i = 0; i < 4; ++i) EXPECT_EQ(m.assignment[std::size_t(i)], perm[i]);
    EXPECT_GT(m.msae, 20.0);
    EXPECT_THROW(match_columns(S, E.leftCols(3)), std::invalid_argument);
}

TEST(ParallelMap, ResultsInIndexOrderForAnyWorkerCount) {
    std::vector<double> ref;
    for (std::size_t i = 0; i < 37; ++i) ref.push_back(std::sqrt(double(i)));
    for (const char* w : {"1", "3", "8"}) {
        ThreadsEnv env(w);
        EXPECT_EQ(worker_count(), unsigned(std::atoi(w)));
        EXPECT_EQ(parallel_map(37, [](std::size_t i) { return std::sqrt(double(i)); }), ref);
    }
}

TEST(ParallelMap, PropagatesExceptions) {
    ThreadsEnv env("4");
    auto f = [](std::size_t i) {
        if (i == 5) throw std::runtime_error("boom");
        return int(i);
    };
    EXPECT_THROW(parallel_map(10, f), std::runtime_error);
}

TEST(IndexSum, QuantizedToeplitzMatchesDenseToeplitz) {
    Rng rng(4);
    for (const Shape& sizes : {Shape{4, 4, 4}, Shape{2, 8}, Shape{8, 2, 4, 4}}) {
        Index L = sizes.back();
        for (std::size_t n = 0; n + 1 < sizes.size(); ++n) L += sizes[n] - 1;
        const Vec y = rng.randn_vec(L);
        const IndexSumMap map = quantized_toeplitz_map(sizes);
        const TTTrain t = index_sum_tt(y, map);
        for (Index m : t.mode_sizes()) EXPECT_EQ(m, 2);
        const DenseTensor ref = toeplitz_tensor(y, sizes);
        EXPECT_LE((contract_full(t).data - ref.data).norm(), 1e-12 * ref.data.norm());
        EXPECT_LE((index_sum_average(t, map, L) - y).norm(), 1e-12 * y.norm());
    }
    EXPECT_THROW(quantized_toeplitz_map({4, 6}), std::invalid_argument);
    EXPECT_THROW(index_sum_tt(Vec::Ones(3), quantized_toeplitz_map({4, 4})), std::invalid_argument);
}

TEST(IndexSum, DampedSinusoidHasRankTwo) {
    const Mat S = short_damped_sinusoids();
    const IndexSumMap map = quantized_toeplitz_map({16, 8, 8, 8, 8, 8, 16});
    EXPECT_EQ(map.weights.size(), 23u);
    for (Index p = 0; p < 3; ++p) {
        const TTTrain t = index_sum_tt(S.col(p), map, 1e-10);
        for (Index r : t.ranks()) EXPECT_LE(r, 2);
        EXPECT_LE((index_sum_average(t, map, 66) - S.col(p)).norm(), 1e-8 * S.col(p).norm());
    }
}

TEST(Separation, SingleNoiselessComponentIsExact) {
    SeparationConfig c;
    c.freqs = {12};
    c.snr_db = std::nullopt;
    for (int d : {6, 8, 10}) {
        c.d = d;
        const SeparationResult r = run_separation(c);
        EXPECT_GE(r.score.msae, 80.0) << d;
        EXPECT_LE(r.rel_residual, 1e-10);
    }
}

TEST(Separation, ThreeComponentsAtThirtyDb) {
    SeparationConfig c;
    c.d = 9;
    const SeparationResult r = run_separation(c);
    EXPECT_EQ(r.estimates.rows(), (Index(1) << 9) * 9);
    EXPECT_GT(r.score.msae, 35.0);
    // the fit cannot be much better than the noise floor
    EXPECT_GT(r.rel_residual, 0.5 / std::sqrt(1000.0));
    EXPECT_LT(r.rel_residual, 2.0 / std::sqrt(1000.0));
}

TEST(Separation, ToeplitzBeatsFoldingOnShortSignal) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ShortSeparationConfig c;
        c.seed = seed;
        const double toe = run_short_separation(c).score.msae;
        c.kind = SeparationTensorization::folding;
        const double fold = run_short_separation(c).score.msae;
        EXPECT_GT(toe, fold) << seed;
    }
}

TEST(Separation, ShapeMismatchThrows) {
    EXPECT_THROW(separate_sum_tt(Vec::Ones(10), Shape{2, 4}, 2, 2, 5, 0.0), std::invalid_argument);
    SeparationConfig c;
    c.d = 1;
    EXPECT_THROW(run_separation(c), std::invalid_argument);
}

TEST(Separation, TrendIsDeterministicAcrossWorkerCounts) {
    SeparationConfig c;
    c.seed = 7;
    SeparationTrend a, b;
    {
        ThreadsEnv env("1");
        a = separation_trend(c, {7, 8}, 3);
    }
    {
        ThreadsEnv env("3");
        b = separation_trend(c, {7, 8}, 3);
    }
    EXPECT_EQ(a.msae, b.msae);
    EXPECT_EQ(a.slope_db_per_doubling, b.slope_db_per_doubling);
    EXPECT_NEAR(a.slope_db_per_doubling, a.mean_msae[1] - a.mean_msae[0], 1e-12);
    SeparationConfig single = c;
    single.d = 8;
    single.seed = 8;
    EXPECT_EQ(a.msae[1][1], run_separation(single).score.msae);
}

TEST(BinaryFormCp, ExactOnSyntheticStack) {
    Rng rng(11);
    for (int N : {3, 5, 7}) {
        const Index R = 3, K = 3, sz = Index(1) << N;
        const Mat H = rng.randn(2, R);
        const Mat W = rng.randn(R, K);
        Shape shape(std::size_t(N), 2);
        shape.push_back(K);
        DenseTensor Y(shape);
        for (Index k = 0; k < K; ++k)
            for (Index li = 0; li < sz; ++li)
                for (Index r = 0; r < R; ++r) {
                    double v = W(r, k);
                    for (int n = 0; n < N; ++n) v *= H((li >> n) & 1, r);
                    Y.data[k * sz + li] += v;
                }
        const BinaryFormCp cp = binary_form_cp(Y, N, R);
        EXPECT_GT(match_columns(H, cp.H).msae, 150.0) << N;
        EXPECT_GT(cp.fit, 1.0 - 1e-8);
    }
}

TEST(BinaryFormCp, RejectsBadShapes) {
    EXPECT_THROW(binary_form_cp(DenseTensor({2, 2, 3}), 3, 2), std::invalid_argument);
    EXPECT_THROW(binary_form_cp(DenseTensor({2, 3, 2, 3}), 3, 2), std::invalid_argument);
    EXPECT_THROW(binary_form_cp(DenseTensor({2, 2, 2, 3}), 3, 4), std::invalid_argument);
}

TEST(BlindIdentification, NoiselessTwoSourcesAllOrders) {
    BiConfig c;
    c.R = 2;
    c.snr_db = std::nullopt;
    c.tensors = 5;
    for (int N = 2; N <= 7; ++N) {
        c.order = N;
        EXPECT_GE(run_blind_identification(c).mean_msae, 60.0) << N;
    }
    c.order = 8;
    EXPECT_THROW(run_blind_identification(c), std::invalid_argument);
}

TEST(BlindIdentification, NoiselessFourSourcesHighOrder) {
    BiConfig c;
    c.snr_db = std::nullopt;
    c.tensors = 5;
    c.order = 5;
    EXPECT_GE(run_blind_identification(c).mean_msae, 60.0);
}

TEST(BlindIdentification, BalancedSourcesGiveExactZeroOddCumulant) {
    BiConfig c;
    c.R = 3;
    c.snr_db = std::nullopt;
    Rng rng(2);
    Mat H, X;
    bi_data(c, rng, H, X);
    EXPECT_EQ(X.cols(), 800);
    const DenseTensor k3 = cumulant(X, 3);
    const DenseTensor k4 = cumulant(X, 4);
    EXPECT_LE(k3.data.norm(), 1e-12 * k4.data.norm());
    EXPECT_GT(span_fit(k4, H, 4), 1.0 - 1e-10);
}

TEST(BlindIdentification, OddCumulantOfSymmetricSourcesIsNotFitted) {
    // Monte-Carlo with i.i.d. uniform sources: κ3 is pure estimation noise, so
    // its norm decays relative to κ4 and the two-term CP of it does not find H
    auto run = [](Index T, double& ratio, double& sae3, double& sae4) {
        ratio = sae3 = sae4 = 0.0;
        const int trials = 20;
        for (int s = 0; s < trials; ++s) {
            Rng rng(100 + std::uint64_t(s));
            const Mat H = rng.randn(2, 2);
            Mat S(2, T);
            for (Index i = 0; i < S.size(); ++i) S.data()[i] = 2.0 * rng.rand() - 1.0;
            const Mat X = H * S;
            auto est = [&](int N, const DenseTensor& k) {
                Shape sh(std::size_t(N), 2);
                sh.push_back(1);
                return match_columns(H, binary_form_cp(DenseTensor(sh, k.data), N, 2).H).msae;
            };
            const DenseTensor k3 = cumulant(X, 3), k4 = cumulant(X, 4);
            ratio += k3.data.norm() / k4.data.norm() / trials;
            sae3 += est(3, k3) / trials;
            sae4 += est(4, k4) / trials;
        }
    };
    double r1, a1, b1, r2, a2, b2;
    run(1000, r1, a1, b1);
    run(16000, r2, a2, b2);
    EXPECT_LT(r2, 0.4 * r1);
    EXPECT_LT(a1, 20.0);
    EXPECT_LT(a2, 20.0);
    EXPECT_GT(b1, a1 + 10.0);
    EXPECT_GT(b2, b1 + 5.0);
}

TEST(BlindIdentification, PairedComparisonBookkeeping) {
    BiConfig c;
    c.tensors = 4;
    const BiComparison cmp = bi_compare_orders(c, {5, 7}, 3);
    ASSERT_EQ(cmp.mean_msae.size(), 2u);
    int wins = 0;
    for (int s = 0; s < 3; ++s) {
        BiConfig one = c;
        one.order = 7;
        one.seed = std::uint64_t(s);
        EXPECT_EQ(cmp.mean_msae[1][std::size_t(s)], run_blind_identification(one).mean_msae);
        wins += cmp.mean_msae[1][std::size_t(s)] >= cmp.mean_msae[0][std::size_t(s)];
    }
    EXPECT_EQ(cmp.wins, wins);
    EXPECT_THROW(bi_compare_orders(c, {5}, 3), std::invalid_argument);
}

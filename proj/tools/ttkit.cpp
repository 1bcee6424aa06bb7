#include <ttkit/experiments.hpp>
#include <ttkit/regression.hpp>
#include <ttkit/riemannian.hpp>
#include <ttkit/solvers.hpp>
#include <ttkit/tt_io.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace ttkit;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0, kExitError = 1, kExitNotConverged = 2;

// relative file names inside a config are taken relative to the config file
fs::path g_config_dir;

std::string config_path(const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() ? p : (g_config_dir / q).string();
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Strict view of a JSON object: every key must be read before finish().
class Config {
public:
    Config(json j, std::string where) : j_(std::move(j)), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    template <class T>
    T get(const std::string& k, T def) {
        used_.insert(k);
        if (!j_.contains(k)) return def;
        return convert<T>(k);
    }
    template <class T>
    T need(const std::string& k) {
        used_.insert(k);
        if (!j_.contains(k)) throw ConfigError(where_ + ": missing key \"" + k + "\"");
        return convert<T>(k);
    }
    /// Number or null; absent gives the default.
    std::optional<double> opt_double(const std::string& k, std::optional<double> def) {
        used_.insert(k);
        if (!j_.contains(k)) return def;
        if (j_[k].is_null()) return std::nullopt;
        return convert<double>(k);
    }
    Config sub(const std::string& k) {
        used_.insert(k);
        if (!j_.contains(k)) throw ConfigError(where_ + ": missing key \"" + k + "\"");
        return Config(j_[k], where_ + "." + k);
    }
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(where_ + ": unknown key \"" + it.key() + "\"");
    }

private:
    template <class T>
    T convert(const std::string& k) const {
        try {
            return j_.at(k).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where_ + ": bad value for \"" + k + "\"");
        }
    }
    json j_;
    std::string where_;
    std::set<std::string> used_;
};

json read_json(const std::string& path) {
    g_config_dir = fs::path(path).parent_path();
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path);
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

struct RunContext {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out = ".";

    std::uint64_t seed_or(Config& c) {
        const auto s = c.get<std::uint64_t>("seed", 0);
        return seed ? *seed : s;
    }
    std::string path(const std::string& name) const { return (fs::path(out) / name).string(); }
    void prepare() const { fs::create_directories(out); }
};

std::vector<Index> to_index_vec(const std::vector<long long>& v) { return {v.begin(), v.end()}; }

json solve_report_json(const SolveReport& r) {
    json j;
    j["status"] = r.status;
    j["sweeps"] = r.sweeps;
    j["final_residual"] = r.final_residual;
    j["residuals"] = r.residuals;
    j["sweep_objective"] = r.sweep_objective;
    j["final_ranks"] = ranks_string(r.final_ranks);
    j["warnings"] = r.warnings;
    j["wall_time_s"] = r.wall_time_s;
    return j;
}

std::string num(double v) {
    if (std::isinf(v) && v < 0) return "fail";
    char b[32];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

json score_json(double v) { return std::isinf(v) && v < 0 ? json("fail") : json(v); }

void write_report(const RunContext& ctx, const json& rep) {
    std::ofstream os(ctx.path("report.json"));
    os << rep.dump(2) << "\n";
    std::cout << rep.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// tt
// ---------------------------------------------------------------------------

json tt_info(const TTObject& obj) {
    json j;
    auto storage = [](const std::vector<Core>& cs) {
        Index s = 0;
        for (const auto& c : cs) s += c.data.size();
        return s * Index(sizeof(double));
    };
    if (const auto* t = std::get_if<TTTrain>(&obj)) {
        j["kind"] = "train";
        j["order"] = t->order();
        j["modes"] = t->mode_sizes();
        j["ranks"] = ranks_string(t->ranks());
        j["storage_bytes"] = storage(t->cores);
    } else if (const auto* a = std::get_if<TTOperator>(&obj)) {
        j["kind"] = "operator";
        j["order"] = a->order();
        j["rows"] = a->rows;
        j["cols"] = a->cols;
        j["ranks"] = ranks_string(a->ranks());
        j["storage_bytes"] = storage(a->cores);
    } else {
        const auto& b = std::get<BlockTT>(obj);
        j["kind"] = "block";
        j["order"] = b.order();
        j["modes"] = b.mode_sizes();
        j["ranks"] = ranks_string(b.ranks());
        j["block_position"] = b.pos;
        j["block_size"] = b.K;
        j["storage_bytes"] = storage(b.cores);
    }
    return j;
}

DenseTensor tt_dense(const TTObject& obj) {
    if (const auto* t = std::get_if<TTTrain>(&obj)) return contract_full(*t);
    if (const auto* a = std::get_if<TTOperator>(&obj)) {
        Mat M = to_dense(*a);
        return DenseTensor({M.rows(), M.cols()}, Eigen::Map<const Vec>(M.data(), M.size()));
    }
    throw std::invalid_argument("block trains cannot be densified; extract a train first");
}

bool is_csv(const std::string& p) { return fs::path(p).extension() == ".csv"; }

// ---------------------------------------------------------------------------
// shared operator / rhs specs
// ---------------------------------------------------------------------------

struct OperatorSpec {
    TTOperator A;
    std::optional<int> laplacian_D;
};

OperatorSpec read_operator(Config c) {
    OperatorSpec s;
    if (c.has("file")) {
        auto obj = load_tt1f(config_path(c.need<std::string>("file")));
        if (!std::holds_alternative<TTOperator>(obj)) throw ConfigError("operator.file: not a TT operator");
        s.A = std::get<TTOperator>(obj);
    } else {
        const auto type = c.need<std::string>("type");
        if (type == "laplacian") {
            const int D = c.need<int>("D");
            if (D < 1 || D > 12) throw ConfigError("operator.D must be in 1..12");
            s.A = laplacian_qtt(D);
            s.laplacian_D = D;
        } else if (type == "identity") {
            s.A = identity_op(to_index_vec(c.need<std::vector<long long>>("modes")));
        } else {
            throw ConfigError("operator.type must be laplacian or identity");
        }
    }
    c.finish();
    if (s.A.rows != s.A.cols) throw ConfigError("operator must be square");
    return s;
}

TTTrain read_rhs(Config c, const Shape& modes, Rng& rng) {
    TTTrain b;
    if (c.has("file")) {
        auto obj = load_tt1f(config_path(c.need<std::string>("file")));
        if (!std::holds_alternative<TTTrain>(obj)) throw ConfigError("rhs.file: not a TT train");
        b = std::get<TTTrain>(obj);
    } else {
        const auto type = c.need<std::string>("type");
        if (type == "ones") {
            std::vector<Vec> vs;
            for (Index n : modes) vs.push_back(Vec::Ones(n));
            b = rank1_tt(vs);
        } else if (type == "random") {
            const Index r = c.get<long long>("rank", 2);
            b = random_tt(modes, std::vector<Index>(modes.size() - 1, r), rng);
        } else {
            throw ConfigError("rhs.type must be ones or random");
        }
    }
    c.finish();
    if (b.mode_sizes() != modes) throw ConfigError("rhs modes do not match the operator");
    return b;
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

int cmd_solve(RunContext& ctx) {
    Config c(read_json(ctx.config_path), "config");
    const std::uint64_t seed = ctx.seed_or(c);
    OperatorSpec op = read_operator(c.sub("operator"));
    Rng rng(seed);
    TTTrain b = read_rhs(c.sub("rhs"), op.A.rows, rng);
    AmenOptions o;
    o.tol = c.get("tol", o.tol);
    o.sweeps = c.get("sweeps", o.sweeps);
    o.enrich_rank = c.get<long long>("enrich_rank", o.enrich_rank);
    o.max_rank = c.get<long long>("max_rank", o.max_rank);
    o.symmetric = c.get("symmetric", o.symmetric);
    c.finish();
    ctx.prepare();
    LinearResult r = amen_linear(op.A, b, random_tt(op.A.rows, std::vector<Index>(op.A.order() - 1, 1), rng), o);
    save_tt1f(ctx.path("solution.tt"), r.x);
    json rep;
    rep["command"] = "solve";
    rep["seed"] = seed;
    rep["report"] = solve_report_json(r.report);
    rep["solution"] = "solution.tt";
    write_report(ctx, rep);
    return r.report.status == "converged" ? kExitOk : kExitNotConverged;
}

int cmd_eig(RunContext& ctx) {
    Config c(read_json(ctx.config_path), "config");
    const std::uint64_t seed = ctx.seed_or(c);
    OperatorSpec op = read_operator(c.sub("operator"));
    const Index K = c.get<long long>("K", 1);
    const auto method = c.get<std::string>("method", "evamen");
    const int sweeps = c.get("sweeps", 30);
    const double tol = c.get("tol", 1e-10);
    const Index enrich = c.get<long long>("enrich_rank", 2);
    const Index max_rank = c.get<long long>("max_rank", kNoRankCap);
    const Index init_rank = c.get<long long>("init_rank", 1);
    c.finish();
    if (K < 1) throw ConfigError("K must be positive");
    Rng rng(seed);
    BlockTT x0 = random_block_tt(op.A.rows, std::vector<Index>(op.A.order() - 1, init_rank), K, rng);
    EigResult r;
    if (method == "als")
        r = als_evd(op.A, K, x0, sweeps, tol);
    else if (method == "mals")
        r = mals_evd(op.A, K, x0, sweeps, tol, max_rank);
    else if (method == "evamen")
        r = evamen(op.A, K, x0, sweeps, tol, enrich, max_rank);
    else
        throw ConfigError("method must be als, mals or evamen");
    ctx.prepare();
    save_tt1f(ctx.path("eigvecs.tt"), r.X);
    json rep;
    rep["command"] = "eig";
    rep["seed"] = seed;
    rep["method"] = method;
    rep["eigvals"] = std::vector<double>(r.eigvals.data(), r.eigvals.data() + r.eigvals.size());
    if (op.laplacian_D) {
        const double n = std::ldexp(1.0, *op.laplacian_D);
        std::vector<double> exact, err;
        for (Index k = 0; k < K; ++k) {
            exact.push_back(2.0 - 2.0 * std::cos(double(k + 1) * M_PI / (n + 1.0)));
            err.push_back(std::abs(r.eigvals[k] - exact.back()));
        }
        rep["analytic"] = exact;
        rep["abs_error"] = err;
    }
    rep["report"] = solve_report_json(r.report);
    rep["eigvecs"] = "eigvecs.tt";
    write_report(ctx, rep);
    return r.report.status == "converged" ? kExitOk : kExitNotConverged;
}

/// Sparse samples CSV: header "i0,…,value", one observed entry per row.
SamplingSet load_samples_csv(const std::string& path, std::size_t N) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open " + path);
    std::string line;
    std::getline(is, line);
    SamplingSet s;
    std::vector<double> vals;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f;
        std::vector<std::string> fields;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != N + 1) throw ConfigError(path + ": expected " + std::to_string(N + 1) + " columns");
        std::vector<Index> idx;
        for (std::size_t n = 0; n < N; ++n) idx.push_back(std::stoll(fields[n]));
        s.idx.push_back(idx);
        vals.push_back(std::stod(fields[N]));
    }
    s.values = Eigen::Map<Vec>(vals.data(), Index(vals.size()));
    return s;
}

int cmd_complete(RunContext& ctx) {
    Config c(read_json(ctx.config_path), "config");
    const std::uint64_t seed = ctx.seed_or(c);
    const Shape modes = to_index_vec(c.need<std::vector<long long>>("modes"));
    const std::vector<Index> ranks = to_index_vec(c.need<std::vector<long long>>("ranks"));
    CompletionOptions o;
    o.seed = seed;
    o.sweeps = c.get("sweeps", o.sweeps);
    o.tol = c.get("tol", o.tol);
    o.restarts = c.get("restarts", o.restarts);
    o.increase_ranks = c.get("increase_ranks", o.increase_ranks);
    const auto rmse_tol = c.opt_double("rmse_tol", std::nullopt);
    Rng rng(seed);
    SamplingSet s;
    std::optional<TTTrain> truth;
    std::vector<std::vector<Index>> held_out;
    if (c.has("samples")) {
        s = load_samples_csv(config_path(c.need<std::string>("samples")), modes.size());
    } else {
        Config p = c.sub("planted");
        const double frac = p.get("fraction", 0.5);
        const double noise = p.get("noise", 0.0);
        const auto planted = to_index_vec(p.get<std::vector<long long>>("ranks", {ranks.begin(), ranks.end()}));
        p.finish();
        if (!(frac > 0 && frac <= 1)) throw ConfigError("planted.fraction must be in (0, 1]");
        truth = random_tt(modes, planted, rng);
        const DenseTensor full = contract_full(*truth);
        std::vector<Index> order(std::size_t(full.data.size()));
        std::iota(order.begin(), order.end(), Index(0));
        std::shuffle(order.begin(), order.end(), rng.gen);
        const std::size_t m = std::max<std::size_t>(1, std::size_t(frac * double(order.size())));
        std::vector<double> vals;
        for (std::size_t k = 0; k < order.size(); ++k) {
            auto idx = multi_index(order[k], full.shape);
            if (k < m) {
                s.idx.push_back(idx);
                vals.push_back(full.data[order[k]] + noise * rng.randn());
            } else {
                held_out.push_back(idx);
            }
        }
        s.values = Eigen::Map<Vec>(vals.data(), Index(vals.size()));
    }
    c.finish();
    ctx.prepare();
    CompletionResult r = tt_complete(modes, s, ranks, o);
    save_tt1f(ctx.path("completed.tt"), r.x);
    json rep;
    rep["command"] = "complete";
    rep["seed"] = seed;
    rep["observed"] = s.idx.size();
    rep["observed_rmse"] = observed_rmse(r.x, s);
    if (truth) {
        const DenseTensor a = contract_full(*truth), b = contract_full(r.x);
        rep["relative_error"] = (a.data - b.data).norm() / a.data.norm();
        double e = 0;
        for (const auto& idx : held_out) e += std::pow(a(idx) - b(idx), 2);
        rep["held_out_rmse"] = held_out.empty() ? 0.0 : std::sqrt(e / double(held_out.size()));
    }
    rep["report"] = solve_report_json(r.report);
    rep["completed"] = "completed.tt";
    write_report(ctx, rep);
    const bool ok = r.report.status == "converged" || (rmse_tol && observed_rmse(r.x, s) <= *rmse_tol);
    return ok ? kExitOk : kExitNotConverged;
}

/// Planted model Y = W ×₀ X + noise with a Tucker-structured weight tensor.
struct RegressionData {
    Mat Xtr, Xte;
    DenseTensor Ytr, Yte;
};

RegressionData regression_demo(Index M, Index Mtest, Index I0, const Shape& out, const std::vector<Index>& planted,
                               double noise, Rng& rng) {
    Shape wshape{I0};
    wshape.insert(wshape.end(), out.begin(), out.end());
    if (planted.size() != wshape.size()) throw ConfigError("dataset.planted_ranks: one rank per weight mode");
    DenseTensor G(Shape(planted.begin(), planted.end()));
    G.data = rng.randn_vec(G.data.size());
    std::vector<Mat> U;
    for (std::size_t n = 0; n < wshape.size(); ++n) U.push_back(rng.randn(wshape[n], planted[n]));
    const DenseTensor W = multi_mode_product(G, U, false);
    RegressionData d;
    d.Xtr = rng.randn(M, I0);
    d.Xte = rng.randn(Mtest, I0);
    d.Ytr = mode_product(W, d.Xtr, 0);
    d.Yte = mode_product(W, d.Xte, 0);
    for (Index i = 0; i < d.Ytr.data.size(); ++i) d.Ytr.data[i] += noise * rng.randn();
    return d;
}

double rmse(const DenseTensor& a, const DenseTensor& b) {
    return std::sqrt((a.data - b.data).squaredNorm() / double(a.data.size()));
}

int cmd_regress(RunContext& ctx) {
    Config c(read_json(ctx.config_path), "config");
    const std::uint64_t seed = ctx.seed_or(c);
    const auto method = c.need<std::string>("method");
    const double gamma = c.get("gamma", 1e-3);
    Config dc = c.sub("dataset");
    const Index M = dc.get<long long>("samples", 200), Mte = dc.get<long long>("test_samples", 100);
    const Index I0 = dc.get<long long>("input_dim", 10);
    const Shape out = to_index_vec(dc.get<std::vector<long long>>("output_shape", {4, 5}));
    Shape def_planted{2};
    for (std::size_t n = 0; n < out.size(); ++n) def_planted.push_back(2);
    const auto planted = to_index_vec(dc.get<std::vector<long long>>("planted_ranks", {def_planted.begin(), def_planted.end()}));
    const double noise = dc.get("noise", 0.1);
    dc.finish();
    std::vector<Index> ranks;
    if (c.has("ranks")) ranks = to_index_vec(c.need<std::vector<long long>>("ranks"));
    const auto kernel = c.get<std::string>("kernel", "linear");
    const double beta = c.get("beta", 1.0);
    c.finish();
    Rng rng(seed);
    const RegressionData d = regression_demo(M, Mte, I0, out, planted, noise, rng);
    if (ranks.empty()) {
        ranks.push_back(method == "kholrr" ? M : I0);
        ranks.insert(ranks.end(), out.begin(), out.end());
    }
    DenseTensor ptr, pte;
    if (method == "ridge") {
        Mat B = d.Xtr.transpose() * d.Xtr;
        B.diagonal().array() += gamma;
        const Mat W = B.ldlt().solve(d.Xtr.transpose() * unfold_mode(d.Ytr, 0));
        auto as_tensor = [&](const Mat& P, Index rows) {
            Shape s{rows};
            s.insert(s.end(), out.begin(), out.end());
            return DenseTensor(s, Eigen::Map<const Vec>(P.data(), P.size()));
        };
        ptr = as_tensor(d.Xtr * W, M);
        pte = as_tensor(d.Xte * W, Mte);
    } else if (method == "holrr") {
        const HolrrModel m = holrr_fit(d.Xtr, d.Ytr, ranks, gamma);
        ptr = holrr_predict(m, d.Xtr);
        pte = holrr_predict(m, d.Xte);
    } else if (method == "kholrr") {
        KernelConfig kc;
        if (kernel == "linear")
            kc.kind = KernelConfig::Kind::linear;
        else if (kernel == "rbf")
            kc.kind = KernelConfig::Kind::gaussian_rbf;
        else
            throw ConfigError("kernel must be linear or rbf");
        kc.beta = beta;
        kc.validate();
        const auto xtr = rows_as_tensors(d.Xtr), xte = rows_as_tensors(d.Xte);
        const HolrrModel m = kholrr_fit(xtr, kc, d.Ytr, ranks, gamma);
        ptr = kholrr_predict(m, xtr);
        pte = kholrr_predict(m, xte);
    } else {
        throw ConfigError("method must be ridge, holrr or kholrr");
    }
    ctx.prepare();
    save_dense_csv(ctx.path("test_predictions.csv"), pte);
    json rep;
    rep["command"] = "regress";
    rep["seed"] = seed;
    rep["method"] = method;
    rep["ranks"] = ranks;
    rep["train_rmse"] = rmse(ptr, d.Ytr);
    rep["test_rmse"] = rmse(pte, d.Yte);
    write_report(ctx, rep);
    return kExitOk;
}

/// Header row, then x_1..x_N,y per sample.
void load_xy_csv(const std::string& path, Mat& X, Vec& y) {
    const DenseTensor t = [&] {
        std::ifstream is(path);
        if (!is) throw ConfigError("cannot open " + path);
        std::string line;
        std::getline(is, line);
        std::vector<std::vector<double>> rows;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string f;
            std::vector<double> r;
            while (std::getline(ss, f, ',')) r.push_back(std::stod(f));
            if (!rows.empty() && r.size() != rows[0].size()) throw ConfigError(path + ": ragged rows");
            rows.push_back(r);
        }
        if (rows.empty() || rows[0].size() < 2) throw ConfigError(path + ": need features and a target column");
        DenseTensor m({Index(rows.size()), Index(rows[0].size())});
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < rows[i].size(); ++j) m.data[Index(i + rows.size() * j)] = rows[i][j];
        return m;
    }();
    const Index M = t.shape[0], C = t.shape[1];
    const Eigen::Map<const Mat> A(t.data.data(), M, C);
    X = A.leftCols(C - 1);
    y = A.col(C - 1);
}

int cmd_exm(RunContext& ctx) {
    Config c(read_json(ctx.config_path), "config");
    ExmOptions o;
    o.seed = ctx.seed_or(c);
    const auto train = config_path(c.need<std::string>("train"));
    const auto test = c.has("test") ? config_path(c.need<std::string>("test")) : std::string();
    o.rank = c.get<long long>("rank", o.rank);
    o.iters = c.get("iters", o.iters);
    o.batch = c.get<long long>("batch", o.batch);
    o.lambda = c.get("lambda", o.lambda);
    o.init_noise = c.get("init_noise", o.init_noise);
    const auto loss = c.get<std::string>("loss", "squared");
    c.finish();
    if (loss == "squared")
        o.loss = ExmLoss::squared;
    else if (loss == "logistic")
        o.loss = ExmLoss::logistic;
    else
        throw ConfigError("loss must be squared or logistic");
    Mat X;
    Vec y;
    load_xy_csv(train, X, y);
    const ExmModel m = exm_fit(X, y, o);
    ctx.prepare();
    save_tt1f(ctx.path("model.tt"), m.W);
    {
        std::ofstream os(ctx.path("trace.jsonl"));
        for (const auto& e : m.trace) os << json{{"iter", e.iter}, {"loss", score_json(e.loss)}, {"step", e.step}}.dump() << "\n";
    }
    json rep;
    rep["command"] = "exm";
    rep["seed"] = o.seed;
    rep["status"] = m.status;
    rep["ranks"] = ranks_string(m.ranks);
    rep["iterations"] = m.trace.size();
    rep["train_loss"] = exm_loss(m, X, y);
    if (!test.empty()) {
        Mat Xt;
        Vec yt;
        load_xy_csv(test, Xt, yt);
        rep["test_loss"] = exm_loss(m, Xt, yt);
    }
    rep["model"] = "model.tt";
    rep["trace"] = "trace.jsonl";
    write_report(ctx, rep);
    return m.status == "linesearch_failed" ? kExitNotConverged : kExitOk;
}

int cmd_separate(RunContext& ctx) {
    Config c(read_json(ctx.config_path), "config");
    const std::uint64_t seed = ctx.seed_or(c);
    const auto mode = c.get<std::string>("mode", "folding");
    const int seeds = c.get("seeds", 1);
    const auto snr = c.opt_double("snr_db", 30.0);
    if (seeds < 1) throw ConfigError("seeds must be positive");
    std::ofstream sae_csv, msae_csv;
    json rep;
    rep["command"] = "separate";
    rep["seed"] = seed;
    rep["seeds"] = seeds;
    rep["mode"] = mode;
    if (mode == "folding") {
        SeparationConfig base;
        base.freqs = c.get("freqs", base.freqs);
        base.fs = c.get("fs", base.fs);
        base.rank = c.get<long long>("rank", base.rank);
        base.iters = c.get("iters", base.iters);
        base.tol = c.get("tol", base.tol);
        base.snr_db = snr;
        base.seed = seed;
        std::vector<int> ds{base.d};
        if (c.has("d")) {
            const json dj = c.need<json>("d");
            ds = dj.is_array() ? dj.get<std::vector<int>>() : std::vector<int>{dj.get<int>()};
        }
        c.finish();
        for (int d : ds)
            if (d < 2 || d > 20) throw ConfigError("d must be in 2..20");
        const std::size_t S = std::size_t(seeds);
        auto runs = parallel_map(ds.size() * S, [&](std::size_t i) {
            SeparationConfig cfg = base;
            cfg.d = ds[i / S];
            cfg.seed = seed + i % S;
            return run_separation(cfg);
        });
        ctx.prepare();
        sae_csv.open(ctx.path("sae.csv"));
        msae_csv.open(ctx.path("msae.csv"));
        sae_csv << "d,length,seed,source,freq_hz,sae_db\n";
        msae_csv << "d,length,seed,msae_db,iterations,rel_residual\n";
        json per_d = json::array();
        std::vector<double> means;
        for (std::size_t k = 0; k < ds.size(); ++k) {
            double mean = 0;
            for (std::size_t s = 0; s < S; ++s) {
                const auto& r = runs[k * S + s];
                const Index L = r.sources.rows();
                for (std::size_t p = 0; p < r.score.sae.size(); ++p)
                    sae_csv << ds[k] << "," << L << "," << seed + s << "," << p + 1 << "," << num(base.freqs[p]) << ","
                            << num(r.score.sae[p]) << "\n";
                msae_csv << ds[k] << "," << L << "," << seed + s << "," << num(r.score.msae) << "," << r.iterations << ","
                         << num(r.rel_residual) << "\n";
                mean += r.score.msae / double(S);
            }
            means.push_back(mean);
            per_d.push_back({{"d", ds[k]}, {"length", runs[k * S].sources.rows()}, {"mean_msae_db", score_json(mean)}});
        }
        rep["results"] = per_d;
        if (ds.size() >= 2) {
            double mx = 0, my = 0, num_ = 0, den = 0;
            for (std::size_t k = 0; k < ds.size(); ++k) {
                mx += ds[k] / double(ds.size());
                my += means[k] / double(ds.size());
            }
            for (std::size_t k = 0; k < ds.size(); ++k) {
                num_ += (ds[k] - mx) * (means[k] - my);
                den += (ds[k] - mx) * (ds[k] - mx);
            }
            rep["slope_db_per_doubling"] = score_json(num_ / den);
        }
    } else if (mode == "short") {
        ShortSeparationConfig base;
        base.snr_db = snr;
        base.rank = c.get<long long>("rank", base.rank);
        base.iters = c.get("iters", base.iters);
        base.tol = c.get("tol", base.tol);
        c.finish();
        const std::size_t S = std::size_t(seeds);
        auto runs = parallel_map(2 * S, [&](std::size_t i) {
            ShortSeparationConfig cfg = base;
            cfg.kind = i < S ? SeparationTensorization::toeplitz : SeparationTensorization::folding;
            cfg.seed = seed + i % S;
            return run_short_separation(cfg);
        });
        ctx.prepare();
        sae_csv.open(ctx.path("sae.csv"));
        msae_csv.open(ctx.path("msae.csv"));
        sae_csv << "tensorization,seed,source,sae_db\n";
        msae_csv << "tensorization,seed,msae_db,iterations,rel_residual\n";
        double mt = 0, mf = 0;
        int wins = 0;
        for (std::size_t i = 0; i < 2 * S; ++i) {
            const auto& r = runs[i];
            const char* kind = i < S ? "toeplitz" : "folding";
            for (std::size_t p = 0; p < r.score.sae.size(); ++p)
                sae_csv << kind << "," << seed + i % S << "," << p + 1 << "," << num(r.score.sae[p]) << "\n";
            msae_csv << kind << "," << seed + i % S << "," << num(r.score.msae) << "," << r.iterations << ","
                     << num(r.rel_residual) << "\n";
            (i < S ? mt : mf) += r.score.msae / double(S);
            if (i < S && r.score.msae > runs[i + S].score.msae) ++wins;
        }
        rep["toeplitz_mean_msae_db"] = score_json(mt);
        rep["folding_mean_msae_db"] = score_json(mf);
        rep["toeplitz_wins"] = wins;
    } else {
        throw ConfigError("mode must be folding or short");
    }
    rep["tables"] = {"sae.csv", "msae.csv"};
    write_report(ctx, rep);
    return kExitOk;
}

int cmd_identify(RunContext& ctx) {
    Config c(read_json(ctx.config_path), "config");
    BiConfig base;
    base.seed = ctx.seed_or(c);
    base.R = c.get<long long>("R", base.R);
    base.T = c.get<long long>("T", base.T);
    base.snr_db = c.opt_double("snr_db", base.snr_db);
    base.tensors = c.get("tensors", base.tensors);
    base.point_scale = c.get("point_scale", base.point_scale);
    base.mean_subtract = c.get("mean_subtract", base.mean_subtract);
    const int seeds = c.get("seeds", 1);
    std::vector<int> orders{base.order};
    if (c.has("order")) {
        const json oj = c.need<json>("order");
        orders = oj.is_array() ? oj.get<std::vector<int>>() : std::vector<int>{oj.get<int>()};
    }
    c.finish();
    if (seeds < 1) throw ConfigError("seeds must be positive");
    for (int N : orders)
        if (N < 2 || N > 7) throw ConfigError("derivative order must be in 2..7 (stacked tensor order 3..8)");
    const std::size_t S = std::size_t(seeds);
    auto runs = parallel_map(orders.size() * S, [&](std::size_t i) {
        BiConfig cfg = base;
        cfg.order = orders[i / S];
        cfg.seed = base.seed + i % S;
        return run_blind_identification(cfg);
    });
    ctx.prepare();
    std::ofstream csv(ctx.path("msae.csv"));
    csv << "derivative_order,tensor_order,seed,mean_msae_db,best_msae_db\n";
    json rep;
    rep["command"] = "identify";
    rep["seed"] = base.seed;
    rep["seeds"] = seeds;
    json per = json::array();
    std::vector<std::vector<double>> m(orders.size());
    for (std::size_t k = 0; k < orders.size(); ++k) {
        double mean = 0;
        for (std::size_t s = 0; s < S; ++s) {
            const auto& r = runs[k * S + s];
            csv << orders[k] << "," << orders[k] + 1 << "," << base.seed + s << "," << num(r.mean_msae) << ","
                << num(r.best_msae) << "\n";
            m[k].push_back(r.mean_msae);
            mean += r.mean_msae / double(S);
        }
        per.push_back({{"derivative_order", orders[k]}, {"tensor_order", orders[k] + 1}, {"mean_msae_db", score_json(mean)}});
    }
    rep["results"] = per;
    if (orders.size() >= 2) {
        int wins = 0;
        for (std::size_t s = 0; s < S; ++s) wins += m.back()[s] >= m.front()[s];
        rep["last_vs_first_wins"] = wins;
    }
    rep["tables"] = {"msae.csv"};
    write_report(ctx, rep);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ttkit: tensor-train tools and experiments"};
    app.require_subcommand(1);

    auto* tt = app.add_subcommand("tt", "inspect, round and convert TT1F files");
    tt->require_subcommand(1);
    std::string in, out;
    double tol = 1e-12;
    long long max_rank = kNoRankCap;
    auto* info = tt->add_subcommand("info", "print order, modes, ranks and storage");
    info->add_option("file", in)->required();
    auto* rnd = tt->add_subcommand("round", "round a train or operator");
    rnd->add_option("input", in)->required();
    rnd->add_option("output", out)->required();
    rnd->add_option("--tol", tol, "relative tolerance");
    rnd->add_option("--max-rank", max_rank);
    auto* con = tt->add_subcommand("contract", "write the full tensor as CSV");
    con->add_option("input", in)->required();
    con->add_option("output", out)->required();
    auto* cvt = tt->add_subcommand("convert", "dense CSV to TT1F (TT-SVD) or TT1F to dense CSV");
    cvt->add_option("input", in)->required();
    cvt->add_option("output", out)->required();
    cvt->add_option("--tol", tol, "TT-SVD relative tolerance");
    cvt->add_option("--max-rank", max_rank);

    RunContext ctx;
    std::map<std::string, int (*)(RunContext&)> commands{
        {"separate", cmd_separate}, {"identify", cmd_identify}, {"solve", cmd_solve},  {"eig", cmd_eig},
        {"complete", cmd_complete}, {"regress", cmd_regress},   {"exm", cmd_exm}};
    const std::map<std::string, std::string> blurbs{
        {"separate", "sinusoid separation by TT sum-of-ranks fitting"},
        {"identify", "blind identification from cumulant derivative tensors"},
        {"solve", "AMEn linear solve"},
        {"eig", "smallest eigenpairs (ALS, MALS or EVAMEn)"},
        {"complete", "tensor completion from sampled entries"},
        {"regress", "ridge, HOLRR or kernel HOLRR regression"},
        {"exm", "exponential machine training"}};
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, fn] : commands) {
        auto* s = app.add_subcommand(name, blurbs.at(name));
        s->add_option("--config", ctx.config_path, "JSON config")->required()->check(CLI::ExistingFile);
        s->add_option("--seed", ctx.seed, "overrides the config seed");
        s->add_option("--out", ctx.out, "output directory");
        subs[name] = s;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*info) {
            std::cout << tt_info(load_tt1f(in)).dump(2) << "\n";
            return kExitOk;
        }
        if (*rnd) {
            TTObject obj = load_tt1f(in);
            if (auto* t = std::get_if<TTTrain>(&obj))
                obj = round(*t, tol, max_rank);
            else if (auto* a = std::get_if<TTOperator>(&obj))
                obj = round(*a, tol, max_rank);
            else
                throw std::invalid_argument("block trains cannot be rounded here");
            save_tt1f(out, obj);
            std::cout << tt_info(obj).dump(2) << "\n";
            return kExitOk;
        }
        if (*con) {
            save_dense_csv(out, tt_dense(load_tt1f(in)));
            return kExitOk;
        }
        if (*cvt) {
            if (is_csv(in)) {
                const TTTrain t = tt_svd(load_dense_csv(in), tol, max_rank);
                save_tt1f(out, t);
                std::cout << tt_info(t).dump(2) << "\n";
            } else {
                save_dense_csv(out, tt_dense(load_tt1f(in)));
            }
            return kExitOk;
        }
        for (const auto& [name, s] : subs)
            if (*s) return commands[name](ctx);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

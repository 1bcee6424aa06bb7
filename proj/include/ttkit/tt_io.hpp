#pragma once

#include "tt.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <variant>

namespace ttkit {

// TT1F: "TT1F", u32 N, u32 flags (bit0 operator, bit1 block), mode sizes
// (operators: N rows then N cols), (N+1) ranks, [block: u32 pos, u32 K],
// then each core row-major little-endian f64.

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("TT1F: unexpected end of file");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}
inline void put_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(u >> (8 * k));
    os.write(reinterpret_cast<const char*>(b), 8);
}
inline double get_f64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("TT1F: unexpected end of file");
    std::uint64_t u = 0;
    for (int k = 0; k < 8; ++k) u |= std::uint64_t(b[k]) << (8 * k);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace detail

enum TT1FFlags : std::uint32_t { kTT1FOperator = 1u, kTT1FBlock = 2u };

using TTObject = std::variant<TTTrain, TTOperator, BlockTT>;

inline void write_tt1f(std::ostream& os, const TTObject& obj) {
    using namespace detail;
    os.write("TT1F", 4);
    if (const auto* t = std::get_if<TTTrain>(&obj)) {
        put_u32(os, std::uint32_t(t->order()));
        put_u32(os, 0);
        for (Index n : t->mode_sizes()) put_u32(os, std::uint32_t(n));
        for (Index r : t->ranks()) put_u32(os, std::uint32_t(r));
        for (const auto& c : t->cores)
            for (Index a = 0; a < c.r0; ++a)
                for (Index i = 0; i < c.n; ++i)
                    for (Index b = 0; b < c.r1; ++b) put_f64(os, c(a, i, b));
    } else if (const auto* A = std::get_if<TTOperator>(&obj)) {
        put_u32(os, std::uint32_t(A->order()));
        put_u32(os, kTT1FOperator);
        for (Index n : A->rows) put_u32(os, std::uint32_t(n));
        for (Index n : A->cols) put_u32(os, std::uint32_t(n));
        for (Index r : A->ranks()) put_u32(os, std::uint32_t(r));
        for (std::size_t k = 0; k < A->order(); ++k) {
            const Core& c = A->cores[k];
            for (Index a = 0; a < c.r0; ++a)
                for (Index i = 0; i < A->rows[k]; ++i)
                    for (Index j = 0; j < A->cols[k]; ++j)
                        for (Index b = 0; b < c.r1; ++b) put_f64(os, A->at(k, a, i, j, b));
        }
    } else {
        const auto& B = std::get<BlockTT>(obj);
        put_u32(os, std::uint32_t(B.order()));
        put_u32(os, kTT1FBlock);
        for (Index n : B.mode_sizes()) put_u32(os, std::uint32_t(n));
        for (Index r : B.ranks()) put_u32(os, std::uint32_t(r));
        put_u32(os, std::uint32_t(B.pos));
        put_u32(os, std::uint32_t(B.K));
        for (std::size_t k = 0; k < B.order(); ++k) {
            const Core& c = B.cores[k];
            const Index K = k == B.pos ? B.K : 1;
            const Index m = c.r0 * c.n * c.r1;
            for (Index a = 0; a < c.r0; ++a)
                for (Index i = 0; i < c.n; ++i)
                    for (Index b = 0; b < c.r1; ++b)
                        for (Index q = 0; q < K; ++q) put_f64(os, c.data[q * m + a + c.r0 * (i + c.n * b)]);
        }
    }
}

inline TTObject read_tt1f(std::istream& is) {
    using namespace detail;
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "TT1F", 4) != 0) throw std::runtime_error("TT1F: bad magic");
    const std::uint32_t N = get_u32(is);
    const std::uint32_t flags = get_u32(is);
    if (N == 0) throw std::runtime_error("TT1F: zero order");
    const bool op = flags & kTT1FOperator;
    const bool blk = flags & kTT1FBlock;
    Shape rows(N), cols(N);
    for (auto& n : rows) n = get_u32(is);
    if (op)
        for (auto& n : cols) n = get_u32(is);
    std::vector<Index> ranks(N + 1);
    for (auto& r : ranks) r = get_u32(is);
    std::size_t pos = 0;
    Index K = 1;
    if (blk) {
        pos = get_u32(is);
        K = get_u32(is);
        if (pos >= N || K == 0) throw std::runtime_error("TT1F: bad block header");
    }
    std::vector<Core> cores;
    for (std::uint32_t k = 0; k < N; ++k) {
        const Index r0 = ranks[k], r1 = ranks[k + 1];
        if (op) {
            const Index I = rows[k], J = cols[k];
            Core c(r0, I * J, r1);
            for (Index a = 0; a < r0; ++a)
                for (Index i = 0; i < I; ++i)
                    for (Index j = 0; j < J; ++j)
                        for (Index b = 0; b < r1; ++b) c(a, i + I * j, b) = get_f64(is);
            cores.push_back(std::move(c));
        } else {
            const Index n = rows[k];
            const Index Kk = blk && k == pos ? K : 1;
            const Index m = r0 * n * r1;
            Core c(r0, n, r1);
            c.data = Vec::Zero(m * Kk);
            for (Index a = 0; a < r0; ++a)
                for (Index i = 0; i < n; ++i)
                    for (Index b = 0; b < r1; ++b)
                        for (Index q = 0; q < Kk; ++q) c.data[q * m + a + r0 * (i + n * b)] = get_f64(is);
            cores.push_back(std::move(c));
        }
    }
    if (op) return TTOperator(std::move(cores), rows, cols);
    if (blk) {
        BlockTT B;
        B.cores = std::move(cores);
        B.pos = pos;
        B.K = K;
        return B;
    }
    return TTTrain(std::move(cores));
}

inline void save_tt1f(const std::string& path, const TTObject& obj) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_tt1f(os, obj);
}

inline TTObject load_tt1f(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_tt1f(is);
}

/// One value per line.
inline void save_csv_vector(const std::string& path, const Vec& v) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << std::setprecision(17);
    for (Index i = 0; i < v.size(); ++i) os << v[i] << "\n";
}

inline Vec load_csv_vector(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::vector<double> vals;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto c = line.find(',');
        vals.push_back(std::stod(line.substr(0, c)));
    }
    return Eigen::Map<Vec>(vals.data(), Index(vals.size()));
}

/// Header "i0,…,i{N-1},value", one row per entry in column-major order.
inline void save_dense_csv(const std::string& path, const DenseTensor& x) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    for (std::size_t n = 0; n < x.order(); ++n) os << "i" << n << ",";
    os << "value\n" << std::setprecision(17);
    std::vector<Index> idx(x.order(), 0);
    for (Index li = 0; li < x.data.size(); ++li) {
        for (Index i : idx) os << i << ",";
        os << x.data[li] << "\n";
        for (std::size_t n = 0; n < idx.size() && ++idx[n] == x.shape[n]; ++n) idx[n] = 0;
    }
}

/// Rows may come in any order; the shape is the per-column maximum plus one
/// and every entry must appear exactly once.
inline DenseTensor load_dense_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error(path + ": empty file");
    const std::size_t N = std::size_t(std::count(line.begin(), line.end(), ','));
    if (N == 0) throw std::runtime_error(path + ": need at least one index column");
    std::vector<std::vector<Index>> rows;
    std::vector<double> vals;
    Shape shape(N, 0);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t a = 0;
        for (std::size_t b; (b = line.find(',', a)) != std::string::npos; a = b + 1) f.push_back(line.substr(a, b - a));
        f.push_back(line.substr(a));
        if (f.size() != N + 1) throw std::runtime_error(path + ": wrong number of columns in \"" + line + "\"");
        std::vector<Index> idx(N);
        for (std::size_t n = 0; n < N; ++n) {
            idx[n] = std::stoll(f[n]);
            if (idx[n] < 0) throw std::runtime_error(path + ": negative index");
            shape[n] = std::max(shape[n], idx[n] + 1);
        }
        rows.push_back(std::move(idx));
        vals.push_back(std::stod(f[N]));
    }
    DenseTensor x(shape);
    if (Index(rows.size()) != x.data.size()) throw std::runtime_error(path + ": entry count does not match the index range");
    std::vector<bool> seen(std::size_t(x.data.size()), false);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Index li = 0;
        for (std::size_t n = N; n-- > 0;) li = li * shape[n] + rows[r][n];
        if (seen[std::size_t(li)]) throw std::runtime_error(path + ": duplicate entry");
        seen[std::size_t(li)] = true;
        x.data[li] = vals[r];
    }
    return x;
}

}  // namespace ttkit

#include "topicdiff/embedding.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace topicdiff {

namespace {
constexpr char kMagic[4] = {'D', 'T', 'M', 'E'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<char*>(b), 4);
}
void put_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<char*>(b), 8);
}
uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}
uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

bool text_path(const std::string& path) {
    auto dot = path.rfind('.');
    if (dot == std::string::npos) return false;
    std::string ext = path.substr(dot);
    return ext == ".csv" || ext == ".txt";
}
} // namespace

void EmbeddingMatrix::compute_stats() {
    mean.assign(dim, 0.0);
    stdev.assign(dim, 0.0);
    if (n_docs == 0) return;
    for (size_t i = 0; i < n_docs; ++i) {
        const double* r = row(i);
        for (size_t j = 0; j < dim; ++j) mean[j] += r[j];
    }
    for (size_t j = 0; j < dim; ++j) mean[j] /= static_cast<double>(n_docs);
    for (size_t i = 0; i < n_docs; ++i) {
        const double* r = row(i);
        for (size_t j = 0; j < dim; ++j) {
            double d = r[j] - mean[j];
            stdev[j] += d * d;
        }
    }
    for (size_t j = 0; j < dim; ++j) {
        stdev[j] = std::sqrt(stdev[j] / static_cast<double>(n_docs));
        if (stdev[j] < 1e-8) stdev[j] = 1e-8;
    }
}

void save_embeddings(const std::string& path, const EmbeddingMatrix& m) {
    if (text_path(path)) {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write embedding file: " + path);
        out.precision(9);
        for (size_t i = 0; i < m.n_docs; ++i) {
            const double* r = m.row(i);
            for (size_t j = 0; j < m.dim; ++j) {
                if (j) out << ',';
                out << static_cast<float>(r[j]);
            }
            out << '\n';
        }
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write embedding file: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u64(out, m.n_docs);
    put_u64(out, m.dim);
    std::vector<float> buf(m.rows.size());
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(m.rows[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw DataError("short write on embedding file: " + path);
}

EmbeddingMatrix load_embeddings(const std::string& path, size_t expected_docs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open embedding file: " + path);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    EmbeddingMatrix m;
    if (in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0) {
        uint32_t ver = get_u32(in);
        if (ver != kVersion)
            throw DataError("embedding file has unsupported version " + std::to_string(ver));
        m.n_docs = get_u64(in);
        m.dim = get_u64(in);
        if (!in) throw DataError("truncated embedding header: " + path);
        if (m.dim == 0) throw DataError("embedding file declares zero dimension: " + path);
        std::vector<float> buf(m.n_docs * m.dim);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (static_cast<size_t>(in.gcount()) != buf.size() * sizeof(float))
            throw DataError("truncated embedding body: " + path);
        m.rows.assign(buf.begin(), buf.end());
    } else {
        // text rows: comma or whitespace separated
        in.clear();
        in.seekg(0);
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            for (auto& c : line)
                if (c == ',') c = ' ';
            std::istringstream is(line);
            std::vector<double> vals;
            double v;
            while (is >> v) vals.push_back(static_cast<double>(static_cast<float>(v)));
            if (vals.empty()) continue;
            if (m.dim == 0) m.dim = vals.size();
            if (vals.size() != m.dim)
                throw DataError("embedding row " + std::to_string(lineno) + " has " +
                                std::to_string(vals.size()) + " values, expected " +
                                std::to_string(m.dim));
            m.rows.insert(m.rows.end(), vals.begin(), vals.end());
            ++m.n_docs;
        }
    }
    for (size_t i = 0; i < m.n_docs; ++i) {
        const double* r = m.row(i);
        for (size_t j = 0; j < m.dim; ++j)
            if (!std::isfinite(r[j]))
                throw DataError("non-finite embedding entry at row " + std::to_string(i));
    }
    if (expected_docs != 0 && m.n_docs != expected_docs)
        throw DataError("embedding row count " + std::to_string(m.n_docs) + " does not match corpus size " +
                        std::to_string(expected_docs));
    m.compute_stats();
    return m;
}

} // namespace topicdiff

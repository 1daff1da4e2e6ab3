#pragma once
#include <string>
#include <vector>

#include "errors.hpp"

namespace topicdiff {

// Per-document embedding rows with per-dimension moments. Math in doubles;
// the binary file format stores 32-bit floats.
struct EmbeddingMatrix {
    size_t n_docs = 0;
    size_t dim = 0;
    std::vector<double> rows; // row-major, n_docs x dim
    std::vector<double> mean, stdev;

    double* row(size_t i) { return rows.data() + i * dim; }
    const double* row(size_t i) const { return rows.data() + i * dim; }

    void compute_stats(); // population std; floored at 1e-8 to stay invertible
};

// Binary layout, little-endian: magic "DTME", u32 format version, u64 n_docs,
// u64 dim, then n_docs*dim f32 row-major. Paths ending in .csv/.txt use the
// text alternative (one comma-separated row per line). Loading sniffs the
// magic, so either file kind is accepted anywhere.
void save_embeddings(const std::string& path, const EmbeddingMatrix& m);
EmbeddingMatrix load_embeddings(const std::string& path, size_t expected_docs = 0);

} // namespace topicdiff

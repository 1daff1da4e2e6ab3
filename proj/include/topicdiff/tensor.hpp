#pragma once
#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace topicdiff {

// Row-major matrix of doubles. All model math runs in 64-bit; file formats
// downconvert to 32-bit on write.
struct Tensor2 {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    void resize(size_t r, size_t c) {
        rows = r;
        cols = c;
        data.assign(r * c, 0.0);
    }

    double* operator[](size_t r) { return data.data() + r * cols; }
    const double* operator[](size_t r) const { return data.data() + r * cols; }

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }

    size_t size() const { return data.size(); }

    void fill(double v) {
        for (auto& x : data) x = v;
    }

    bool finite() const {
        for (double x : data)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

// C = A * B
void matmul(const Tensor2& A, const Tensor2& B, Tensor2& C);
// C = A^T * B
void matmul_tn(const Tensor2& A, const Tensor2& B, Tensor2& C);
// C = A * B^T
void matmul_nt(const Tensor2& A, const Tensor2& B, Tensor2& C);
// C += A^T * B
void matmul_tn_acc(const Tensor2& A, const Tensor2& B, Tensor2& C);

} // namespace topicdiff

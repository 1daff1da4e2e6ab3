#include "topicdiff/tensor.hpp"

namespace topicdiff {

// ikj loop order keeps the inner loop contiguous for the autovectorizer
void matmul(const Tensor2& A, const Tensor2& B, Tensor2& C) {
    if (A.cols != B.rows) throw ConfigError("matmul: inner dimensions disagree");
    C.resize(A.rows, B.cols);
    size_t n = B.cols;
    for (size_t i = 0; i < A.rows; ++i) {
        const double* arow = A[i];
        double* crow = C[i];
        for (size_t k = 0; k < A.cols; ++k) {
            double a = arow[k];
            const double* brow = B[k];
            for (size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

void matmul_tn(const Tensor2& A, const Tensor2& B, Tensor2& C) {
    if (A.rows != B.rows) throw ConfigError("matmul_tn: outer dimensions disagree");
    C.resize(A.cols, B.cols);
    matmul_tn_acc(A, B, C);
}

void matmul_tn_acc(const Tensor2& A, const Tensor2& B, Tensor2& C) {
    if (A.rows != B.rows || C.rows != A.cols || C.cols != B.cols)
        throw ConfigError("matmul_tn_acc: dimensions disagree");
    size_t n = B.cols;
    for (size_t k = 0; k < A.rows; ++k) {
        const double* arow = A[k];
        const double* brow = B[k];
        for (size_t i = 0; i < A.cols; ++i) {
            double a = arow[i];
            double* crow = C[i];
            for (size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
        }
    }
}

void matmul_nt(const Tensor2& A, const Tensor2& B, Tensor2& C) {
    if (A.cols != B.cols) throw ConfigError("matmul_nt: inner dimensions disagree");
    C.resize(A.rows, B.rows);
    for (size_t i = 0; i < A.rows; ++i) {
        const double* arow = A[i];
        double* crow = C[i];
        for (size_t j = 0; j < B.rows; ++j) {
            const double* brow = B[j];
            double s = 0.0;
            for (size_t k = 0; k < A.cols; ++k) s += arow[k] * brow[k];
            crow[j] = s;
        }
    }
}

} // namespace topicdiff

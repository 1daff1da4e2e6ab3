#include "topicdiff/activation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace topicdiff {

namespace {
bool g_exact = false;
constexpr double kC = 0.7978845608028653558798921198687; // sqrt(2/pi)
constexpr double kA = 0.044715;
} // namespace

void set_gelu_exact(bool on) { g_exact = on; }
bool gelu_exact() { return g_exact; }

double gelu(double x) {
    if (g_exact) {
        return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
    }
    double u = kC * (x + kA * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_grad(double x) {
    if (g_exact) {
        double phi = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
        double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        return phi + x * pdf;
    }
    double u = kC * (x + kA * x * x * x);
    double t = std::tanh(u);
    double sech2 = 1.0 - t * t;
    return 0.5 * (1.0 + t) + 0.5 * x * sech2 * kC * (1.0 + 3.0 * kA * x * x);
}

void softmax_inplace(double* v, size_t n) {
    if (n == 0) return;
    double mx = *std::max_element(v, v + n);
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        v[i] = std::exp(v[i] - mx);
        sum += v[i];
    }
    for (size_t i = 0; i < n; ++i) v[i] /= sum;
}

} // namespace topicdiff

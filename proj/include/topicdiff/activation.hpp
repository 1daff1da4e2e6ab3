#pragma once
#include <cstddef>

namespace topicdiff {

// GELU defaults to the tanh approximation
//   0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
// for deterministic cross-platform behavior; the exact erf form is opt-in.
void set_gelu_exact(bool on);
bool gelu_exact();

double gelu(double x);
double gelu_grad(double x);

// numerically stabilized by max subtraction; overwrites v
void softmax_inplace(double* v, size_t n);

} // namespace topicdiff

#pragma once
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace topicdiff {

// View onto one parameter array and its gradient accumulator.
struct ParamRef {
    double* w = nullptr;
    double* g = nullptr;
    size_t n = 0;
};

// Adam with bias correction; defaults beta1=0.9, beta2=0.999, eps=1e-8.
class Adam {
public:
    Adam() = default;
    explicit Adam(std::vector<ParamRef> params, double lr = 1e-3, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    // applies accumulated gradients; lr_now < 0 means use the configured lr
    void step(double lr_now = -1.0);

    void zero_grad();

    size_t step_count() const { return t_; }
    double lr() const { return lr_; }

    // flat moment vectors in registration order, for checkpointing
    std::vector<double> flat_m() const;
    std::vector<double> flat_v() const;
    void restore(size_t step_count, const std::vector<double>& m, const std::vector<double>& v);

private:
    std::vector<ParamRef> p_;
    std::vector<std::vector<double>> m_, v_;
    size_t t_ = 0;
    double lr_ = 1e-3, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
};

// One-cycle learning rate: cosine warmup from max_lr/div_factor up to max_lr
// over warmup_fraction of the run, then cosine decay to max_lr/final_div_factor.
struct OneCycle {
    double max_lr = 1e-3;
    size_t total_steps = 1;
    double warmup_fraction = 0.3;
    double div_factor = 25.0;
    double final_div_factor = 1e4;

    double lr(size_t step) const;
};

} // namespace topicdiff

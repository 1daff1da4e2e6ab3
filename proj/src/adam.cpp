#include "topicdiff/adam.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace topicdiff {

Adam::Adam(std::vector<ParamRef> params, double lr, double beta1, double beta2, double eps)
    : p_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    m_.reserve(p_.size());
    v_.reserve(p_.size());
    for (const auto& p : p_) {
        m_.emplace_back(p.n, 0.0);
        v_.emplace_back(p.n, 0.0);
    }
}

void Adam::step(double lr_now) {
    double lr = lr_now < 0 ? lr_ : lr_now;
    ++t_;
    double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (size_t k = 0; k < p_.size(); ++k) {
        double* w = p_[k].w;
        double* g = p_[k].g;
        double* m = m_[k].data();
        double* v = v_[k].data();
        for (size_t i = 0; i < p_[k].n; ++i) {
            if (!std::isfinite(g[i]))
                throw NumericError("Adam: non-finite gradient in parameter block " + std::to_string(k));
            m[i] = b1_ * m[i] + (1.0 - b1_) * g[i];
            v[i] = b2_ * v[i] + (1.0 - b2_) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void Adam::zero_grad() {
    for (auto& p : p_)
        for (size_t i = 0; i < p.n; ++i) p.g[i] = 0.0;
}

std::vector<double> Adam::flat_m() const {
    std::vector<double> out;
    for (const auto& m : m_) out.insert(out.end(), m.begin(), m.end());
    return out;
}

std::vector<double> Adam::flat_v() const {
    std::vector<double> out;
    for (const auto& v : v_) out.insert(out.end(), v.begin(), v.end());
    return out;
}

void Adam::restore(size_t step_count, const std::vector<double>& m, const std::vector<double>& v) {
    size_t total = 0;
    for (const auto& p : p_) total += p.n;
    if (m.size() != total || v.size() != total)
        throw DataError("Adam::restore: moment size mismatch");
    t_ = step_count;
    size_t off = 0;
    for (size_t k = 0; k < p_.size(); ++k) {
        for (size_t i = 0; i < p_[k].n; ++i) {
            m_[k][i] = m[off + i];
            v_[k][i] = v[off + i];
        }
        off += p_[k].n;
    }
}

double OneCycle::lr(size_t step) const {
    if (step >= total_steps) throw ConfigError("OneCycle: step out of range");
    size_t warm = static_cast<size_t>(std::llround(warmup_fraction * static_cast<double>(total_steps)));
    double start = max_lr / div_factor;
    double floor = max_lr / final_div_factor;
    if (step < warm) {
        double p = static_cast<double>(step) / static_cast<double>(warm);
        return start + (max_lr - start) * 0.5 * (1.0 - std::cos(std::numbers::pi * p));
    }
    size_t span = total_steps - warm;
    size_t denom = span > 1 ? span - 1 : 1;
    double p = static_cast<double>(step - warm) / static_cast<double>(denom);
    return floor + (max_lr - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * p));
}

} // namespace topicdiff

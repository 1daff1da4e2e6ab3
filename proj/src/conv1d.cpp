#include "topicdiff/conv1d.hpp"

#include <cmath>

namespace topicdiff {

Conv1dLayer::Conv1dLayer(size_t out_channels, size_t in_channels, size_t kernel, size_t str,
                         size_t pad, Act a)
    : in_ch(in_channels), out_ch(out_channels), ksize(kernel), stride(str), padding(pad), act(a),
      w(out_channels * in_channels * kernel, 0.0), gw(w.size(), 0.0), b(out_channels, 0.0),
      gb(out_channels, 0.0) {
    if (stride == 0) throw ConfigError("Conv1dLayer: stride must be positive");
}

size_t Conv1dLayer::out_len(size_t in_len) const {
    if (in_len + 2 * padding < ksize)
        throw ConfigError("Conv1dLayer: input shorter than kernel after padding");
    size_t span = in_len + 2 * padding - ksize;
    if (span % stride != 0)
        throw ConfigError("Conv1dLayer: length does not divide stride exactly");
    return span / stride + 1;
}

void Conv1dLayer::init(Rng& rng) {
    double scale = 1.0 / std::sqrt(static_cast<double>(in_ch * ksize));
    for (auto& x : w) x = rng.gaussian() * scale;
    for (auto& x : b) x = 0.0;
}

void Conv1dLayer::forward(const Tensor2& x, Tensor2& y, bool cache) {
    if (x.rows != in_ch) throw ConfigError("Conv1dLayer: channel count mismatch");
    size_t L = x.cols;
    size_t Lo = out_len(L);
    y.resize(out_ch, Lo);
    for (size_t oc = 0; oc < out_ch; ++oc) {
        double* yrow = y[oc];
        for (size_t j = 0; j < Lo; ++j) yrow[j] = b[oc];
        for (size_t ic = 0; ic < in_ch; ++ic) {
            const double* xrow = x[ic];
            const double* wk = &w[(oc * in_ch + ic) * ksize];
            for (size_t j = 0; j < Lo; ++j) {
                long base = static_cast<long>(j * stride) - static_cast<long>(padding);
                double s = 0.0;
                for (size_t k = 0; k < ksize; ++k) {
                    long p = base + static_cast<long>(k);
                    if (p >= 0 && p < static_cast<long>(L)) s += wk[k] * xrow[p];
                }
                yrow[j] += s;
            }
        }
    }
    if (cache) {
        in_cache = x;
        if (act == Act::Gelu) pre_cache = y;
        has_cache = true;
    }
    if (act == Act::Gelu)
        for (auto& v : y.data) v = gelu(v);
}

void Conv1dLayer::backward(const Tensor2& dy, Tensor2& dx) {
    if (!has_cache) throw ConfigError("Conv1dLayer: backward without cached forward");
    Tensor2 dz = dy;
    if (act == Act::Gelu) {
        for (size_t i = 0; i < dz.size(); ++i)
            dz.data[i] *= gelu_grad(pre_cache.data[i]);
    }
    size_t L = in_cache.cols;
    size_t Lo = dz.cols;
    dx.resize(in_ch, L);
    for (size_t oc = 0; oc < out_ch; ++oc) {
        const double* drow = dz[oc];
        for (size_t j = 0; j < Lo; ++j) gb[oc] += drow[j];
        for (size_t ic = 0; ic < in_ch; ++ic) {
            const double* xrow = in_cache[ic];
            double* dxrow = dx[ic];
            const double* wk = &w[(oc * in_ch + ic) * ksize];
            double* gwk = &gw[(oc * in_ch + ic) * ksize];
            for (size_t j = 0; j < Lo; ++j) {
                long base = static_cast<long>(j * stride) - static_cast<long>(padding);
                double d = drow[j];
                for (size_t k = 0; k < ksize; ++k) {
                    long p = base + static_cast<long>(k);
                    if (p >= 0 && p < static_cast<long>(L)) {
                        gwk[k] += d * xrow[p];
                        dxrow[p] += d * wk[k];
                    }
                }
            }
        }
    }
}

void Conv1dLayer::zero_grad() {
    for (auto& x : gw) x = 0.0;
    for (auto& x : gb) x = 0.0;
}

} // namespace topicdiff

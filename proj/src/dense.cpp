#include "topicdiff/dense.hpp"

#include <cmath>

namespace topicdiff {

DenseLayer::DenseLayer(size_t out_dim, size_t in_dim, Act a)
    : w(out_dim, in_dim), b(out_dim, 0.0), act(a), gw(out_dim, in_dim), gb(out_dim, 0.0) {}

void DenseLayer::init(Rng& rng) {
    double scale = 1.0 / std::sqrt(static_cast<double>(w.cols > 0 ? w.cols : 1));
    for (auto& x : w.data) x = rng.gaussian() * scale;
    for (auto& x : b) x = 0.0;
}

void DenseLayer::forward(const Tensor2& x, Tensor2& y, bool cache) {
    if (x.cols != w.cols) throw ConfigError("DenseLayer: input width mismatch");
    matmul_nt(x, w, y); // y = x * w^T
    for (size_t i = 0; i < y.rows; ++i) {
        double* row = y[i];
        for (size_t j = 0; j < y.cols; ++j) row[j] += b[j];
    }
    if (cache) {
        in_cache = x;
        if (act == Act::Gelu) pre_cache = y;
        has_cache = true;
    }
    if (act == Act::Gelu) {
        for (auto& v : y.data) v = gelu(v);
    } else if (act == Act::Softmax) {
        for (size_t i = 0; i < y.rows; ++i) softmax_inplace(y[i], y.cols);
    }
    if (cache && act == Act::Softmax) out_cache = y;
}

void DenseLayer::backward(const Tensor2& dy, Tensor2& dx) {
    if (!has_cache) throw ConfigError("DenseLayer: backward without cached forward");
    Tensor2 dz = dy; // gradient at the pre-activation
    if (act == Act::Gelu) {
        for (size_t i = 0; i < dz.size(); ++i)
            dz.data[i] *= gelu_grad(pre_cache.data[i]);
    } else if (act == Act::Softmax) {
        for (size_t i = 0; i < dz.rows; ++i) {
            const double* y = out_cache[i];
            double* d = dz[i];
            double dot = 0.0;
            for (size_t j = 0; j < dz.cols; ++j) dot += d[j] * y[j];
            for (size_t j = 0; j < dz.cols; ++j) d[j] = y[j] * (d[j] - dot);
        }
    }
    matmul_tn_acc(dz, in_cache, gw); // gw += dz^T x
    for (size_t i = 0; i < dz.rows; ++i) {
        const double* row = dz[i];
        for (size_t j = 0; j < dz.cols; ++j) gb[j] += row[j];
    }
    matmul(dz, w, dx); // dx = dz * w
}

void DenseLayer::zero_grad() {
    gw.fill(0.0);
    for (auto& x : gb) x = 0.0;
}

void Dropout::forward(Tensor2& x, Rng& rng, bool training) {
    if (!training || rate <= 0.0) {
        keep.clear();
        return;
    }
    keep.assign(x.size(), 1);
    double inv = 1.0 / (1.0 - rate);
    for (size_t i = 0; i < x.size(); ++i) {
        if (rng.uniform() < rate) {
            keep[i] = 0;
            x.data[i] = 0.0;
        } else {
            x.data[i] *= inv;
        }
    }
}

void Dropout::backward(Tensor2& dx) const {
    if (keep.empty()) return;
    double inv = 1.0 / (1.0 - rate);
    for (size_t i = 0; i < dx.size(); ++i)
        dx.data[i] = keep[i] ? dx.data[i] * inv : 0.0;
}

Mlp::Mlp(const std::vector<size_t>& dims, Act out_act, double dropout_rate) {
    if (dims.size() < 2) throw ConfigError("Mlp: need at least input and output dims");
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        bool last = i + 2 == dims.size();
        layers.emplace_back(dims[i + 1], dims[i], last ? out_act : Act::Gelu);
    }
    if (dropout_rate > 0.0) {
        drops.resize(layers.size() - 1);
        for (auto& d : drops) d.rate = dropout_rate;
    }
}

void Mlp::init(Rng& rng) {
    for (auto& l : layers) l.init(rng);
}

void Mlp::forward(const Tensor2& x, Tensor2& y, Rng* rng, bool training) {
    Tensor2 cur = x;
    Tensor2 next;
    for (size_t i = 0; i < layers.size(); ++i) {
        layers[i].forward(cur, next, training);
        if (i < drops.size()) {
            bool on = training && drops[i].rate > 0.0;
            if (on && rng == nullptr)
                throw ConfigError("Mlp: dropout in training mode needs an Rng");
            if (on)
                drops[i].forward(next, *rng, true);
            else
                drops[i].keep.clear();
        }
        cur = std::move(next);
        next = Tensor2();
    }
    y = std::move(cur);
}

void Mlp::backward(const Tensor2& dy, Tensor2& dx) {
    Tensor2 cur = dy;
    Tensor2 prev;
    for (size_t i = layers.size(); i-- > 0;) {
        if (i < drops.size()) drops[i].backward(cur);
        layers[i].backward(cur, prev);
        cur = std::move(prev);
        prev = Tensor2();
    }
    dx = std::move(cur);
}

void Mlp::zero_grad() {
    for (auto& l : layers) l.zero_grad();
}

} // namespace topicdiff

#pragma once
#include <vector>

#include "activation.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace topicdiff {

enum class Act { Identity, Gelu, Softmax };

// Fully-connected layer, batch-first: forward maps (B x in) -> (B x out).
// Gradients are accumulated into gw/gb until zero_grad().
struct DenseLayer {
    Tensor2 w;              // out x in
    std::vector<double> b;  // out
    Act act = Act::Identity;

    Tensor2 gw;
    std::vector<double> gb;

    // caches from the last cached forward
    Tensor2 in_cache;   // B x in
    Tensor2 pre_cache;  // B x out, pre-activation (kept for Gelu)
    Tensor2 out_cache;  // B x out, post-activation (kept for Softmax)
    bool has_cache = false;

    DenseLayer() = default;
    DenseLayer(size_t out_dim, size_t in_dim, Act a);

    size_t in_dim() const { return w.cols; }
    size_t out_dim() const { return w.rows; }

    // weights ~ N(0, 1/in_dim), biases 0
    void init(Rng& rng);

    void forward(const Tensor2& x, Tensor2& y, bool cache);

    // dy: B x out. Accumulates gw/gb, writes dx (B x in).
    void backward(const Tensor2& dy, Tensor2& dx);

    void zero_grad();
};

// Inverted dropout: training mode zeroes entries with probability rate and
// scales survivors by 1/(1-rate); evaluation mode is the identity.
struct Dropout {
    double rate = 0.0;
    std::vector<uint8_t> keep;

    void forward(Tensor2& x, Rng& rng, bool training);
    void backward(Tensor2& dx) const;
};

// Plain stack of dense layers with optional dropout after each hidden
// activation. The building block for the encoder/decoder stacks.
struct Mlp {
    std::vector<DenseLayer> layers;
    std::vector<Dropout> drops; // size layers.size()-1 when dropout_rate > 0

    Mlp() = default;
    // dims = {in, h1, ..., out}; hidden activations Gelu, final `out_act`
    Mlp(const std::vector<size_t>& dims, Act out_act, double dropout_rate = 0.0);

    void init(Rng& rng);
    void forward(const Tensor2& x, Tensor2& y, Rng* rng, bool training);
    void backward(const Tensor2& dy, Tensor2& dx);
    void zero_grad();
};

} // namespace topicdiff

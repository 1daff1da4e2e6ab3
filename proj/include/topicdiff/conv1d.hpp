#pragma once
#include <vector>

#include "dense.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace topicdiff {

// 1-D cross-correlation over (channels x length) maps, zero padding.
// Output length = (L + 2*padding - kernel)/stride + 1, which must divide
// exactly. Weight layout: [out_ch][in_ch][k] flattened.
struct Conv1dLayer {
    size_t in_ch = 0, out_ch = 0, ksize = 3, stride = 1, padding = 1;
    Act act = Act::Identity;

    std::vector<double> w, gw;
    std::vector<double> b, gb;

    Tensor2 in_cache;  // in_ch x L
    Tensor2 pre_cache; // out_ch x Lout
    bool has_cache = false;

    Conv1dLayer() = default;
    Conv1dLayer(size_t out_channels, size_t in_channels, size_t kernel, size_t str, size_t pad, Act a);

    size_t out_len(size_t in_len) const;

    void init(Rng& rng);
    void forward(const Tensor2& x, Tensor2& y, bool cache);
    void backward(const Tensor2& dy, Tensor2& dx);
    void zero_grad();

    double& wt(size_t oc, size_t ic, size_t k) { return w[(oc * in_ch + ic) * ksize + k]; }
    double wt(size_t oc, size_t ic, size_t k) const { return w[(oc * in_ch + ic) * ksize + k]; }
};

} // namespace topicdiff

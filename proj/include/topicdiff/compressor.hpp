#pragma once
#include <functional>
#include <ostream>
#include <vector>

#include "adam.hpp"
#include "conv1d.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace topicdiff {

// Sequence-of-hidden-states compressor: the N_1 axis is treated as channels
// and D_token as the spatial length, so a (256 x 768) block squeezes through
// channel plan 256 -> 32 -> 4 into a flat 3072-wide embedding.
struct CompressorConfig {
    size_t n_seq = 256;    // input channels
    size_t d_token = 768;  // spatial length per channel
    std::vector<size_t> channel_plan = {256, 32, 4};
    size_t kernel = 3, stride = 1, padding = 1;
    double dropout = 0.2;

    size_t d_embed() const { return channel_plan.back() * d_token; }
    void validate() const;
};

struct CompressorModel {
    CompressorConfig cfg;
    std::vector<Conv1dLayer> encoder; // plan front-to-back
    std::vector<Conv1dLayer> decoder; // mirrored plan
    std::vector<Dropout> enc_drop, dec_drop;

    explicit CompressorModel(CompressorConfig c = {});
    void init(Rng& rng);

    // (n_seq x d_token) -> flat embedding of length d_embed; eval mode
    std::vector<double> compress(const Tensor2& hidden);
    // flat embedding -> (n_seq x d_token); eval mode
    Tensor2 decompress(const std::vector<double>& e);

    // training-mode round trip with caches kept for backward
    void forward_train(const Tensor2& hidden, Tensor2& recon, Rng& rng);
    void backward(const Tensor2& drecon);

    std::vector<ParamRef> params();
    void zero_grad();
};

struct CompressorTrainLog {
    std::vector<double> train_mse, val_mse;
    size_t best_epoch = 0;
};

// Reconstruction MSE with a held-out slice scored every epoch; the weights
// from the best validation epoch are returned. A single-sample dataset is
// validated against itself.
CompressorModel train_compressor(
    const std::vector<Tensor2>& data, size_t epochs, uint64_t seed, CompressorConfig cfg = {},
    double lr = 1e-3, double val_fraction = 0.1, CompressorTrainLog* log = nullptr,
    std::ostream* verbose = nullptr,
    const std::function<void(const CompressorModel&, size_t)>& on_epoch = {},
    CompressorModel* warm = nullptr);

} // namespace topicdiff

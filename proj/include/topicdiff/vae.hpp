#pragma once
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "adam.hpp"
#include "dense.hpp"
#include "embedding.hpp"
#include "rng.hpp"

namespace topicdiff {

// Full: residual reconstruction from t + t', all three loss terms.
// NoResidual: reconstruction from t' alone, all three loss terms.
// NoBowRecon: bag-of-words loss term dropped (wiring intact); t' serves as the
//             per-document topic representation; default lr drops to 0.0005.
enum class VaeVariant { Full, NoResidual, NoBowRecon };

const char* variant_name(VaeVariant v);
VaeVariant variant_from_name(const std::string& s);

struct VaeConfig {
    size_t T = 10;
    size_t D_topic = 64;
    size_t D_embed = 0; // filled from data
    size_t N_BoW = 0;   // filled from data
    VaeVariant variant = VaeVariant::Full;
    double lr = 0.0; // 0 = variant default
    size_t batch = 256;
    double dropout = 0.0;
    double val_fraction = 0.1;

    double resolved_lr() const {
        if (lr > 0.0) return lr;
        return variant == VaeVariant::NoBowRecon ? 5e-4 : 1e-3;
    }
    // hidden plans: encoder/decoder stacks use [D/2, D/4] of the embedding
    // dimension (enc3, dec4) or the vocabulary size (enc4)
    std::vector<size_t> enc3_dims() const;
    std::vector<size_t> enc4_dims() const;
    std::vector<size_t> dec4_dims() const;
    void validate() const;
};

struct VaeLoss {
    double total = 0, bow = 0, mse = 0, kl = 0;
};

// One batch worth of forward intermediates (rows = batch size).
struct VaeBatch {
    Tensor2 e;                     // B x D_embed
    Tensor2 mu, log_sigma, noise;  // B x T
    Tensor2 eta, t;                // B x T
    Tensor2 xprime;                // B x N_BoW
    Tensor2 tprime;                // B x T
    Tensor2 dec_in;                // B x T
    Tensor2 eprime;                // B x D_embed
};

struct TopicVae {
    VaeConfig cfg;
    Mlp enc3; // D_embed -> D/2 -> D/4 -> 2T, identity head (mu | log_sigma)
    Mlp enc4; // N_BoW -> N/2 -> N/4 -> T, identity head
    Mlp dec4; // T -> D/2 -> D/4 -> D_embed, identity head
    Tensor2 e_T, e_V;   // T x D_topic, N_BoW x D_topic
    Tensor2 ge_T, ge_V;
    Tensor2 E;          // T x N_BoW, rows softmaxed; refreshed per batch

    // training-embedding moments, handed to the diffusion stage
    std::vector<double> emb_mean, emb_std;

    explicit TopicVae(VaeConfig c = {});

    void init(Rng& rng);
    void compute_E();

    // Training forward: noise sampled from rng, dropout active. Inference
    // forward (rng = nullptr): eta = mu, dropout off.
    VaeLoss forward(VaeBatch& b, const uint32_t* const* bow_rows, Rng* rng, bool training);
    void backward(const VaeBatch& b, const uint32_t* const* bow_rows);

    std::vector<ParamRef> params();
    void zero_grad();

    // t = softmax(mu), no sampling (mutates scratch caches, hence non-const)
    std::vector<double> infer_topics(const double* e);
    // what clustering metrics run on: t, except t' for NoBowRecon
    std::vector<double> topic_representation(const double* e);

    std::vector<double> decode_bow(const std::vector<double>& t);
    std::vector<double> reencode_bow(const std::vector<double>& xprime);
    // X' = t E; t' = enc4(X'); dec4 input per variant
    std::vector<double> decode_embedding_from_topic(const std::vector<double>& tvec);

    // per topic, indices of the k most probable words; ties by vocabulary order
    std::vector<std::vector<size_t>> top_keywords(size_t k = 25);
};

struct VaeTrainLog {
    std::vector<VaeLoss> train_epochs;
    std::vector<VaeLoss> val_epochs;
    size_t best_epoch = 0;
};

// Documents with empty BoW are excluded. Deterministic under seed. Keeps the
// weights from the epoch with the best validation total loss (when a
// validation split exists), otherwise the final weights.
TopicVae train_vae(const EmbeddingMatrix& emb, const std::vector<std::vector<uint32_t>>& bows,
                   VaeConfig cfg, size_t epochs, uint64_t seed, VaeTrainLog* log = nullptr,
                   std::ostream* verbose = nullptr,
                   const std::function<void(const TopicVae&, size_t)>& on_epoch = {},
                   TopicVae* warm = nullptr);

} // namespace topicdiff

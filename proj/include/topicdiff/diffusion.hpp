#pragma once
#include <functional>
#include <ostream>
#include <vector>

#include "adam.hpp"
#include "dense.hpp"
#include "embedding.hpp"
#include "rng.hpp"
#include "vae.hpp"

namespace topicdiff {

struct NoiseSchedule {
    size_t T_steps = 0;
    std::vector<double> beta, alpha, alpha_bar; // alpha_bar via running product
};

NoiseSchedule make_schedule(size_t T_steps = 1000, double beta_start = 1e-4,
                            double beta_end = 0.02);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps ; t in [1, T]
void forward_noise(const double* x0, const double* eps, size_t dim, const NoiseSchedule& s,
                   size_t t, double* out);

// interleaved sin/cos positional code, geometric frequencies base 10000
std::vector<double> sinusoid(size_t t, size_t dim);

// per-dimension standardization fit on the training embeddings
struct EmbeddingNormalizer {
    std::vector<double> mean, stdev;
    void fit(const EmbeddingMatrix& m);
    void normalize(double* x, size_t dim) const;
    void denormalize(double* x, size_t dim) const;
};

// Five dense layers around the residual block:
//   z1 = x_t + sinusoid(t); z2 = FC1(z1); z3 = FC2(z2); z4 = FC3(z3);
//   z5 = FC4(z4 + z3); out = FC5(z5 + z2)
// FC1..FC4 carry GELU, FC5 is linear. Hidden widths default to (2D, D): the
// compress/reconstruct pair needs enough rank that the learned noise response
// stays near-linear in x_t over the whole reverse trajectory, and narrower
// plans destabilize full-length ancestral sampling.
struct DiffusorConfig {
    size_t dim = 0;
    size_t h1 = 0, h2 = 0; // 0 = defaults 2*dim, dim
    size_t batch = 256;
    double lr = 1e-3;

    size_t h1_resolved() const { return h1 ? h1 : 2 * dim; }
    size_t h2_resolved() const { return h2 ? h2 : dim; }
};

struct Diffusor {
    DiffusorConfig cfg;
    DenseLayer fc1, fc2, fc3, fc4, fc5;

    // caches for the residual sums
    Tensor2 z2_cache, z3_cache;

    explicit Diffusor(DiffusorConfig c = {});
    void init(Rng& rng); // fc5 starts at zero so the initial noise response is null

    // rows of x are x_t vectors; ts holds the matching timestep per row
    void forward(const Tensor2& x, const std::vector<size_t>& ts, Tensor2& out, bool cache);
    void backward(const Tensor2& dout, Tensor2& dx);

    std::vector<ParamRef> params();
    void zero_grad();
};

struct DiffusorTrainLog {
    std::vector<double> epoch_loss;
};

// Per step: uniform t in [1, T], eps ~ N(0, I), minimize ||z(x_t, t) - eps||^2
// on normalized embeddings. An "epoch" is ceil(n/batch) sampled batches.
std::pair<Diffusor, EmbeddingNormalizer> train_diffusor(
    const EmbeddingMatrix& data, const NoiseSchedule& sched, size_t epochs, uint64_t seed,
    DiffusorConfig cfg = {}, DiffusorTrainLog* log = nullptr, std::ostream* verbose = nullptr,
    const std::function<void(const Diffusor&, const EmbeddingNormalizer&, size_t)>& on_epoch = {},
    Diffusor* warm = nullptr);

// Ancestral reverse updates from from_t down to 1:
//   x_{t-1} = (x_t - beta_t/sqrt(1-abar_t) z(x_t,t)) / sqrt(alpha_t) + sigma_t xi
// sigma_t^2 = beta_t, no noise at t = 1; deterministic variant forces
// sigma_t = 0 throughout. from_t = 0 returns the input unchanged.
std::vector<double> denoise(Diffusor& model, const EmbeddingNormalizer& norm,
                            const std::vector<double>& x, size_t from_t,
                            const NoiseSchedule& sched, Rng& rng, bool deterministic = false);

// X' = decode_bow(t); t' = reencode_bow(X'); e' per variant; then denoise(e')
std::vector<double> generate_from_topic(const std::vector<double>& t_vec, TopicVae& vae,
                                        Diffusor& diff, const EmbeddingNormalizer& norm,
                                        size_t from_t, const NoiseSchedule& sched, Rng& rng,
                                        bool deterministic = false);

} // namespace topicdiff

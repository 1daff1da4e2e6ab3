#include "topicdiff/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace topicdiff {

NoiseSchedule make_schedule(size_t T_steps, double beta_start, double beta_end) {
    if (T_steps == 0) throw ConfigError("noise schedule needs at least one step");
    if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
        throw ConfigError("noise schedule betas must satisfy 0 < start <= end < 1");
    NoiseSchedule s;
    s.T_steps = T_steps;
    s.beta.resize(T_steps);
    s.alpha.resize(T_steps);
    s.alpha_bar.resize(T_steps);
    double run = 1.0;
    for (size_t i = 0; i < T_steps; ++i) {
        double frac = T_steps == 1 ? 0.0 : double(i) / double(T_steps - 1);
        s.beta[i] = beta_start + (beta_end - beta_start) * frac;
        s.alpha[i] = 1.0 - s.beta[i];
        run *= s.alpha[i];
        s.alpha_bar[i] = run;
    }
    return s;
}

void forward_noise(const double* x0, const double* eps, size_t dim, const NoiseSchedule& s,
                   size_t t, double* out) {
    if (t < 1 || t > s.T_steps) throw ConfigError("forward noise timestep out of range");
    double ab = s.alpha_bar[t - 1];
    double ca = std::sqrt(ab), cb = std::sqrt(1.0 - ab);
    for (size_t i = 0; i < dim; ++i) out[i] = ca * x0[i] + cb * eps[i];
}

std::vector<double> sinusoid(size_t t, size_t dim) {
    std::vector<double> out(dim);
    for (size_t k = 0; k < dim; ++k) {
        size_t pair = k / 2;
        double ang = double(t) * std::pow(10000.0, -2.0 * double(pair) / double(dim));
        out[k] = (k % 2 == 0) ? std::sin(ang) : std::cos(ang);
    }
    return out;
}

void EmbeddingNormalizer::fit(const EmbeddingMatrix& m) {
    if (m.n_docs == 0 || m.dim == 0) throw DataError("cannot fit normalizer on empty embeddings");
    mean.assign(m.dim, 0.0);
    stdev.assign(m.dim, 0.0);
    for (size_t r = 0; r < m.n_docs; ++r) {
        const double* row = m.rows.data() + r * m.dim;
        for (size_t c = 0; c < m.dim; ++c) {
            mean[c] += row[c];
            stdev[c] += row[c] * row[c];
        }
    }
    for (size_t c = 0; c < m.dim; ++c) {
        mean[c] /= double(m.n_docs);
        double var = stdev[c] / double(m.n_docs) - mean[c] * mean[c];
        stdev[c] = std::sqrt(var > 0.0 ? var : 0.0);
        if (stdev[c] < 1e-8) stdev[c] = 1e-8;
    }
}

void EmbeddingNormalizer::normalize(double* x, size_t dim) const {
    if (dim != mean.size()) throw ConfigError("normalizer dimension mismatch");
    for (size_t i = 0; i < dim; ++i) x[i] = (x[i] - mean[i]) / stdev[i];
}

void EmbeddingNormalizer::denormalize(double* x, size_t dim) const {
    if (dim != mean.size()) throw ConfigError("normalizer dimension mismatch");
    for (size_t i = 0; i < dim; ++i) x[i] = x[i] * stdev[i] + mean[i];
}

Diffusor::Diffusor(DiffusorConfig c) : cfg(c) {
    if (cfg.dim == 0) return; // deferred until training resolves the width
    size_t h1 = cfg.h1_resolved(), h2 = cfg.h2_resolved();
    fc1 = DenseLayer(h1, cfg.dim, Act::Gelu);
    fc2 = DenseLayer(h2, h1, Act::Gelu);
    fc3 = DenseLayer(h2, h2, Act::Gelu);
    fc4 = DenseLayer(h1, h2, Act::Gelu);
    fc5 = DenseLayer(cfg.dim, h1, Act::Identity);
}

void Diffusor::init(Rng& rng) {
    fc1.init(rng);
    fc2.init(rng);
    fc3.init(rng);
    fc4.init(rng);
    fc5.init(rng);
    // the output head starts at zero: a fresh model predicts no noise at all,
    // which keeps the first reverse trajectories bounded while Adam warms up
    fc5.w.fill(0.0);
}

void Diffusor::forward(const Tensor2& x, const std::vector<size_t>& ts, Tensor2& out,
                       bool cache) {
    if (x.cols != cfg.dim) throw ConfigError("diffusor input width mismatch");
    if (ts.size() != x.rows) throw ConfigError("diffusor needs one timestep per row");
    Tensor2 z1 = x;
    for (size_t r = 0; r < z1.rows; ++r) {
        std::vector<double> pos = sinusoid(ts[r], cfg.dim);
        double* row = z1[r];
        for (size_t c = 0; c < cfg.dim; ++c) row[c] += pos[c];
    }
    Tensor2 z2, z3, z4, z5;
    fc1.forward(z1, z2, cache);
    fc2.forward(z2, z3, cache);
    fc3.forward(z3, z4, cache);
    if (cache) {
        z2_cache = z2;
        z3_cache = z3;
    }
    for (size_t i = 0; i < z4.size(); ++i) z4.data[i] += z3.data[i];
    fc4.forward(z4, z5, cache);
    for (size_t i = 0; i < z5.size(); ++i) z5.data[i] += z2.data[i];
    fc5.forward(z5, out, cache);
}

void Diffusor::backward(const Tensor2& dout, Tensor2& dx) {
    Tensor2 d52, d43, d3, d2;
    fc5.backward(dout, d52); // gradient wrt z5 + z2
    fc4.backward(d52, d43);  // gradient wrt z4 + z3
    fc3.backward(d43, d3);
    for (size_t i = 0; i < d3.size(); ++i) d3.data[i] += d43.data[i];
    fc2.backward(d3, d2);
    for (size_t i = 0; i < d2.size(); ++i) d2.data[i] += d52.data[i];
    fc1.backward(d2, dx); // the time code is additive, so dx is just dz1
}

std::vector<ParamRef> Diffusor::params() {
    std::vector<ParamRef> out;
    for (DenseLayer* l : {&fc1, &fc2, &fc3, &fc4, &fc5}) {
        out.push_back({l->w.data.data(), l->gw.data.data(), l->w.size()});
        out.push_back({l->b.data(), l->gb.data(), l->b.size()});
    }
    return out;
}

void Diffusor::zero_grad() {
    fc1.zero_grad();
    fc2.zero_grad();
    fc3.zero_grad();
    fc4.zero_grad();
    fc5.zero_grad();
}

std::pair<Diffusor, EmbeddingNormalizer> train_diffusor(
    const EmbeddingMatrix& data, const NoiseSchedule& sched, size_t epochs, uint64_t seed,
    DiffusorConfig cfg, DiffusorTrainLog* log, std::ostream* verbose,
    const std::function<void(const Diffusor&, const EmbeddingNormalizer&, size_t)>& on_epoch,
    Diffusor* warm) {
    if (data.n_docs == 0 || data.dim == 0) throw DataError("no embeddings to train on");
    if (cfg.dim == 0) cfg.dim = data.dim;
    if (cfg.dim != data.dim) throw ConfigError("diffusor width does not match the embeddings");
    if (cfg.batch == 0) throw ConfigError("batch size must be positive");

    EmbeddingNormalizer norm;
    norm.fit(data);
    std::vector<double> nd(data.rows.begin(), data.rows.end());
    for (size_t r = 0; r < data.n_docs; ++r) norm.normalize(nd.data() + r * data.dim, data.dim);

    Rng rng(seed);
    Diffusor model(cfg);
    model.init(rng);
    if (warm) {
        auto src = warm->params();
        auto dst = model.params();
        if (src.size() != dst.size())
            throw ConfigError("train_diffusor: warm-start topology mismatch");
        for (size_t i = 0; i < src.size(); ++i) {
            if (src[i].n != dst[i].n) throw ConfigError("train_diffusor: warm-start shape mismatch");
            std::copy(src[i].w, src[i].w + src[i].n, dst[i].w);
        }
    }
    Adam opt(model.params(), cfg.lr);

    size_t n = data.n_docs, dim = data.dim;
    size_t bs = cfg.batch < n ? cfg.batch : n;
    size_t steps_per_epoch = (n + bs - 1) / bs;
    size_t total = epochs * steps_per_epoch;
    OneCycle sched_lr{cfg.lr, total ? total : 1};

    Tensor2 xt(bs, dim), out, dout(bs, dim), dx;
    std::vector<size_t> ts(bs);
    std::vector<double> eps(bs * dim);
    size_t step = 0;
    for (size_t ep = 0; ep < epochs; ++ep) {
        double ep_loss = 0.0;
        for (size_t sp = 0; sp < steps_per_epoch; ++sp, ++step) {
            rng.fill_gaussian(eps.data(), eps.size());
            for (size_t r = 0; r < bs; ++r) {
                size_t pick = rng.index(n);
                ts[r] = 1 + rng.index(sched.T_steps);
                forward_noise(nd.data() + pick * dim, eps.data() + r * dim, dim, sched, ts[r],
                              xt[r]);
            }
            model.forward(xt, ts, out, true);
            double loss = 0.0;
            for (size_t i = 0; i < out.size(); ++i) {
                double d = out.data[i] - eps[i];
                loss += d * d;
                dout.data[i] = 2.0 * d / double(bs);
            }
            loss /= double(bs);
            if (!std::isfinite(loss)) throw NumericError("diffusor loss is not finite");
            ep_loss += loss;
            model.zero_grad();
            model.backward(dout, dx);
            opt.step(sched_lr.lr(step));
        }
        ep_loss /= double(steps_per_epoch);
        if (log) log->epoch_loss.push_back(ep_loss);
        if (verbose) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "epoch %zu/%zu loss %.6f", ep + 1, epochs, ep_loss);
            *verbose << buf << "\n";
        }
        if (on_epoch) on_epoch(model, norm, ep);
    }
    return {std::move(model), norm};
}

std::vector<double> denoise(Diffusor& model, const EmbeddingNormalizer& norm,
                            const std::vector<double>& x, size_t from_t,
                            const NoiseSchedule& sched, Rng& rng, bool deterministic) {
    if (x.size() != model.cfg.dim) throw ConfigError("denoise input width mismatch");
    if (from_t > sched.T_steps) throw ConfigError("denoise start step beyond the schedule");
    if (from_t == 0) return x;

    std::vector<double> cur = x;
    norm.normalize(cur.data(), cur.size());
    size_t dim = cur.size();
    Tensor2 xt(1, dim), z;
    std::vector<size_t> ts(1);
    for (size_t t = from_t; t >= 1; --t) {
        for (size_t i = 0; i < dim; ++i) xt.data[i] = cur[i];
        ts[0] = t;
        model.forward(xt, ts, z, false);
        double beta = sched.beta[t - 1];
        double inv_sa = 1.0 / std::sqrt(sched.alpha[t - 1]);
        double coef = beta / std::sqrt(1.0 - sched.alpha_bar[t - 1]);
        double sig = (t > 1 && !deterministic) ? std::sqrt(beta) : 0.0;
        for (size_t i = 0; i < dim; ++i) {
            cur[i] = (cur[i] - coef * z.data[i]) * inv_sa;
            if (sig > 0.0) cur[i] += sig * rng.gaussian();
        }
    }
    norm.denormalize(cur.data(), cur.size());
    return cur;
}

std::vector<double> generate_from_topic(const std::vector<double>& t_vec, TopicVae& vae,
                                        Diffusor& diff, const EmbeddingNormalizer& norm,
                                        size_t from_t, const NoiseSchedule& sched, Rng& rng,
                                        bool deterministic) {
    std::vector<double> eprime = vae.decode_embedding_from_topic(t_vec);
    return denoise(diff, norm, eprime, from_t, sched, rng, deterministic);
}

} // namespace topicdiff

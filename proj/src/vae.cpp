#include "topicdiff/vae.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace topicdiff {

namespace {
constexpr double kBowClamp = 1e-10;
} // namespace

const char* variant_name(VaeVariant v) {
    switch (v) {
        case VaeVariant::Full: return "full";
        case VaeVariant::NoResidual: return "no-residual";
        case VaeVariant::NoBowRecon: return "no-bow-recon";
    }
    return "?";
}

VaeVariant variant_from_name(const std::string& s) {
    if (s == "full") return VaeVariant::Full;
    if (s == "no-residual") return VaeVariant::NoResidual;
    if (s == "no-bow-recon") return VaeVariant::NoBowRecon;
    throw ConfigError("unknown variant: " + s);
}

static size_t at_least1(size_t v) { return v ? v : 1; }

std::vector<size_t> VaeConfig::enc3_dims() const {
    return {D_embed, at_least1(D_embed / 2), at_least1(D_embed / 4), 2 * T};
}
std::vector<size_t> VaeConfig::enc4_dims() const {
    return {N_BoW, at_least1(N_BoW / 2), at_least1(N_BoW / 4), T};
}
std::vector<size_t> VaeConfig::dec4_dims() const {
    return {T, at_least1(D_embed / 2), at_least1(D_embed / 4), D_embed};
}

void VaeConfig::validate() const {
    if (T < 2) throw ConfigError("VaeConfig: T must be >= 2");
    if (D_topic < 1) throw ConfigError("VaeConfig: D_topic must be >= 1");
    if (D_embed == 0) throw ConfigError("VaeConfig: D_embed unset");
    if (N_BoW == 0) throw ConfigError("VaeConfig: N_BoW unset");
    if (batch == 0) throw ConfigError("VaeConfig: batch must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("VaeConfig: dropout out of range");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        throw ConfigError("VaeConfig: val_fraction out of range");
}

TopicVae::TopicVae(VaeConfig c) : cfg(c) {
    if (cfg.D_embed == 0 || cfg.N_BoW == 0) return; // configured later
    cfg.validate();
    enc3 = Mlp(cfg.enc3_dims(), Act::Identity, cfg.dropout);
    enc4 = Mlp(cfg.enc4_dims(), Act::Identity, cfg.dropout);
    dec4 = Mlp(cfg.dec4_dims(), Act::Identity, cfg.dropout);
    e_T = Tensor2(cfg.T, cfg.D_topic);
    e_V = Tensor2(cfg.N_BoW, cfg.D_topic);
    ge_T = Tensor2(cfg.T, cfg.D_topic);
    ge_V = Tensor2(cfg.N_BoW, cfg.D_topic);
}

void TopicVae::init(Rng& rng) {
    enc3.init(rng);
    enc4.init(rng);
    dec4.init(rng);
    // Shrink the posterior head so initial topic mixtures stay near-uniform.
    // A hard random partition at step 0 can strand topics permanently: a topic
    // that owns no documents receives no gradient and never specializes.
    for (auto& x : enc3.layers.back().w.data) x *= 0.1;
    // Topic vectors start at unit scale so the rows of the topic-word matrix
    // begin distinct enough to differentiate under soft assignments.
    for (auto& x : e_T.data) x = rng.gaussian();
    double s = 1.0 / std::sqrt(static_cast<double>(cfg.D_topic));
    for (auto& x : e_V.data) x = rng.gaussian() * s;
}

void TopicVae::compute_E() {
    matmul_nt(e_T, e_V, E); // T x N
    for (size_t r = 0; r < E.rows; ++r) softmax_inplace(E[r], E.cols);
}

VaeLoss TopicVae::forward(VaeBatch& b, const uint32_t* const* bow_rows, Rng* rng, bool training) {
    size_t B = b.e.rows;
    size_t T = cfg.T;

    Tensor2 heads;
    enc3.forward(b.e, heads, rng, training);
    b.mu.resize(B, T);
    b.log_sigma.resize(B, T);
    for (size_t i = 0; i < B; ++i) {
        const double* h = heads[i];
        for (size_t k = 0; k < T; ++k) {
            b.mu[i][k] = h[k];
            b.log_sigma[i][k] = h[T + k];
        }
    }

    b.noise.resize(B, T);
    if (training && rng) {
        rng->fill_gaussian(b.noise.data.data(), b.noise.size());
    } else {
        b.noise.fill(0.0);
    }
    b.eta.resize(B, T);
    for (size_t i = 0; i < b.eta.size(); ++i)
        b.eta.data[i] = b.mu.data[i] + std::exp(b.log_sigma.data[i]) * b.noise.data[i];

    b.t = b.eta;
    for (size_t i = 0; i < B; ++i) softmax_inplace(b.t[i], T);

    compute_E();
    matmul(b.t, E, b.xprime); // B x N

    enc4.forward(b.xprime, b.tprime, rng, training);

    b.dec_in = b.tprime;
    if (cfg.variant == VaeVariant::Full)
        for (size_t i = 0; i < b.dec_in.size(); ++i) b.dec_in.data[i] += b.t.data[i];

    dec4.forward(b.dec_in, b.eprime, rng, training);

    // loss, averaged over the batch
    VaeLoss L;
    for (size_t i = 0; i < B; ++i) {
        const uint32_t* X = bow_rows[i];
        const double* xp = b.xprime[i];
        double bow = 0.0;
        for (size_t jx = 0; jx < cfg.N_BoW; ++jx) {
            if (X[jx] == 0) continue;
            bow -= static_cast<double>(X[jx]) * std::log(std::max(xp[jx], kBowClamp));
        }
        double mse = 0.0;
        const double* e = b.e[i];
        const double* ep = b.eprime[i];
        for (size_t j = 0; j < cfg.D_embed; ++j) {
            double d = e[j] - ep[j];
            mse += d * d;
        }
        double kl = 0.0;
        const double* mu = b.mu[i];
        const double* ls = b.log_sigma[i];
        for (size_t k = 0; k < T; ++k)
            kl -= 0.5 * (1.0 + 2.0 * ls[k] - mu[k] * mu[k] - std::exp(2.0 * ls[k]));
        L.bow += bow;
        L.mse += mse;
        L.kl += kl;
    }
    double inv = 1.0 / static_cast<double>(B);
    L.bow *= inv;
    L.mse *= inv;
    L.kl *= inv;
    L.total = (cfg.variant == VaeVariant::NoBowRecon ? 0.0 : L.bow) + L.mse + L.kl;
    return L;
}

void TopicVae::backward(const VaeBatch& b, const uint32_t* const* bow_rows) {
    size_t B = b.e.rows;
    size_t T = cfg.T;
    double inv = 1.0 / static_cast<double>(B);

    // mse -> e'
    Tensor2 dep(B, cfg.D_embed);
    for (size_t i = 0; i < dep.size(); ++i)
        dep.data[i] = 2.0 * (b.eprime.data[i] - b.e.data[i]) * inv;

    Tensor2 ddec_in;
    dec4.backward(dep, ddec_in); // B x T

    Tensor2 dt(B, T);
    if (cfg.variant == VaeVariant::Full) dt = ddec_in;

    Tensor2 dxp_enc;
    enc4.backward(ddec_in, dxp_enc); // B x N (ddec_in doubles as dt')

    Tensor2 dxp = dxp_enc;
    if (cfg.variant != VaeVariant::NoBowRecon) {
        for (size_t i = 0; i < B; ++i) {
            const uint32_t* X = bow_rows[i];
            const double* xp = b.xprime[i];
            double* d = dxp[i];
            for (size_t jx = 0; jx < cfg.N_BoW; ++jx) {
                if (X[jx] == 0 || xp[jx] <= kBowClamp) continue;
                d[jx] -= static_cast<double>(X[jx]) / xp[jx] * inv;
            }
        }
    }

    // X' = t E
    {
        Tensor2 dt_from_xp;
        matmul_nt(dxp, E, dt_from_xp); // B x T
        for (size_t i = 0; i < dt.size(); ++i) dt.data[i] += dt_from_xp.data[i];

        Tensor2 dE;
        matmul_tn(b.t, dxp, dE); // T x N

        // through the row softmax of E, then into e_T, e_V
        Tensor2 dS(E.rows, E.cols);
        for (size_t r = 0; r < E.rows; ++r) {
            const double* Er = E[r];
            const double* dEr = dE[r];
            double dot = 0.0;
            for (size_t j = 0; j < E.cols; ++j) dot += dEr[j] * Er[j];
            double* dSr = dS[r];
            for (size_t j = 0; j < E.cols; ++j) dSr[j] = Er[j] * (dEr[j] - dot);
        }
        Tensor2 tmp;
        matmul(dS, e_V, tmp); // T x D_topic
        for (size_t i = 0; i < ge_T.size(); ++i) ge_T.data[i] += tmp.data[i];
        matmul_tn_acc(dS, e_T, ge_V); // ge_V += dS^T e_T (N x D_topic)
    }

    // t = softmax(eta) rows
    Tensor2 deta(B, T);
    for (size_t i = 0; i < B; ++i) {
        const double* trow = b.t[i];
        const double* drow = dt[i];
        double dot = 0.0;
        for (size_t k = 0; k < T; ++k) dot += drow[k] * trow[k];
        double* out = deta[i];
        for (size_t k = 0; k < T; ++k) out[k] = trow[k] * (drow[k] - dot);
    }

    // eta = mu + exp(ls) * noise, plus the KL contributions
    Tensor2 dheads(B, 2 * T);
    for (size_t i = 0; i < B; ++i) {
        const double* de = deta[i];
        const double* mu = b.mu[i];
        const double* ls = b.log_sigma[i];
        const double* nz = b.noise[i];
        double* dh = dheads[i];
        for (size_t k = 0; k < T; ++k) {
            dh[k] = de[k] + mu[k] * inv;
            dh[T + k] = de[k] * nz[k] * std::exp(ls[k]) + (std::exp(2.0 * ls[k]) - 1.0) * inv;
        }
    }

    Tensor2 de_unused;
    enc3.backward(dheads, de_unused);
}

std::vector<ParamRef> TopicVae::params() {
    std::vector<ParamRef> out;
    auto add_mlp = [&](Mlp& m) {
        for (auto& l : m.layers) {
            out.push_back({l.w.data.data(), l.gw.data.data(), l.w.size()});
            out.push_back({l.b.data(), l.gb.data(), l.b.size()});
        }
    };
    add_mlp(enc3);
    add_mlp(enc4);
    add_mlp(dec4);
    out.push_back({e_T.data.data(), ge_T.data.data(), e_T.size()});
    out.push_back({e_V.data.data(), ge_V.data.data(), e_V.size()});
    return out;
}

void TopicVae::zero_grad() {
    enc3.zero_grad();
    enc4.zero_grad();
    dec4.zero_grad();
    ge_T.fill(0.0);
    ge_V.fill(0.0);
}

std::vector<double> TopicVae::infer_topics(const double* e) {
    Tensor2 x(1, cfg.D_embed);
    for (size_t j = 0; j < cfg.D_embed; ++j) x[0][j] = e[j];
    Tensor2 heads;
    enc3.forward(x, heads, nullptr, false);
    std::vector<double> t(cfg.T);
    for (size_t k = 0; k < cfg.T; ++k) t[k] = heads[0][k];
    softmax_inplace(t.data(), t.size());
    return t;
}

std::vector<double> TopicVae::topic_representation(const double* e) {
    std::vector<double> t = infer_topics(e);
    if (cfg.variant != VaeVariant::NoBowRecon) return t;
    return reencode_bow(decode_bow(t));
}

std::vector<double> TopicVae::decode_bow(const std::vector<double>& t) {
    if (t.size() != cfg.T) throw ConfigError("decode_bow: topic vector length mismatch");
    double sum = 0.0;
    for (double v : t) {
        if (v < -1e-9) throw ConfigError("decode_bow: negative topic weight");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ConfigError("decode_bow: topic vector not normalized");
    compute_E();
    std::vector<double> xp(cfg.N_BoW, 0.0);
    for (size_t k = 0; k < cfg.T; ++k) {
        double w = t[k];
        if (w == 0.0) continue;
        const double* Er = E[k];
        for (size_t j = 0; j < cfg.N_BoW; ++j) xp[j] += w * Er[j];
    }
    return xp;
}

std::vector<double> TopicVae::reencode_bow(const std::vector<double>& xprime) {
    if (xprime.size() != cfg.N_BoW) throw ConfigError("reencode_bow: input length mismatch");
    Tensor2 x(1, cfg.N_BoW);
    for (size_t j = 0; j < cfg.N_BoW; ++j) x[0][j] = xprime[j];
    Tensor2 y;
    enc4.forward(x, y, nullptr, false);
    return std::vector<double>(y[0], y[0] + cfg.T);
}

std::vector<double> TopicVae::decode_embedding_from_topic(const std::vector<double>& tvec) {
    std::vector<double> xp = decode_bow(tvec);
    std::vector<double> tp = reencode_bow(xp);
    Tensor2 u(1, cfg.T);
    for (size_t k = 0; k < cfg.T; ++k)
        u[0][k] = cfg.variant == VaeVariant::Full ? tvec[k] + tp[k] : tp[k];
    Tensor2 out;
    dec4.forward(u, out, nullptr, false);
    return std::vector<double>(out[0], out[0] + cfg.D_embed);
}

std::vector<std::vector<size_t>> TopicVae::top_keywords(size_t k) {
    if (k > cfg.N_BoW) throw ConfigError("top_keywords: k exceeds vocabulary size");
    compute_E();
    std::vector<std::vector<size_t>> out(cfg.T);
    std::vector<size_t> idx(cfg.N_BoW);
    for (size_t r = 0; r < cfg.T; ++r) {
        std::iota(idx.begin(), idx.end(), 0);
        const double* Er = E[r];
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            if (Er[a] != Er[b]) return Er[a] > Er[b];
            return a < b;
        });
        out[r].assign(idx.begin(), idx.begin() + k);
    }
    return out;
}

TopicVae train_vae(const EmbeddingMatrix& emb, const std::vector<std::vector<uint32_t>>& bows,
                   VaeConfig cfg, size_t epochs, uint64_t seed, VaeTrainLog* log,
                   std::ostream* verbose,
                   const std::function<void(const TopicVae&, size_t)>& on_epoch,
                   TopicVae* warm) {
    if (emb.n_docs == 0) throw ConfigError("train_vae: empty corpus");
    if (bows.size() != emb.n_docs)
        throw ConfigError("train_vae: embedding/bow row counts disagree");
    cfg.D_embed = emb.dim;
    if (cfg.N_BoW == 0) cfg.N_BoW = bows.empty() ? 0 : bows[0].size();

    // drop documents whose BoW is empty: the bow term is undefined on them
    std::vector<size_t> usable;
    for (size_t i = 0; i < bows.size(); ++i) {
        if (bows[i].size() != cfg.N_BoW) throw ConfigError("train_vae: ragged bow rows");
        uint64_t s = 0;
        for (uint32_t c : bows[i]) s += c;
        if (s > 0) usable.push_back(i);
    }
    if (usable.empty()) throw ConfigError("train_vae: every document has an empty BoW");

    Rng rng(seed);
    TopicVae model(cfg);
    model.init(rng);
    if (warm) {
        auto src = warm->params();
        auto dst = model.params();
        if (src.size() != dst.size()) throw ConfigError("train_vae: warm-start topology mismatch");
        for (size_t i = 0; i < src.size(); ++i) {
            if (src[i].n != dst[i].n) throw ConfigError("train_vae: warm-start shape mismatch");
            std::copy(src[i].w, src[i].w + src[i].n, dst[i].w);
        }
    }
    if (emb.mean.size() == emb.dim && emb.stdev.size() == emb.dim) {
        model.emb_mean = emb.mean;
        model.emb_std = emb.stdev;
    } else {
        EmbeddingMatrix tmp = emb;
        tmp.compute_stats();
        model.emb_mean = tmp.mean;
        model.emb_std = tmp.stdev;
    }
    if (epochs == 0) return model;

    rng.shuffle(usable);
    size_t n_val = static_cast<size_t>(cfg.val_fraction * static_cast<double>(usable.size()));
    std::vector<size_t> val_idx(usable.begin(), usable.begin() + n_val);
    std::vector<size_t> train_idx(usable.begin() + n_val, usable.end());
    if (train_idx.empty()) throw ConfigError("train_vae: validation split leaves no training data");

    size_t steps_per_epoch = (train_idx.size() + cfg.batch - 1) / cfg.batch;
    OneCycle sched{cfg.resolved_lr(), epochs * steps_per_epoch};
    Adam opt(model.params(), cfg.resolved_lr());

    auto run_batch = [&](const std::vector<size_t>& ids, size_t lo, size_t hi, bool training,
                         VaeBatch& b) {
        size_t B = hi - lo;
        b.e.resize(B, cfg.D_embed);
        std::vector<const uint32_t*> brows(B);
        for (size_t i = 0; i < B; ++i) {
            size_t doc = ids[lo + i];
            const double* r = emb.row(doc);
            std::copy(r, r + cfg.D_embed, b.e[i]);
            brows[i] = bows[doc].data();
        }
        VaeLoss L = model.forward(b, brows.data(), training ? &rng : nullptr, training);
        if (training) model.backward(b, brows.data());
        return L;
    };

    auto check_loss = [&](const VaeLoss& L) {
        // the Eq-4 decomposition is asserted on every batch
        double expect = (cfg.variant == VaeVariant::NoBowRecon ? 0.0 : L.bow) + L.mse + L.kl;
        if (L.total != expect) throw NumericError("vae loss decomposition violated");
        if (!(L.kl >= -1e-12)) throw NumericError("vae KL term negative");
        if (!std::isfinite(L.total) || !std::isfinite(L.bow) || !std::isfinite(L.mse) ||
            !std::isfinite(L.kl))
            throw NumericError("vae loss non-finite");
    };

    std::vector<std::vector<double>> best_params;
    double best_val = std::numeric_limits<double>::infinity();
    size_t best_epoch = 0;
    size_t step = 0;
    auto prefs = model.params();

    for (size_t ep = 0; ep < epochs; ++ep) {
        rng.shuffle(train_idx);
        VaeLoss mean_train;
        VaeBatch b;
        for (size_t lo = 0; lo < train_idx.size(); lo += cfg.batch) {
            size_t hi = std::min(lo + cfg.batch, train_idx.size());
            model.zero_grad();
            VaeLoss L = run_batch(train_idx, lo, hi, true, b);
            check_loss(L);
            opt.step(sched.lr(step++));
            double w = static_cast<double>(hi - lo) / static_cast<double>(train_idx.size());
            mean_train.total += L.total * w;
            mean_train.bow += L.bow * w;
            mean_train.mse += L.mse * w;
            mean_train.kl += L.kl * w;
        }
        VaeLoss mean_val;
        if (!val_idx.empty()) {
            for (size_t lo = 0; lo < val_idx.size(); lo += cfg.batch) {
                size_t hi = std::min(lo + cfg.batch, val_idx.size());
                VaeLoss L = run_batch(val_idx, lo, hi, false, b);
                check_loss(L);
                double w = static_cast<double>(hi - lo) / static_cast<double>(val_idx.size());
                mean_val.total += L.total * w;
                mean_val.bow += L.bow * w;
                mean_val.mse += L.mse * w;
                mean_val.kl += L.kl * w;
            }
            if (mean_val.total < best_val) {
                best_val = mean_val.total;
                best_epoch = ep;
                best_params.clear();
                for (auto& p : prefs) best_params.emplace_back(p.w, p.w + p.n);
            }
        }
        if (log) {
            log->train_epochs.push_back(mean_train);
            log->val_epochs.push_back(mean_val);
        }
        if (verbose)
            (*verbose) << "epoch " << ep << " train total " << mean_train.total << " bow "
                       << mean_train.bow << " mse " << mean_train.mse << " kl " << mean_train.kl
                       << (val_idx.empty() ? "" : " | val total ")
                       << (val_idx.empty() ? "" : std::to_string(mean_val.total)) << '\n';
        if (on_epoch) on_epoch(model, ep);
    }

    if (!best_params.empty()) {
        for (size_t i = 0; i < prefs.size(); ++i)
            std::copy(best_params[i].begin(), best_params[i].end(), prefs[i].w);
    }
    if (log) log->best_epoch = best_epoch;
    return model;
}

} // namespace topicdiff

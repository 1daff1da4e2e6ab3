#include "topicdiff/compressor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace topicdiff {

void CompressorConfig::validate() const {
    if (n_seq == 0 || d_token == 0) throw ConfigError("compressor dims must be positive");
    if (channel_plan.size() < 2) throw ConfigError("channel plan needs at least two entries");
    if (channel_plan.front() != n_seq)
        throw ConfigError("channel plan must start at the sequence length");
    for (size_t i = 1; i < channel_plan.size(); ++i)
        if (channel_plan[i] >= channel_plan[i - 1])
            throw ConfigError("channel plan must be strictly decreasing");
    if (kernel == 0 || stride == 0) throw ConfigError("kernel and stride must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
    // stride-1 same-padding keeps the spatial length; anything else would
    // break the mirrored decoder
    if (d_token + 2 * padding < kernel || (d_token + 2 * padding - kernel) % stride != 0 ||
        (d_token + 2 * padding - kernel) / stride + 1 != d_token)
        throw ConfigError("conv settings must preserve the token length");
}

CompressorModel::CompressorModel(CompressorConfig c) : cfg(std::move(c)) {
    cfg.validate();
    size_t stages = cfg.channel_plan.size() - 1;
    for (size_t i = 0; i < stages; ++i) {
        Act a = (i + 1 < stages) ? Act::Gelu : Act::Identity; // linear bottleneck
        encoder.emplace_back(cfg.channel_plan[i + 1], cfg.channel_plan[i], cfg.kernel, cfg.stride,
                             cfg.padding, a);
    }
    for (size_t i = stages; i-- > 0;) {
        Act a = (i > 0) ? Act::Gelu : Act::Identity; // linear reconstruction head
        decoder.emplace_back(cfg.channel_plan[i], cfg.channel_plan[i + 1], cfg.kernel, cfg.stride,
                             cfg.padding, a);
    }
    enc_drop.assign(stages, Dropout{cfg.dropout, {}});
    dec_drop.assign(stages, Dropout{cfg.dropout, {}});
}

void CompressorModel::init(Rng& rng) {
    for (auto& l : encoder) l.init(rng);
    for (auto& l : decoder) l.init(rng);
}

std::vector<double> CompressorModel::compress(const Tensor2& hidden) {
    if (hidden.rows != cfg.n_seq || hidden.cols != cfg.d_token)
        throw ConfigError("hidden-state block has the wrong shape");
    Tensor2 cur = hidden, next;
    for (auto& l : encoder) {
        l.forward(cur, next, false);
        cur = next;
    }
    return cur.data;
}

Tensor2 CompressorModel::decompress(const std::vector<double>& e) {
    if (e.size() != cfg.d_embed()) throw ConfigError("embedding has the wrong length");
    Tensor2 cur(cfg.channel_plan.back(), cfg.d_token), next;
    cur.data = e;
    for (auto& l : decoder) {
        l.forward(cur, next, false);
        cur = next;
    }
    return cur;
}

void CompressorModel::forward_train(const Tensor2& hidden, Tensor2& recon, Rng& rng) {
    if (hidden.rows != cfg.n_seq || hidden.cols != cfg.d_token)
        throw ConfigError("hidden-state block has the wrong shape");
    Tensor2 cur = hidden, next;
    bool drop = cfg.dropout > 0.0;
    for (size_t i = 0; i < encoder.size(); ++i) {
        encoder[i].forward(cur, next, true);
        if (drop && encoder[i].act == Act::Gelu) enc_drop[i].forward(next, rng, true);
        cur = next;
    }
    for (size_t i = 0; i < decoder.size(); ++i) {
        decoder[i].forward(cur, next, true);
        if (drop && decoder[i].act == Act::Gelu) dec_drop[i].forward(next, rng, true);
        cur = next;
    }
    recon = cur;
}

void CompressorModel::backward(const Tensor2& drecon) {
    Tensor2 d = drecon, dx;
    bool drop = cfg.dropout > 0.0;
    for (size_t i = decoder.size(); i-- > 0;) {
        if (drop && decoder[i].act == Act::Gelu) dec_drop[i].backward(d);
        decoder[i].backward(d, dx);
        d = dx;
    }
    for (size_t i = encoder.size(); i-- > 0;) {
        if (drop && encoder[i].act == Act::Gelu) enc_drop[i].backward(d);
        encoder[i].backward(d, dx);
        d = dx;
    }
}

std::vector<ParamRef> CompressorModel::params() {
    std::vector<ParamRef> out;
    for (auto* group : {&encoder, &decoder})
        for (auto& l : *group) {
            out.push_back({l.w.data(), l.gw.data(), l.w.size()});
            out.push_back({l.b.data(), l.gb.data(), l.b.size()});
        }
    return out;
}

void CompressorModel::zero_grad() {
    for (auto& l : encoder) l.zero_grad();
    for (auto& l : decoder) l.zero_grad();
}

static double eval_mse(CompressorModel& m, const std::vector<Tensor2>& data,
                       const std::vector<size_t>& idx) {
    double total = 0.0;
    for (size_t i : idx) {
        Tensor2 recon = m.decompress(m.compress(data[i]));
        double s = 0.0;
        for (size_t k = 0; k < recon.size(); ++k) {
            double d = recon.data[k] - data[i].data[k];
            s += d * d;
        }
        total += s / double(recon.size());
    }
    return total / double(idx.size());
}

CompressorModel train_compressor(
    const std::vector<Tensor2>& data, size_t epochs, uint64_t seed, CompressorConfig cfg,
    double lr, double val_fraction, CompressorTrainLog* log, std::ostream* verbose,
    const std::function<void(const CompressorModel&, size_t)>& on_epoch,
    CompressorModel* warm) {
    if (data.empty()) throw DataError("no hidden-state blocks to train on");
    cfg.validate();
    for (const auto& t : data)
        if (t.rows != cfg.n_seq || t.cols != cfg.d_token)
            throw DataError("hidden-state block has the wrong shape");

    Rng rng(seed);
    CompressorModel model(cfg);
    model.init(rng);
    if (warm) {
        auto src = warm->params();
        auto dst = model.params();
        if (src.size() != dst.size())
            throw ConfigError("train_compressor: warm-start topology mismatch");
        for (size_t i = 0; i < src.size(); ++i) {
            if (src[i].n != dst[i].n)
                throw ConfigError("train_compressor: warm-start shape mismatch");
            std::copy(src[i].w, src[i].w + src[i].n, dst[i].w);
        }
    }
    Adam opt(model.params(), lr);

    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    size_t n_val = size_t(std::floor(val_fraction * double(data.size())));
    if (n_val >= data.size()) n_val = data.size() - 1;
    std::vector<size_t> val_idx(order.end() - n_val, order.end());
    order.resize(data.size() - n_val);
    if (val_idx.empty()) val_idx = order; // tiny sets validate on themselves

    size_t total_steps = epochs * order.size();
    OneCycle sched{lr, total_steps ? total_steps : 1};

    double best = 0.0;
    std::vector<std::vector<double>> best_w;
    size_t step = 0;
    Tensor2 recon, dr;
    for (size_t ep = 0; ep < epochs; ++ep) {
        rng.shuffle(order);
        double tr = 0.0;
        for (size_t i : order) {
            model.forward_train(data[i], recon, rng);
            double loss = 0.0;
            dr.resize(recon.rows, recon.cols);
            for (size_t k = 0; k < recon.size(); ++k) {
                double d = recon.data[k] - data[i].data[k];
                loss += d * d;
                dr.data[k] = 2.0 * d / double(recon.size());
            }
            loss /= double(recon.size());
            if (!std::isfinite(loss)) throw NumericError("compressor loss is not finite");
            tr += loss;
            model.zero_grad();
            model.backward(dr);
            opt.step(sched.lr(step++));
        }
        tr /= double(order.size());
        double vl = eval_mse(model, data, val_idx);
        if (log) {
            log->train_mse.push_back(tr);
            log->val_mse.push_back(vl);
        }
        if (verbose) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "epoch %zu/%zu train %.6f val %.6f", ep + 1, epochs,
                          tr, vl);
            *verbose << buf << "\n";
        }
        if (best_w.empty() || vl < best) {
            best = vl;
            if (log) log->best_epoch = ep;
            best_w.clear();
            for (auto& p : model.params()) best_w.emplace_back(p.w, p.w + p.n);
        }
        if (on_epoch) on_epoch(model, ep);
    }
    if (!best_w.empty()) {
        auto ps = model.params();
        for (size_t i = 0; i < ps.size(); ++i)
            std::copy(best_w[i].begin(), best_w[i].end(), ps[i].w);
    }
    return model;
}

} // namespace topicdiff

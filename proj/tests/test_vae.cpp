#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "topicdiff/activation.hpp"
#include "topicdiff/synth.hpp"
#include "topicdiff/vae.hpp"

using namespace topicdiff;
using namespace tdtest;

namespace {

VaeConfig tiny_cfg(VaeVariant var = VaeVariant::Full) {
    VaeConfig c;
    c.T = 2;
    c.D_topic = 3;
    c.D_embed = 4;
    c.N_BoW = 4;
    c.variant = var;
    c.dropout = 0.0;
    return c;
}

// deterministic weight fill so the hand-rolled oracle below sees the same
// parameters
void fill_mlp(Mlp& m, double salt) {
    for (size_t li = 0; li < m.layers.size(); ++li) {
        auto& l = m.layers[li];
        for (size_t r = 0; r < l.w.rows; ++r)
            for (size_t c = 0; c < l.w.cols; ++c)
                l.w.at(r, c) = 0.1 * double((r * 3 + c + li) % 5) - 0.2 + salt;
        for (size_t r = 0; r < l.b.size(); ++r) l.b[r] = 0.01 * double(r + 1) - salt * 0.5;
    }
}

void fill_model(TopicVae& m) {
    Rng rng(1);
    m.init(rng);
    fill_mlp(m.enc3, 0.00);
    fill_mlp(m.enc4, 0.02);
    fill_mlp(m.dec4, -0.03);
    for (size_t k = 0; k < m.e_T.rows; ++k)
        for (size_t d = 0; d < m.e_T.cols; ++d) m.e_T.at(k, d) = 0.2 * double(k + 1) - 0.1 * double(d);
    for (size_t v = 0; v < m.e_V.rows; ++v)
        for (size_t d = 0; d < m.e_V.cols; ++d)
            m.e_V.at(v, d) = 0.05 * double(v + 1) * (double(d) - 1.0);
}

// plain-loop reimplementations used as the oracle
std::vector<double> dense_ref(const DenseLayer& l, const std::vector<double>& x, bool gelu_act) {
    std::vector<double> y(l.w.rows, 0.0);
    for (size_t r = 0; r < l.w.rows; ++r) {
        double acc = l.b[r];
        for (size_t c = 0; c < l.w.cols; ++c) acc += l.w.at(r, c) * x[c];
        y[r] = gelu_act ? gelu(acc) : acc;
    }
    return y;
}

std::vector<double> mlp_ref(const Mlp& m, std::vector<double> x) {
    for (size_t i = 0; i < m.layers.size(); ++i)
        x = dense_ref(m.layers[i], x, i + 1 < m.layers.size());
    return x;
}

std::vector<double> softmax_ref(std::vector<double> v) {
    double mx = v[0];
    for (double x : v) mx = std::max(mx, x);
    double s = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        s += x;
    }
    for (double& x : v) x /= s;
    return v;
}

struct RefOut {
    std::vector<double> mu, ls, t, xprime, tprime, eprime;
    double bow = 0, mse = 0, kl = 0;
};

RefOut reference_forward(const TopicVae& m, const std::vector<double>& e,
                         const std::vector<uint32_t>& X) {
    const VaeConfig& c = m.cfg;
    RefOut r;
    auto heads = mlp_ref(m.enc3, e);
    r.mu.assign(heads.begin(), heads.begin() + long(c.T));
    r.ls.assign(heads.begin() + long(c.T), heads.end());
    r.t = softmax_ref(r.mu); // inference path: eta = mu

    // E = row-softmax(e_T e_V^T), xprime = t E
    std::vector<std::vector<double>> E(c.T);
    for (size_t k = 0; k < c.T; ++k) {
        std::vector<double> row(c.N_BoW, 0.0);
        for (size_t v = 0; v < c.N_BoW; ++v)
            for (size_t d = 0; d < c.D_topic; ++d) row[v] += m.e_T.at(k, d) * m.e_V.at(v, d);
        E[k] = softmax_ref(row);
    }
    r.xprime.assign(c.N_BoW, 0.0);
    for (size_t v = 0; v < c.N_BoW; ++v)
        for (size_t k = 0; k < c.T; ++k) r.xprime[v] += r.t[k] * E[k][v];

    r.tprime = mlp_ref(m.enc4, r.xprime);
    std::vector<double> dec_in = r.tprime;
    if (c.variant == VaeVariant::Full)
        for (size_t k = 0; k < c.T; ++k) dec_in[k] += r.t[k];
    r.eprime = mlp_ref(m.dec4, dec_in);

    for (size_t v = 0; v < c.N_BoW; ++v)
        if (X[v]) r.bow -= double(X[v]) * std::log(std::max(r.xprime[v], 1e-10));
    for (size_t j = 0; j < c.D_embed; ++j) {
        double d = e[j] - r.eprime[j];
        r.mse += d * d;
    }
    for (size_t k = 0; k < c.T; ++k)
        r.kl -= 0.5 * (1.0 + 2.0 * r.ls[k] - r.mu[k] * r.mu[k] - std::exp(2.0 * r.ls[k]));
    return r;
}

VaeLoss run_one(TopicVae& m, VaeBatch& b, const std::vector<double>& e,
                const std::vector<uint32_t>& X, Rng* rng, bool training) {
    b.e.resize(1, m.cfg.D_embed);
    for (size_t j = 0; j < e.size(); ++j) b.e.at(0, j) = e[j];
    const uint32_t* rows[1] = {X.data()};
    return m.forward(b, rows, rng, training);
}

} // namespace

TEST_CASE("config validation and hidden plans") {
    VaeConfig c = tiny_cfg();
    c.validate();
    CHECK(c.enc3_dims() == std::vector<size_t>{4, 2, 1, 4});
    CHECK(c.enc4_dims() == std::vector<size_t>{4, 2, 1, 2});
    CHECK(c.dec4_dims() == std::vector<size_t>{2, 2, 1, 4});

    VaeConfig big;
    big.D_embed = 64;
    big.N_BoW = 500;
    big.T = 5;
    CHECK(big.enc3_dims() == std::vector<size_t>{64, 32, 16, 10});
    CHECK(big.enc4_dims() == std::vector<size_t>{500, 250, 125, 5});
    CHECK(big.dec4_dims() == std::vector<size_t>{5, 32, 16, 64});

    c.T = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_cfg();
    c.D_embed = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("variant default learning rates") {
    VaeConfig c = tiny_cfg();
    CHECK(c.resolved_lr() == 1e-3);
    c.variant = VaeVariant::NoResidual;
    CHECK(c.resolved_lr() == 1e-3);
    c.variant = VaeVariant::NoBowRecon;
    CHECK(c.resolved_lr() == 5e-4);
    c.lr = 0.01;
    CHECK(c.resolved_lr() == 0.01);

    CHECK(variant_from_name("full") == VaeVariant::Full);
    CHECK(variant_from_name("no-residual") == VaeVariant::NoResidual);
    CHECK(variant_from_name("no-bow-recon") == VaeVariant::NoBowRecon);
    CHECK_THROWS_AS(variant_from_name("bogus"), ConfigError);
    CHECK(std::string(variant_name(VaeVariant::NoResidual)) == "no-residual");
}

TEST_CASE("inference forward matches a hand-rolled reference") {
    for (VaeVariant var : {VaeVariant::Full, VaeVariant::NoResidual, VaeVariant::NoBowRecon}) {
        TopicVae m(tiny_cfg(var));
        fill_model(m);
        std::vector<double> e = {0.8, -0.4, 0.1, 1.3};
        std::vector<uint32_t> X = {1, 0, 2, 0};
        VaeBatch b;
        VaeLoss L = run_one(m, b, e, X, nullptr, false);
        RefOut r = reference_forward(m, e, X);

        for (size_t k = 0; k < 2; ++k) {
            CHECK(b.mu.at(0, k) == doctest::Approx(r.mu[k]).epsilon(1e-13));
            CHECK(b.log_sigma.at(0, k) == doctest::Approx(r.ls[k]).epsilon(1e-13));
            CHECK(b.t.at(0, k) == doctest::Approx(r.t[k]).epsilon(1e-13));
            CHECK(b.tprime.at(0, k) == doctest::Approx(r.tprime[k]).epsilon(1e-13));
        }
        for (size_t v = 0; v < 4; ++v)
            CHECK(b.xprime.at(0, v) == doctest::Approx(r.xprime[v]).epsilon(1e-13));
        for (size_t j = 0; j < 4; ++j)
            CHECK(b.eprime.at(0, j) == doctest::Approx(r.eprime[j]).epsilon(1e-13));
        CHECK(L.bow == doctest::Approx(r.bow).epsilon(1e-13));
        CHECK(L.mse == doctest::Approx(r.mse).epsilon(1e-13));
        CHECK(L.kl == doctest::Approx(r.kl).epsilon(1e-13));

        double want_total = (var == VaeVariant::NoBowRecon ? 0.0 : L.bow) + L.mse + L.kl;
        CHECK(L.total == want_total);
    }
}

TEST_CASE("training forward wires the reparameterization through stored noise") {
    TopicVae m(tiny_cfg());
    fill_model(m);
    std::vector<double> e = {0.2, 0.9, -1.1, 0.5};
    std::vector<uint32_t> X = {0, 2, 1, 1};
    VaeBatch b;
    Rng rng(44);
    run_one(m, b, e, X, &rng, true);
    for (size_t k = 0; k < 2; ++k) {
        double eta = b.mu.at(0, k) + std::exp(b.log_sigma.at(0, k)) * b.noise.at(0, k);
        // t = softmax(eta)
        double other = b.mu.at(0, 1 - k) + std::exp(b.log_sigma.at(0, 1 - k)) * b.noise.at(0, 1 - k);
        double p = std::exp(eta) / (std::exp(eta) + std::exp(other));
        CHECK(b.t.at(0, k) == doctest::Approx(p).epsilon(1e-12));
    }
    // inference ignores noise entirely
    VaeBatch bi;
    run_one(m, bi, e, X, nullptr, false);
    for (size_t i = 0; i < bi.noise.size(); ++i) CHECK(bi.noise.data[i] == 0.0);
}

TEST_CASE("loss decomposition holds on random batches and kl stays non-negative") {
    Rng rng(3000);
    for (int inst = 0; inst < 50; ++inst) {
        VaeVariant var = static_cast<VaeVariant>(inst % 3);
        TopicVae m(tiny_cfg(var));
        m.init(rng);
        std::vector<double> e(4);
        rng.fill_gaussian(e.data(), 4);
        std::vector<uint32_t> X = {uint32_t(rng.index(4)), uint32_t(rng.index(4)),
                                   uint32_t(rng.index(4)), 1};
        VaeBatch b;
        Rng noise(500 + uint64_t(inst));
        VaeLoss L = run_one(m, b, e, X, &noise, true);
        double expect = (var == VaeVariant::NoBowRecon ? 0.0 : L.bow) + L.mse + L.kl;
        CHECK(L.total == expect);
        CHECK(L.kl >= 0.0);
    }
}

TEST_CASE("residual wiring differs between variants") {
    std::vector<double> e = {0.8, -0.4, 0.1, 1.3};
    std::vector<uint32_t> X = {1, 0, 2, 0};

    TopicVae full(tiny_cfg(VaeVariant::Full));
    fill_model(full);
    VaeBatch bf;
    run_one(full, bf, e, X, nullptr, false);
    for (size_t k = 0; k < 2; ++k)
        CHECK(bf.dec_in.at(0, k) ==
              doctest::Approx(bf.t.at(0, k) + bf.tprime.at(0, k)).epsilon(1e-15));

    TopicVae nores(tiny_cfg(VaeVariant::NoResidual));
    fill_model(nores);
    VaeBatch bn;
    run_one(nores, bn, e, X, nullptr, false);
    for (size_t k = 0; k < 2; ++k) CHECK(bn.dec_in.at(0, k) == bn.tprime.at(0, k));
}

TEST_CASE("kl is zero exactly at the standard normal posterior") {
    TopicVae m(tiny_cfg());
    fill_model(m);
    // force mu = 0, log_sigma = 0 via zeroed final enc3 layer
    auto& last = m.enc3.layers.back();
    last.w.fill(0.0);
    for (auto& x : last.b) x = 0.0;
    std::vector<double> e = {0.3, 0.3, -0.2, 0.0};
    std::vector<uint32_t> X = {1, 1, 0, 0};
    VaeBatch b;
    VaeLoss L = run_one(m, b, e, X, nullptr, false);
    CHECK(L.kl == 0.0);
}

TEST_CASE("full loss graph passes finite-difference gradient checks") {
    for (VaeVariant var : {VaeVariant::Full, VaeVariant::NoResidual, VaeVariant::NoBowRecon}) {
        TopicVae m(tiny_cfg(var));
        Rng ir(8);
        m.init(ir);
        std::vector<double> ev = {0.8, -0.4, 0.1, 1.3, -0.6, 0.2, 0.9, -1.0};
        std::vector<uint32_t> X0 = {1, 0, 2, 0}, X1 = {0, 1, 0, 3};
        const uint32_t* rows[2] = {X0.data(), X1.data()};

        auto loss = [&]() {
            VaeBatch b;
            b.e.resize(2, 4);
            std::copy(ev.begin(), ev.end(), b.e.data.begin());
            Rng noise(901);
            return m.forward(b, rows, &noise, true).total;
        };
        VaeBatch b;
        b.e.resize(2, 4);
        std::copy(ev.begin(), ev.end(), b.e.data.begin());
        Rng noise(901);
        m.forward(b, rows, &noise, true);
        m.zero_grad();
        m.backward(b, rows);

        double worst = 0.0;
        for (auto& p : m.params())
            worst = std::max(worst, check_grads(loss, p.w, p.g, p.n));
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("decode paths produce distributions") {
    TopicVae m(tiny_cfg());
    fill_model(m);
    m.compute_E();
    for (size_t k = 0; k < 2; ++k) {
        double s = 0.0;
        for (size_t v = 0; v < 4; ++v) {
            CHECK(m.E.at(k, v) > 0.0);
            s += m.E.at(k, v);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
    }
    std::vector<double> t = {0.3, 0.7};
    auto xp = m.decode_bow(t);
    double s = 0.0;
    for (double v : xp) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
    CHECK_THROWS_AS(m.decode_bow(std::vector<double>(3)), ConfigError);
}

TEST_CASE("topic representation follows the variant") {
    std::vector<double> e = {0.8, -0.4, 0.1, 1.3};
    TopicVae full(tiny_cfg(VaeVariant::Full));
    fill_model(full);
    CHECK(full.topic_representation(e.data()) == full.infer_topics(e.data()));

    TopicVae nb(tiny_cfg(VaeVariant::NoBowRecon));
    fill_model(nb);
    auto t = nb.infer_topics(e.data());
    auto rep = nb.topic_representation(e.data());
    CHECK(rep == nb.reencode_bow(nb.decode_bow(t)));
    CHECK(rep != t);
}

TEST_CASE("infer_topics is the softmax of mu") {
    TopicVae m(tiny_cfg());
    fill_model(m);
    std::vector<double> e = {1.0, 0.5, -0.5, 0.2};
    VaeBatch b;
    std::vector<uint32_t> X = {1, 0, 0, 0};
    run_one(m, b, e, X, nullptr, false);
    auto t = m.infer_topics(e.data());
    for (size_t k = 0; k < 2; ++k) CHECK(t[k] == doctest::Approx(b.t.at(0, k)).epsilon(1e-14));
}

TEST_CASE("keyword ties resolve to vocabulary order") {
    TopicVae m(tiny_cfg());
    fill_model(m);
    m.e_T.fill(0.0); // both topic rows uniform over the vocabulary
    auto kw = m.top_keywords(3);
    REQUIRE(kw.size() == 2);
    CHECK(kw[0] == std::vector<size_t>{0, 1, 2});
    CHECK(kw[1] == std::vector<size_t>{0, 1, 2});
    CHECK_THROWS_AS(m.top_keywords(5), ConfigError); // more than the vocabulary holds
}

TEST_CASE("training is deterministic, skips empty documents, keeps moments") {
    SynthParams p;
    p.K = 2;
    p.n_docs = 60;
    p.d_embed = 8;
    p.vocab_size = 20;
    p.seed = 6;
    p.doc_len_min = 10;
    p.doc_len_max = 20;
    SynthCorpus c = synth_corpus(p);
    // blank three documents
    for (size_t i : {3u, 10u, 41u}) c.bows[i].assign(20, 0);

    VaeConfig cfg;
    cfg.T = 2;
    cfg.D_topic = 4;
    cfg.batch = 16;
    VaeTrainLog la, lb;
    TopicVae a = train_vae(c.embeddings, c.bows, cfg, 3, 99, &la);
    TopicVae b = train_vae(c.embeddings, c.bows, cfg, 3, 99, &lb);
    auto pa = a.params(), pb = b.params();
    for (size_t i = 0; i < pa.size(); ++i)
        for (size_t j = 0; j < pa[i].n; ++j) CHECK(pa[i].w[j] == pb[i].w[j]);
    REQUIRE(la.train_epochs.size() == 3);
    CHECK(la.val_epochs.size() == 3);
    for (auto& L : la.train_epochs) CHECK(std::isfinite(L.total));
    CHECK(a.emb_mean == c.embeddings.mean);
    CHECK(a.emb_std == c.embeddings.stdev);

    std::vector<std::vector<uint32_t>> empty(c.bows.size(), std::vector<uint32_t>(20, 0));
    CHECK_THROWS_AS(train_vae(c.embeddings, empty, cfg, 1, 1), ConfigError);
}

TEST_CASE("training lowers the loss on separable data") {
    SynthParams p;
    p.K = 3;
    p.n_docs = 240;
    p.d_embed = 12;
    p.vocab_size = 30;
    p.seed = 13;
    SynthCorpus c = synth_corpus(p);
    VaeConfig cfg;
    cfg.T = 3;
    cfg.D_topic = 8;
    cfg.batch = 32;
    VaeTrainLog log;
    train_vae(c.embeddings, c.bows, cfg, 12, 5, &log);
    REQUIRE(log.train_epochs.size() == 12);
    CHECK(log.train_epochs.back().total < log.train_epochs.front().total);
}

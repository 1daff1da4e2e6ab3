#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "topicdiff/activation.hpp"
#include "topicdiff/adam.hpp"
#include "topicdiff/conv1d.hpp"
#include "topicdiff/dense.hpp"
#include "topicdiff/rng.hpp"
#include "topicdiff/tensor.hpp"

using namespace topicdiff;
using namespace tdtest;

TEST_CASE("gelu matches frozen reference points") {
    CHECK(gelu(0.0) == 0.0);
    CHECK(gelu(1.0) == doctest::Approx(0.8411919906082768).epsilon(1e-14));
    CHECK(gelu(0.5) == doctest::Approx(0.34571400982514394).epsilon(1e-14));
    CHECK(gelu(-1.25) == doctest::Approx(-0.13228579703028542).epsilon(1e-14));
    CHECK(gelu(2.0) == doctest::Approx(1.954597694087775).epsilon(1e-14));
    CHECK(gelu_grad(1.0) == doctest::Approx(1.0829640838457826).epsilon(1e-12));
}

TEST_CASE("gelu_grad agrees with finite differences") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        double x = rng.uniform(-4.0, 4.0);
        double num = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6;
        CHECK(rel_err(num, gelu_grad(x)) < 1e-7);
    }
}

TEST_CASE("softmax: normalization, shift invariance, stability") {
    double v[3] = {0.3, -1.1, 2.4};
    double w[3] = {0.3 + 50.0, -1.1 + 50.0, 2.4 + 50.0};
    softmax_inplace(v, 3);
    softmax_inplace(w, 3);
    double s = v[0] + v[1] + v[2];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    for (int i = 0; i < 3; ++i) CHECK(v[i] == doctest::Approx(w[i]).epsilon(1e-13));

    double flat[2] = {7.0, 7.0};
    softmax_inplace(flat, 2);
    CHECK(flat[0] == doctest::Approx(0.5).epsilon(1e-15));

    double big[2] = {1e6, 1e6 - 3.0};
    softmax_inplace(big, 2);
    CHECK(std::isfinite(big[0]));
    CHECK(big[0] == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))).epsilon(1e-12));

    double ratio[3] = {std::log(1.0), std::log(2.0), std::log(3.0)};
    softmax_inplace(ratio, 3);
    CHECK(ratio[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(ratio[2] == doctest::Approx(0.5).epsilon(1e-14));
}

// loss = sum of c .* y for fixed random c, so dL/dy = c
static double weighted_loss(const Tensor2& y, const Tensor2& c) {
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += y.data[i] * c.data[i];
    return s;
}

TEST_CASE("dense layer gradients pass finite-difference checks for every activation") {
    for (Act act : {Act::Identity, Act::Gelu, Act::Softmax}) {
        Rng rng(100 + int(act));
        for (int inst = 0; inst < 8; ++inst) {
            size_t in = 2 + rng.index(5), out = 2 + rng.index(5), B = 1 + rng.index(3);
            DenseLayer lay(out, in, act);
            lay.init(rng);
            Tensor2 x(B, in), c(B, out);
            rng.fill_gaussian(x.data.data(), x.size());
            rng.fill_gaussian(c.data.data(), c.size());

            Tensor2 y;
            auto loss = [&]() {
                Tensor2 yy;
                lay.forward(x, yy, false);
                return weighted_loss(yy, c);
            };
            lay.forward(x, y, true);
            lay.zero_grad();
            Tensor2 dx;
            lay.backward(c, dx);

            CHECK(check_grads(loss, lay.w.data.data(), lay.gw.data.data(), lay.w.size()) < 1e-6);
            CHECK(check_grads(loss, lay.b.data(), lay.gb.data(), lay.b.size()) < 1e-6);
            CHECK(check_grads(loss, x.data.data(), dx.data.data(), x.size()) < 1e-6);
        }
    }
}

TEST_CASE("dense backward accumulates until zero_grad") {
    Rng rng(7);
    DenseLayer lay(3, 4, Act::Identity);
    lay.init(rng);
    Tensor2 x(2, 4), c(2, 3), y, dx;
    rng.fill_gaussian(x.data.data(), x.size());
    c.fill(1.0);
    lay.forward(x, y, true);
    lay.zero_grad();
    lay.backward(c, dx);
    Tensor2 once = lay.gw;
    lay.forward(x, y, true);
    lay.backward(c, dx);
    for (size_t i = 0; i < once.size(); ++i)
        CHECK(lay.gw.data[i] == doctest::Approx(2.0 * once.data[i]).epsilon(1e-12));
    lay.zero_grad();
    for (double g : lay.gw.data) CHECK(g == 0.0);
}

TEST_CASE("mlp gradients with gelu hidden layers") {
    Rng rng(21);
    Mlp net({5, 7, 6, 3}, Act::Identity);
    net.init(rng);
    Tensor2 x(3, 5), c(3, 3);
    rng.fill_gaussian(x.data.data(), x.size());
    rng.fill_gaussian(c.data.data(), c.size());

    auto loss = [&]() {
        Tensor2 y;
        net.forward(x, y, nullptr, false);
        return weighted_loss(y, c);
    };
    Tensor2 y, dx;
    net.forward(x, y, nullptr, true); // training mode arms the layer caches
    net.zero_grad();
    net.backward(c, dx);
    for (auto& lay : net.layers) {
        CHECK(check_grads(loss, lay.w.data.data(), lay.gw.data.data(), lay.w.size()) < 1e-6);
        CHECK(check_grads(loss, lay.b.data(), lay.gb.data(), lay.b.size()) < 1e-6);
    }
    CHECK(check_grads(loss, x.data.data(), dx.data.data(), x.size()) < 1e-6);
}

TEST_CASE("dropout semantics") {
    Rng rng(5);
    Dropout d;
    d.rate = 0.5;
    Tensor2 x(4, 8);
    x.fill(3.0);
    Tensor2 kept = x;
    d.forward(kept, rng, true);
    size_t zeros = 0;
    for (double v : kept.data) {
        bool zero = v == 0.0, scaled = std::fabs(v - 6.0) < 1e-12;
        CHECK((zero || scaled));
        zeros += zero;
    }
    CHECK(zeros > 0);
    CHECK(zeros < kept.size());

    // backward zeroes the same slots and applies the same scale
    Tensor2 g(4, 8);
    g.fill(1.0);
    d.backward(g);
    for (size_t i = 0; i < g.size(); ++i) {
        if (kept.data[i] == 0.0)
            CHECK(g.data[i] == 0.0);
        else
            CHECK(g.data[i] == doctest::Approx(2.0).epsilon(1e-12));
    }

    // evaluation mode is the identity
    Tensor2 same = x;
    d.forward(same, rng, false);
    for (size_t i = 0; i < same.size(); ++i) CHECK(same.data[i] == x.data[i]);
}

TEST_CASE("conv1d matches a naive direct cross-correlation") {
    Rng rng(31);
    Conv1dLayer conv(2, 3, 3, 1, 1, Act::Identity);
    conv.init(rng);
    size_t L = 7;
    Tensor2 x(3, L), y;
    rng.fill_gaussian(x.data.data(), x.size());
    conv.forward(x, y, false);
    REQUIRE(y.rows == 2);
    REQUIRE(y.cols == L);
    for (size_t oc = 0; oc < 2; ++oc)
        for (size_t p = 0; p < L; ++p) {
            double acc = conv.b[oc];
            for (size_t ic = 0; ic < 3; ++ic)
                for (size_t k = 0; k < 3; ++k) {
                    long src = long(p) + long(k) - 1; // stride 1, padding 1
                    if (src < 0 || src >= long(L)) continue;
                    acc += conv.wt(oc, ic, k) * x.at(ic, size_t(src));
                }
            CHECK(y.at(oc, p) == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("conv1d gradients pass finite-difference checks") {
    for (Act act : {Act::Identity, Act::Gelu}) {
        Rng rng(41 + int(act));
        Conv1dLayer conv(3, 2, 3, 1, 1, act);
        conv.init(rng);
        size_t L = 6;
        Tensor2 x(2, L), c(3, L), y, dx;
        rng.fill_gaussian(x.data.data(), x.size());
        rng.fill_gaussian(c.data.data(), c.size());
        auto loss = [&]() {
            Tensor2 yy;
            conv.forward(x, yy, false);
            return weighted_loss(yy, c);
        };
        conv.forward(x, y, true);
        conv.zero_grad();
        conv.backward(c, dx);
        CHECK(check_grads(loss, conv.w.data(), conv.gw.data(), conv.w.size()) < 1e-6);
        CHECK(check_grads(loss, conv.b.data(), conv.gb.data(), conv.b.size()) < 1e-6);
        CHECK(check_grads(loss, x.data.data(), dx.data.data(), x.size()) < 1e-6);
    }
}

TEST_CASE("conv1d output length arithmetic and errors") {
    Conv1dLayer even(1, 1, 3, 2, 1, Act::Identity);
    CHECK(even.out_len(7) == 4); // (7 + 2 - 3)/2 + 1
    CHECK_THROWS_AS(even.out_len(8), ConfigError);
    Conv1dLayer tiny(1, 1, 5, 1, 0, Act::Identity);
    CHECK_THROWS_AS(tiny.out_len(3), ConfigError);
}

TEST_CASE("adam takes the frozen first steps on a constant gradient") {
    double w = 0.0, g = 0.0;
    Adam opt({{&w, &g, 1}}, 1e-3);
    const double want[3] = {-0.0009999999900000003, -0.001999999979999993, -0.0029999999699999932};
    for (int s = 0; s < 3; ++s) {
        g = 1.0;
        opt.step();
        CHECK(w == doctest::Approx(want[s]).epsilon(1e-15));
        opt.zero_grad();
        CHECK(g == 0.0);
    }
    CHECK(opt.step_count() == 3);
}

TEST_CASE("adam moment save/restore resumes the exact trajectory") {
    Rng rng(9);
    double w1[4], g1[4], w2[4], g2[4];
    for (int i = 0; i < 4; ++i) {
        w1[i] = w2[i] = rng.gaussian();
        g1[i] = g2[i] = 0.0;
    }
    Adam a({{w1, g1, 4}}, 3e-3);
    Adam b({{w2, g2, 4}}, 3e-3);
    auto grads = [&](double* g, const double* w) {
        for (int i = 0; i < 4; ++i) g[i] = std::sin(w[i]) + 0.3;
    };
    for (int s = 0; s < 5; ++s) {
        grads(g1, w1);
        a.step();
    }
    // replay b to the same point, snapshot, then check continuation matches
    for (int s = 0; s < 5; ++s) {
        grads(g2, w2);
        b.step();
    }
    auto m = a.flat_m();
    auto v = a.flat_v();
    Adam c({{w2, g2, 4}}, 3e-3);
    c.restore(a.step_count(), m, v);
    for (int s = 0; s < 3; ++s) {
        grads(g1, w1);
        a.step();
        grads(g2, w2);
        c.step();
    }
    for (int i = 0; i < 4; ++i) CHECK(w1[i] == w2[i]);
}

TEST_CASE("one-cycle schedule hits the frozen waypoints") {
    OneCycle oc{0.001, 1000, 0.3, 25.0, 1e4};
    CHECK(oc.lr(0) == doctest::Approx(4e-5).epsilon(1e-15));
    CHECK(oc.lr(150) == doctest::Approx(0.00052).epsilon(1e-14));
    CHECK(oc.lr(300) == doctest::Approx(0.001).epsilon(1e-14));
    CHECK(oc.lr(650) == doctest::Approx(0.0004989265107831001).epsilon(1e-13));
    CHECK(oc.lr(999) == doctest::Approx(1e-7).epsilon(1e-13));
    CHECK_THROWS_AS(oc.lr(1000), ConfigError);

    // warmup rises, decay falls
    for (size_t s = 1; s < 300; ++s) CHECK(oc.lr(s) > oc.lr(s - 1));
    for (size_t s = 301; s < 1000; ++s) CHECK(oc.lr(s) < oc.lr(s - 1));
}

TEST_CASE("rng state round-trips through text") {
    Rng rng(1234);
    for (int i = 0; i < 7; ++i) rng.gaussian(); // odd count leaves a cached spare
    std::string s = rng.state();
    std::vector<double> ahead;
    for (int i = 0; i < 10; ++i) ahead.push_back(rng.gaussian());
    Rng fresh(0);
    fresh.restore(s);
    for (int i = 0; i < 10; ++i) CHECK(fresh.gaussian() == ahead[size_t(i)]);
    CHECK_THROWS_AS(fresh.restore("not a state"), DataError);
}

TEST_CASE("rng index stays in range and is deterministic") {
    Rng a(77), b(77);
    for (int i = 0; i < 1000; ++i) {
        size_t n = 1 + (size_t(i) % 17);
        size_t x = a.index(n);
        CHECK(x < n);
        CHECK(x == b.index(n));
    }
    CHECK_THROWS_AS(a.index(0), ConfigError);
}

TEST_CASE("rng gaussian moments are sane") {
    Rng rng(2024);
    const size_t N = 200000;
    double s = 0, s2 = 0;
    for (size_t i = 0; i < N; ++i) {
        double x = rng.gaussian();
        s += x;
        s2 += x * x;
    }
    double mean = s / double(N), var = s2 / double(N) - mean * mean;
    CHECK(std::fabs(mean) < 0.01);
    CHECK(std::fabs(var - 1.0) < 0.02);
}

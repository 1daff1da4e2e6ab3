#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "helpers.hpp"
#include "topicdiff/checkpoint.hpp"

using namespace topicdiff;

namespace {
namespace fs = std::filesystem;

struct TmpDir {
    fs::path path;
    TmpDir() {
        path = fs::temp_directory_path() / ("tdckpt-" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<char> read_bytes(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& p, const std::vector<char>& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(b.data(), std::streamsize(b.size()));
}

// every stored weight survives as its nearest float32
void check_f32_roundtrip(std::vector<ParamRef> orig, std::vector<ParamRef> back) {
    REQUIRE(orig.size() == back.size());
    for (size_t i = 0; i < orig.size(); ++i) {
        REQUIRE(orig[i].n == back[i].n);
        for (size_t j = 0; j < orig[i].n; ++j)
            CHECK(back[i].w[j] == double(float(orig[i].w[j])));
    }
}

TopicVae sample_vae() {
    VaeConfig c;
    c.T = 3;
    c.D_topic = 4;
    c.D_embed = 6;
    c.N_BoW = 9;
    c.variant = VaeVariant::NoResidual;
    c.dropout = 0.1;
    TopicVae m(c);
    Rng rng(11);
    m.init(rng);
    m.emb_mean.assign(6, 0.25);
    m.emb_std.assign(6, 2.0);
    return m;
}

Diffusor sample_diffusor() {
    DiffusorConfig c;
    c.dim = 5;
    c.h1 = 7;
    c.h2 = 4;
    Diffusor d(c);
    Rng rng(12);
    d.init(rng);
    for (auto& w : d.fc5.w.data) w = rng.gaussian();
    return d;
}

CompressorModel sample_compressor() {
    CompressorConfig c;
    c.n_seq = 8;
    c.d_token = 6;
    c.channel_plan = {8, 4, 2};
    c.dropout = 0.0;
    CompressorModel m(c);
    Rng rng(13);
    m.init(rng);
    return m;
}
} // namespace

TEST_CASE("vae checkpoints restore config, moments and weights") {
    TmpDir tmp;
    TopicVae m = sample_vae();
    Checkpoint c = pack_vae(m, 17, 99);
    CHECK(c.kind == "vae");
    save_checkpoint(tmp.file("m.ckpt"), c);
    Checkpoint r = load_checkpoint(tmp.file("m.ckpt"));
    size_t epochs = 0;
    uint64_t seed = 0;
    TopicVae back = unpack_vae(r, &epochs, &seed);
    CHECK(epochs == 17);
    CHECK(seed == 99);
    CHECK(back.cfg.T == m.cfg.T);
    CHECK(back.cfg.D_topic == m.cfg.D_topic);
    CHECK(back.cfg.D_embed == m.cfg.D_embed);
    CHECK(back.cfg.N_BoW == m.cfg.N_BoW);
    CHECK(back.cfg.variant == m.cfg.variant);
    CHECK(back.cfg.dropout == doctest::Approx(m.cfg.dropout).epsilon(1e-12));
    check_f32_roundtrip(m.params(), back.params());
    REQUIRE(back.emb_mean.size() == 6);
    for (size_t i = 0; i < 6; ++i) {
        CHECK(back.emb_mean[i] == double(float(m.emb_mean[i])));
        CHECK(back.emb_std[i] == double(float(m.emb_std[i])));
    }

    // same topics from both models on a fresh embedding
    Rng rng(14);
    std::vector<double> e(6);
    rng.fill_gaussian(e.data(), 6);
    auto t1 = m.infer_topics(e.data());
    auto t2 = back.infer_topics(e.data());
    for (size_t k = 0; k < t1.size(); ++k)
        CHECK(t2[k] == doctest::Approx(t1[k]).epsilon(1e-5));
}

TEST_CASE("diffusor checkpoints carry the normalizer and the schedule") {
    TmpDir tmp;
    Diffusor d = sample_diffusor();
    EmbeddingNormalizer norm;
    norm.mean = {0.1, -0.2, 0.3, 0.0, 1.5};
    norm.stdev = {1.0, 2.0, 0.5, 1e-8, 3.0};
    NoiseSchedule sched = make_schedule(123, 2e-4, 0.015);
    Checkpoint c = pack_diffusor(d, norm, sched, 5, 1234567890123456789ULL);
    CHECK(c.kind == "diffusor");
    save_checkpoint(tmp.file("d.ckpt"), c);
    Checkpoint r = load_checkpoint(tmp.file("d.ckpt"));
    EmbeddingNormalizer n2;
    NoiseSchedule s2;
    size_t epochs = 0;
    uint64_t seed = 0;
    Diffusor back = unpack_diffusor(r, &n2, &s2, &epochs, &seed);
    CHECK(epochs == 5);
    CHECK(seed == 1234567890123456789ULL);
    CHECK(back.cfg.dim == 5);
    CHECK(back.cfg.h1_resolved() == 7);
    CHECK(back.cfg.h2_resolved() == 4);
    check_f32_roundtrip(d.params(), back.params());
    REQUIRE(n2.mean.size() == 5);
    for (size_t i = 0; i < 5; ++i) {
        CHECK(n2.mean[i] == double(float(norm.mean[i])));
        CHECK(n2.stdev[i] == double(float(norm.stdev[i])));
    }
    REQUIRE(s2.T_steps == 123);
    // the schedule is rebuilt from its endpoints, not stored as arrays
    for (size_t i = 0; i < 123; ++i) {
        CHECK(s2.beta[i] == doctest::Approx(sched.beta[i]).epsilon(1e-12));
        CHECK(s2.alpha_bar[i] == doctest::Approx(sched.alpha_bar[i]).epsilon(1e-9));
    }
}

TEST_CASE("compressor checkpoints restore the channel plan") {
    TmpDir tmp;
    CompressorModel m = sample_compressor();
    Checkpoint c = pack_compressor(m, 2, 7);
    CHECK(c.kind == "compressor");
    save_checkpoint(tmp.file("c.ckpt"), c);
    size_t epochs = 0;
    uint64_t seed = 0;
    CompressorModel back = unpack_compressor(load_checkpoint(tmp.file("c.ckpt")), &epochs, &seed);
    CHECK(epochs == 2);
    CHECK(seed == 7);
    CHECK(back.cfg.n_seq == 8);
    CHECK(back.cfg.d_token == 6);
    CHECK(back.cfg.channel_plan == std::vector<size_t>({8, 4, 2}));
    check_f32_roundtrip(m.params(), back.params());
}

TEST_CASE("identical checkpoints write identical bytes") {
    TmpDir tmp;
    TopicVae m = sample_vae();
    Checkpoint c = pack_vae(m, 3, 4);
    save_checkpoint(tmp.file("a.ckpt"), c);
    save_checkpoint(tmp.file("b.ckpt"), c);
    CHECK(read_bytes(tmp.file("a.ckpt")) == read_bytes(tmp.file("b.ckpt")));

    // load -> save keeps the byte stream stable too
    Checkpoint r = load_checkpoint(tmp.file("a.ckpt"));
    save_checkpoint(tmp.file("c.ckpt"), r);
    CHECK(read_bytes(tmp.file("a.ckpt")) == read_bytes(tmp.file("c.ckpt")));
}

TEST_CASE("unpacking the wrong kind is refused") {
    TmpDir tmp;
    Checkpoint c = pack_vae(sample_vae(), 1, 2);
    save_checkpoint(tmp.file("m.ckpt"), c);
    Checkpoint r = load_checkpoint(tmp.file("m.ckpt"));
    size_t e;
    uint64_t s;
    CHECK_THROWS_AS(unpack_compressor(r, &e, &s), DataError);
    EmbeddingNormalizer n;
    NoiseSchedule sc;
    CHECK_THROWS_AS(unpack_diffusor(r, &n, &sc), DataError);
    try {
        unpack_compressor(r);
        FAIL("expected a kind mismatch");
    } catch (const DataError& err) {
        CHECK(std::string(err.what()).find("vae") != std::string::npos);
    }
}

TEST_CASE("corrupted files are rejected") {
    TmpDir tmp;
    Checkpoint c = pack_vae(sample_vae(), 1, 2);
    save_checkpoint(tmp.file("m.ckpt"), c);
    auto bytes = read_bytes(tmp.file("m.ckpt"));
    REQUIRE(bytes.size() > 16);

    // bad magic
    auto bad = bytes;
    bad[0] = 'X';
    write_bytes(tmp.file("magic.ckpt"), bad);
    CHECK_THROWS_AS(load_checkpoint(tmp.file("magic.ckpt")), DataError);

    // unsupported version (little-endian u32 starts right after the magic)
    bad = bytes;
    bad[4] = 9;
    write_bytes(tmp.file("ver.ckpt"), bad);
    try {
        load_checkpoint(tmp.file("ver.ckpt"));
        FAIL("expected a version error");
    } catch (const DataError& err) {
        CHECK(std::string(err.what()).find("version") != std::string::npos);
    }

    // truncations at several depths
    for (size_t keep : {size_t(3), size_t(9), bytes.size() / 2, bytes.size() - 1}) {
        auto cut = bytes;
        cut.resize(keep);
        write_bytes(tmp.file("cut.ckpt"), cut);
        CHECK_THROWS_AS(load_checkpoint(tmp.file("cut.ckpt")), DataError);
    }

    CHECK_THROWS_AS(load_checkpoint(tmp.file("missing.ckpt")), DataError);
}

TEST_CASE("missing arrays are reported by name") {
    Checkpoint c = pack_vae(sample_vae(), 1, 2);
    CHECK_THROWS_AS(c.find("definitely_not_there"), DataError);
    CHECK(c.find(c.arrays.front().name).name == c.arrays.front().name);

    // dropping a weight array breaks unpacking
    Checkpoint maimed = c;
    maimed.arrays.erase(maimed.arrays.begin());
    CHECK_THROWS_AS(unpack_vae(maimed), DataError);
}

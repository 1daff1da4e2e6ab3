#include "topicdiff/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace topicdiff {

using nlohmann::json;

size_t NamedArray::numel() const {
    size_t n = 1;
    for (uint64_t d : dims) n *= size_t(d);
    return n;
}

const NamedArray& Checkpoint::find(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return a;
    throw DataError("checkpoint is missing array \"" + name + "\"");
}

static constexpr char kMagic[4] = {'T', 'D', 'C', 'P'};
static constexpr uint32_t kVersion = 1;

static void put_u32(std::ostream& o, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (unsigned char)(v >> (8 * i));
    o.write((const char*)b, 4);
}

static void put_u64(std::ostream& o, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (unsigned char)(v >> (8 * i));
    o.write((const char*)b, 8);
}

static uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read((char*)b, 4);
    if (!in) throw DataError("checkpoint truncated");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(b[i]) << (8 * i);
    return v;
}

static uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read((char*)b, 8);
    if (!in) throw DataError("checkpoint truncated");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
    return v;
}

static void put_str(std::ostream& o, const std::string& s) {
    put_u32(o, uint32_t(s.size()));
    o.write(s.data(), std::streamsize(s.size()));
}

static std::string get_str(std::istream& in) {
    uint32_t n = get_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw DataError("checkpoint truncated");
    return s;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_str(out, c.kind);
    put_str(out, c.config_json);
    put_u64(out, c.arrays.size());
    for (const auto& a : c.arrays) {
        put_str(out, a.name);
        put_u32(out, uint32_t(a.dims.size()));
        for (uint64_t d : a.dims) put_u64(out, d);
        if (a.data.size() != a.numel())
            throw ConfigError("array \"" + a.name + "\" does not match its dims");
        for (float f : a.data) {
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            put_u32(out, bits);
        }
    }
    if (!out) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("not a checkpoint file: " + path);
    uint32_t ver = get_u32(in);
    if (ver != kVersion) throw DataError("unsupported checkpoint version");
    Checkpoint c;
    c.kind = get_str(in);
    c.config_json = get_str(in);
    uint64_t n = get_u64(in);
    for (uint64_t i = 0; i < n; ++i) {
        NamedArray a;
        a.name = get_str(in);
        uint32_t nd = get_u32(in);
        for (uint32_t d = 0; d < nd; ++d) a.dims.push_back(get_u64(in));
        a.data.resize(a.numel());
        for (auto& f : a.data) {
            uint32_t bits = get_u32(in);
            std::memcpy(&f, &bits, 4);
        }
        c.arrays.push_back(std::move(a));
    }
    return c;
}

static NamedArray arr1(const std::string& name, const std::vector<double>& v) {
    NamedArray a{name, {uint64_t(v.size())}, {}};
    a.data.reserve(v.size());
    for (double x : v) a.data.push_back(float(x));
    return a;
}

static NamedArray arr2(const std::string& name, const Tensor2& t) {
    NamedArray a{name, {uint64_t(t.rows), uint64_t(t.cols)}, {}};
    a.data.reserve(t.size());
    for (double x : t.data) a.data.push_back(float(x));
    return a;
}

static void fill1(const Checkpoint& c, const std::string& name, std::vector<double>& v) {
    const NamedArray& a = c.find(name);
    if (a.numel() != v.size()) throw DataError("array \"" + name + "\" has the wrong size");
    for (size_t i = 0; i < v.size(); ++i) v[i] = double(a.data[i]);
}

static void fill2(const Checkpoint& c, const std::string& name, Tensor2& t) {
    const NamedArray& a = c.find(name);
    if (a.dims.size() != 2 || a.dims[0] != t.rows || a.dims[1] != t.cols)
        throw DataError("array \"" + name + "\" has the wrong shape");
    for (size_t i = 0; i < t.size(); ++i) t.data[i] = double(a.data[i]);
}

static void pack_mlp(Checkpoint& c, const std::string& prefix, const Mlp& m) {
    for (size_t i = 0; i < m.layers.size(); ++i) {
        std::string base = prefix + "." + std::to_string(i);
        c.arrays.push_back(arr2(base + ".w", m.layers[i].w));
        c.arrays.push_back(arr1(base + ".b", m.layers[i].b));
    }
}

static void unpack_mlp(const Checkpoint& c, const std::string& prefix, Mlp& m) {
    for (size_t i = 0; i < m.layers.size(); ++i) {
        std::string base = prefix + "." + std::to_string(i);
        fill2(c, base + ".w", m.layers[i].w);
        fill1(c, base + ".b", m.layers[i].b);
    }
}

Checkpoint pack_vae(const TopicVae& m, size_t epochs_done, uint64_t seed) {
    Checkpoint c;
    c.kind = "vae";
    json j;
    j["T"] = m.cfg.T;
    j["D_topic"] = m.cfg.D_topic;
    j["D_embed"] = m.cfg.D_embed;
    j["N_BoW"] = m.cfg.N_BoW;
    j["variant"] = variant_name(m.cfg.variant);
    j["lr"] = m.cfg.lr;
    j["batch"] = m.cfg.batch;
    j["dropout"] = m.cfg.dropout;
    j["val_fraction"] = m.cfg.val_fraction;
    j["epochs_done"] = epochs_done;
    j["seed"] = seed;
    c.config_json = j.dump();
    pack_mlp(c, "enc3", m.enc3);
    pack_mlp(c, "enc4", m.enc4);
    pack_mlp(c, "dec4", m.dec4);
    c.arrays.push_back(arr2("e_T", m.e_T));
    c.arrays.push_back(arr2("e_V", m.e_V));
    c.arrays.push_back(arr1("emb_mean", m.emb_mean));
    c.arrays.push_back(arr1("emb_std", m.emb_std));
    return c;
}

TopicVae unpack_vae(const Checkpoint& c, size_t* epochs_done, uint64_t* seed) {
    if (c.kind != "vae") throw DataError("checkpoint holds a " + c.kind + " model, not a vae");
    json j = json::parse(c.config_json);
    VaeConfig cfg;
    cfg.T = j.at("T").get<size_t>();
    cfg.D_topic = j.at("D_topic").get<size_t>();
    cfg.D_embed = j.at("D_embed").get<size_t>();
    cfg.N_BoW = j.at("N_BoW").get<size_t>();
    cfg.variant = variant_from_name(j.at("variant").get<std::string>());
    cfg.lr = j.at("lr").get<double>();
    cfg.batch = j.at("batch").get<size_t>();
    cfg.dropout = j.at("dropout").get<double>();
    cfg.val_fraction = j.at("val_fraction").get<double>();
    if (epochs_done) *epochs_done = j.at("epochs_done").get<size_t>();
    if (seed) *seed = j.at("seed").get<uint64_t>();
    TopicVae m(cfg);
    unpack_mlp(c, "enc3", m.enc3);
    unpack_mlp(c, "enc4", m.enc4);
    unpack_mlp(c, "dec4", m.dec4);
    fill2(c, "e_T", m.e_T);
    fill2(c, "e_V", m.e_V);
    m.emb_mean.resize(cfg.D_embed);
    m.emb_std.resize(cfg.D_embed);
    fill1(c, "emb_mean", m.emb_mean);
    fill1(c, "emb_std", m.emb_std);
    return m;
}

Checkpoint pack_diffusor(const Diffusor& m, const EmbeddingNormalizer& norm,
                         const NoiseSchedule& sched, size_t epochs_done, uint64_t seed) {
    Checkpoint c;
    c.kind = "diffusor";
    json j;
    j["dim"] = m.cfg.dim;
    j["h1"] = m.cfg.h1_resolved();
    j["h2"] = m.cfg.h2_resolved();
    j["batch"] = m.cfg.batch;
    j["lr"] = m.cfg.lr;
    j["T_steps"] = sched.T_steps;
    j["beta_start"] = sched.beta.front();
    j["beta_end"] = sched.beta.back();
    j["epochs_done"] = epochs_done;
    j["seed"] = seed;
    c.config_json = j.dump();
    const DenseLayer* ls[] = {&m.fc1, &m.fc2, &m.fc3, &m.fc4, &m.fc5};
    for (size_t i = 0; i < 5; ++i) {
        std::string base = "fc" + std::to_string(i + 1);
        c.arrays.push_back(arr2(base + ".w", ls[i]->w));
        c.arrays.push_back(arr1(base + ".b", ls[i]->b));
    }
    c.arrays.push_back(arr1("norm_mean", norm.mean));
    c.arrays.push_back(arr1("norm_std", norm.stdev));
    return c;
}

Diffusor unpack_diffusor(const Checkpoint& c, EmbeddingNormalizer* norm, NoiseSchedule* sched,
                         size_t* epochs_done, uint64_t* seed) {
    if (c.kind != "diffusor")
        throw DataError("checkpoint holds a " + c.kind + " model, not a diffusor");
    json j = json::parse(c.config_json);
    DiffusorConfig cfg;
    cfg.dim = j.at("dim").get<size_t>();
    cfg.h1 = j.at("h1").get<size_t>();
    cfg.h2 = j.at("h2").get<size_t>();
    cfg.batch = j.at("batch").get<size_t>();
    cfg.lr = j.at("lr").get<double>();
    if (epochs_done) *epochs_done = j.at("epochs_done").get<size_t>();
    if (seed) *seed = j.at("seed").get<uint64_t>();
    Diffusor m(cfg);
    const std::string names[] = {"fc1", "fc2", "fc3", "fc4", "fc5"};
    DenseLayer* ls[] = {&m.fc1, &m.fc2, &m.fc3, &m.fc4, &m.fc5};
    for (size_t i = 0; i < 5; ++i) {
        fill2(c, names[i] + ".w", ls[i]->w);
        fill1(c, names[i] + ".b", ls[i]->b);
    }
    if (norm) {
        norm->mean.resize(cfg.dim);
        norm->stdev.resize(cfg.dim);
        fill1(c, "norm_mean", norm->mean);
        fill1(c, "norm_std", norm->stdev);
    }
    if (sched)
        *sched = make_schedule(j.at("T_steps").get<size_t>(), j.at("beta_start").get<double>(),
                               j.at("beta_end").get<double>());
    return m;
}

Checkpoint pack_compressor(const CompressorModel& m, size_t epochs_done, uint64_t seed) {
    Checkpoint c;
    c.kind = "compressor";
    json j;
    j["n_seq"] = m.cfg.n_seq;
    j["d_token"] = m.cfg.d_token;
    j["channel_plan"] = m.cfg.channel_plan;
    j["kernel"] = m.cfg.kernel;
    j["stride"] = m.cfg.stride;
    j["padding"] = m.cfg.padding;
    j["dropout"] = m.cfg.dropout;
    j["epochs_done"] = epochs_done;
    j["seed"] = seed;
    c.config_json = j.dump();
    auto put = [&](const std::string& base, const Conv1dLayer& l) {
        NamedArray w{base + ".w", {uint64_t(l.out_ch), uint64_t(l.in_ch), uint64_t(l.ksize)}, {}};
        w.data.reserve(l.w.size());
        for (double x : l.w) w.data.push_back(float(x));
        c.arrays.push_back(std::move(w));
        c.arrays.push_back(arr1(base + ".b", l.b));
    };
    for (size_t i = 0; i < m.encoder.size(); ++i) put("enc." + std::to_string(i), m.encoder[i]);
    for (size_t i = 0; i < m.decoder.size(); ++i) put("dec." + std::to_string(i), m.decoder[i]);
    return c;
}

CompressorModel unpack_compressor(const Checkpoint& c, size_t* epochs_done, uint64_t* seed) {
    if (c.kind != "compressor")
        throw DataError("checkpoint holds a " + c.kind + " model, not a compressor");
    json j = json::parse(c.config_json);
    CompressorConfig cfg;
    cfg.n_seq = j.at("n_seq").get<size_t>();
    cfg.d_token = j.at("d_token").get<size_t>();
    cfg.channel_plan = j.at("channel_plan").get<std::vector<size_t>>();
    cfg.kernel = j.at("kernel").get<size_t>();
    cfg.stride = j.at("stride").get<size_t>();
    cfg.padding = j.at("padding").get<size_t>();
    cfg.dropout = j.at("dropout").get<double>();
    if (epochs_done) *epochs_done = j.at("epochs_done").get<size_t>();
    if (seed) *seed = j.at("seed").get<uint64_t>();
    CompressorModel m(cfg);
    auto get = [&](const std::string& base, Conv1dLayer& l) {
        const NamedArray& w = c.find(base + ".w");
        if (w.dims.size() != 3 || w.dims[0] != l.out_ch || w.dims[1] != l.in_ch ||
            w.dims[2] != l.ksize)
            throw DataError("array \"" + base + ".w\" has the wrong shape");
        for (size_t i = 0; i < l.w.size(); ++i) l.w[i] = double(w.data[i]);
        fill1(c, base + ".b", l.b);
    };
    for (size_t i = 0; i < m.encoder.size(); ++i) get("enc." + std::to_string(i), m.encoder[i]);
    for (size_t i = 0; i < m.decoder.size(); ++i) get("dec." + std::to_string(i), m.decoder[i]);
    return m;
}

} // namespace topicdiff

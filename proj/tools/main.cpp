#include <algorithm>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "topicdiff/checkpoint.hpp"
#include "topicdiff/compressor.hpp"
#include "topicdiff/corpus.hpp"
#include "topicdiff/diffusion.hpp"
#include "topicdiff/embedding.hpp"
#include "topicdiff/metrics.hpp"
#include "topicdiff/rng.hpp"
#include "topicdiff/synth.hpp"
#include "topicdiff/vae.hpp"

using namespace topicdiff;
using nlohmann::json;

static const char* kVersion = "0.1.0";

namespace {

struct Globals {
    uint64_t seed = 0;
    std::string out_dir = ".";
    size_t threads = 1;
    bool verbose = false;

    std::string path(const std::string& name) const { return out_dir + "/" + name; }
    std::ostream* log() const { return verbose ? &std::cerr : nullptr; }
};

void echo_config(const CLI::App& root) {
    std::cout << "config:\n";
    std::istringstream ini(root.config_to_str(true, false));
    std::string line;
    while (std::getline(ini, line))
        if (!line.empty()) std::cout << "  " << line << "\n";
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << body;
    if (!out) throw DataError("failed writing " + path);
}

std::vector<std::vector<std::string>> keyword_strings(TopicVae& model, const Vocabulary& vocab,
                                                      size_t top_k) {
    if (vocab.size() != model.cfg.N_BoW)
        throw ConfigError("checkpoint vocabulary size " + std::to_string(model.cfg.N_BoW) +
                          " does not match the supplied vocabulary (" +
                          std::to_string(vocab.size()) + ")");
    std::vector<std::vector<std::string>> out;
    for (const auto& ids : model.top_keywords(top_k)) {
        std::vector<std::string> row;
        for (size_t id : ids) row.push_back(vocab.words[id]);
        out.push_back(std::move(row));
    }
    return out;
}

int cmd_synth(const Globals& g, const SynthParams& p) {
    SynthCorpus s = synth_corpus(p);
    save_corpus_jsonl(g.path("corpus.jsonl"), s.docs);
    save_embeddings(g.path("embeddings.bin"), s.embeddings);
    save_vocab(g.path("vocab.txt"), s.vocab);
    save_bow_sparse(g.path("bow.txt"), s.bows);
    std::cout << "wrote " << s.docs.size() << " documents, " << s.embeddings.dim
              << "-dim embeddings, vocabulary of " << s.vocab.size() << "\n";
    return 0;
}

struct IngestArgs {
    std::string corpus;
    std::string stopwords;
    size_t min_count = 10;
    size_t min_len = 3;
};

int cmd_ingest(const Globals& g, const IngestArgs& a) {
    std::vector<Document> docs = load_corpus_jsonl(a.corpus);
    std::unordered_set<std::string> stop;
    if (!a.stopwords.empty()) stop = load_word_set(a.stopwords);
    Vocabulary vocab = build_vocab(docs, a.min_count, a.min_len, stop);

    std::vector<std::vector<uint32_t>> bows;
    uint64_t total_tokens = 0;
    for (const auto& d : docs) {
        total_tokens += tokenize(d.text).size();
        bows.push_back(bow_vector(d, vocab));
    }
    save_vocab(g.path("vocab.txt"), vocab);
    save_bow_sparse(g.path("bow.txt"), bows);

    json stats;
    stats["n_docs"] = docs.size();
    stats["avg_doc_len"] = docs.empty() ? 0.0 : double(total_tokens) / double(docs.size());
    stats["vocab_size"] = vocab.size();
    write_text(g.path("stats.json"), stats.dump(2) + "\n");
    std::cout << "ingested " << docs.size() << " documents, vocabulary " << vocab.size()
              << ", avg length " << stats["avg_doc_len"].dump() << "\n";
    return 0;
}

struct TrainCompressorArgs {
    std::string data;
    size_t synth_samples = 0;
    size_t n_seq = 256, d_token = 768;
    std::vector<size_t> channels = {256, 32, 4};
    double dropout = 0.2, lr = 1e-3, val_fraction = 0.1;
    size_t epochs = 10;
    std::string resume;
};

int cmd_train_compressor(const Globals& g, const TrainCompressorArgs& a) {
    CompressorConfig cfg;
    cfg.n_seq = a.n_seq;
    cfg.d_token = a.d_token;
    cfg.channel_plan = a.channels;
    cfg.dropout = a.dropout;
    cfg.validate();

    std::vector<Tensor2> data;
    if (!a.data.empty()) {
        EmbeddingMatrix m = load_embeddings(a.data);
        if (m.dim != cfg.n_seq * cfg.d_token)
            throw DataError("each row must hold n_seq*d_token values, got " +
                            std::to_string(m.dim));
        for (size_t r = 0; r < m.n_docs; ++r) {
            Tensor2 t(cfg.n_seq, cfg.d_token);
            std::copy(m.row(r), m.row(r) + m.dim, t.data.begin());
            data.push_back(std::move(t));
        }
    } else if (a.synth_samples > 0) {
        Rng rng(g.seed + 1);
        for (size_t i = 0; i < a.synth_samples; ++i) {
            Tensor2 t(cfg.n_seq, cfg.d_token);
            rng.fill_gaussian(t.data.data(), t.size());
            data.push_back(std::move(t));
        }
    } else {
        throw ConfigError("either --data or --synth-samples is required");
    }

    CompressorModel warm;
    CompressorModel* warm_p = nullptr;
    size_t done = 0;
    if (!a.resume.empty()) {
        warm = unpack_compressor(load_checkpoint(a.resume), &done);
        warm_p = &warm;
    }

    std::string ckpt_path = g.path("compressor.ckpt");
    CompressorTrainLog log;
    auto save_epoch = [&](const CompressorModel& m, size_t ep) {
        save_checkpoint(ckpt_path, pack_compressor(m, done + ep + 1, g.seed));
    };
    CompressorModel model = train_compressor(data, a.epochs, g.seed, cfg, a.lr, a.val_fraction,
                                             &log, g.log(), save_epoch, warm_p);
    save_checkpoint(ckpt_path, pack_compressor(model, done + a.epochs, g.seed));

    std::string body = "epoch\ttrain_mse\tval_mse\n";
    for (size_t i = 0; i < log.train_mse.size(); ++i)
        body += std::to_string(i) + "\t" + std::to_string(log.train_mse[i]) + "\t" +
                std::to_string(log.val_mse[i]) + "\n";
    write_text(g.path("compressor_log.tsv"), body);
    std::cout << "wrote " << ckpt_path << " (best epoch " << log.best_epoch << ")\n";
    return 0;
}

struct TrainVaeArgs {
    std::string embeddings, bow, vocab;
    std::string variant = "full";
    size_t topics = 10, d_topic = 64;
    size_t epochs = 50, batch = 256;
    double lr = 0.0, dropout = 0.0, val_fraction = 0.1;
    std::string resume;
};

int cmd_train_vae(const Globals& g, const TrainVaeArgs& a) {
    EmbeddingMatrix emb = load_embeddings(a.embeddings);
    Vocabulary vocab = load_vocab(a.vocab);
    std::vector<std::vector<uint32_t>> bows = load_bow_sparse(a.bow, vocab.size());
    if (bows.size() != emb.n_docs)
        throw DataError("embedding rows and bag-of-words rows differ in count");

    VaeConfig cfg;
    cfg.T = a.topics;
    cfg.D_topic = a.d_topic;
    cfg.D_embed = emb.dim;
    cfg.N_BoW = vocab.size();
    cfg.variant = variant_from_name(a.variant);
    cfg.lr = a.lr;
    cfg.batch = a.batch;
    cfg.dropout = a.dropout;
    cfg.val_fraction = a.val_fraction;
    cfg.validate();

    TopicVae warm;
    TopicVae* warm_p = nullptr;
    size_t done = 0;
    if (!a.resume.empty()) {
        warm = unpack_vae(load_checkpoint(a.resume), &done);
        warm_p = &warm;
    }

    std::string ckpt_path = g.path("vae.ckpt");
    VaeTrainLog log;
    auto save_epoch = [&](const TopicVae& m, size_t ep) {
        save_checkpoint(ckpt_path, pack_vae(m, done + ep + 1, g.seed));
    };
    TopicVae model =
        train_vae(emb, bows, cfg, a.epochs, g.seed, &log, g.log(), save_epoch, warm_p);
    save_checkpoint(ckpt_path, pack_vae(model, done + a.epochs, g.seed));

    std::string body = "epoch\ttrain_total\ttrain_bow\ttrain_mse\ttrain_kl\tval_total\n";
    for (size_t i = 0; i < log.train_epochs.size(); ++i) {
        const VaeLoss& t = log.train_epochs[i];
        body += std::to_string(i) + "\t" + std::to_string(t.total) + "\t" +
                std::to_string(t.bow) + "\t" + std::to_string(t.mse) + "\t" +
                std::to_string(t.kl) + "\t" + std::to_string(log.val_epochs[i].total) + "\n";
    }
    write_text(g.path("vae_log.tsv"), body);
    std::cout << "wrote " << ckpt_path << " (best epoch " << log.best_epoch << ")\n";
    return 0;
}

struct TrainDiffusorArgs {
    std::string embeddings;
    size_t epochs = 100, batch = 256;
    double lr = 1e-3;
    size_t h1 = 0, h2 = 0;
    size_t t_steps = 1000;
    double beta_start = 1e-4, beta_end = 0.02;
    std::string resume;
};

int cmd_train_diffusor(const Globals& g, const TrainDiffusorArgs& a) {
    EmbeddingMatrix emb = load_embeddings(a.embeddings);
    NoiseSchedule sched = make_schedule(a.t_steps, a.beta_start, a.beta_end);
    DiffusorConfig cfg;
    cfg.dim = emb.dim;
    cfg.h1 = a.h1;
    cfg.h2 = a.h2;
    cfg.batch = a.batch;
    cfg.lr = a.lr;

    Diffusor warm;
    Diffusor* warm_p = nullptr;
    size_t done = 0;
    if (!a.resume.empty()) {
        warm = unpack_diffusor(load_checkpoint(a.resume), nullptr, nullptr, &done);
        warm_p = &warm;
    }

    std::string ckpt_path = g.path("diffusor.ckpt");
    DiffusorTrainLog log;
    auto save_epoch = [&](const Diffusor& m, const EmbeddingNormalizer& n, size_t ep) {
        save_checkpoint(ckpt_path, pack_diffusor(m, n, sched, done + ep + 1, g.seed));
    };
    auto [model, norm] =
        train_diffusor(emb, sched, a.epochs, g.seed, cfg, &log, g.log(), save_epoch, warm_p);
    save_checkpoint(ckpt_path, pack_diffusor(model, norm, sched, done + a.epochs, g.seed));

    std::string body = "epoch\tloss\n";
    for (size_t i = 0; i < log.epoch_loss.size(); ++i)
        body += std::to_string(i) + "\t" + std::to_string(log.epoch_loss[i]) + "\n";
    write_text(g.path("diffusor_log.tsv"), body);
    std::cout << "wrote " << ckpt_path << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string vae, embeddings, bow, vocab, corpus;
    size_t runs = 10;
    size_t window = 110, top_k = 25;
};

int cmd_evaluate(const Globals& g, const EvaluateArgs& a) {
    TopicVae model = unpack_vae(load_checkpoint(a.vae));
    EmbeddingMatrix emb = load_embeddings(a.embeddings);
    Vocabulary vocab = load_vocab(a.vocab);
    if (vocab.size() != model.cfg.N_BoW)
        throw ConfigError("checkpoint vocabulary size " + std::to_string(model.cfg.N_BoW) +
                          " does not match the supplied vocabulary (" +
                          std::to_string(vocab.size()) + ")");
    if (emb.dim != model.cfg.D_embed)
        throw ConfigError("embedding dimension does not match the checkpoint");

    EvalInputs in;
    in.embs = &emb;
    in.bows = load_bow_sparse(a.bow, vocab.size());
    if (in.bows.size() != emb.n_docs)
        throw DataError("embedding rows and bag-of-words rows differ in count");

    std::vector<Document> docs = load_corpus_jsonl(a.corpus);
    if (docs.size() != emb.n_docs)
        throw DataError("corpus documents and embedding rows differ in count");
    bool labeled = true;
    for (const auto& d : docs) {
        in.doc_tokens.push_back(tokenize(d.text));
        if (d.label < 0) labeled = false;
    }
    if (labeled)
        for (const auto& d : docs) in.labels.push_back(d.label);

    in.topic_words = keyword_strings(model, vocab, a.top_k);

    CoherenceConfig ccfg;
    ccfg.window = a.window;
    ccfg.top_k = a.top_k;
    EvalReport rep = evaluate(model, in, ccfg, a.runs, g.seed, &std::cerr);

    std::string txt = format_report(rep);
    json j;
    j["version"] = kVersion;
    j["seed"] = g.seed;
    j["runs"] = rep.n_runs;
    j["config"] = {{"window", ccfg.window}, {"top_k", ccfg.top_k},
                   {"variant", variant_name(model.cfg.variant)}, {"topics", model.cfg.T}};
    auto put = [&](const char* name, const MetricStat& s) {
        j["metrics"][name] = {{"mean", s.mean}, {"std", s.stdev}};
    };
    if (rep.has_clusterability) {
        put("top_purity", rep.purity);
        put("top_nmi", rep.nmi);
        put("km_purity", rep.km_purity);
        put("km_nmi", rep.km_nmi);
    }
    put("diversity", rep.diversity);
    put("c_v", rep.c_v);
    put("perplexity", rep.perplexity);

    write_text(g.path("report.txt"), txt);
    write_text(g.path("report.json"), j.dump(2) + "\n");
    std::cout << txt;
    return 0;
}

struct GenerateArgs {
    std::string vae, diffusor;
    std::string topic = "random";
    size_t from_t = 500;
    size_t count = 1000;
    std::string out;
    bool deterministic = false;
};

std::vector<double> parse_topic_spec(const std::string& spec, size_t T, Rng& rng) {
    if (spec == "random") {
        // Dirichlet(1): normalized exponentials
        std::vector<double> t(T);
        double s = 0.0;
        for (auto& v : t) {
            v = -std::log(1.0 - rng.uniform());
            s += v;
        }
        for (auto& v : t) v /= s;
        return t;
    }
    if (spec.rfind("id:", 0) == 0) {
        size_t id = std::stoul(spec.substr(3));
        if (id >= T) throw ConfigError("topic id out of range");
        std::vector<double> t(T, 0.0);
        t[id] = 1.0;
        return t;
    }
    if (spec.rfind("dist:", 0) == 0) {
        std::vector<double> t;
        std::stringstream ss(spec.substr(5));
        std::string tok;
        while (std::getline(ss, tok, ',')) t.push_back(std::stod(tok));
        if (t.size() != T) throw ConfigError("topic distribution needs exactly T entries");
        double s = 0.0;
        for (double v : t) {
            if (v < 0.0) throw ConfigError("topic distribution entries must be non-negative");
            s += v;
        }
        if (s <= 0.0) throw ConfigError("topic distribution must have positive mass");
        for (auto& v : t) v /= s;
        return t;
    }
    throw ConfigError("topic spec must be \"random\", \"id:<k>\", or \"dist:<p1,p2,...>\"");
}

int cmd_generate(const Globals& g, const GenerateArgs& a) {
    TopicVae vae = unpack_vae(load_checkpoint(a.vae));
    EmbeddingNormalizer norm;
    NoiseSchedule sched;
    Diffusor diff = unpack_diffusor(load_checkpoint(a.diffusor), &norm, &sched);
    if (diff.cfg.dim != vae.cfg.D_embed)
        throw ConfigError("diffusor dimension " + std::to_string(diff.cfg.dim) +
                          " does not match the topic model's embedding dimension " +
                          std::to_string(vae.cfg.D_embed));
    if (a.from_t > sched.T_steps) throw ConfigError("from_t exceeds the schedule length");

    // per-sample seeds drawn up front so any thread count yields the same rows
    Rng master(g.seed);
    std::vector<uint64_t> seeds(a.count);
    for (auto& s : seeds) s = master.next_u64();

    EmbeddingMatrix out;
    out.n_docs = a.count;
    out.dim = vae.cfg.D_embed;
    out.rows.assign(a.count * out.dim, 0.0);

    size_t n_threads = std::min<size_t>(std::max<size_t>(g.threads, 1), a.count ? a.count : 1);
    auto worker = [&](size_t tid, TopicVae& v, Diffusor& d) {
        for (size_t i = tid; i < a.count; i += n_threads) {
            Rng rng(seeds[i]);
            std::vector<double> t = parse_topic_spec(a.topic, v.cfg.T, rng);
            std::vector<double> e =
                generate_from_topic(t, v, d, norm, a.from_t, sched, rng, a.deterministic);
            for (double x : e)
                if (!std::isfinite(x)) throw NumericError("generated embedding is not finite");
            std::copy(e.begin(), e.end(), out.rows.begin() + i * out.dim);
        }
    };
    if (n_threads <= 1) {
        worker(0, vae, diff);
    } else {
        // models mutate scratch caches, so each thread works on a copy
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errs(n_threads);
        for (size_t tid = 0; tid < n_threads; ++tid)
            pool.emplace_back([&, tid] {
                try {
                    TopicVae v = vae;
                    Diffusor d = diff;
                    worker(tid, v, d);
                } catch (...) {
                    errs[tid] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errs)
            if (e) std::rethrow_exception(e);
    }

    std::string path = a.out.empty() ? g.path("generated.bin") : a.out;
    save_embeddings(path, out);
    std::cout << "wrote " << a.count << " embeddings to " << path << "\n";
    return 0;
}

struct KeywordsArgs {
    std::string vae, vocab;
    size_t top_k = 25;
    std::string out;
};

int cmd_keywords(const Globals& g, const KeywordsArgs& a) {
    TopicVae model = unpack_vae(load_checkpoint(a.vae));
    Vocabulary vocab = load_vocab(a.vocab);
    auto lists = keyword_strings(model, vocab, a.top_k);
    std::string body;
    for (size_t k = 0; k < lists.size(); ++k) {
        body += "topic " + std::to_string(k) + ":";
        for (const auto& w : lists[k]) body += " " + w;
        body += "\n";
    }
    std::cout << body;
    if (!a.out.empty()) write_text(a.out, body);
    else write_text(g.path("keywords.txt"), body);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"topic modeling with a dual-autoencoder VAE and an embedding-space diffusor"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "INI config file; one section per subcommand");
    app.fallthrough(true);
    app.require_subcommand(1);

    Globals g;
    app.add_option("--seed", g.seed, "base RNG seed")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "directory for outputs")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads for generation")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_flag("--verbose", g.verbose, "per-epoch progress on stderr");

    SynthParams sp;
    CLI::App* synth = app.add_subcommand("synth", "emit a synthetic labeled corpus");
    synth->add_option("--k", sp.K, "number of topics")->capture_default_str();
    synth->add_option("--n-docs", sp.n_docs, "documents")->capture_default_str();
    synth->add_option("--d-embed", sp.d_embed, "embedding dimension")->capture_default_str();
    synth->add_option("--vocab", sp.vocab_size, "vocabulary size")->capture_default_str();
    synth->add_option("--noise-std", sp.noise_std, "embedding noise")->capture_default_str();
    synth->add_option("--radius", sp.radius, "topic mean radius")->capture_default_str();
    synth->add_option("--doc-len-min", sp.doc_len_min, "min tokens")->capture_default_str();
    synth->add_option("--doc-len-max", sp.doc_len_max, "max tokens")->capture_default_str();
    synth->add_option("--own-mass", sp.own_block_mass, "topic word-block mass")
        ->capture_default_str();

    IngestArgs ia;
    CLI::App* ingest = app.add_subcommand("ingest", "tokenize a corpus and build vocabulary/BoW");
    ingest->add_option("--corpus", ia.corpus, "JSONL corpus")->required();
    ingest->add_option("--stopwords", ia.stopwords, "stopword list, one per line");
    ingest->add_option("--min-count", ia.min_count, "minimum corpus frequency")
        ->capture_default_str();
    ingest->add_option("--min-len", ia.min_len, "minimum word length")->capture_default_str();

    TrainCompressorArgs tca;
    CLI::App* tcomp = app.add_subcommand("train-compressor", "train the sequence compressor");
    tcomp->add_option("--data", tca.data, "hidden-state rows (embedding file, n_seq*d_token)");
    tcomp->add_option("--synth-samples", tca.synth_samples, "train on N random blocks instead");
    tcomp->add_option("--n-seq", tca.n_seq, "sequence length")->capture_default_str();
    tcomp->add_option("--d-token", tca.d_token, "token hidden size")->capture_default_str();
    tcomp->add_option("--channels", tca.channels, "channel plan")->capture_default_str();
    tcomp->add_option("--dropout", tca.dropout, "dropout rate")->capture_default_str();
    tcomp->add_option("--lr", tca.lr, "max learning rate")->capture_default_str();
    tcomp->add_option("--val-fraction", tca.val_fraction, "validation split")
        ->capture_default_str();
    tcomp->add_option("--epochs", tca.epochs, "training epochs")->capture_default_str();
    tcomp->add_option("--resume", tca.resume, "checkpoint to warm-start from");

    TrainVaeArgs tva;
    CLI::App* tvae = app.add_subcommand("train-vae", "train the topic model");
    tvae->add_option("--embeddings", tva.embeddings, "document embeddings")->required();
    tvae->add_option("--bow", tva.bow, "sparse BoW file")->required();
    tvae->add_option("--vocab", tva.vocab, "vocabulary file")->required();
    tvae->add_option("--variant", tva.variant, "full | no-residual | no-bow-recon")
        ->capture_default_str();
    tvae->add_option("--topics", tva.topics, "number of topics")->capture_default_str();
    tvae->add_option("--d-topic", tva.d_topic, "topic/word embedding width")
        ->capture_default_str();
    tvae->add_option("--epochs", tva.epochs, "training epochs")->capture_default_str();
    tvae->add_option("--batch", tva.batch, "batch size")->capture_default_str();
    tvae->add_option("--lr", tva.lr, "max learning rate (0 = variant default)")
        ->capture_default_str();
    tvae->add_option("--dropout", tva.dropout, "dropout rate")->capture_default_str();
    tvae->add_option("--val-fraction", tva.val_fraction, "validation split")
        ->capture_default_str();
    tvae->add_option("--resume", tva.resume, "checkpoint to warm-start from");

    TrainDiffusorArgs tda;
    CLI::App* tdif = app.add_subcommand("train-diffusor", "train the embedding denoiser");
    tdif->add_option("--embeddings", tda.embeddings, "document embeddings")->required();
    tdif->add_option("--epochs", tda.epochs, "training epochs")->capture_default_str();
    tdif->add_option("--batch", tda.batch, "batch size")->capture_default_str();
    tdif->add_option("--lr", tda.lr, "max learning rate")->capture_default_str();
    tdif->add_option("--h1", tda.h1, "first hidden width (0 = 2*dim)")->capture_default_str();
    tdif->add_option("--h2", tda.h2, "second hidden width (0 = dim)")->capture_default_str();
    tdif->add_option("--t-steps", tda.t_steps, "schedule length")->capture_default_str();
    tdif->add_option("--beta-start", tda.beta_start, "first beta")->capture_default_str();
    tdif->add_option("--beta-end", tda.beta_end, "last beta")->capture_default_str();
    tdif->add_option("--resume", tda.resume, "checkpoint to warm-start from");

    EvaluateArgs ea;
    CLI::App* eval = app.add_subcommand("evaluate", "score a trained topic model");
    eval->add_option("--vae", ea.vae, "topic model checkpoint")->required();
    eval->add_option("--embeddings", ea.embeddings, "document embeddings")->required();
    eval->add_option("--bow", ea.bow, "sparse BoW file")->required();
    eval->add_option("--vocab", ea.vocab, "vocabulary file")->required();
    eval->add_option("--corpus", ea.corpus, "JSONL corpus (labels + coherence text)")->required();
    eval->add_option("--runs", ea.runs, "metric repetitions")->capture_default_str();
    eval->add_option("--window", ea.window, "coherence window")->capture_default_str();
    eval->add_option("--top-k", ea.top_k, "keywords per topic")->capture_default_str();

    GenerateArgs ga;
    CLI::App* gen = app.add_subcommand("generate", "denoise embeddings from topic vectors");
    gen->add_option("--vae", ga.vae, "topic model checkpoint")->required();
    gen->add_option("--diffusor", ga.diffusor, "diffusor checkpoint")->required();
    gen->add_option("--topic", ga.topic, "random | id:<k> | dist:<p1,...>")
        ->capture_default_str();
    gen->add_option("--from-t", ga.from_t, "denoise start step")->capture_default_str();
    gen->add_option("--count", ga.count, "embeddings to generate")->capture_default_str();
    gen->add_option("--out", ga.out, "output embedding file");
    gen->add_flag("--deterministic", ga.deterministic, "suppress reverse-step noise");

    KeywordsArgs ka;
    CLI::App* keyw = app.add_subcommand("keywords", "print top keywords per topic");
    keyw->add_option("--vae", ka.vae, "topic model checkpoint")->required();
    keyw->add_option("--vocab", ka.vocab, "vocabulary file")->required();
    keyw->add_option("--top-k", ka.top_k, "keywords per topic")->capture_default_str();
    keyw->add_option("--out", ka.out, "also write to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        echo_config(app);
        if (synth->parsed()) {
            sp.seed = g.seed;
            return cmd_synth(g, sp);
        }
        if (ingest->parsed()) return cmd_ingest(g, ia);
        if (tcomp->parsed()) return cmd_train_compressor(g, tca);
        if (tvae->parsed()) return cmd_train_vae(g, tva);
        if (tdif->parsed()) return cmd_train_diffusor(g, tda);
        if (eval->parsed()) return cmd_evaluate(g, ea);
        if (gen->parsed()) return cmd_generate(g, ga);
        if (keyw->parsed()) return cmd_keywords(g, ka);
        throw ConfigError("no subcommand given");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    }
}

#include "topicdiff/synth.hpp"

#include <cstdio>

namespace topicdiff {

SynthCorpus synth_corpus(const SynthParams& p) {
    if (p.K < 2) throw ConfigError("synth_corpus: K must be >= 2");
    if (p.vocab_size % p.K != 0)
        throw ConfigError("synth_corpus: vocab_size must be divisible by K");
    if (p.d_embed < p.K)
        throw ConfigError("synth_corpus: d_embed must be >= K for orthonormal topic means");
    if (p.n_docs == 0) throw ConfigError("synth_corpus: n_docs must be positive");
    if (p.doc_len_min == 0 || p.doc_len_max < p.doc_len_min)
        throw ConfigError("synth_corpus: bad document length range");
    if (p.own_block_mass <= 0.0 || p.own_block_mass > 1.0)
        throw ConfigError("synth_corpus: own_block_mass must be in (0,1]");

    Rng rng(p.seed);
    SynthCorpus out;

    out.vocab.words.reserve(p.vocab_size);
    char buf[16];
    for (size_t i = 0; i < p.vocab_size; ++i) {
        std::snprintf(buf, sizeof buf, "w%04zu", i);
        out.vocab.words.emplace_back(buf);
    }
    out.vocab.rebuild_index();

    out.embeddings.n_docs = p.n_docs;
    out.embeddings.dim = p.d_embed;
    out.embeddings.rows.resize(p.n_docs * p.d_embed);
    out.labels.resize(p.n_docs);
    out.bows.resize(p.n_docs);
    out.docs.resize(p.n_docs);

    size_t block = p.vocab_size / p.K;
    for (size_t i = 0; i < p.n_docs; ++i) {
        size_t k = rng.index(p.K);
        out.labels[i] = static_cast<int>(k);

        double* e = out.embeddings.row(i);
        for (size_t j = 0; j < p.d_embed; ++j) e[j] = rng.gaussian() * p.noise_std;
        e[k] += p.radius; // topic mean = radius * axis k

        size_t len = p.doc_len_min + rng.index(p.doc_len_max - p.doc_len_min + 1);
        std::vector<uint32_t> counts(p.vocab_size, 0);
        std::string text;
        text.reserve(len * 6);
        for (size_t tkn = 0; tkn < len; ++tkn) {
            size_t widx;
            if (rng.uniform() < p.own_block_mass)
                widx = k * block + rng.index(block);
            else
                widx = rng.index(p.vocab_size);
            ++counts[widx];
            if (tkn) text.push_back(' ');
            text += out.vocab.words[widx];
        }
        out.bows[i] = std::move(counts);

        std::snprintf(buf, sizeof buf, "synth-%05zu", i);
        out.docs[i] = Document{buf, std::move(text), static_cast<int>(k)};
    }
    out.embeddings.compute_stats();
    return out;
}

} // namespace topicdiff

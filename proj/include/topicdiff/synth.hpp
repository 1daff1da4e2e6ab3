#pragma once
#include <vector>

#include "corpus.hpp"
#include "embedding.hpp"
#include "rng.hpp"

namespace topicdiff {

struct SynthCorpus {
    std::vector<Document> docs;
    EmbeddingMatrix embeddings;
    std::vector<std::vector<uint32_t>> bows;
    std::vector<int> labels;
    Vocabulary vocab; // words "w0000"... in index order
};

struct SynthParams {
    size_t K = 5;
    size_t n_docs = 2000;
    size_t d_embed = 64;
    size_t vocab_size = 500;
    uint64_t seed = 0;
    double noise_std = 1.0;   // isotropic noise around the topic mean
    double radius = 6.0;      // topic means sit at radius * orthonormal axes
    size_t doc_len_min = 40;
    size_t doc_len_max = 80;
    double own_block_mass = 0.95; // probability a token comes from the topic's word block
};

// Draw per-document labels uniformly; embedding = topic mean + noise;
// BoW from a topic multinomial whose dominant support blocks are disjoint.
SynthCorpus synth_corpus(const SynthParams& p);

} // namespace topicdiff

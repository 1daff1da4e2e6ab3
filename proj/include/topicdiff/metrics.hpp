#pragma once
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include "embedding.hpp"
#include "rng.hpp"
#include "tensor.hpp"
#include "vae.hpp"

namespace topicdiff {

// Ground-truth label next to predicted cluster, one pair per document.
struct ClusterAssignment {
    std::vector<int> labels;
    std::vector<int> clusters;

    void validate() const;
};

// Fraction of documents whose cluster's majority label matches their own.
double purity(const ClusterAssignment& a);

// Mutual information normalized by the geometric mean of the two entropies;
// 0 by convention when either partition has zero entropy.
double nmi(const ClusterAssignment& a);

// One Lloyd run from a k-means++ seeding. Appends the inertia after every
// assignment pass to inertia_log when given.
std::vector<int> kmeans_once(const Tensor2& points, size_t k, Rng& rng, size_t max_iter,
                             std::vector<double>* inertia_log = nullptr, double* inertia = nullptr);

// Best of `restarts` k-means++ runs by final inertia.
std::vector<int> kmeans(const Tensor2& points, size_t k, uint64_t seed, size_t max_iter = 100,
                        size_t restarts = 10);

// Unique words across all topic lists over total slots.
double diversity(const std::vector<std::vector<std::string>>& keyword_lists);

struct CoherenceConfig {
    size_t window = 110;
    size_t top_k = 25;
    double epsilon = 1e-12;

    void validate() const;
};

// Sliding-window C_v: boolean co-occurrence counts over width-`window`
// windows, NPMI context vectors per topic word (one-set segmentation), then
// the mean cosine between each word's vector and the topic's summed vector.
double c_v(const std::vector<std::vector<std::string>>& keyword_lists,
           const std::vector<std::vector<std::string>>& doc_tokens, const CoherenceConfig& cfg,
           std::ostream* warn = nullptr);

// exp(-sum_d sum_w X log p / sum_d |d|) with p from the trained decoder path.
double perplexity(TopicVae& model, const EmbeddingMatrix& embs,
                  const std::vector<std::vector<uint32_t>>& bows);

struct ReadabilityScores {
    double fre = 0.0;
    double fkgl = 0.0;
    double dcrs = 0.0;
};

// A word is a whitespace token holding at least one alphanumeric; sentences
// are terminator runs (.!?); syllables come from a vowel-group heuristic.
size_t count_syllables(const std::string& word);
ReadabilityScores readability(const std::string& text,
                              const std::unordered_set<std::string>& easy_words,
                              std::ostream* warn = nullptr);

struct MetricStat {
    double mean = 0.0;
    double stdev = 0.0;
};

struct EvalReport {
    size_t n_runs = 0;
    bool has_clusterability = false;
    MetricStat purity, nmi, km_purity, km_nmi;
    MetricStat diversity, c_v, perplexity;
};

struct EvalInputs {
    const EmbeddingMatrix* embs = nullptr;
    std::vector<int> labels;                           // empty = unlabeled corpus
    std::vector<std::vector<std::string>> doc_tokens;  // for coherence windows
    std::vector<std::vector<uint32_t>> bows;           // for perplexity
    std::vector<std::vector<std::string>> topic_words; // top keyword lists
};

// Argmax-of-topic-mixture clustering for the Top metrics, k-means over the
// mixture vectors for the Km metrics; repeated n_runs times with derived
// seeds, means and standard deviations across runs.
EvalReport evaluate(TopicVae& model, const EvalInputs& in, const CoherenceConfig& ccfg,
                    size_t n_runs, uint64_t seed, std::ostream* warn = nullptr);

// Plain-text rendering of a report, one metric per line.
std::string format_report(const EvalReport& r);

} // namespace topicdiff

#pragma once
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "errors.hpp"

namespace topicdiff {

struct Document {
    std::string id;
    std::string text;
    int label = -1; // -1 = unlabeled; labels are evaluation-only
};

struct Vocabulary {
    std::vector<std::string> words; // descending corpus frequency, ties lexicographic
    std::unordered_map<std::string, size_t> index;

    size_t size() const { return words.size(); }
    void rebuild_index();
};

// lowercased word tokens split on word boundaries; punctuation dropped.
// ASCII letters/digits and all non-ASCII bytes count as word characters, so
// UTF-8 sequences stay intact (case folding is ASCII-only).
std::vector<std::string> tokenize(const std::string& text);

// Filter order is fixed and observable: digits -> length -> stopwords -> min_count.
Vocabulary build_vocab(const std::vector<Document>& docs, size_t min_count = 10,
                       size_t min_len = 3, const std::unordered_set<std::string>& stopwords = {});

std::vector<uint32_t> bow_vector(const Document& doc, const Vocabulary& vocab);

// JSONL corpus: one object per line with fields id, text, optional label
std::vector<Document> load_corpus_jsonl(const std::string& path);
void save_corpus_jsonl(const std::string& path, const std::vector<Document>& docs);

std::unordered_set<std::string> load_word_set(const std::string& path);

void save_vocab(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::string& path);

// sparse text BoW: one line per document of "idx:count" pairs
void save_bow_sparse(const std::string& path, const std::vector<std::vector<uint32_t>>& bows);
std::vector<std::vector<uint32_t>> load_bow_sparse(const std::string& path, size_t n_bow);

} // namespace topicdiff

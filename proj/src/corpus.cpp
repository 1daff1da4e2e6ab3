#include "topicdiff/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace topicdiff {

using nlohmann::json;

void Vocabulary::rebuild_index() {
    index.clear();
    index.reserve(words.size());
    for (size_t i = 0; i < words.size(); ++i) index[words[i]] = i;
}

namespace {
bool word_char(unsigned char c) {
    return std::isalnum(c) || c >= 0x80;
}
bool all_digits(const std::string& w) {
    for (unsigned char c : w)
        if (!std::isdigit(c)) return false;
    return !w.empty();
}
} // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (word_char(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Vocabulary build_vocab(const std::vector<Document>& docs, size_t min_count, size_t min_len,
                       const std::unordered_set<std::string>& stopwords) {
    if (docs.empty()) throw DataError("build_vocab: empty corpus");
    std::unordered_map<std::string, size_t> freq;
    for (const auto& d : docs)
        for (auto& tok : tokenize(d.text)) ++freq[tok];

    // digits -> length -> stopwords -> min_count, each stage tracked so an
    // empty result names the filter that emptied it
    size_t survivors = freq.size();
    auto drop_if = [&](auto pred, const char* stage) {
        for (auto it = freq.begin(); it != freq.end();) {
            if (pred(*it))
                it = freq.erase(it);
            else
                ++it;
        }
        if (!freq.empty()) {
            survivors = freq.size();
            return;
        }
        if (survivors > 0)
            throw DataError(std::string("build_vocab: vocabulary emptied by the ") + stage +
                            " filter");
        throw DataError("build_vocab: no tokens in corpus");
    };
    if (freq.empty()) throw DataError("build_vocab: no tokens in corpus");
    drop_if([](const auto& kv) { return all_digits(kv.first); }, "digit");
    drop_if([&](const auto& kv) { return kv.first.size() < min_len; }, "length");
    drop_if([&](const auto& kv) { return stopwords.count(kv.first) > 0; }, "stopword");
    drop_if([&](const auto& kv) { return kv.second < min_count; }, "min-count");

    std::vector<std::pair<std::string, size_t>> items(freq.begin(), freq.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary v;
    v.words.reserve(items.size());
    for (auto& it : items) v.words.push_back(std::move(it.first));
    v.rebuild_index();
    return v;
}

std::vector<uint32_t> bow_vector(const Document& doc, const Vocabulary& vocab) {
    std::vector<uint32_t> counts(vocab.size(), 0);
    for (auto& tok : tokenize(doc.text)) {
        auto it = vocab.index.find(tok);
        if (it != vocab.index.end()) ++counts[it->second];
    }
    return counts;
}

std::vector<Document> load_corpus_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);
    std::vector<Document> docs;
    std::string line;
    size_t lineno = 0;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("corpus parse error at line " + std::to_string(lineno) + ": " +
                            e.what());
        }
        Document d;
        if (!j.contains("id") || !j.contains("text"))
            throw DataError("corpus line " + std::to_string(lineno) + " lacks id or text");
        d.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        d.text = j["text"].get<std::string>();
        if (j.contains("label") && !j["label"].is_null()) d.label = j["label"].get<int>();
        if (d.text.empty())
            throw DataError("corpus line " + std::to_string(lineno) + " has empty text");
        if (!seen.insert(d.id).second)
            throw DataError("corpus line " + std::to_string(lineno) + " repeats id " + d.id);
        docs.push_back(std::move(d));
    }
    return docs;
}

void save_corpus_jsonl(const std::string& path, const std::vector<Document>& docs) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write corpus file: " + path);
    for (const auto& d : docs) {
        json j{{"id", d.id}, {"text", d.text}};
        if (d.label >= 0) j["label"] = d.label;
        out << j.dump() << '\n';
    }
}

std::unordered_set<std::string> load_word_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open word list: " + path);
    std::unordered_set<std::string> out;
    std::string w;
    while (std::getline(in, w)) {
        while (!w.empty() && (w.back() == '\r' || w.back() == ' ')) w.pop_back();
        if (!w.empty()) out.insert(w);
    }
    return out;
}

void save_vocab(const std::string& path, const Vocabulary& vocab) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write vocabulary file: " + path);
    for (const auto& w : vocab.words) out << w << '\n';
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vocabulary file: " + path);
    Vocabulary v;
    std::string w;
    while (std::getline(in, w)) {
        while (!w.empty() && (w.back() == '\r' || w.back() == ' ')) w.pop_back();
        if (!w.empty()) v.words.push_back(w);
    }
    v.rebuild_index();
    if (v.index.size() != v.words.size())
        throw DataError("vocabulary file has duplicate words: " + path);
    return v;
}

void save_bow_sparse(const std::string& path, const std::vector<std::vector<uint32_t>>& bows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write bow file: " + path);
    for (const auto& row : bows) {
        bool first = true;
        for (size_t i = 0; i < row.size(); ++i) {
            if (row[i] == 0) continue;
            if (!first) out << ' ';
            out << i << ':' << row[i];
            first = false;
        }
        out << '\n';
    }
}

std::vector<std::vector<uint32_t>> load_bow_sparse(const std::string& path, size_t n_bow) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open bow file: " + path);
    std::vector<std::vector<uint32_t>> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::vector<uint32_t> row(n_bow, 0);
        std::istringstream is(line);
        std::string pair;
        while (is >> pair) {
            auto colon = pair.find(':');
            if (colon == std::string::npos)
                throw DataError("bow file line " + std::to_string(lineno) + ": bad entry " + pair);
            size_t idx = std::stoull(pair.substr(0, colon));
            long cnt = std::stol(pair.substr(colon + 1));
            if (idx >= n_bow || cnt < 0)
                throw DataError("bow file line " + std::to_string(lineno) + ": entry out of range");
            row[idx] = static_cast<uint32_t>(cnt);
        }
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace topicdiff

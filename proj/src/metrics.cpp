#include "topicdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

namespace topicdiff {

void ClusterAssignment::validate() const {
    if (labels.empty()) throw ConfigError("cluster metrics need at least one document");
    if (labels.size() != clusters.size())
        throw ConfigError("label and cluster lists differ in length");
    for (int v : labels)
        if (v < 0) throw ConfigError("labels must be non-negative");
    for (int v : clusters)
        if (v < 0) throw ConfigError("cluster ids must be non-negative");
}

double purity(const ClusterAssignment& a) {
    a.validate();
    // cluster -> label -> count
    std::unordered_map<int, std::unordered_map<int, size_t>> table;
    for (size_t i = 0; i < a.labels.size(); ++i) table[a.clusters[i]][a.labels[i]]++;
    size_t hit = 0;
    for (auto& [c, row] : table) {
        size_t best = 0;
        for (auto& [l, n] : row) best = std::max(best, n);
        hit += best;
    }
    return double(hit) / double(a.labels.size());
}

double nmi(const ClusterAssignment& a) {
    a.validate();
    double N = double(a.labels.size());
    std::unordered_map<int, double> nl, nc;
    std::unordered_map<long long, double> joint;
    for (size_t i = 0; i < a.labels.size(); ++i) {
        nl[a.labels[i]] += 1.0;
        nc[a.clusters[i]] += 1.0;
        joint[(long long)a.labels[i] * 0x100000000LL + a.clusters[i]] += 1.0;
    }
    double hl = 0.0, hc = 0.0;
    for (auto& [l, n] : nl) hl -= n / N * std::log(n / N);
    for (auto& [c, n] : nc) hc -= n / N * std::log(n / N);
    if (hl <= 0.0 || hc <= 0.0) return 0.0;
    double mi = 0.0;
    for (auto& [key, n] : joint) {
        double pl = nl[int(key >> 32)], pc = nc[int(key & 0xffffffffLL)];
        mi += n / N * std::log(n * N / (pl * pc));
    }
    return mi / std::sqrt(hl * hc);
}

static double dist2(const double* a, const double* b, size_t d) {
    double s = 0.0;
    for (size_t i = 0; i < d; ++i) {
        double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

std::vector<int> kmeans_once(const Tensor2& points, size_t k, Rng& rng, size_t max_iter,
                             std::vector<double>* inertia_log, double* inertia_out) {
    size_t n = points.rows, d = points.cols;
    // k-means++ seeding: squared-distance-weighted picks
    Tensor2 centers(k, d);
    std::vector<double> nearest(n);
    size_t first = rng.index(n);
    std::copy(points[first], points[first] + d, centers[0]);
    for (size_t i = 0; i < n; ++i) nearest[i] = dist2(points[i], centers[0], d);
    for (size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : nearest) total += v;
        size_t pick;
        if (total > 0.0) {
            double u = rng.uniform() * total, acc = 0.0;
            pick = n - 1;
            for (size_t i = 0; i < n; ++i) {
                acc += nearest[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.index(n); // all mass on chosen points already
        }
        std::copy(points[pick], points[pick] + d, centers[c]);
        for (size_t i = 0; i < n; ++i)
            nearest[i] = std::min(nearest[i], dist2(points[i], centers[c], d));
    }

    std::vector<int> assign(n, -1);
    std::vector<size_t> count(k);
    for (size_t it = 0; it < max_iter; ++it) {
        bool moved = false;
        double inertia = 0.0;
        for (size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = dist2(points[i], centers[0], d);
            for (size_t c = 1; c < k; ++c) {
                double v = dist2(points[i], centers[c], d);
                if (v < bd) {
                    bd = v;
                    best = int(c);
                }
            }
            inertia += bd;
            if (assign[i] != best) {
                assign[i] = best;
                moved = true;
            }
        }
        if (inertia_log) inertia_log->push_back(inertia);
        if (inertia_out) *inertia_out = inertia;
        if (!moved) break;
        Tensor2 next(k, d);
        std::fill(count.begin(), count.end(), 0);
        for (size_t i = 0; i < n; ++i) {
            count[assign[i]]++;
            double* row = next[size_t(assign[i])];
            for (size_t j = 0; j < d; ++j) row[j] += points[i][j];
        }
        for (size_t c = 0; c < k; ++c) {
            if (count[c] == 0) continue; // empty cluster keeps its center
            for (size_t j = 0; j < d; ++j) centers.at(c, j) = next.at(c, j) / double(count[c]);
        }
    }
    return assign;
}

std::vector<int> kmeans(const Tensor2& points, size_t k, uint64_t seed, size_t max_iter,
                        size_t restarts) {
    if (k == 0) throw ConfigError("k must be positive");
    if (points.rows < k) throw ConfigError("k-means needs at least k points");
    if (restarts == 0) restarts = 1;
    Rng rng(seed);
    std::vector<int> best;
    double best_inertia = 0.0;
    for (size_t r = 0; r < restarts; ++r) {
        double inertia = 0.0;
        std::vector<int> a = kmeans_once(points, k, rng, max_iter, nullptr, &inertia);
        if (best.empty() || inertia < best_inertia) {
            best_inertia = inertia;
            best = std::move(a);
        }
    }
    return best;
}

double diversity(const std::vector<std::vector<std::string>>& keyword_lists) {
    if (keyword_lists.empty()) throw ConfigError("diversity needs at least one topic");
    size_t len = keyword_lists.front().size();
    if (len == 0) throw ConfigError("diversity needs non-empty keyword lists");
    std::unordered_set<std::string> seen;
    for (const auto& list : keyword_lists) {
        if (list.size() != len) throw ConfigError("keyword lists must share one length");
        for (const auto& w : list) seen.insert(w);
    }
    return double(seen.size()) / double(keyword_lists.size() * len);
}

void CoherenceConfig::validate() const {
    if (window < 2) throw ConfigError("coherence window must be at least 2");
    if (top_k < 2) throw ConfigError("coherence needs at least two keywords per topic");
    if (!(epsilon > 0.0)) throw ConfigError("coherence epsilon must be positive");
}

static double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0; // zero vector carries no signal
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double c_v(const std::vector<std::vector<std::string>>& keyword_lists,
           const std::vector<std::vector<std::string>>& doc_tokens, const CoherenceConfig& cfg,
           std::ostream* warn) {
    cfg.validate();
    if (keyword_lists.empty()) throw ConfigError("coherence needs at least one topic");
    if (doc_tokens.empty()) throw DataError("coherence needs a reference corpus");

    std::unordered_map<std::string, size_t> word_idx;
    std::vector<std::string> words;
    for (const auto& list : keyword_lists)
        for (const auto& w : list)
            if (word_idx.emplace(w, words.size()).second) words.push_back(w);
    size_t m = words.size();

    // boolean occurrence counts over sliding windows; short docs are one window
    std::vector<double> single(m, 0.0);
    Tensor2 pair(m, m);
    double n_windows = 0.0;
    std::vector<uint32_t> stamp(m, 0);
    uint32_t tick = 0;
    std::vector<size_t> present;
    for (const auto& toks : doc_tokens) {
        if (toks.empty()) continue;
        size_t w = cfg.window;
        size_t count = toks.size() <= w ? 1 : toks.size() - w + 1;
        for (size_t s = 0; s < count; ++s) {
            size_t end = std::min(s + w, toks.size());
            ++tick;
            present.clear();
            for (size_t i = s; i < end; ++i) {
                auto it = word_idx.find(toks[i]);
                if (it == word_idx.end() || stamp[it->second] == tick) continue;
                stamp[it->second] = tick;
                present.push_back(it->second);
            }
            n_windows += 1.0;
            for (size_t a = 0; a < present.size(); ++a) {
                single[present[a]] += 1.0;
                for (size_t b = a + 1; b < present.size(); ++b) {
                    pair.at(present[a], present[b]) += 1.0;
                    pair.at(present[b], present[a]) += 1.0;
                }
            }
        }
    }
    if (n_windows == 0.0) throw DataError("coherence corpus has no usable windows");

    for (size_t i = 0; i < m; ++i)
        if (single[i] == 0.0 && warn)
            *warn << "warning: keyword \"" << words[i] << "\" never occurs in the corpus\n";

    // npmi with additive smoothing of the joint; zero marginal means no
    // evidence, scored 0
    auto npmi = [&](size_t a, size_t b) {
        double pa = single[a] / n_windows, pb = single[b] / n_windows;
        if (pa <= 0.0 || pb <= 0.0) return 0.0;
        double pab = (a == b ? single[a] : pair.at(a, b)) / n_windows;
        return std::log((pab + cfg.epsilon) / (pa * pb)) / -std::log(pab + cfg.epsilon);
    };

    double topic_sum = 0.0;
    for (const auto& list : keyword_lists) {
        std::vector<size_t> ids;
        for (const auto& w : list) ids.push_back(word_idx.at(w));
        size_t k = ids.size();
        std::vector<std::vector<double>> ctx(k, std::vector<double>(k));
        for (size_t i = 0; i < k; ++i)
            for (size_t j = 0; j < k; ++j) ctx[i][j] = npmi(ids[i], ids[j]);
        std::vector<double> total(k, 0.0);
        for (size_t i = 0; i < k; ++i)
            for (size_t j = 0; j < k; ++j) total[j] += ctx[i][j];
        double s = 0.0;
        for (size_t i = 0; i < k; ++i) s += cosine(ctx[i], total);
        topic_sum += s / double(k);
    }
    return topic_sum / double(keyword_lists.size());
}

double perplexity(TopicVae& model, const EmbeddingMatrix& embs,
                  const std::vector<std::vector<uint32_t>>& bows) {
    if (embs.n_docs == 0) throw DataError("perplexity needs at least one document");
    if (embs.n_docs != bows.size())
        throw ConfigError("embedding rows and bag-of-words rows differ in count");
    double ll = 0.0, len = 0.0;
    for (size_t d = 0; d < embs.n_docs; ++d) {
        const auto& x = bows[d];
        double dl = 0.0;
        for (uint32_t c : x) dl += double(c);
        if (dl == 0.0) continue;
        std::vector<double> t = model.infer_topics(embs.rows.data() + d * embs.dim);
        std::vector<double> p = model.decode_bow(t);
        if (p.size() != x.size()) throw ConfigError("bag-of-words width does not match the model");
        for (size_t w = 0; w < x.size(); ++w)
            if (x[w]) ll += double(x[w]) * std::log(p[w]);
        len += dl;
    }
    if (len == 0.0) throw DataError("perplexity corpus has no tokens");
    return std::exp(-ll / len);
}

size_t count_syllables(const std::string& word) {
    std::string s;
    for (char c : word) {
        if (c >= 'A' && c <= 'Z') s.push_back(char(c - 'A' + 'a'));
        else if (c >= 'a' && c <= 'z') s.push_back(c);
    }
    if (s.empty()) return 1; // numerals and symbols: one beat
    auto vowel = [](char c) {
        return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
    };
    size_t n = 0;
    bool in_group = false;
    for (char c : s) {
        bool v = vowel(c);
        if (v && !in_group) ++n;
        in_group = v;
    }
    // final e is silent ("note", "whale") unless it closes a consonant-le
    // ending ("table")
    if (n > 1 && s.back() == 'e') {
        bool cons_le = s.size() >= 3 && s[s.size() - 2] == 'l' && !vowel(s[s.size() - 3]);
        if (!cons_le) --n;
    }
    return n == 0 ? 1 : n;
}

ReadabilityScores readability(const std::string& text,
                              const std::unordered_set<std::string>& easy_words,
                              std::ostream* warn) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            if (!cur.empty()) tokens.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) tokens.push_back(cur);

    size_t n_words = 0, n_syll = 0, n_hard = 0;
    for (const auto& tok : tokens) {
        bool has_alnum = false;
        for (char c : tok)
            if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
                has_alnum = true;
                break;
            }
        if (!has_alnum) continue;
        ++n_words;
        n_syll += count_syllables(tok);
        std::string plain;
        bool digits_only = true;
        for (char c : tok) {
            if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) plain.push_back(c);
            else if (c >= 'A' && c <= 'Z') plain.push_back(char(c - 'A' + 'a'));
            if (!(c >= '0' && c <= '9')) digits_only = false;
        }
        if (!digits_only && !easy_words.count(plain)) ++n_hard;
    }
    if (n_words == 0) throw DataError("readability needs at least one word");

    size_t n_sent = 0;
    bool in_term = false;
    for (char c : text) {
        bool term = c == '.' || c == '!' || c == '?';
        if (term && !in_term) ++n_sent;
        in_term = term;
    }
    if (n_sent == 0) {
        n_sent = 1;
        if (warn) *warn << "warning: no sentence terminator found, treating text as one sentence\n";
    }

    double asl = double(n_words) / double(n_sent);
    double spw = double(n_syll) / double(n_words);
    double hard_pct = 100.0 * double(n_hard) / double(n_words);
    ReadabilityScores r;
    r.fre = 206.835 - 1.015 * asl - 84.6 * spw;
    r.fkgl = 0.39 * asl + 11.8 * spw - 15.59;
    r.dcrs = 0.1579 * hard_pct + 0.0496 * asl + (hard_pct > 5.0 ? 3.6365 : 0.0);
    return r;
}

static MetricStat stat_of(const std::vector<double>& xs) {
    MetricStat s;
    if (xs.empty()) return s;
    for (double v : xs) s.mean += v;
    s.mean /= double(xs.size());
    double var = 0.0;
    for (double v : xs) var += (v - s.mean) * (v - s.mean);
    s.stdev = std::sqrt(var / double(xs.size()));
    return s;
}

EvalReport evaluate(TopicVae& model, const EvalInputs& in, const CoherenceConfig& ccfg,
                    size_t n_runs, uint64_t seed, std::ostream* warn) {
    if (!in.embs || in.embs->n_docs == 0) throw DataError("evaluation needs embeddings");
    if (n_runs == 0) throw ConfigError("evaluation needs at least one run");
    size_t n = in.embs->n_docs;

    EvalReport rep;
    rep.n_runs = n_runs;

    Tensor2 tv(n, model.cfg.T);
    std::vector<int> top_cluster(n);
    for (size_t d = 0; d < n; ++d) {
        std::vector<double> t = model.topic_representation(in.embs->rows.data() + d * in.embs->dim);
        std::copy(t.begin(), t.end(), tv[d]);
        top_cluster[d] = int(std::max_element(t.begin(), t.end()) - t.begin());
    }

    rep.has_clusterability = !in.labels.empty();
    if (rep.has_clusterability && in.labels.size() != n)
        throw ConfigError("label count does not match the embeddings");
    if (!rep.has_clusterability && warn)
        *warn << "notice: no labels supplied, clusterability metrics skipped\n";

    double div = in.topic_words.empty() ? 0.0 : diversity(in.topic_words);
    double coh = (in.topic_words.empty() || in.doc_tokens.empty())
                     ? 0.0
                     : c_v(in.topic_words, in.doc_tokens, ccfg, warn);
    double ppl = in.bows.empty() ? 0.0 : perplexity(model, *in.embs, in.bows);

    std::vector<double> tp, tn, kp, kn, dv, cv, px;
    Rng master(seed);
    for (size_t r = 0; r < n_runs; ++r) {
        uint64_t run_seed = master.next_u64();
        if (rep.has_clusterability) {
            ClusterAssignment top{in.labels, top_cluster};
            tp.push_back(purity(top));
            tn.push_back(nmi(top));
            std::vector<int> km = kmeans(tv, model.cfg.T, run_seed);
            ClusterAssignment ka{in.labels, km};
            kp.push_back(purity(ka));
            kn.push_back(nmi(ka));
        }
        dv.push_back(div);
        cv.push_back(coh);
        px.push_back(ppl);
    }
    rep.purity = stat_of(tp);
    rep.nmi = stat_of(tn);
    rep.km_purity = stat_of(kp);
    rep.km_nmi = stat_of(kn);
    rep.diversity = stat_of(dv);
    rep.c_v = stat_of(cv);
    rep.perplexity = stat_of(px);
    return rep;
}

std::string format_report(const EvalReport& r) {
    char buf[128];
    std::string out;
    auto line = [&](const char* name, const MetricStat& s) {
        std::snprintf(buf, sizeof(buf), "%-12s mean %.6f std %.6f\n", name, s.mean, s.stdev);
        out += buf;
    };
    std::snprintf(buf, sizeof(buf), "runs %zu\n", r.n_runs);
    out += buf;
    if (r.has_clusterability) {
        line("top-purity", r.purity);
        line("top-nmi", r.nmi);
        line("km-purity", r.km_purity);
        line("km-nmi", r.km_nmi);
    }
    line("diversity", r.diversity);
    line("c_v", r.c_v);
    line("perplexity", r.perplexity);
    return out;
}

} // namespace topicdiff

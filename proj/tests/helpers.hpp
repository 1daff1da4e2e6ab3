#pragma once
// Shared helpers for the unit tests: finite-difference gradient checking and
// small brute-force re-implementations used as oracles.
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "topicdiff/rng.hpp"
#include "topicdiff/tensor.hpp"

namespace tdtest {

using topicdiff::Rng;
using topicdiff::Tensor2;

inline double rel_err(double a, double b) {
    double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) / scale;
}

// central finite difference of a scalar function at one coordinate
inline double fd_grad(const std::function<double()>& f, double* coord, double h = 1e-6) {
    double keep = *coord;
    *coord = keep + h;
    double up = f();
    *coord = keep - h;
    double dn = f();
    *coord = keep;
    return (up - dn) / (2.0 * h);
}

// max relative error between analytic gradients and finite differences over
// a set of coordinates
inline double check_grads(const std::function<double()>& f, double* coords, const double* analytic,
                          size_t n, double h = 1e-6) {
    double worst = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double num = fd_grad(f, coords + i, h);
        worst = std::max(worst, rel_err(num, analytic[i]));
    }
    return worst;
}

// ---- brute-force clustering metric oracles (independent of src/metrics.cpp,
// maps and explicit loops instead of packed keys) ----

inline double purity_oracle(const std::vector<int>& labels, const std::vector<int>& clusters) {
    std::map<int, std::map<int, size_t>> by_cluster;
    for (size_t i = 0; i < labels.size(); ++i) by_cluster[clusters[i]][labels[i]]++;
    size_t hit = 0;
    for (auto& [c, counts] : by_cluster) {
        size_t best = 0;
        for (auto& [l, n] : counts) best = std::max(best, n);
        hit += best;
    }
    return double(hit) / double(labels.size());
}

inline double nmi_oracle(const std::vector<int>& labels, const std::vector<int>& clusters) {
    size_t n = labels.size();
    std::map<int, size_t> nl, nc;
    std::map<std::pair<int, int>, size_t> nj;
    for (size_t i = 0; i < n; ++i) {
        nl[labels[i]]++;
        nc[clusters[i]]++;
        nj[{labels[i], clusters[i]}]++;
    }
    double hl = 0, hc = 0, mi = 0;
    for (auto& [l, c] : nl) {
        double p = double(c) / double(n);
        hl -= p * std::log(p);
    }
    for (auto& [cid, c] : nc) {
        double p = double(c) / double(n);
        hc -= p * std::log(p);
    }
    for (auto& [key, c] : nj) {
        double pj = double(c) / double(n);
        double pl = double(nl[key.first]) / double(n);
        double pc = double(nc[key.second]) / double(n);
        mi += pj * std::log(pj / (pl * pc));
    }
    if (hl <= 0.0 || hc <= 0.0) return 0.0;
    return mi / std::sqrt(hl * hc);
}

inline double diversity_oracle(const std::vector<std::vector<std::string>>& lists) {
    std::set<std::string> uniq;
    size_t total = 0;
    for (auto& l : lists) {
        total += l.size();
        uniq.insert(l.begin(), l.end());
    }
    return double(uniq.size()) / double(total);
}

inline std::vector<int> random_partition(Rng& rng, size_t n, int k) {
    std::vector<int> v(n);
    for (auto& x : v) x = int(rng.index(size_t(k)));
    return v;
}

} // namespace tdtest

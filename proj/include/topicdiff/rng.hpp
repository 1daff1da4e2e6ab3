#pragma once
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace topicdiff {

// mt19937_64 core with hand-rolled output transforms. The standard library's
// distribution objects are implementation-defined, so every sampled stream
// here goes through our own fixed arithmetic and stays reproducible across
// toolchains (and checkpointable as text).
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // [0, 1) with 53-bit resolution
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal, Box-Muller with cached second variate
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform(); // (0, 1], keeps log finite
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    void fill_gaussian(double* out, size_t n) {
        for (size_t i = 0; i < n; ++i) out[i] = gaussian();
    }

    // unbiased integer in [0, n)
    size_t index(size_t n) {
        if (n == 0) throw ConfigError("Rng::index: n must be positive");
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return static_cast<size_t>(x % n);
    }

    template <class T>
    void shuffle(std::vector<T>& v) { // Fisher-Yates
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // engine + spare serialize to text so training runs can resume mid-stream;
    // the spare travels as its bit pattern to stay exact
    std::string state() const {
        std::ostringstream os;
        os << eng_ << ' ' << (have_spare_ ? 1 : 0) << ' ' << bits_of(spare_);
        return os.str();
    }

    void restore(const std::string& s) {
        std::istringstream is(s);
        int flag = 0;
        uint64_t bits = 0;
        is >> eng_ >> flag >> bits;
        if (!is) throw DataError("Rng::restore: malformed state string");
        have_spare_ = flag != 0;
        spare_ = double_of(bits);
    }

private:
    static uint64_t bits_of(double d) {
        uint64_t u;
        std::memcpy(&u, &d, sizeof u);
        return u;
    }
    static double double_of(uint64_t u) {
        double d;
        std::memcpy(&d, &u, sizeof d);
        return d;
    }

    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace topicdiff

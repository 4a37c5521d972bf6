#pragma once

// Seeded random stream with explicitly-coded draw functions, so every
// stochastic component (phantoms, noise, init, batching) is a pure
// function of its seed regardless of standard-library internals.

#include <cmath>
#include <cstdint>
#include <random>

namespace osk {

class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t integer(uint64_t n) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    // integer in [lo, hi] inclusive
    int64_t integer(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(integer(static_cast<uint64_t>(hi - lo + 1)));
    }

    bool bernoulli(double p) { return uniform() < p; }

    // standard normal, Box-Muller with a cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(6.283185307179586 * u2);
        has_spare_ = true;
        return mag * std::cos(6.283185307179586 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // derive an independent stream (e.g. per sample or per row)
    Rng fork(uint64_t salt) {
        return Rng(gen_() ^ (salt * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[integer(i)]);
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace osk

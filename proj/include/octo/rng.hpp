#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace octo {

// Deterministic RNG wrapper. mt19937_64 is fully specified by the standard,
// but the std distribution objects are not, so the transforms live here.
// Identical seeds give identical streams on every platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed), seed_(seed) {}

    uint64_t seed() const { return seed_; }

    uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // [0, n)
    int64_t uniform_int(int64_t n) {
        // rejection sampling keeps the draw unbiased
        const uint64_t un = static_cast<uint64_t>(n);
        const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<int64_t>(x % un);
    }

    // Box-Muller; the spare value is cached, so draws come in a fixed order.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(uniform_int(i + 1))]);
        }
    }

    // n distinct indices from [0, pool) in draw order
    std::vector<int64_t> sample_without_replacement(int64_t pool, int64_t n) {
        std::vector<int64_t> idx(static_cast<size_t>(pool));
        for (int64_t i = 0; i < pool; ++i) idx[static_cast<size_t>(i)] = i;
        shuffle(idx);
        idx.resize(static_cast<size_t>(n));
        return idx;
    }

    // Derive an independent stream for a named purpose.
    Rng fork(std::string_view label) const {
        uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over (seed, label)
        const auto mix = [&h](uint64_t byte) {
            h ^= byte;
            h *= 0x100000001b3ull;
        };
        for (int i = 0; i < 8; ++i) mix((seed_ >> (8 * i)) & 0xff);
        for (char c : label) mix(static_cast<uint8_t>(c));
        return Rng(h);
    }

private:
    std::mt19937_64 gen_;
    uint64_t seed_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace octo

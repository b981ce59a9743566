#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace shufreg {

/// splitmix64 finalizer; used as a seed hash.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent child seed from a parent seed and a stream tag, so
/// that parallel restarts/chains/trials get reproducible streams regardless of
/// execution order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix64(mix64(seed) ^ mix64(tag ^ 0xd1b54a32d192ed03ULL));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag1,
                                 std::uint64_t tag2) {
    return derive_seed(derive_seed(seed, tag1), tag2);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag1,
                                 std::uint64_t tag2, std::uint64_t tag3) {
    return derive_seed(derive_seed(seed, tag1, tag2), tag3);
}

/// Seedable generator with platform-independent output. The engine
/// (mt19937_64) has standard-specified output; all distributions below are
/// implemented explicitly rather than via std::*_distribution, whose sequences
/// vary between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), unbiased via rejection.
    std::uint64_t below(std::uint64_t n) {
        assert(n > 0);
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t rem = (max % n + 1) % n;  // 2^64 mod n
        const std::uint64_t bound = max - rem;        // last accepted value
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v > bound);
        return v % n;
    }

    std::ptrdiff_t index_below(std::ptrdiff_t n) {
        return static_cast<std::ptrdiff_t>(below(static_cast<std::uint64_t>(n)));
    }

    /// Two distinct indices in [lo, hi), hi - lo >= 2.
    std::pair<std::ptrdiff_t, std::ptrdiff_t> distinct_pair(std::ptrdiff_t lo,
                                                            std::ptrdiff_t hi) {
        const std::ptrdiff_t m = hi - lo;
        assert(m >= 2);
        std::ptrdiff_t i = index_below(m);
        std::ptrdiff_t j = index_below(m - 1);
        if (j >= i) ++j;
        return {lo + i, lo + j};
    }

    /// Standard normal via the Marsaglia polar method.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace shufreg

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "shufreg/errors.hpp"
#include "shufreg/estimators.hpp"
#include "shufreg/permutation.hpp"
#include "shufreg/rng.hpp"
#include "shufreg/types.hpp"

namespace shufreg {

struct SyntheticSpec {
    Index n = 0;
    Index d = 0;
    double sigma = 0.0;  // noise standard deviation
    std::uint64_t seed = 0;

    void validate() const {
        if (n <= d || d < 1) {
            throw ConfigError("synthetic spec requires n > d >= 1, got n=" +
                              std::to_string(n) + ", d=" + std::to_string(d));
        }
        if (sigma < 0.0) {
            throw ConfigError("sigma must be >= 0, got " + std::to_string(sigma));
        }
    }
};

enum class ShuffleKind { identity, full, grouped };

struct ShuffleMode {
    ShuffleKind kind = ShuffleKind::full;
    std::vector<Index> group_bounds;  // grouped only
    double crossbin_fraction = 0.0;   // grouped only

    static ShuffleMode identity() { return ShuffleMode{ShuffleKind::identity, {}, 0.0}; }
    static ShuffleMode full() { return ShuffleMode{ShuffleKind::full, {}, 0.0}; }
    static ShuffleMode grouped(std::vector<Index> bounds, double crossbin) {
        return ShuffleMode{ShuffleKind::grouped, std::move(bounds), crossbin};
    }
};

struct SyntheticInstance {
    DesignMatrix X;
    LabelVector y_clean;     // X * w_true
    LabelVector noise;       // stored so oracle residuals can be reported
    LabelVector y_observed;  // pi_true applied to (y_clean + noise)
    WeightVector w_true;
    Permutation pi_true;
};

struct ProgressiveShuffleResult {
    LabelVector labels;
    std::vector<std::pair<Index, Index>> swap_log;
};

/// Applies `swaps` uniformly random transpositions (distinct indices) in
/// sequence. Replaying the log in reverse restores the input.
inline ProgressiveShuffleResult progressive_shuffle(const LabelVector& y,
                                                    Index swaps,
                                                    std::uint64_t seed) {
    if (swaps < 0) throw ConfigError("swaps must be >= 0");
    if (swaps > 0 && y.size() < 2) {
        throw ConfigError("cannot swap in a vector of length " +
                          std::to_string(y.size()));
    }
    ProgressiveShuffleResult out;
    out.labels = y;
    out.swap_log.reserve(static_cast<std::size_t>(swaps));
    Rng rng(seed);
    for (Index s = 0; s < swaps; ++s) {
        const auto [i, j] = rng.distinct_pair(0, y.size());
        std::swap(out.labels[i], out.labels[j]);
        out.swap_log.emplace_back(i, j);
    }
    return out;
}

struct GroupedShuffleResult {
    LabelVector labels;
    Permutation perm;  // labels = perm applied to the input
    std::vector<std::pair<Index, Index>> cross_swaps;
};

namespace detail {

inline void check_bounds(const std::vector<Index>& bounds, Index n) {
    if (bounds.size() < 2 || bounds.front() != 0 || bounds.back() != n) {
        throw InvalidBounds("bounds must start at 0 and end at n=" +
                            std::to_string(n));
    }
    for (std::size_t g = 1; g < bounds.size(); ++g) {
        if (bounds[g] <= bounds[g - 1]) {
            throw InvalidBounds("bounds must be strictly ascending at entry " +
                                std::to_string(g));
        }
    }
}

inline Index group_of(const std::vector<Index>& bounds, Index row) {
    for (std::size_t g = 1; g < bounds.size(); ++g) {
        if (row < bounds[g]) return static_cast<Index>(g) - 1;
    }
    return static_cast<Index>(bounds.size()) - 2;
}

}  // namespace detail

/// Uniform independent shuffle within each group, followed by
/// ceil(crossbin_fraction * n) swaps of a uniformly chosen row with a
/// uniformly chosen row of a different group (the sorting-noise model).
inline GroupedShuffleResult grouped_shuffle(const LabelVector& y,
                                            const std::vector<Index>& group_bounds,
                                            double crossbin_fraction,
                                            std::uint64_t seed) {
    const Index n = y.size();
    detail::check_bounds(group_bounds, n);
    if (crossbin_fraction < 0.0 || crossbin_fraction > 1.0) {
        throw ConfigError("crossbin_fraction must be in [0, 1], got " +
                          std::to_string(crossbin_fraction));
    }
    const Index groups = static_cast<Index>(group_bounds.size()) - 1;
    Rng rng(seed);
    GroupedShuffleResult out;
    out.perm = Permutation::identity(n);
    for (Index g = 0; g < groups; ++g) {
        const Index lo = group_bounds[static_cast<std::size_t>(g)];
        const Index hi = group_bounds[static_cast<std::size_t>(g) + 1];
        for (Index i = hi - lo; i > 1; --i) {
            const Index j = rng.index_below(i);
            std::swap(out.perm.map[static_cast<std::size_t>(lo + i - 1)],
                      out.perm.map[static_cast<std::size_t>(lo + j)]);
        }
    }
    if (crossbin_fraction > 0.0 && groups > 1) {
        const Index cross = static_cast<Index>(
            std::ceil(crossbin_fraction * static_cast<double>(n)));
        for (Index c = 0; c < cross; ++c) {
            const Index a = rng.index_below(n);
            const Index ga = detail::group_of(group_bounds, a);
            const Index lo = group_bounds[static_cast<std::size_t>(ga)];
            const Index hi = group_bounds[static_cast<std::size_t>(ga) + 1];
            // b uniform over rows outside group ga
            Index b = rng.index_below(n - (hi - lo));
            if (b >= lo) b += hi - lo;
            std::swap(out.perm.map[static_cast<std::size_t>(a)],
                      out.perm.map[static_cast<std::size_t>(b)]);
            out.cross_swaps.emplace_back(a, b);
        }
    }
    out.labels = apply_permutation(out.perm, y);
    return out;
}

/// Draws X and w_true with iid standard-normal entries, noise with standard
/// deviation sigma, and shuffles the noisy labels per the chosen mode. The
/// draw order (X row-major, then w, then noise, then the shuffle from a
/// derived stream) is fixed, so instances are reproducible from the seed.
inline SyntheticInstance generate(const SyntheticSpec& spec,
                                  const ShuffleMode& mode) {
    spec.validate();
    Rng rng(spec.seed);
    SyntheticInstance inst;
    inst.X.resize(spec.n, spec.d);
    for (Index i = 0; i < spec.n; ++i) {
        for (Index j = 0; j < spec.d; ++j) {
            inst.X(i, j) = rng.normal();
        }
    }
    inst.w_true.resize(spec.d);
    for (Index j = 0; j < spec.d; ++j) inst.w_true[j] = rng.normal();
    inst.noise.resize(spec.n);
    for (Index i = 0; i < spec.n; ++i) inst.noise[i] = spec.sigma * rng.normal();
    inst.y_clean = inst.X * inst.w_true;
    const LabelVector y_noisy = inst.y_clean + inst.noise;

    const std::uint64_t shuffle_seed = derive_seed(spec.seed, 1);
    switch (mode.kind) {
        case ShuffleKind::identity:
            inst.pi_true = Permutation::identity(spec.n);
            inst.y_observed = y_noisy;
            break;
        case ShuffleKind::full: {
            Rng shuffle_rng(shuffle_seed);
            inst.pi_true = Permutation::random(spec.n, shuffle_rng);
            inst.y_observed = apply_permutation(inst.pi_true, y_noisy);
            break;
        }
        case ShuffleKind::grouped: {
            GroupedShuffleResult r = grouped_shuffle(
                y_noisy, mode.group_bounds, mode.crossbin_fraction, shuffle_seed);
            inst.pi_true = std::move(r.perm);
            inst.y_observed = std::move(r.labels);
            break;
        }
    }
    return inst;
}

}  // namespace shufreg

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shufreg/errors.hpp"
#include "shufreg/rng.hpp"
#include "shufreg/types.hpp"

namespace shufreg {

/// A bijection on {0..n-1}. map[i] is the source index placed at position i,
/// so applying p to a vector v yields out[i] = v[p.map[i]].
struct Permutation {
    std::vector<Index> map;

    static Permutation identity(Index n) {
        Permutation p;
        p.map.resize(static_cast<std::size_t>(n));
        std::iota(p.map.begin(), p.map.end(), Index{0});
        return p;
    }

    static Permutation random(Index n, Rng& rng) {
        Permutation p = identity(n);
        rng.shuffle(p.map);
        return p;
    }

    Index size() const { return static_cast<Index>(map.size()); }

    Permutation inverse() const {
        Permutation inv;
        inv.map.assign(map.size(), Index{0});
        for (std::size_t i = 0; i < map.size(); ++i) {
            inv.map[static_cast<std::size_t>(map[i])] = static_cast<Index>(i);
        }
        return inv;
    }

    bool is_valid() const {
        std::vector<bool> seen(map.size(), false);
        for (Index v : map) {
            if (v < 0 || v >= size() || seen[static_cast<std::size_t>(v)]) {
                return false;
            }
            seen[static_cast<std::size_t>(v)] = true;
        }
        return true;
    }

    bool operator==(const Permutation& other) const { return map == other.map; }
};

inline LabelVector apply_permutation(const Permutation& p, const LabelVector& v) {
    if (p.size() != v.size()) {
        throw DimensionMismatch("apply_permutation: permutation of size " +
                                std::to_string(p.size()) + " applied to " +
                                std::to_string(v.size()) + " entries");
    }
    LabelVector out(v.size());
    for (Index i = 0; i < v.size(); ++i) {
        out[i] = v[p.map[static_cast<std::size_t>(i)]];
    }
    return out;
}

inline DesignMatrix apply_permutation_rows(const Permutation& p,
                                           const DesignMatrix& X) {
    if (p.size() != X.rows()) {
        throw DimensionMismatch("apply_permutation_rows: permutation of size " +
                                std::to_string(p.size()) + " applied to " +
                                std::to_string(X.rows()) + " rows");
    }
    DesignMatrix out(X.rows(), X.cols());
    for (Index i = 0; i < X.rows(); ++i) {
        out.row(i) = X.row(p.map[static_cast<std::size_t>(i)]);
    }
    return out;
}

namespace detail {

/// Indices of v sorted by ascending value; ties keep ascending index order.
inline std::vector<Index> sorted_order(const LabelVector& v) {
    std::vector<Index> order(static_cast<std::size_t>(v.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&v](Index a, Index b) { return v[a] < v[b]; });
    return order;
}

}  // namespace detail

/// The permutation minimizing ||P . scores - y||^2 over all permutations:
/// the rank order of scores is matched to the rank order of y, so the k-th
/// smallest score lands at the position of the k-th smallest label. Ties are
/// broken by ascending original index.
inline Permutation best_permutation(const LabelVector& scores,
                                    const LabelVector& y) {
    if (scores.size() != y.size()) {
        throw DimensionMismatch("best_permutation: scores has " +
                                std::to_string(scores.size()) + ", y has " +
                                std::to_string(y.size()));
    }
    const std::vector<Index> by_score = detail::sorted_order(scores);
    const std::vector<Index> by_label = detail::sorted_order(y);
    Permutation p;
    p.map.resize(by_score.size());
    for (std::size_t k = 0; k < by_score.size(); ++k) {
        p.map[static_cast<std::size_t>(by_label[k])] = by_score[k];
    }
    return p;
}

/// Accumulated average of sampled permutation matrices. `weights` holds raw
/// accumulation; dividing by sample_count yields a doubly stochastic matrix.
/// A SoftPermutation holding an already-averaged matrix uses sample_count = 1.
struct SoftPermutation {
    Eigen::MatrixXd weights;
    long sample_count = 0;

    explicit SoftPermutation(Index n) : weights(Eigen::MatrixXd::Zero(n, n)) {}

    Index size() const { return weights.rows(); }

    Eigen::MatrixXd normalized() const {
        if (sample_count == 0) {
            throw EmptyAccumulator("SoftPermutation holds no samples");
        }
        return weights / static_cast<double>(sample_count);
    }
};

inline void accumulate(SoftPermutation& soft, const Permutation& p) {
    if (soft.size() != p.size()) {
        throw DimensionMismatch("accumulate: soft is " +
                                std::to_string(soft.size()) +
                                ", permutation is " + std::to_string(p.size()));
    }
    for (Index i = 0; i < p.size(); ++i) {
        soft.weights(i, p.map[static_cast<std::size_t>(i)]) += 1.0;
    }
    ++soft.sample_count;
}

/// (1/sample_count) * sum_a P_a^T y: the de-shuffled label vector E[P^T] y.
inline LabelVector apply_soft_transpose(const SoftPermutation& soft,
                                        const LabelVector& y) {
    if (soft.sample_count == 0) {
        throw EmptyAccumulator("apply_soft_transpose on an empty accumulator");
    }
    if (soft.size() != y.size()) {
        throw DimensionMismatch("apply_soft_transpose: soft is " +
                                std::to_string(soft.size()) + ", y has " +
                                std::to_string(y.size()));
    }
    return (soft.weights.transpose() * y) /
           static_cast<double>(soft.sample_count);
}

/// One Metropolis-Hastings chain over permutations. residuals[i] caches
/// scores[current.map[i]] - labels[i]; sigma2 is the (floored) noise variance
/// used in the acceptance ratio.
struct ChainState {
    Permutation current;
    Eigen::VectorXd residuals;
    double sigma2 = 1.0;
};

/// Builds a chain at the identity permutation for the given predictions.
inline ChainState make_chain(const LabelVector& scores, const LabelVector& labels,
                             double sigma2) {
    if (scores.size() != labels.size()) {
        throw DimensionMismatch("make_chain: scores has " +
                                std::to_string(scores.size()) + ", labels has " +
                                std::to_string(labels.size()));
    }
    ChainState state;
    state.current = Permutation::identity(scores.size());
    state.residuals = scores - labels;
    state.sigma2 = std::max(sigma2, kSigma2Floor);
    return state;
}

/// Refreshes the residual cache after scores/labels/sigma2 changed while the
/// chain's permutation persists.
inline void refresh_chain(ChainState& state, const LabelVector& scores,
                          const LabelVector& labels, double sigma2) {
    const Index n = state.current.size();
    if (scores.size() != n || labels.size() != n) {
        throw DimensionMismatch("refresh_chain: inconsistent sizes");
    }
    state.residuals.resize(n);
    for (Index i = 0; i < n; ++i) {
        state.residuals[i] =
            scores[state.current.map[static_cast<std::size_t>(i)]] - labels[i];
    }
    state.sigma2 = std::max(sigma2, kSigma2Floor);
}

/// Log acceptance ratio log q(P_b)/q(P_a) where P_b is the current permutation
/// with positions i and j swapped, under the Gaussian kernel exp(-r^2/sigma^2).
/// Only the two affected terms are touched.
inline double log_ratio_swap(const ChainState& state, Index i, Index j,
                             const LabelVector& scores, const LabelVector& y) {
    const Index n = state.current.size();
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
        throw IndexOutOfRange("log_ratio_swap: need distinct i, j in [0, " +
                              std::to_string(n) + "), got i=" +
                              std::to_string(i) + ", j=" + std::to_string(j));
    }
    const double ri = state.residuals[i];
    const double rj = state.residuals[j];
    const double ri_new = scores[state.current.map[static_cast<std::size_t>(j)]] - y[i];
    const double rj_new = scores[state.current.map[static_cast<std::size_t>(i)]] - y[j];
    return (ri * ri + rj * rj - ri_new * ri_new - rj_new * rj_new) /
           state.sigma2;
}

/// One Metropolis-Hastings transition for the proposal swapping positions i
/// and j: accepted outright when the ratio is >= 1, otherwise with probability
/// equal to the ratio. Returns whether the swap was applied.
inline bool mh_swap_step(ChainState& state, Index i, Index j,
                         const LabelVector& scores, const LabelVector& y,
                         Rng& rng) {
    const double log_alpha = log_ratio_swap(state, i, j, scores, y);
    if (log_alpha < 0.0 && std::log(rng.uniform()) >= log_alpha) {
        return false;
    }
    std::swap(state.current.map[static_cast<std::size_t>(i)],
              state.current.map[static_cast<std::size_t>(j)]);
    state.residuals[i] = scores[state.current.map[static_cast<std::size_t>(i)]] - y[i];
    state.residuals[j] = scores[state.current.map[static_cast<std::size_t>(j)]] - y[j];
    return true;
}

}  // namespace shufreg

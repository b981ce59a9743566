#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shufreg/linalg.hpp"
#include "shufreg/permutation.hpp"
#include "shufreg/rng.hpp"
#include "shufreg/types.hpp"

namespace shufreg {

/// Iteration/sampling budget for the EM fits. Zero/negative sentinels select
/// the defaults, which depend on the dataset size n:
/// k=50, s=ceil(n ln n), s'=n, g=max(1, n/10), R=n.
struct EMConfig {
    Index iterations = 50;    // k: outer EM iterations
    Index sampling_steps = 0; // s: MH steps per iteration (0 = ceil(n ln n))
    Index burn_steps = -1;    // s': steps discarded before sampling (-1 = n)
    Index sample_gap = 0;     // g: keep every g-th state after burn (0 = max(1, n/10))
    Index restarts = 0;       // R: Hard EM restarts (0 = n)
    std::uint64_t seed = 0;

    /// Selects the label-update reading of the stochastic fit. Default: each
    /// iteration overwrites the working labels with a fresh permutation
    /// average and the chain follows them. non_cumulative: the accumulator
    /// persists across iterations and the chain always measures pairings
    /// against the observed labels, so every refit solves against E[P^T] y.
    /// See fit_stochastic_em_grouped for the trade-off between the two.
    bool non_cumulative = false;

    /// Hard EM: restart 0 initializes from OLS on the labels as given rather
    /// than on a random permutation of them.
    bool ols_init_restart = false;

    /// Diagnostic: reject every MH proposal, pinning the chain at identity.
    bool pin_chain = false;
};

struct TraceEntry {
    WeightVector weights;
    double residual_ss = 0.0;
    double acceptance_rate = 0.0;  // fraction of accepted MH proposals; 1 for Hard EM
};

struct FitResult {
    WeightVector weights;
    double sigma2 = 0.0;
    std::optional<Permutation> permutation_estimate;   // Hard EM, baseline
    std::optional<SoftPermutation> soft_permutation;   // Stochastic EM (normalized)
    std::vector<TraceEntry> trace;                     // one entry per outer iteration
};

/// Dataset whose labels are shuffled only within contiguous row groups.
/// group_bounds holds G+1 ascending offsets with front 0 and back n.
struct GroupedDataset {
    DesignMatrix X;
    LabelVector y;
    std::vector<Index> group_bounds;

    Index groups() const { return static_cast<Index>(group_bounds.size()) - 1; }

    void validate() const {
        if (X.rows() != y.size()) {
            throw DimensionMismatch("grouped dataset: X has " +
                                    std::to_string(X.rows()) + " rows, y has " +
                                    std::to_string(y.size()));
        }
        if (group_bounds.size() < 2 || group_bounds.front() != 0 ||
            group_bounds.back() != X.rows()) {
            throw InvalidBounds("bounds must start at 0 and end at n=" +
                                std::to_string(X.rows()));
        }
        for (std::size_t g = 1; g < group_bounds.size(); ++g) {
            if (group_bounds[g] <= group_bounds[g - 1]) {
                throw InvalidBounds("bounds must be strictly ascending at entry " +
                                    std::to_string(g));
            }
        }
    }
};

inline GroupedDataset single_group(DesignMatrix X, LabelVector y) {
    GroupedDataset data;
    data.group_bounds = {0, X.rows()};
    data.X = std::move(X);
    data.y = std::move(y);
    return data;
}

namespace detail {

struct ResolvedEMConfig {
    Index iterations = 0;
    Index sampling_steps = 0;
    Index burn_steps = 0;
    Index sample_gap = 0;
    Index restarts = 0;
    std::uint64_t seed = 0;
};

inline ResolvedEMConfig resolve_hard(const EMConfig& cfg, Index n) {
    if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");
    if (cfg.restarts < 0) throw ConfigError("restarts must be >= 1 (0 = default)");
    ResolvedEMConfig rc;
    rc.iterations = cfg.iterations;
    rc.restarts = cfg.restarts > 0 ? cfg.restarts : n;
    rc.seed = cfg.seed;
    return rc;
}

inline ResolvedEMConfig resolve_stochastic(const EMConfig& cfg, Index n) {
    if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");
    if (cfg.sampling_steps < 0 || cfg.sample_gap < 0 || cfg.burn_steps < -1) {
        throw ConfigError("sampler settings must be nonnegative (0/-1 = default)");
    }
    ResolvedEMConfig rc;
    rc.iterations = cfg.iterations;
    rc.sampling_steps =
        cfg.sampling_steps > 0
            ? cfg.sampling_steps
            : static_cast<Index>(
                  std::ceil(static_cast<double>(n) * std::log(static_cast<double>(n))));
    rc.burn_steps = cfg.burn_steps >= 0 ? cfg.burn_steps : n;
    rc.sample_gap = cfg.sample_gap > 0 ? cfg.sample_gap : std::max<Index>(1, n / 10);
    rc.seed = cfg.seed;
    if (rc.burn_steps < 0 || rc.sampling_steps <= rc.burn_steps) {
        throw ConfigError("need sampling_steps > burn_steps >= 0, got s=" +
                          std::to_string(rc.sampling_steps) +
                          ", s'=" + std::to_string(rc.burn_steps));
    }
    const Index collected = rc.sampling_steps / rc.sample_gap -
                            rc.burn_steps / rc.sample_gap;
    if (collected < 1) {
        throw ConfigError("sampler would collect no states: s=" +
                          std::to_string(rc.sampling_steps) + ", s'=" +
                          std::to_string(rc.burn_steps) + ", gap=" +
                          std::to_string(rc.sample_gap));
    }
    return rc;
}

/// Per-group ascending label values plus the original slot of each rank.
struct SortedGroupLabels {
    LabelVector values;                        // y sorted ascending within each group
    std::vector<std::vector<Index>> slot_of_rank;  // [g][k] -> original position
};

inline SortedGroupLabels sort_labels_by_group(const GroupedDataset& data) {
    SortedGroupLabels out;
    const Index n = data.y.size();
    out.values.resize(n);
    out.slot_of_rank.resize(static_cast<std::size_t>(data.groups()));
    for (Index g = 0; g < data.groups(); ++g) {
        const Index lo = data.group_bounds[static_cast<std::size_t>(g)];
        const Index hi = data.group_bounds[static_cast<std::size_t>(g) + 1];
        std::vector<Index> order(static_cast<std::size_t>(hi - lo));
        std::iota(order.begin(), order.end(), lo);
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
            return data.y[a] < data.y[b];
        });
        auto& slots = out.slot_of_rank[static_cast<std::size_t>(g)];
        slots = std::move(order);
        for (std::size_t k = 0; k < slots.size(); ++k) {
            out.values[lo + static_cast<Index>(k)] = data.y[slots[k]];
        }
    }
    return out;
}

}  // namespace detail

/// Ordinary least squares on the data exactly as given; the negative-control
/// baseline for every experiment.
inline FitResult fit_ols_baseline(const DesignMatrix& X, const LabelVector& y) {
    const RegressionFit f = ols_fit(X, y);
    FitResult out;
    out.weights = f.weights;
    out.sigma2 = f.sigma2;
    out.permutation_estimate = Permutation::identity(X.rows());
    out.trace.push_back(TraceEntry{f.weights, f.residual_ss, 0.0});
    return out;
}

/// Hard EM with within-group sort-based E-steps: alternating minimization of
/// min_w min_P ||y - P X w||^2 with R random restarts. Each restart starts
/// from OLS against an independently permuted copy of the labels; the restart
/// with the smallest final residual wins (ties go to the lowest index).
///
/// Internally the design matrix stays fixed and the labels are re-paired
/// instead: the row with the k-th smallest prediction within a group receives
/// the group's k-th smallest label.
inline FitResult fit_hard_em_grouped(const GroupedDataset& data,
                                     const EMConfig& cfg) {
    data.validate();
    const Index n = data.X.rows();
    const Index G = data.groups();
    const detail::ResolvedEMConfig rc = detail::resolve_hard(cfg, n);
    const LeastSquaresSolver solver(data.X);
    const detail::SortedGroupLabels sorted = detail::sort_labels_by_group(data);

    double best_rss = std::numeric_limits<double>::infinity();
    WeightVector best_w;
    double best_sigma2 = 0.0;
    std::vector<TraceEntry> best_trace;
    std::vector<std::vector<Index>> best_pairing;  // [g][k] -> row of rank k

    std::vector<std::vector<Index>> row_of_rank(static_cast<std::size_t>(G));
    for (Index r = 0; r < rc.restarts; ++r) {
        Rng rng(derive_seed(rc.seed, static_cast<std::uint64_t>(r)));
        LabelVector init = data.y;
        if (!(r == 0 && cfg.ols_init_restart)) {
            for (Index g = 0; g < G; ++g) {
                const Index lo = data.group_bounds[static_cast<std::size_t>(g)];
                const Index hi = data.group_bounds[static_cast<std::size_t>(g) + 1];
                std::vector<double> vals(init.data() + lo, init.data() + hi);
                rng.shuffle(vals);
                for (Index i = lo; i < hi; ++i) init[i] = vals[static_cast<std::size_t>(i - lo)];
            }
        }
        WeightVector w = solver.weights_for(init);
        LabelVector scores = solver.predict(w);
        LabelVector z(n);
        std::vector<TraceEntry> trace;
        trace.reserve(static_cast<std::size_t>(rc.iterations));
        double rss = 0.0;
        for (Index m = 0; m < rc.iterations; ++m) {
            for (Index g = 0; g < G; ++g) {
                const Index lo = data.group_bounds[static_cast<std::size_t>(g)];
                const Index hi = data.group_bounds[static_cast<std::size_t>(g) + 1];
                auto& rows = row_of_rank[static_cast<std::size_t>(g)];
                rows.resize(static_cast<std::size_t>(hi - lo));
                std::iota(rows.begin(), rows.end(), lo);
                std::stable_sort(rows.begin(), rows.end(), [&](Index a, Index b) {
                    return scores[a] < scores[b];
                });
                for (std::size_t k = 0; k < rows.size(); ++k) {
                    z[rows[k]] = sorted.values[lo + static_cast<Index>(k)];
                }
            }
            w = solver.weights_for(z);
            scores = solver.predict(w);
            rss = (scores - z).squaredNorm();
            trace.push_back(TraceEntry{w, rss, 1.0});
        }
        if (rss < best_rss - 1e-12) {
            best_rss = rss;
            best_w = w;
            best_sigma2 = rss / static_cast<double>(n - data.X.cols());
            best_trace = std::move(trace);
            best_pairing = row_of_rank;
        }
    }

    FitResult out;
    out.weights = std::move(best_w);
    out.sigma2 = best_sigma2;
    out.trace = std::move(best_trace);
    Permutation est = Permutation::identity(n);
    for (Index g = 0; g < G; ++g) {
        const auto& slots = sorted.slot_of_rank[static_cast<std::size_t>(g)];
        const auto& rows = best_pairing[static_cast<std::size_t>(g)];
        for (std::size_t k = 0; k < slots.size(); ++k) {
            est.map[static_cast<std::size_t>(slots[k])] = rows[k];
        }
    }
    out.permutation_estimate = std::move(est);
    return out;
}

inline FitResult fit_hard_em(const DesignMatrix& X, const LabelVector& y,
                             const EMConfig& cfg) {
    return fit_hard_em_grouped(single_group(X, y), cfg);
}

/// Stochastic EM: the posterior expectation over permutations is approximated
/// by a Metropolis-Hastings average over 2-swaps (within-group swaps when
/// G > 1, with the group drawn uniformly per step). The averaged permutation
/// de-shuffles the labels, which are then refit by OLS. One chain persists
/// across all k outer iterations, starting at identity.
///
/// The two readings of the label update differ in what accumulates:
///  - cumulative (default): each iteration collects a fresh average and
///    overwrites the working labels, z <- E[P^T] z; the chain's likelihood
///    follows the current working labels. Repeated averaging anneals the fit
///    toward the posterior bulk, which is what keeps fully shuffled data away
///    from overfit assignments.
///  - non_cumulative: the accumulator persists across iterations (it is
///    initialized once, before the outer loop) and the chain's likelihood
///    always measures pairings against the observed labels, so each M-step
///    solves against z = E[P^T] y with the running average. This is the
///    posterior-faithful reading that tracks lightly shuffled data closely.
inline FitResult fit_stochastic_em_grouped(const GroupedDataset& data,
                                           const EMConfig& cfg) {
    data.validate();
    const Index n = data.X.rows();
    const Index G = data.groups();
    const detail::ResolvedEMConfig rc = detail::resolve_stochastic(cfg, n);
    const LeastSquaresSolver solver(data.X);

    RegressionFit fit = solver.fit(data.y);
    LabelVector z = data.y;
    // The labels whose pairing the chain samples: the working labels under
    // the cumulative reading, the observed labels otherwise. z is reassigned
    // in place each iteration, so this reference stays current.
    const LabelVector& target = cfg.non_cumulative ? data.y : z;
    LabelVector scores = solver.predict(fit.weights);
    ChainState chain = make_chain(scores, target, fit.sigma2);
    Rng rng(derive_seed(rc.seed, 0));

    FitResult out;
    out.trace.reserve(static_cast<std::size_t>(rc.iterations));
    Eigen::MatrixXd accum = Eigen::MatrixXd::Zero(n, n);
    std::vector<long> group_count(static_cast<std::size_t>(G), 0);

    for (Index it = 0; it < rc.iterations; ++it) {
        if (!cfg.non_cumulative) {
            accum.setZero();
            std::fill(group_count.begin(), group_count.end(), 0L);
        }
        long accepted = 0;
        for (Index j = 1; j <= rc.sampling_steps; ++j) {
            const Index g = (G > 1) ? rng.index_below(G) : 0;
            const Index lo = data.group_bounds[static_cast<std::size_t>(g)];
            const Index hi = data.group_bounds[static_cast<std::size_t>(g) + 1];
            if (hi - lo >= 2 && !cfg.pin_chain) {
                const auto [a, b] = rng.distinct_pair(lo, hi);
                if (mh_swap_step(chain, a, b, scores, target, rng)) ++accepted;
            }
            if (j > rc.burn_steps && j % rc.sample_gap == 0) {
                for (Index i = lo; i < hi; ++i) {
                    accum(i, chain.current.map[static_cast<std::size_t>(i)]) += 1.0;
                }
                ++group_count[static_cast<std::size_t>(g)];
            }
        }

        // Per-group normalization keeps the direct sum doubly stochastic even
        // though group visit counts differ. A group that collected no state
        // contributes its current chain block as a single sample.
        SoftPermutation soft(n);
        soft.sample_count = 1;
        for (Index g = 0; g < G; ++g) {
            const Index lo = data.group_bounds[static_cast<std::size_t>(g)];
            const Index hi = data.group_bounds[static_cast<std::size_t>(g) + 1];
            const Index m = hi - lo;
            const long count = group_count[static_cast<std::size_t>(g)];
            if (count == 0) {
                for (Index i = lo; i < hi; ++i) {
                    soft.weights(i, chain.current.map[static_cast<std::size_t>(i)]) = 1.0;
                }
            } else {
                soft.weights.block(lo, lo, m, m) =
                    accum.block(lo, lo, m, m) / static_cast<double>(count);
            }
        }

        z = apply_soft_transpose(soft, cfg.non_cumulative ? data.y : z);
        fit = solver.fit(z);
        scores = solver.predict(fit.weights);
        refresh_chain(chain, scores, target, fit.sigma2);
        out.trace.push_back(TraceEntry{
            fit.weights, fit.residual_ss,
            static_cast<double>(accepted) / static_cast<double>(rc.sampling_steps)});
        if (it + 1 == rc.iterations) out.soft_permutation = std::move(soft);
    }

    out.weights = fit.weights;
    out.sigma2 = fit.sigma2;
    return out;
}

inline FitResult fit_stochastic_em(const DesignMatrix& X, const LabelVector& y,
                                   const EMConfig& cfg) {
    return fit_stochastic_em_grouped(single_group(X, y), cfg);
}

}  // namespace shufreg

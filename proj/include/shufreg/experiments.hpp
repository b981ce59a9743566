#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "shufreg/csv.hpp"
#include "shufreg/data_io.hpp"
#include "shufreg/estimators.hpp"
#include "shufreg/synthetic.hpp"
#include "shufreg/types.hpp"

namespace shufreg {

inline constexpr const char* kMethodBaseline = "ols_baseline";
inline constexpr const char* kMethodHardEM = "hard_em";
inline constexpr const char* kMethodStochasticEM = "stochastic_em";
inline constexpr const char* kMethodPositiveControl = "positive_control";

struct ReportRow {
    std::string method;
    Index n = 0;
    Index d = 0;
    double sigma = 0.0;
    Index G = 1;
    std::uint64_t seed = 0;
    long trial = 0;  // -1 marks an aggregate row
    std::string metric_name;
    double metric_value = 0.0;
};

struct TimingRow {
    std::string method;
    Index n = 0;
    Index d = 0;
    std::uint64_t seed = 0;
    long trial = 0;
    double wall_ms = 0.0;
};

/// Per-trial metric rows plus mean/std aggregates. Metric values are fully
/// determined by the embedded seeds; wall-clock measurements are kept apart
/// (timings.csv) so the report CSV is byte-stable across reruns.
struct ExperimentReport {
    std::string name;
    std::vector<ReportRow> rows;
    std::vector<TimingRow> timings;

    void add(ReportRow row) { rows.push_back(std::move(row)); }

    /// Appends mean/std rows (trial = -1) for every distinct
    /// (method, n, d, sigma, G, metric_name) key, in first-appearance order.
    void finalize_aggregates(std::uint64_t master_seed) {
        struct Key {
            std::string method;
            Index n, d;
            double sigma;
            Index G;
            std::string metric;
            bool operator==(const Key&) const = default;
        };
        std::vector<Key> keys;
        std::vector<std::vector<double>> values;
        for (const ReportRow& r : rows) {
            if (r.trial < 0) continue;
            Key k{r.method, r.n, r.d, r.sigma, r.G, r.metric_name};
            std::size_t slot = keys.size();
            for (std::size_t i = 0; i < keys.size(); ++i) {
                if (keys[i] == k) {
                    slot = i;
                    break;
                }
            }
            if (slot == keys.size()) {
                keys.push_back(k);
                values.emplace_back();
            }
            values[slot].push_back(r.metric_value);
        }
        for (std::size_t i = 0; i < keys.size(); ++i) {
            const auto& v = values[i];
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double var = 0.0;
            if (v.size() > 1) {
                for (double x : v) var += (x - mean) * (x - mean);
                var /= static_cast<double>(v.size() - 1);
            }
            ReportRow base{keys[i].method, keys[i].n,     keys[i].d,
                           keys[i].sigma,  keys[i].G,     master_seed,
                           -1,             keys[i].metric, 0.0};
            ReportRow mean_row = base;
            mean_row.metric_name += "_mean";
            mean_row.metric_value = mean;
            ReportRow std_row = base;
            std_row.metric_name += "_std";
            std_row.metric_value = std::sqrt(var);
            rows.push_back(std::move(mean_row));
            rows.push_back(std::move(std_row));
        }
    }

    std::string to_csv_string() const {
        std::ostringstream out;
        out << "experiment,method,n,d,sigma,G,seed,trial,metric_name,metric_value,wall_ms\n";
        for (const ReportRow& r : rows) {
            out << name << ',' << r.method << ',' << r.n << ',' << r.d << ','
                << csv::format_double(r.sigma) << ',' << r.G << ',' << r.seed
                << ',' << r.trial << ',' << r.metric_name << ','
                << csv::format_double(r.metric_value) << ",\n";
        }
        return out.str();
    }

    std::string timings_csv_string() const {
        std::ostringstream out;
        out << "experiment,method,n,d,seed,trial,wall_ms\n";
        for (const TimingRow& t : timings) {
            out << name << ',' << t.method << ',' << t.n << ',' << t.d << ','
                << t.seed << ',' << t.trial << ','
                << csv::format_double(t.wall_ms) << '\n';
        }
        return out.str();
    }

    void write_csv(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw DataError(path + ": cannot open for writing");
        f << to_csv_string();
    }

    void write_timings_csv(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw DataError(path + ": cannot open for writing");
        f << timings_csv_string();
    }
};

namespace detail {

class WallTimer {
public:
    WallTimer() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

/// Runs fn(0..count-1) on up to `jobs` threads. fn(i) must write only into
/// its own output slot; results are therefore independent of scheduling.
template <typename Fn>
void parallel_for(Index jobs, Index count, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (Index i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<Index> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    const Index workers = std::min(jobs, count);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (Index w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                const Index i = next.fetch_add(1);
                if (i >= count) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct UnitOutput {
    std::vector<ReportRow> rows;
    std::vector<TimingRow> timings;
};

inline void collect(ExperimentReport& report, std::vector<UnitOutput>& units,
                    std::uint64_t master_seed) {
    for (auto& u : units) {
        for (auto& r : u.rows) report.rows.push_back(std::move(r));
        for (auto& t : u.timings) report.timings.push_back(std::move(t));
    }
    report.finalize_aggregates(master_seed);
}

inline double parameter_error(const WeightVector& estimate,
                              const WeightVector& truth) {
    return (estimate - truth).norm();
}

}  // namespace detail

/// Parameter-error comparison of Hard EM (R = n unless overridden) and
/// Stochastic EM over fully shuffled synthetic datasets, for each n in
/// n_values and `trials` datasets per n.
inline ExperimentReport run_error_sweep(const std::vector<Index>& n_values,
                                        Index d, double sigma, Index trials,
                                        const EMConfig& cfg, Index jobs = 1) {
    ExperimentReport report;
    report.name = "error_sweep";
    const Index count = static_cast<Index>(n_values.size()) * trials;
    std::vector<detail::UnitOutput> units(static_cast<std::size_t>(count));
    detail::parallel_for(jobs, count, [&](Index u) {
        const Index ni = u / trials;
        const long trial = static_cast<long>(u % trials);
        const Index n = n_values[static_cast<std::size_t>(ni)];
        const std::uint64_t dataset_seed =
            derive_seed(cfg.seed, static_cast<std::uint64_t>(n),
                        static_cast<std::uint64_t>(trial));
        const SyntheticInstance inst =
            generate(SyntheticSpec{n, d, sigma, dataset_seed}, ShuffleMode::full());
        detail::UnitOutput& out = units[static_cast<std::size_t>(u)];

        EMConfig hard_cfg = cfg;
        hard_cfg.seed = derive_seed(dataset_seed, 11);
        detail::WallTimer hard_timer;
        const FitResult hard = fit_hard_em(inst.X, inst.y_observed, hard_cfg);
        out.timings.push_back(TimingRow{kMethodHardEM, n, d, dataset_seed, trial,
                                        hard_timer.elapsed_ms()});
        out.rows.push_back(ReportRow{
            kMethodHardEM, n, d, sigma, 1, dataset_seed, trial, "parameter_error",
            detail::parameter_error(hard.weights, inst.w_true)});

        EMConfig stoch_cfg = cfg;
        stoch_cfg.seed = derive_seed(dataset_seed, 12);
        detail::WallTimer stoch_timer;
        const FitResult stoch =
            fit_stochastic_em(inst.X, inst.y_observed, stoch_cfg);
        out.timings.push_back(TimingRow{kMethodStochasticEM, n, d, dataset_seed,
                                        trial, stoch_timer.elapsed_ms()});
        out.rows.push_back(ReportRow{
            kMethodStochasticEM, n, d, sigma, 1, dataset_seed, trial,
            "parameter_error",
            detail::parameter_error(stoch.weights, inst.w_true)});
    });
    detail::collect(report, units, cfg.seed);
    return report;
}

/// One dataset, `reorderings` random initial label orders; records the
/// per-iteration parameter-error trace of both methods plus the final error.
inline ExperimentReport run_consistency(Index n, Index d, double sigma,
                                        Index reorderings, const EMConfig& cfg,
                                        Index jobs = 1) {
    if (reorderings < 2) throw ConfigError("reorderings must be >= 2");
    ExperimentReport report;
    report.name = "consistency";
    const SyntheticInstance inst = generate(
        SyntheticSpec{n, d, sigma, derive_seed(cfg.seed, 1)}, ShuffleMode::full());
    std::vector<detail::UnitOutput> units(static_cast<std::size_t>(reorderings));
    detail::parallel_for(jobs, reorderings, [&](Index r) {
        Rng perm_rng(derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(r)));
        const Permutation reorder = Permutation::random(n, perm_rng);
        const LabelVector y_r = apply_permutation(reorder, inst.y_observed);
        detail::UnitOutput& out = units[static_cast<std::size_t>(r)];
        const long trial = static_cast<long>(r);

        const auto record = [&](const char* method, const FitResult& fit) {
            for (std::size_t m = 0; m < fit.trace.size(); ++m) {
                out.rows.push_back(ReportRow{
                    method, n, d, sigma, 1, cfg.seed, trial,
                    "parameter_error_iter_" + std::to_string(m),
                    detail::parameter_error(fit.trace[m].weights, inst.w_true)});
            }
            out.rows.push_back(ReportRow{
                method, n, d, sigma, 1, cfg.seed, trial, "parameter_error",
                detail::parameter_error(fit.weights, inst.w_true)});
        };

        EMConfig hard_cfg = cfg;
        hard_cfg.seed = derive_seed(cfg.seed, 3, static_cast<std::uint64_t>(r));
        detail::WallTimer hard_timer;
        const FitResult hard = fit_hard_em(inst.X, y_r, hard_cfg);
        out.timings.push_back(TimingRow{kMethodHardEM, n, d, hard_cfg.seed, trial,
                                        hard_timer.elapsed_ms()});
        record(kMethodHardEM, hard);

        EMConfig stoch_cfg = cfg;
        stoch_cfg.seed = derive_seed(cfg.seed, 4, static_cast<std::uint64_t>(r));
        detail::WallTimer stoch_timer;
        const FitResult stoch = fit_stochastic_em(inst.X, y_r, stoch_cfg);
        out.timings.push_back(TimingRow{kMethodStochasticEM, n, d, stoch_cfg.seed,
                                        trial, stoch_timer.elapsed_ms()});
        record(kMethodStochasticEM, stoch);
    });
    detail::collect(report, units, cfg.seed);
    return report;
}

/// Progressive pairwise shuffling: each series applies random transpositions
/// to an initially unshuffled dataset, fitting both methods every `stride`
/// swaps. Hard EM's restart set includes the OLS-on-current-labels start, and
/// Stochastic EM runs in the non-cumulative reading with a raised sampling
/// budget: lightly shuffled labels are the regime where the posterior tracks
/// the observed pairing closely, and cumulative re-averaging would wash that
/// signal out.
inline ExperimentReport run_partial_shuffle(Index n, Index d, double sigma,
                                            Index max_swaps, Index stride,
                                            Index series, const EMConfig& cfg,
                                            Index jobs = 1) {
    if (stride < 1) throw ConfigError("stride must be >= 1");
    ExperimentReport report;
    report.name = "partial_shuffle";
    const SyntheticInstance inst =
        generate(SyntheticSpec{n, d, sigma, derive_seed(cfg.seed, 1)},
                 ShuffleMode::identity());
    std::vector<detail::UnitOutput> units(static_cast<std::size_t>(series));
    detail::parallel_for(jobs, series, [&](Index s) {
        detail::UnitOutput& out = units[static_cast<std::size_t>(s)];
        const std::uint64_t swap_seed =
            derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(s));
        const long trial = static_cast<long>(s);
        for (Index swaps = 0; swaps <= max_swaps; swaps += stride) {
            // same stream, so each point extends the previous swap sequence
            const LabelVector y_s =
                progressive_shuffle(inst.y_observed, swaps, swap_seed).labels;
            const std::string suffix = "_swaps_" + std::to_string(swaps);

            EMConfig hard_cfg = cfg;
            hard_cfg.ols_init_restart = true;
            hard_cfg.seed = derive_seed(cfg.seed, 3, static_cast<std::uint64_t>(s),
                                        static_cast<std::uint64_t>(swaps));
            detail::WallTimer hard_timer;
            const FitResult hard = fit_hard_em(inst.X, y_s, hard_cfg);
            out.timings.push_back(TimingRow{kMethodHardEM, n, d, hard_cfg.seed,
                                            trial, hard_timer.elapsed_ms()});
            out.rows.push_back(ReportRow{
                kMethodHardEM, n, d, sigma, 1, hard_cfg.seed, trial,
                "parameter_error" + suffix,
                detail::parameter_error(hard.weights, inst.w_true)});

            EMConfig stoch_cfg = cfg;
            stoch_cfg.non_cumulative = true;
            if (stoch_cfg.sampling_steps == 0) {
                stoch_cfg.sampling_steps = 10 * static_cast<Index>(std::ceil(
                    static_cast<double>(n) * std::log(static_cast<double>(n))));
            }
            stoch_cfg.seed = derive_seed(cfg.seed, 4, static_cast<std::uint64_t>(s),
                                         static_cast<std::uint64_t>(swaps));
            detail::WallTimer stoch_timer;
            const FitResult stoch = fit_stochastic_em(inst.X, y_s, stoch_cfg);
            out.timings.push_back(TimingRow{kMethodStochasticEM, n, d,
                                            stoch_cfg.seed, trial,
                                            stoch_timer.elapsed_ms()});
            out.rows.push_back(ReportRow{
                kMethodStochasticEM, n, d, sigma, 1, stoch_cfg.seed, trial,
                "parameter_error" + suffix,
                detail::parameter_error(stoch.weights, inst.w_true)});
        }
    });
    detail::collect(report, units, cfg.seed);
    return report;
}

enum class RealDataPipeline { label_grouped, feature_grouped };

struct RealDataOptions {
    std::string label_column = "label";      // numeric pipeline
    std::string grouping_feature;            // feature_grouped: column to bin on
    Index max_k = 3;                         // sequence pipeline
    double test_fraction = 0.2;
    Index repeats = 5;
    bool add_intercept = false;
};

/// Grouped-shuffle benchmark on an ingested dataset: negative control (OLS on
/// shuffled labels), grouped Hard EM, grouped Stochastic EM, and the positive
/// control (OLS on the unshuffled training labels), all sharing one train/test
/// split and evaluated by test MSE over `repeats` shuffle seeds.
inline ExperimentReport run_realdata(const std::string& dataset_path,
                                     RealDataPipeline pipeline, Index G,
                                     double crossbin_fraction, const EMConfig& cfg,
                                     const RealDataOptions& options = {},
                                     Index jobs = 1) {
    ExperimentReport report;
    report.name = "realdata";

    GroupedDataset grouped;
    if (pipeline == RealDataPipeline::label_grouped) {
        const SequenceData seq = load_sequence_dataset(dataset_path);
        DesignMatrix X = featurize_kmers(seq.sequences, options.max_k);
        if (options.add_intercept) {
            X.conservativeResize(Eigen::NoChange, X.cols() + 1);
            X.col(X.cols() - 1).setOnes();
        }
        grouped = group_by_label_quantiles(X, normalize_labels(seq.labels).labels, G);
    } else {
        if (options.grouping_feature.empty()) {
            throw ConfigError("feature_grouped pipeline needs a grouping feature");
        }
        const Dataset data = load_numeric_dataset(dataset_path, options.label_column,
                                                  options.add_intercept);
        Index feature_index = -1;
        for (std::size_t i = 0; i < data.feature_names.size(); ++i) {
            if (data.feature_names[i] == options.grouping_feature) {
                feature_index = static_cast<Index>(i);
                break;
            }
        }
        if (feature_index < 0) {
            throw ConfigError("no feature named '" + options.grouping_feature + "'");
        }
        grouped = group_by_feature(data.X, normalize_labels(data.y).labels,
                                   feature_index, G);
    }

    const SplitDataset split =
        split_train_test(grouped, options.test_fraction, derive_seed(cfg.seed, 4));
    const Index n_train = split.train.X.rows();
    const Index d = split.train.X.cols();

    const auto test_mse = [&](const WeightVector& w) {
        return (split.test_X * w - split.test_y).squaredNorm() /
               static_cast<double>(split.test_y.size());
    };

    std::vector<detail::UnitOutput> units(static_cast<std::size_t>(options.repeats));
    detail::parallel_for(jobs, options.repeats, [&](Index r) {
        detail::UnitOutput& out = units[static_cast<std::size_t>(r)];
        const long trial = static_cast<long>(r);
        const std::uint64_t shuffle_seed =
            derive_seed(cfg.seed, 5, static_cast<std::uint64_t>(r));
        GroupedDataset shuffled = split.train;
        shuffled.y = grouped_shuffle(split.train.y, split.train.group_bounds,
                                     crossbin_fraction, shuffle_seed)
                         .labels;

        const auto record = [&](const char* method, const WeightVector& w,
                                double ms) {
            out.timings.push_back(TimingRow{method, n_train, d, shuffle_seed,
                                            trial, ms});
            out.rows.push_back(ReportRow{method, n_train, d, 0.0, G, shuffle_seed,
                                         trial, "test_mse", test_mse(w)});
        };

        detail::WallTimer neg_timer;
        const FitResult negative = fit_ols_baseline(shuffled.X, shuffled.y);
        record(kMethodBaseline, negative.weights, neg_timer.elapsed_ms());

        EMConfig hard_cfg = cfg;
        hard_cfg.seed = derive_seed(cfg.seed, 6, static_cast<std::uint64_t>(r));
        detail::WallTimer hard_timer;
        const FitResult hard = fit_hard_em_grouped(shuffled, hard_cfg);
        record(kMethodHardEM, hard.weights, hard_timer.elapsed_ms());

        EMConfig stoch_cfg = cfg;
        stoch_cfg.seed = derive_seed(cfg.seed, 7, static_cast<std::uint64_t>(r));
        detail::WallTimer stoch_timer;
        const FitResult stoch = fit_stochastic_em_grouped(shuffled, stoch_cfg);
        record(kMethodStochasticEM, stoch.weights, stoch_timer.elapsed_ms());

        detail::WallTimer pos_timer;
        const FitResult positive = fit_ols_baseline(split.train.X, split.train.y);
        record(kMethodPositiveControl, positive.weights, pos_timer.elapsed_ms());
    });
    detail::collect(report, units, cfg.seed);
    return report;
}

/// Hard EM parameter error as a function of the restart count, with
/// Stochastic EM recorded as the reference, per dimensionality in d_values.
inline ExperimentReport run_restart_study(Index n, const std::vector<Index>& d_values,
                                          const std::vector<Index>& restart_counts,
                                          double sigma, Index trials,
                                          const EMConfig& cfg, Index jobs = 1) {
    if (restart_counts.empty()) throw ConfigError("restart_counts must be nonempty");
    ExperimentReport report;
    report.name = "restart_study";
    const Index count = static_cast<Index>(d_values.size()) * trials;
    std::vector<detail::UnitOutput> units(static_cast<std::size_t>(count));
    detail::parallel_for(jobs, count, [&](Index u) {
        const Index di = u / trials;
        const long trial = static_cast<long>(u % trials);
        const Index d = d_values[static_cast<std::size_t>(di)];
        const std::uint64_t dataset_seed =
            derive_seed(cfg.seed, static_cast<std::uint64_t>(d),
                        static_cast<std::uint64_t>(trial));
        const SyntheticInstance inst =
            generate(SyntheticSpec{n, d, sigma, dataset_seed}, ShuffleMode::full());
        detail::UnitOutput& out = units[static_cast<std::size_t>(u)];

        EMConfig stoch_cfg = cfg;
        stoch_cfg.seed = derive_seed(dataset_seed, 12);
        detail::WallTimer stoch_timer;
        const FitResult stoch =
            fit_stochastic_em(inst.X, inst.y_observed, stoch_cfg);
        out.timings.push_back(TimingRow{kMethodStochasticEM, n, d, dataset_seed,
                                        trial, stoch_timer.elapsed_ms()});
        out.rows.push_back(ReportRow{
            kMethodStochasticEM, n, d, sigma, 1, dataset_seed, trial,
            "parameter_error",
            detail::parameter_error(stoch.weights, inst.w_true)});

        for (Index restarts : restart_counts) {
            EMConfig hard_cfg = cfg;
            hard_cfg.restarts = restarts;
            hard_cfg.seed = derive_seed(dataset_seed, 13,
                                        static_cast<std::uint64_t>(restarts));
            detail::WallTimer hard_timer;
            const FitResult hard = fit_hard_em(inst.X, inst.y_observed, hard_cfg);
            out.timings.push_back(TimingRow{kMethodHardEM, n, d, hard_cfg.seed,
                                            trial, hard_timer.elapsed_ms()});
            out.rows.push_back(ReportRow{
                kMethodHardEM, n, d, sigma, 1, hard_cfg.seed, trial,
                "parameter_error_restarts_" + std::to_string(restarts),
                detail::parameter_error(hard.weights, inst.w_true)});
        }
    });
    detail::collect(report, units, cfg.seed);
    return report;
}

}  // namespace shufreg

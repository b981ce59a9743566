#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "shufreg/csv.hpp"
#include "shufreg/errors.hpp"
#include "shufreg/estimators.hpp"
#include "shufreg/rng.hpp"
#include "shufreg/types.hpp"

namespace shufreg {

struct Dataset {
    DesignMatrix X;
    LabelVector y;
    std::vector<std::string> feature_names;
    std::string label_name;
};

/// Numeric CSV with a header row; every column except `label_column` becomes a
/// feature. Optionally appends an all-ones intercept column.
inline Dataset load_numeric_dataset(const std::string& path,
                                    const std::string& label_column,
                                    bool add_intercept = false) {
    const csv::Table table = csv::read_file(path);
    const std::size_t label_col = table.column(label_column, path);
    if (table.rows.empty()) throw CsvError(path + ": no data rows");
    Dataset out;
    out.label_name = label_column;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c != label_col) out.feature_names.push_back(table.header[c]);
    }
    const Index n = static_cast<Index>(table.rows.size());
    const Index d = static_cast<Index>(out.feature_names.size());
    out.X.resize(n, add_intercept ? d + 1 : d);
    out.y.resize(n);
    for (Index r = 0; r < n; ++r) {
        const auto& row = table.rows[static_cast<std::size_t>(r)];
        Index f = 0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            const double v =
                csv::parse_double(row[c], path, static_cast<std::size_t>(r) + 2, c + 1);
            if (!std::isfinite(v)) {
                throw CsvError(path + ": row " + std::to_string(r + 2) +
                               ", column " + std::to_string(c + 1) +
                               ": non-finite value");
            }
            if (c == label_col) {
                out.y[r] = v;
            } else {
                out.X(r, f++) = v;
            }
        }
        if (add_intercept) out.X(r, d) = 1.0;
    }
    if (add_intercept) out.feature_names.push_back("intercept");
    return out;
}

struct SequenceData {
    std::vector<std::string> sequences;
    LabelVector labels;
};

/// Sequence CSV with columns `sequence,label`.
inline SequenceData load_sequence_dataset(const std::string& path) {
    const csv::Table table = csv::read_file(path);
    const std::size_t seq_col = table.column("sequence", path);
    const std::size_t label_col = table.column("label", path);
    if (table.rows.empty()) throw CsvError(path + ": no data rows");
    SequenceData out;
    out.sequences.reserve(table.rows.size());
    out.labels.resize(static_cast<Index>(table.rows.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out.sequences.push_back(table.rows[r][seq_col]);
        out.labels[static_cast<Index>(r)] =
            csv::parse_double(table.rows[r][label_col], path, r + 2, label_col + 1);
    }
    return out;
}

namespace detail {

inline int base_index(char c) {
    switch (c) {
        case 'A': return 0;
        case 'C': return 1;
        case 'G': return 2;
        case 'T': return 3;
    }
    return -1;
}

}  // namespace detail

/// Names of all k-mers for k = 1..max_k, shorter k first, lexicographic
/// within each k. This is the fixed column order of featurize_kmers.
inline std::vector<std::string> kmer_columns(Index max_k) {
    std::vector<std::string> names;
    std::string current;
    for (Index k = 1; k <= max_k; ++k) {
        std::vector<std::string> level{""};
        for (Index depth = 0; depth < k; ++depth) {
            std::vector<std::string> next;
            for (const auto& prefix : level) {
                for (char c : {'A', 'C', 'G', 'T'}) next.push_back(prefix + c);
            }
            level = std::move(next);
        }
        names.insert(names.end(), level.begin(), level.end());
    }
    return names;
}

/// Counts of overlapping k-mer occurrences for k = 1..max_k, one column per
/// k-mer in the kmer_columns order (84 columns for max_k = 3).
inline DesignMatrix featurize_kmers(const std::vector<std::string>& sequences,
                                    Index max_k) {
    if (max_k < 1) throw ConfigError("max_k must be >= 1");
    Index cols = 0;
    std::vector<Index> offsets;  // column offset of each k level
    Index power = 1;
    for (Index k = 1; k <= max_k; ++k) {
        offsets.push_back(cols);
        power *= 4;
        cols += power;
    }
    DesignMatrix X = DesignMatrix::Zero(static_cast<Index>(sequences.size()), cols);
    for (std::size_t r = 0; r < sequences.size(); ++r) {
        const std::string& seq = sequences[r];
        for (std::size_t pos = 0; pos < seq.size(); ++pos) {
            if (detail::base_index(seq[pos]) < 0) {
                throw InvalidAlphabet("character '" + std::string(1, seq[pos]) +
                                      "' at position " + std::to_string(pos + 1) +
                                      " of sequence row " + std::to_string(r + 1));
            }
        }
        for (Index k = 1; k <= max_k; ++k) {
            if (static_cast<std::size_t>(k) > seq.size()) break;
            for (std::size_t pos = 0; pos + static_cast<std::size_t>(k) <= seq.size(); ++pos) {
                Index code = 0;
                for (Index t = 0; t < k; ++t) {
                    code = code * 4 + detail::base_index(seq[pos + static_cast<std::size_t>(t)]);
                }
                X(static_cast<Index>(r), offsets[static_cast<std::size_t>(k - 1)] + code) += 1.0;
            }
        }
    }
    return X;
}

struct AffineParams {
    double offset = 0.0;  // subtracted first
    double scale = 1.0;   // then divided by
};

struct NormalizedLabels {
    LabelVector labels;
    AffineParams params;
};

/// Min-max normalization to [0, 1]; the returned params invert the map.
inline NormalizedLabels normalize_labels(const LabelVector& y) {
    if (y.size() < 2) throw DegenerateLabels("need at least 2 labels");
    const double lo = y.minCoeff();
    const double hi = y.maxCoeff();
    if (hi == lo) throw DegenerateLabels("all labels equal " + std::to_string(lo));
    NormalizedLabels out;
    if (lo == 0.0 && hi == 1.0) {
        out.labels = y;
        out.params = AffineParams{0.0, 1.0};
        return out;
    }
    out.params = AffineParams{lo, hi - lo};
    out.labels = (y.array() - lo) / (hi - lo);
    return out;
}

inline LabelVector denormalize_labels(const LabelVector& y, const AffineParams& p) {
    return (y.array() * p.scale + p.offset).matrix();
}

namespace detail {

inline GroupedDataset group_sorted(const DesignMatrix& X, const LabelVector& y,
                                   const LabelVector& sort_key, Index G) {
    const Index n = X.rows();
    if (G < 1 || G > n) {
        throw InvalidG("G must be in [1, n], got G=" + std::to_string(G) +
                       ", n=" + std::to_string(n));
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return sort_key[a] < sort_key[b]; });
    GroupedDataset out;
    out.X.resize(n, X.cols());
    out.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        out.X.row(i) = X.row(order[static_cast<std::size_t>(i)]);
        out.y[i] = y[order[static_cast<std::size_t>(i)]];
    }
    // sizes differ by at most 1, larger groups first
    const Index base = n / G;
    const Index rem = n % G;
    out.group_bounds.resize(static_cast<std::size_t>(G) + 1);
    out.group_bounds[0] = 0;
    for (Index g = 0; g < G; ++g) {
        out.group_bounds[static_cast<std::size_t>(g) + 1] =
            out.group_bounds[static_cast<std::size_t>(g)] + base + (g < rem ? 1 : 0);
    }
    return out;
}

}  // namespace detail

/// Rows sorted by ascending label and cut into G contiguous groups.
inline GroupedDataset group_by_label_quantiles(const DesignMatrix& X,
                                               const LabelVector& y, Index G) {
    if (X.rows() != y.size()) {
        throw DimensionMismatch("group_by_label_quantiles: X has " +
                                std::to_string(X.rows()) + " rows, y has " +
                                std::to_string(y.size()));
    }
    return detail::group_sorted(X, y, y, G);
}

/// Rows sorted by one feature column and cut into G contiguous groups.
inline GroupedDataset group_by_feature(const DesignMatrix& X, const LabelVector& y,
                                       Index feature_index, Index G) {
    if (X.rows() != y.size()) {
        throw DimensionMismatch("group_by_feature: X has " +
                                std::to_string(X.rows()) + " rows, y has " +
                                std::to_string(y.size()));
    }
    if (feature_index < 0 || feature_index >= X.cols()) {
        throw IndexOutOfRange("feature index " + std::to_string(feature_index) +
                              " for d=" + std::to_string(X.cols()));
    }
    return detail::group_sorted(X, y, X.col(feature_index), G);
}

struct SplitDataset {
    GroupedDataset train;
    DesignMatrix test_X;
    LabelVector test_y;
    std::uint64_t split_seed = 0;
    std::vector<Index> train_rows;  // indices into the grouped ordering
    std::vector<Index> test_rows;
};

/// Uniform random row split. Training rows keep their group, with bounds
/// recomputed to restore contiguity; test rows keep their true labels.
inline SplitDataset split_train_test(const GroupedDataset& data,
                                     double test_fraction, std::uint64_t seed) {
    data.validate();
    const Index n = data.X.rows();
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test_fraction must be in (0, 1), got " +
                          std::to_string(test_fraction));
    }
    Index test_count = static_cast<Index>(
        std::llround(test_fraction * static_cast<double>(n)));
    test_count = std::max<Index>(1, std::min<Index>(test_count, n - 1));

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(seed);
    rng.shuffle(order);

    SplitDataset out;
    out.split_seed = seed;
    out.test_rows.assign(order.begin(), order.begin() + test_count);
    out.train_rows.assign(order.begin() + test_count, order.end());
    std::sort(out.test_rows.begin(), out.test_rows.end());
    std::sort(out.train_rows.begin(), out.train_rows.end());

    const Index train_count = n - test_count;
    out.train.X.resize(train_count, data.X.cols());
    out.train.y.resize(train_count);
    std::vector<Index> group_sizes(static_cast<std::size_t>(data.groups()), 0);
    for (Index i = 0; i < train_count; ++i) {
        const Index src = out.train_rows[static_cast<std::size_t>(i)];
        out.train.X.row(i) = data.X.row(src);
        out.train.y[i] = data.y[src];
        for (Index g = 0; g < data.groups(); ++g) {
            if (src < data.group_bounds[static_cast<std::size_t>(g) + 1]) {
                ++group_sizes[static_cast<std::size_t>(g)];
                break;
            }
        }
    }
    // groups emptied by the split are dropped so the bounds stay valid
    out.train.group_bounds.clear();
    out.train.group_bounds.push_back(0);
    for (Index g = 0; g < data.groups(); ++g) {
        const Index size = group_sizes[static_cast<std::size_t>(g)];
        if (size > 0) {
            out.train.group_bounds.push_back(out.train.group_bounds.back() + size);
        }
    }

    out.test_X.resize(test_count, data.X.cols());
    out.test_y.resize(test_count);
    for (Index i = 0; i < test_count; ++i) {
        const Index src = out.test_rows[static_cast<std::size_t>(i)];
        out.test_X.row(i) = data.X.row(src);
        out.test_y[i] = data.y[src];
    }
    return out;
}

/// FNV-1a 64-bit digest of a file's bytes, as fixed-width hex.
inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open for digest");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx",
                  static_cast<unsigned long long>(h));
    return out;
}

}  // namespace shufreg

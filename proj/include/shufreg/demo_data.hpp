#pragma once

// Deterministic stand-in datasets bundled under data/: a housing-style
// numeric table (506 towns, 13 features + label) and an aptamer-style
// sequence table. Both are synthetic but follow the column layout and rough
// statistics of their real counterparts, so the grouped pipelines run out of
// the box without any downloads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "shufreg/data_io.hpp"
#include "shufreg/errors.hpp"
#include "shufreg/rng.hpp"

namespace shufreg::demo {

inline constexpr std::uint64_t kDefaultDataSeed = 1878;

namespace detail {

inline double clamp(double v, double lo, double hi) {
    return std::min(std::max(v, lo), hi);
}

inline std::string fixed(double v, int decimals) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

}  // namespace detail

/// Housing-style table: the label column `lstat` (percent lower-income
/// residents) is a noisy linear function of the town features, and `medv`
/// (median housing price) is the natural zoning feature for grouped
/// anonymization experiments.
inline std::string housing_csv(std::uint64_t seed = kDefaultDataSeed) {
    Rng rng(seed);
    std::string out =
        "crim,zn,indus,chas,nox,rm,age,dis,rad,tax,ptratio,b,lstat,medv\n";
    for (int row = 0; row < 506; ++row) {
        const double z = rng.normal();  // latent town prosperity
        const double rm = 6.28 + 0.62 * z + 0.28 * rng.normal();
        const double age = detail::clamp(66.0 - 20.0 * z + 24.0 * rng.normal(), 3.0, 100.0);
        const double dis = detail::clamp(3.8 + 1.1 * z + 1.4 * rng.normal(), 1.1, 12.0);
        const double nox = detail::clamp(0.55 - 0.07 * z + 0.05 * rng.normal(), 0.38, 0.87);
        const double crim =
            detail::clamp(std::exp(-1.4 - 1.3 * z + 1.1 * rng.normal()), 0.005, 89.0);
        const double indus = detail::clamp(11.0 - 3.5 * z + 4.5 * rng.normal(), 0.5, 28.0);
        const double tax =
            std::round(detail::clamp(400.0 - 55.0 * z + 80.0 * rng.normal(), 187.0, 711.0));
        const double ptratio =
            detail::clamp(18.4 - 0.9 * z + 1.5 * rng.normal(), 12.6, 22.0);
        const double b =
            detail::clamp(356.0 + 25.0 * z - 30.0 * std::abs(rng.normal()), 2.0, 397.0);
        const double zn_latent = z + rng.normal();
        const double zn =
            zn_latent > 1.0 ? detail::clamp(30.0 * (zn_latent - 1.0) + 12.5, 0.0, 100.0) : 0.0;
        const double chas = rng.uniform() < 0.07 ? 1.0 : 0.0;
        const double rad =
            std::round(detail::clamp(9.5 - 2.2 * z + 3.2 * rng.normal(), 1.0, 24.0));

        const double lstat = detail::clamp(
            12.6 - 4.8 * (rm - 6.28) + 0.07 * (age - 66.0) - 0.5 * (dis - 3.8) +
                22.0 * (nox - 0.55) + 0.35 * crim + 0.16 * (indus - 11.0) +
                0.012 * (tax - 400.0) + 0.45 * (ptratio - 18.4) -
                0.02 * (b - 356.0) - 0.03 * zn - 0.4 * chas + 1.9 * rng.normal(),
            1.7, 38.0);
        const double medv = detail::clamp(
            22.5 - 0.65 * (lstat - 12.6) + 2.8 * (rm - 6.28) -
                0.55 * (ptratio - 18.4) - 9.0 * (nox - 0.55) + 2.2 * rng.normal(),
            5.0, 50.0);

        out += detail::fixed(crim, 5) + ',' + detail::fixed(zn, 1) + ',' +
               detail::fixed(indus, 2) + ',' + detail::fixed(chas, 0) + ',' +
               detail::fixed(nox, 3) + ',' + detail::fixed(rm, 3) + ',' +
               detail::fixed(age, 1) + ',' + detail::fixed(dis, 4) + ',' +
               detail::fixed(rad, 0) + ',' + detail::fixed(tax, 0) + ',' +
               detail::fixed(ptratio, 1) + ',' + detail::fixed(b, 2) + ',' +
               detail::fixed(lstat, 2) + ',' + detail::fixed(medv, 1) + '\n';
    }
    return out;
}

/// Aptamer-style table: fixed-length ACGT sequences labeled by a noisy linear
/// function of their 1..3-mer counts (motif weights drawn once per dataset).
inline std::string sequence_csv(Index rows = 1200, Index length = 30,
                                std::uint64_t seed = kDefaultDataSeed) {
    if (rows < 2 || length < 3) throw ConfigError("need rows >= 2 and length >= 3");
    Rng rng(seed);
    std::vector<std::string> sequences;
    sequences.reserve(static_cast<std::size_t>(rows));
    const char bases[4] = {'A', 'C', 'G', 'T'};
    for (Index r = 0; r < rows; ++r) {
        std::string seq(static_cast<std::size_t>(length), 'A');
        for (Index i = 0; i < length; ++i) {
            seq[static_cast<std::size_t>(i)] = bases[rng.below(4)];
        }
        sequences.push_back(std::move(seq));
    }

    const DesignMatrix X = featurize_kmers(sequences, 3);
    WeightVector w(X.cols());
    for (Index j = 0; j < X.cols(); ++j) {
        const double scale = j < 4 ? 0.25 : (j < 20 ? 0.15 : 0.08);
        w[j] = scale * rng.normal();
    }
    LabelVector labels = X * w;
    const double spread = std::sqrt(
        (labels.array() - labels.mean()).square().sum() / labels.size());
    for (Index r = 0; r < rows; ++r) labels[r] += 0.35 * spread * rng.normal();

    std::string out = "sequence,label\n";
    for (Index r = 0; r < rows; ++r) {
        out += sequences[static_cast<std::size_t>(r)] + ',' +
               detail::fixed(labels[r], 5) + '\n';
    }
    return out;
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << content;
    if (!out) throw DataError(path + ": write failed");
}

}  // namespace shufreg::demo

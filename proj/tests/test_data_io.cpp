#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "shufreg/csv.hpp"
#include "shufreg/data_io.hpp"
#include "shufreg/rng.hpp"

using namespace shufreg;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) {
        path = (std::filesystem::temp_directory_path() / name).string();
        std::ofstream out(path, std::ios::binary);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("k-mer counts for single bases") {
    const DesignMatrix X = featurize_kmers({"AAA"}, 1);
    REQUIRE(X.cols() == 4);
    CHECK(X(0, 0) == 3.0);  // A
    CHECK(X(0, 1) == 0.0);
    CHECK(X(0, 2) == 0.0);
    CHECK(X(0, 3) == 0.0);
}

TEST_CASE("k-mer counts up to k = 2 on ACG") {
    const std::vector<std::string> names = kmer_columns(2);
    REQUIRE(names.size() == 20);
    const DesignMatrix X = featurize_kmers({"ACG"}, 2);
    REQUIRE(X.cols() == 20);
    std::map<std::string, double> got;
    for (std::size_t c = 0; c < names.size(); ++c) got[names[c]] = X(0, static_cast<Index>(c));
    CHECK(got["A"] == 1.0);
    CHECK(got["C"] == 1.0);
    CHECK(got["G"] == 1.0);
    CHECK(got["T"] == 0.0);
    CHECK(got["AC"] == 1.0);
    CHECK(got["CG"] == 1.0);
    double total2 = 0.0;
    for (const auto& [name, v] : got) {
        if (name.size() == 2) total2 += v;
    }
    CHECK(total2 == 2.0);  // only the two observed 2-mers
}

TEST_CASE("k = 3 always yields 84 columns in a fixed order") {
    CHECK(featurize_kmers({"ACGT", "TTTT"}, 3).cols() == 84);
    const std::vector<std::string> names = kmer_columns(3);
    REQUIRE(names.size() == 84);
    CHECK(names.front() == "A");
    CHECK(names[4] == "AA");
    CHECK(names.back() == "TTT");
    // overlapping occurrences: AAAA contains AAA twice
    const DesignMatrix X = featurize_kmers({"AAAA"}, 3);
    CHECK(X(0, 20) == 2.0);  // AAA is the first 3-mer column (4 + 16 columns before)
}

TEST_CASE("invalid nucleotides are rejected with provenance") {
    try {
        featurize_kmers({"ACGT", "ACXT"}, 2);
        FAIL("expected InvalidAlphabet");
    } catch (const InvalidAlphabet& e) {
        const std::string what = e.what();
        CHECK(what.find('X') != std::string::npos);
        CHECK(what.find("row 2") != std::string::npos);
    }
}

TEST_CASE("normalize_labels maps to [0,1] and inverts") {
    LabelVector y(3);
    y << 0, 5, 10;
    const NormalizedLabels norm = normalize_labels(y);
    CHECK(norm.labels[0] == 0.0);
    CHECK(norm.labels[1] == Approx(0.5));
    CHECK(norm.labels[2] == 1.0);

    LabelVector unit(3);
    unit << 0, 0.25, 1;
    const NormalizedLabels already = normalize_labels(unit);
    CHECK(already.labels == unit);
    CHECK(already.params.offset == 0.0);
    CHECK(already.params.scale == 1.0);

    Rng rng(2);
    LabelVector random(20);
    for (Index i = 0; i < 20; ++i) random[i] = 3.0 + 2.5 * rng.normal();
    const NormalizedLabels n2 = normalize_labels(random);
    const LabelVector back = denormalize_labels(n2.labels, n2.params);
    CHECK((back - random).lpNorm<Eigen::Infinity>() < 1e-12);

    LabelVector flat(4);
    flat << 2, 2, 2, 2;
    CHECK_THROWS_AS(normalize_labels(flat), DegenerateLabels);
}

TEST_CASE("group_by_label_quantiles orders and partitions rows") {
    Rng rng(5);
    DesignMatrix X(6, 2);
    LabelVector y(6);
    y << 5, 1, 3, 6, 2, 4;
    for (Index i = 0; i < 6; ++i) {
        X(i, 0) = static_cast<double>(i);
        X(i, 1) = rng.normal();
    }
    const GroupedDataset g1 = group_by_label_quantiles(X, y, 1);
    CHECK(g1.group_bounds == std::vector<Index>{0, 6});

    const GroupedDataset g3 = group_by_label_quantiles(X, y, 3);
    CHECK(g3.group_bounds == std::vector<Index>{0, 2, 4, 6});
    for (Index i = 1; i < 6; ++i) CHECK(g3.y[i] >= g3.y[i - 1]);
    // (X row, y value) pairing is preserved through the sort
    for (Index i = 0; i < 6; ++i) {
        const Index original = static_cast<Index>(g3.X(i, 0));
        CHECK(g3.y[i] == y[original]);
    }

    CHECK_THROWS_AS(group_by_label_quantiles(X, y, 0), InvalidG);
    CHECK_THROWS_AS(group_by_label_quantiles(X, y, 7), InvalidG);
}

TEST_CASE("uneven groups put the larger group first") {
    DesignMatrix X(10, 1);
    LabelVector y(10);
    for (Index i = 0; i < 10; ++i) {
        X(i, 0) = static_cast<double>(i);
        y[i] = static_cast<double>(10 - i);
    }
    const GroupedDataset g = group_by_label_quantiles(X, y, 3);
    CHECK(g.group_bounds == std::vector<Index>{0, 4, 7, 10});  // sizes 4,3,3
}

TEST_CASE("group_by_feature matches label grouping when the key is the label") {
    Rng rng(7);
    DesignMatrix X(9, 2);
    LabelVector y(9);
    for (Index i = 0; i < 9; ++i) {
        y[i] = rng.normal();
        X(i, 0) = y[i];  // feature 0 equals the label
        X(i, 1) = rng.normal();
    }
    const GroupedDataset by_label = group_by_label_quantiles(X, y, 3);
    const GroupedDataset by_feature = group_by_feature(X, y, 0, 3);
    CHECK(by_label.y == by_feature.y);
    CHECK(by_label.group_bounds == by_feature.group_bounds);

    const GroupedDataset singletons = group_by_feature(X, y, 1, 9);
    CHECK(singletons.groups() == 9);
    CHECK_THROWS_AS(group_by_feature(X, y, 5, 3), IndexOutOfRange);
}

TEST_CASE("split_train_test is disjoint, exhaustive, and sized as configured") {
    Rng rng(11);
    DesignMatrix X(100, 3);
    LabelVector y(100);
    for (Index i = 0; i < 100; ++i) {
        y[i] = rng.normal();
        for (Index j = 0; j < 3; ++j) X(i, j) = rng.normal();
    }
    const GroupedDataset grouped = group_by_label_quantiles(X, y, 4);
    const SplitDataset split = split_train_test(grouped, 0.2, 99);
    CHECK(split.test_rows.size() == 20);
    CHECK(split.train_rows.size() == 80);
    std::set<Index> all(split.test_rows.begin(), split.test_rows.end());
    all.insert(split.train_rows.begin(), split.train_rows.end());
    CHECK(all.size() == 100);
    split.train.validate();

    CHECK_THROWS_AS(split_train_test(grouped, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(split_train_test(grouped, 1.0, 1), ConfigError);
}

TEST_CASE("numeric CSV round-trips bit-exactly") {
    Rng rng(13);
    std::string content = "a,b,label\n";
    std::vector<std::vector<double>> expected;
    for (int r = 0; r < 25; ++r) {
        const double a = rng.normal() * 1e3;
        const double b = rng.normal() * 1e-4;
        const double l = rng.normal();
        expected.push_back({a, b, l});
        content += csv::format_double(a) + "," + csv::format_double(b) + "," +
                   csv::format_double(l) + "\n";
    }
    const TempFile file("shufreg_roundtrip.csv", content);
    const Dataset data = load_numeric_dataset(file.path, "label");
    REQUIRE(data.X.rows() == 25);
    REQUIRE(data.X.cols() == 2);
    for (Index r = 0; r < 25; ++r) {
        CHECK(data.X(r, 0) == expected[static_cast<std::size_t>(r)][0]);
        CHECK(data.X(r, 1) == expected[static_cast<std::size_t>(r)][1]);
        CHECK(data.y[r] == expected[static_cast<std::size_t>(r)][2]);
    }
    CHECK(data.feature_names == std::vector<std::string>{"a", "b"});
}

TEST_CASE("intercept flag appends a ones column") {
    const TempFile file("shufreg_intercept.csv", "x,label\n1,2\n3,4\n5,6\n");
    const Dataset data = load_numeric_dataset(file.path, "label", true);
    REQUIRE(data.X.cols() == 2);
    CHECK(data.X.col(1).isOnes());
    CHECK(data.feature_names.back() == "intercept");
}

TEST_CASE("CSV ingestion errors carry provenance") {
    const TempFile bad_field("shufreg_bad_field.csv", "x,label\n1,2\noops,4\n");
    try {
        load_numeric_dataset(bad_field.path, "label");
        FAIL("expected CsvError");
    } catch (const CsvError& e) {
        const std::string what = e.what();
        CHECK(what.find("row 3") != std::string::npos);
        CHECK(what.find("column 1") != std::string::npos);
    }

    const TempFile ragged("shufreg_ragged.csv", "x,label\n1,2,3\n");
    CHECK_THROWS_AS(load_numeric_dataset(ragged.path, "label"), CsvError);

    const TempFile missing("shufreg_missing.csv", "x,notlabel\n1,2\n");
    CHECK_THROWS_AS(load_numeric_dataset(missing.path, "label"), CsvError);
}

TEST_CASE("sequence CSV ingestion") {
    const TempFile file("shufreg_sequences.csv",
                        "sequence,label\nACGT,0.5\nGGTA,0.25\n");
    const SequenceData data = load_sequence_dataset(file.path);
    REQUIRE(data.sequences.size() == 2);
    CHECK(data.sequences[0] == "ACGT");
    CHECK(data.labels[1] == 0.25);
}

TEST_CASE("bundled housing table groups and splits as configured") {
    const Dataset data =
        load_numeric_dataset(std::string(SHUFREG_DATA_DIR) + "/housing.csv", "lstat");
    REQUIRE(data.X.rows() == 506);
    REQUIRE(data.X.cols() == 13);
    const LabelVector y = normalize_labels(data.y).labels;
    Index medv = -1;
    for (std::size_t i = 0; i < data.feature_names.size(); ++i) {
        if (data.feature_names[i] == "medv") medv = static_cast<Index>(i);
    }
    REQUIRE(medv >= 0);
    const GroupedDataset grouped = group_by_feature(data.X, y, medv, 3);
    CHECK(grouped.group_bounds == std::vector<Index>{0, 169, 338, 506});

    const SplitDataset split = split_train_test(grouped, 0.2, 99);
    CHECK(split.test_rows.size() == 101);  // llround(0.2 * 506)
    CHECK(split.train.X.rows() == 405);
    split.train.validate();
    CHECK(split.train.groups() == 3);
    // ~135 training rows per zone, give or take the split randomness
    for (Index g = 0; g < 3; ++g) {
        const Index size = split.train.group_bounds[static_cast<std::size_t>(g) + 1] -
                           split.train.group_bounds[static_cast<std::size_t>(g)];
        CHECK(size >= 110);
        CHECK(size <= 160);
    }
}

TEST_CASE("file digests are stable and content-sensitive") {
    const TempFile a("shufreg_digest_a.csv", "x\n1\n");
    const TempFile b("shufreg_digest_b.csv", "x\n2\n");
    CHECK(file_digest(a.path) == file_digest(a.path));
    CHECK(file_digest(a.path) != file_digest(b.path));
    CHECK(file_digest(a.path).size() == 16);
}

#pragma once

#include <stdexcept>
#include <string>

namespace shufreg {

/// Coarse buckets mapped to CLI exit codes: usage=2, data=3, numerical=4.
enum class ErrorCategory : int { usage = 2, data = 3, numerical = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

inline const char* category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::usage: return "usage";
        case ErrorCategory::data: return "data";
        case ErrorCategory::numerical: return "numerical";
    }
    return "unknown";
}

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& what)
        : Error(ErrorCategory::numerical, "dimension mismatch: " + what) {}
};

struct RankDeficient : Error {
    explicit RankDeficient(const std::string& what)
        : Error(ErrorCategory::numerical, "rank deficient: " + what) {}
};

struct IndexOutOfRange : Error {
    explicit IndexOutOfRange(const std::string& what)
        : Error(ErrorCategory::numerical, "index out of range: " + what) {}
};

struct EmptyAccumulator : Error {
    explicit EmptyAccumulator(const std::string& what)
        : Error(ErrorCategory::numerical, "empty accumulator: " + what) {}
};

/// Invalid option or configuration value supplied by the caller.
struct ConfigError : Error {
    explicit ConfigError(const std::string& what)
        : Error(ErrorCategory::usage, "invalid configuration: " + what) {}
};

/// Base for ingestion/parsing failures; messages carry row/column provenance.
struct DataError : Error {
    explicit DataError(const std::string& what)
        : Error(ErrorCategory::data, what) {}
};

struct CsvError : DataError {
    explicit CsvError(const std::string& what) : DataError("csv: " + what) {}
};

struct InvalidAlphabet : DataError {
    explicit InvalidAlphabet(const std::string& what)
        : DataError("invalid alphabet: " + what) {}
};

struct DegenerateLabels : DataError {
    explicit DegenerateLabels(const std::string& what)
        : DataError("degenerate labels: " + what) {}
};

struct InvalidBounds : DataError {
    explicit InvalidBounds(const std::string& what)
        : DataError("invalid group bounds: " + what) {}
};

struct InvalidG : DataError {
    explicit InvalidG(const std::string& what)
        : DataError("invalid group count: " + what) {}
};

}  // namespace shufreg

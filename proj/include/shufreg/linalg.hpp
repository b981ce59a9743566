#pragma once

#include <string>
#include <utility>

#include <Eigen/Dense>

#include "shufreg/errors.hpp"
#include "shufreg/types.hpp"

namespace shufreg {

/// Pivots with magnitude below this fraction of the largest pivot are treated
/// as zero when deciding rank.
inline constexpr double kRankTolerance = 1e-10;

/// Variance floor applied where a sampler divides by sigma^2; never applied to
/// a stored fit.
inline constexpr double kSigma2Floor = 1e-12;

struct RegressionFit {
    WeightVector weights;
    double sigma2 = 0.0;       // residual_ss / (n - d)
    double residual_ss = 0.0;  // ||X w - y||^2
};

/// ||X w - y||^2 as a sum of squared per-row residuals.
inline double residual_ss(const DesignMatrix& X, const WeightVector& w,
                          const LabelVector& y) {
    if (X.rows() != y.size() || X.cols() != w.size()) {
        throw DimensionMismatch("residual_ss: X is " + std::to_string(X.rows()) +
                                "x" + std::to_string(X.cols()) + ", w has " +
                                std::to_string(w.size()) + ", y has " +
                                std::to_string(y.size()));
    }
    return (X * w - y).squaredNorm();
}

/// Least-squares solver over a fixed design matrix, factored once and reused
/// for many right-hand sides. Every EM iteration solves against the same X
/// (a row permutation of X never changes the normal equations' left side:
/// ||P X w - y||^2 = ||X w - P^T y||^2), so the factorization is computed once
/// per dataset. Uses column-pivoted Householder QR, not normal equations.
class LeastSquaresSolver {
public:
    explicit LeastSquaresSolver(DesignMatrix X) : X_(std::move(X)) {
        if (X_.rows() < 1 || X_.cols() < 1) {
            throw DimensionMismatch("ols: empty design matrix");
        }
        if (X_.rows() <= X_.cols()) {
            throw DimensionMismatch("ols: need n > d, got n=" +
                                    std::to_string(X_.rows()) +
                                    ", d=" + std::to_string(X_.cols()));
        }
        qr_.setThreshold(kRankTolerance);
        qr_.compute(X_);
        if (qr_.rank() < X_.cols()) {
            throw RankDeficient("ols: rank " + std::to_string(qr_.rank()) +
                                " < d=" + std::to_string(X_.cols()));
        }
    }

    Index rows() const { return X_.rows(); }
    Index cols() const { return X_.cols(); }
    const DesignMatrix& design() const { return X_; }

    WeightVector weights_for(const LabelVector& y) const {
        check_labels(y);
        return qr_.solve(y);
    }

    RegressionFit fit(const LabelVector& y) const {
        check_labels(y);
        RegressionFit out;
        out.weights = qr_.solve(y);
        out.residual_ss = (X_ * out.weights - y).squaredNorm();
        out.sigma2 =
            out.residual_ss / static_cast<double>(X_.rows() - X_.cols());
        return out;
    }

    LabelVector predict(const WeightVector& w) const { return X_ * w; }

private:
    void check_labels(const LabelVector& y) const {
        if (y.size() != X_.rows()) {
            throw DimensionMismatch("ols: X has " + std::to_string(X_.rows()) +
                                    " rows, y has " + std::to_string(y.size()));
        }
    }

    DesignMatrix X_;
    Eigen::ColPivHouseholderQR<DesignMatrix> qr_;
};

/// Ordinary least squares: weights minimizing ||X w - y||^2 together with the
/// noise-variance estimate residual_ss / (n - d).
inline RegressionFit ols_fit(const DesignMatrix& X, const LabelVector& y) {
    if (X.rows() != y.size()) {
        throw DimensionMismatch("ols: X has " + std::to_string(X.rows()) +
                                " rows, y has " + std::to_string(y.size()));
    }
    return LeastSquaresSolver(X).fit(y);
}

}  // namespace shufreg

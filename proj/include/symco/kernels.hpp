#pragma once

// Data-parallel inner loops. Each kernel has a plain serial reference and an
// OpenMP version. The OpenMP versions split work into fixed-size blocks and
// reduce partial results in block order, so their output does not depend on
// the thread count or the schedule.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "symco/cohort.hpp"

namespace symco::kernels {

enum class Backend { serial, parallel };

/// Rows per block in the blocked reductions.
inline constexpr Eigen::Index kBlockRows = 128;

/// Symmetric p x p co-occurrence counts over jointly observed rows.
struct PairCounts {
    std::size_t p = 0;
    std::vector<std::uint64_t> both;     // both present
    std::vector<std::uint64_t> either;   // at least one present
    std::vector<std::uint64_t> support;  // both observed

    std::size_t index(std::size_t a, std::size_t b) const { return a * p + b; }
    friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

PairCounts pair_counts_serial(const BinaryMatrix& x);
PairCounts pair_counts_parallel(const BinaryMatrix& x);
PairCounts pair_counts(const BinaryMatrix& x, Backend backend);

/// Unique rows of a binary matrix with multiplicities. Every Bernoulli sum over
/// rows can be evaluated on the patterns with `count` as weights.
struct WeightedRows {
    Eigen::MatrixXd x;      // 1 where present, else 0
    Eigen::MatrixXd w;      // 1 where observed, else 0
    Eigen::MatrixXd q;      // 2x - 1 where observed, else 0
    Eigen::VectorXd count;  // rows collapsed into each pattern

    Eigen::Index patterns() const { return x.rows(); }
    Eigen::Index cols() const { return x.cols(); }
    double total() const { return count.sum(); }
};

/// Patterns in order of first appearance; `row_pattern[i]` maps input rows to patterns.
WeightedRows compress_rows(const BinaryMatrix& x, std::vector<std::size_t>* row_pattern = nullptr);

/// Numerically stable log(1 + exp(t)).
double softplus(double t);
/// Numerically stable logistic function.
double sigmoid(double t);

/// Weighted Bernoulli deviance of `theta` (patterns x p). When `z` is non-null it
/// receives the quadratic-majorizer working response theta + 4 w (x - sigmoid(theta)).
double majorize_serial(const WeightedRows& data, const Eigen::MatrixXd& theta, Eigen::MatrixXd* z);
double majorize_parallel(const WeightedRows& data, const Eigen::MatrixXd& theta, Eigen::MatrixXd* z);
double majorize(const WeightedRows& data, const Eigen::MatrixXd& theta, Eigen::MatrixXd* z, Backend backend);

/// A^T diag(c) B.
Eigen::MatrixXd weighted_crossprod_serial(const Eigen::MatrixXd& a, const Eigen::VectorXd& c,
                                          const Eigen::MatrixXd& b);
Eigen::MatrixXd weighted_crossprod_parallel(const Eigen::MatrixXd& a, const Eigen::VectorXd& c,
                                            const Eigen::MatrixXd& b);
Eigen::MatrixXd weighted_crossprod(const Eigen::MatrixXd& a, const Eigen::VectorXd& c, const Eigen::MatrixXd& b,
                                   Backend backend);

}  // namespace symco::kernels

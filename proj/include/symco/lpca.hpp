#pragma once

// Logistic PCA for binary data.
//
// A rank-k model approximates the Bernoulli natural parameters as
//
//     theta_hat = 1 mu^T + (theta_sat - 1 mu^T) U U^T,     theta_sat = m (2X - 1),
//
// with U (p x k) orthonormal and mu the per-symptom offsets. The fit minimises
// the Bernoulli deviance by majorization-minimization: each iteration bounds the
// deviance with a quadratic of curvature 1/4 around the current fit, then
// minimises that bound exactly in mu (closed form) and U (top-k eigenvectors).
// Missing entries have no deviance term; their working response is the current
// fit, so they contribute nothing at the expansion point.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symco/cohort.hpp"
#include "symco/kernels.hpp"

namespace symco::lpca {

/// Offsets used when a column is all-present or all-absent.
inline constexpr double kOffsetClip = 18.0;

/// Bernoulli deviance over observed entries, -2 * log-likelihood. Throws on NaN.
double deviance(const BinaryMatrix& x, const Eigen::MatrixXd& theta);

/// d deviance / d theta = 2 (sigmoid(theta) - x) on observed entries, 0 elsewhere.
Eigen::MatrixXd deviance_gradient(const BinaryMatrix& x, const Eigen::MatrixXd& theta);

/// Per-column logit of the observed mean, clipped to +-kOffsetClip.
Eigen::VectorXd null_model(const BinaryMatrix& x);
double null_deviance(const BinaryMatrix& x);

struct LpcaModel {
    Eigen::MatrixXd loadings;  ///< p x k, orthonormal columns
    Eigen::VectorXd offsets;   ///< p
    double m = 0.0;
    int k = 0;
    double fit_deviance = 0.0;
    double null_deviance = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;  ///< deviance at each iterate, starting with the initial one

    double explained() const { return null_deviance > 0 ? 1.0 - fit_deviance / null_deviance : 0.0; }
    /// Fitted natural parameters for the rows of `x`.
    Eigen::MatrixXd natural_parameters(const BinaryMatrix& x) const;
};

struct FitOptions {
    int max_iter = 1000;
    double tol = 1e-6;
    std::uint64_t seed = 0;
    /// Start from a random orthonormal U drawn from `seed` instead of the
    /// deterministic eigenvector start.
    bool random_init = false;
    /// Adaptive over-relaxation of the MM steps. Each accepted step still
    /// lowers the deviance; off gives the plain MM sequence.
    bool accelerate = true;
    /// Optional starting point; must have matching p and k.
    const LpcaModel* warm_start = nullptr;
    kernels::Backend backend = kernels::Backend::parallel;
};

/// k = 0 returns the null model.
LpcaModel fit(const BinaryMatrix& x, int k, double m, const FitOptions& opts = {});

/// Same, on already-compressed rows. `null_dev` is the null deviance of the same rows.
LpcaModel fit_weighted(const kernels::WeightedRows& data, int k, double m, double null_dev,
                       const FitOptions& opts = {});

/// Flip each loading column so its largest-magnitude entry is positive.
void normalize_signs(Eigen::MatrixXd& loadings);

/// Row scores (theta_sat - mu) U. Rows with missing entries use their observed
/// entries only, rescaled by p / observed. Throws for an all-missing row.
Eigen::MatrixXd project(const LpcaModel& model, const BinaryMatrix& x);

/// Deviance of held-out rows under a fitted model: each row's natural
/// parameters come from its own saturated parameters projected through U.
double heldout_deviance(const LpcaModel& model, const kernels::WeightedRows& rows);

struct ScanRecord {
    int k = 0;
    double m = 0.0;              ///< chosen by cross-validation
    double explained = 0.0;      ///< P(k)
    double marginal = 0.0;       ///< M(k) = P(k) - P(k-1)
    double cv_deviance = 0.0;    ///< held-out deviance at the chosen m
    std::vector<double> cv_by_m; ///< held-out deviance for each grid value
    double fit_deviance = 0.0;
    bool converged = false;
};

struct DevianceScan {
    std::vector<ScanRecord> records;  ///< k = 1..k_max
    std::vector<double> m_grid;
    double null_deviance = 0.0;
    int folds = 0;                    ///< 0 means exact leave-one-out
    std::vector<std::string> warnings;
    std::vector<LpcaModel> models;    ///< full-data refit per record

    std::vector<double> explained() const;  ///< P(0..k_max)
    std::vector<double> marginal() const;   ///< M(1..k_max)
};

struct ScanOptions {
    int k_max = 6;
    std::vector<double> m_grid = {2, 4, 6, 8, 10, 12};
    int cv_folds = 10;
    /// Exact leave-one-out below this many rows.
    std::size_t loo_max_rows = 200;
    std::uint64_t seed = 20211;
    FitOptions fit;
    /// Relative tolerance for the warm-started fold fits.
    double cv_tol = 1e-5;
};

/// Chooses m per k by row-wise cross-validation, then refits on all rows and
/// records P(k) and M(k).
DevianceScan scan(const BinaryMatrix& x, const ScanOptions& opts = {});

/// Builds a scan from explicit P(1..k_max); used to apply select_k to reported curves.
DevianceScan scan_from_explained(const std::vector<double>& explained);

struct SelectOptions {
    double drop_ratio = 3.0;
    double max_explained = 0.95;
    /// When the rule picks nothing, or only k = 1, report k = 2 flagged ambiguous.
    bool prefer_two_when_ambiguous = true;
};

struct KSelection {
    int k = 2;
    bool ambiguous = false;
    std::vector<int> candidates;  ///< every k where the rule fired
    std::string rationale;
};

/// Largest k with M(k) >= drop_ratio * median(M(k+1..k_max)) and P(k) <= max_explained.
KSelection select_k(const DevianceScan& scan, const SelectOptions& opts = {});

}  // namespace symco::lpca

#pragma once

// Synthetic cohorts with planted structure.
//
// The main generator is a two-factor logistic model: each case draws latent
// scores (s, t) ~ N(0, diag(scale_s^2, scale_t^2)) and reports symptom a with
// probability sigmoid(offset_a + s U_a1 + t U_a2).

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symco/cohort.hpp"

namespace symco::synth {

/// Loadings used instead of the base loadings for cases whose age falls in `band`.
struct LoadingOverride {
    AgeBand band;
    Eigen::MatrixXd loadings;  ///< p x 2, used as given
};

struct GeneratorSpec {
    std::size_t n = 1000;
    std::vector<SymptomDef> symptoms;
    Eigen::MatrixXd loadings;  ///< p x 2; orthonormalized before use
    Eigen::VectorXd offsets;   ///< p
    std::array<double, 2> factor_scales{1.0, 1.0};
    double missing_rate = 0.0;
    /// Relative weights of the age bands 0-9, 10-19, ...; the last band spans
    /// ten years too. Empty leaves every age missing.
    std::vector<double> decade_weights;
    double female_share = 0.55;
    std::vector<LoadingOverride> age_overrides;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument when the spec is inconsistent.
    void validate() const;
};

struct GroundTruth {
    Eigen::MatrixXd loadings;  ///< orthonormalized base loadings
    Eigen::VectorXd offsets;
    std::array<double, 2> factor_scales{};
    Eigen::MatrixXd latents;   ///< n x 2, already scaled
    std::vector<Eigen::MatrixXd> override_loadings;
    std::vector<int> loading_set;  ///< per case: -1 for base, else override index
    double missing_rate = 0.0;
    std::uint64_t seed = 0;

    const Eigen::MatrixXd& loadings_for(std::size_t i) const;
};

/// The probability the generator used for entry (i, a).
double entry_probability(const GroundTruth& truth, std::size_t i, std::size_t a);

struct Generated {
    Cohort cohort;
    GroundTruth truth;
};

/// No symptomatic filter is applied.
Generated generate(const GeneratorSpec& spec);

/// Gram-Schmidt on the columns. Throws for rank-deficient input.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& m);

struct TwoCluster {
    Cohort cohort;
    std::vector<std::size_t> block;  ///< 0 or 1 per symptom
};

/// Symptoms 0..first_block-1 form block 0, the rest block 1. Each case
/// activates one block; its symptoms are present with within_prob and the
/// others with between_prob. first_block = 0 means p / 2.
TwoCluster generate_two_cluster(std::size_t p, std::size_t n, double within_prob, double between_prob,
                                std::uint64_t seed, std::size_t first_block = 0);

struct AgeRegime {
    Generated data;
    std::vector<Stratum> strata;
};

/// In the oldest band of `scheme`, each gastrointestinal loading row is turned
/// from its base direction toward the negative phenotype axis by the fraction
/// min(strength, 1) of the angle between them. Generates, then stratifies.
AgeRegime generate_age_regime(const GeneratorSpec& base, double strength, const StratificationScheme& scheme);

// ---------------------------------------------------------------------------
// Dataset-inspired presets.

struct DatasetPreset {
    std::string name;
    std::vector<SymptomDef> symptoms;
    std::vector<BinarizationRule> rules;
    std::vector<double> frequencies;  ///< per symptom, among symptomatic cases
    double symptomatic = 0.5;         ///< target share with at least one symptom
    std::vector<double> decade_weights;
    double female_share = 0.55;
    double phenotype_ratio = 0.5;     ///< scale_t / scale_s
    double missing_rate = 0.0;

    Taxonomy taxonomy() const;
    /// Unscaled p x 2 loadings: a common severity column and a category contrast.
    Eigen::MatrixXd raw_loadings() const;
};

std::vector<std::string> preset_names();
/// One of pillar2, sgss, css, cis.
const DatasetPreset& preset(const std::string& name);

/// E[f(Z)] for Z ~ N(0, 1) by Gauss-Hermite quadrature with `nodes` points.
double gauss_hermite_expectation(const std::function<double(double)>& f, int nodes = 40);

struct Calibration {
    Eigen::VectorXd offsets;
    std::array<double, 2> factor_scales{};
    double symptomatic = 0.0;  ///< model value at the solution
};

/// Chooses offsets and the severity scale so each symptom's marginal equals
/// frequency * symptomatic and P(at least one present) equals `symptomatic`.
Calibration calibrate(const DatasetPreset& preset);

GeneratorSpec preset_spec(const DatasetPreset& preset, std::size_t n, std::uint64_t seed);

/// Renders ruled columns as level tokens (a level at or above the threshold
/// for present, below it for absent); other cells as 1, 0, NA.
std::function<std::string(std::size_t, std::size_t, Obs)> ordinal_cells(const Cohort& cohort,
                                                                       const Taxonomy& taxonomy,
                                                                       std::uint64_t seed);

}  // namespace symco::synth

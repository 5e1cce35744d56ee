#include "symco/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

#include "symco/kernels.hpp"

namespace symco::synth {

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::string case_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "c%06zu", i + 1);
    return buf;
}

}  // namespace

void GeneratorSpec::validate() const {
    const auto p = static_cast<Eigen::Index>(symptoms.size());
    if (p < 2) throw std::invalid_argument("generator needs at least two symptoms");
    if (loadings.rows() != p || loadings.cols() != 2) throw std::invalid_argument("loadings must be p x 2");
    if (offsets.size() != p) throw std::invalid_argument("offsets must have length p");
    if (!loadings.allFinite() || !offsets.allFinite()) throw std::invalid_argument("loadings and offsets must be finite");
    if (!(factor_scales[0] >= 0.0) || !(factor_scales[1] >= 0.0)) {
        throw std::invalid_argument("factor scales must be non-negative");
    }
    if (!(missing_rate >= 0.0 && missing_rate < 0.5)) throw std::invalid_argument("missing rate must lie in [0, 0.5)");
    if (!(female_share >= 0.0 && female_share <= 1.0)) throw std::invalid_argument("female share must lie in [0, 1]");
    for (double w : decade_weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("decade weights must be non-negative");
    }
    if (!decade_weights.empty() &&
        std::all_of(decade_weights.begin(), decade_weights.end(), [](double w) { return w == 0.0; })) {
        throw std::invalid_argument("decade weights are all zero");
    }
    for (const auto& o : age_overrides) {
        if (o.loadings.rows() != p || o.loadings.cols() != 2) throw std::invalid_argument("override loadings must be p x 2");
    }
}

const Eigen::MatrixXd& GroundTruth::loadings_for(std::size_t i) const {
    const int set = loading_set.at(i);
    return set < 0 ? loadings : override_loadings.at(static_cast<std::size_t>(set));
}

double entry_probability(const GroundTruth& truth, std::size_t i, std::size_t a) {
    const auto& u = truth.loadings_for(i);
    const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(a);
    const double eta = truth.offsets(c) + truth.latents(r, 0) * u(c, 0) + truth.latents(r, 1) * u(c, 1);
    return kernels::sigmoid(eta);
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd q = m;
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index k = 0; k < j; ++k) q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
        }
        const double norm = q.col(j).norm();
        if (!(norm > 1e-10 * std::max(1.0, m.col(j).norm()))) {
            throw std::invalid_argument("loading columns are linearly dependent");
        }
        q.col(j) /= norm;
    }
    return q;
}

Generated generate(const GeneratorSpec& spec) {
    spec.validate();
    const std::size_t p = spec.symptoms.size();
    const std::size_t n = spec.n;

    GroundTruth truth;
    truth.loadings = orthonormalize(spec.loadings);
    truth.offsets = spec.offsets;
    truth.factor_scales = spec.factor_scales;
    truth.missing_rate = spec.missing_rate;
    truth.seed = spec.seed;
    truth.latents.resize(static_cast<Eigen::Index>(n), 2);
    truth.loading_set.assign(n, -1);
    for (const auto& o : spec.age_overrides) truth.override_loadings.push_back(o.loadings);

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::discrete_distribution<std::size_t> decade(spec.decade_weights.begin(), spec.decade_weights.end());

    std::vector<CaseRecord> cases(n);
    BinaryMatrix x(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        auto& c = cases[i];
        c.id = case_id(i);
        if (!spec.decade_weights.empty()) {
            const auto band = decade(rng);
            c.age = static_cast<int>(10 * band + rng() % 10);
        }
        c.sex = unif(rng) < spec.female_share ? "female" : "male";
        const auto r = static_cast<Eigen::Index>(i);
        truth.latents(r, 0) = spec.factor_scales[0] * normal(rng);
        truth.latents(r, 1) = spec.factor_scales[1] * normal(rng);
        if (c.age) {
            for (std::size_t k = 0; k < spec.age_overrides.size(); ++k) {
                if (spec.age_overrides[k].band.contains(*c.age)) {
                    truth.loading_set[i] = static_cast<int>(k);
                    break;
                }
            }
        }
        for (std::size_t a = 0; a < p; ++a) {
            const double prob = entry_probability(truth, i, a);
            const bool present = unif(rng) < prob;
            const bool missing = spec.missing_rate > 0.0 && unif(rng) < spec.missing_rate;
            x(i, a) = missing ? Obs::missing : (present ? Obs::present : Obs::absent);
        }
    }
    return {Cohort(std::move(cases), spec.symptoms, std::move(x)), std::move(truth)};
}

TwoCluster generate_two_cluster(std::size_t p, std::size_t n, double within_prob, double between_prob,
                                std::uint64_t seed, std::size_t first_block) {
    if (!(within_prob > between_prob)) throw std::invalid_argument("within_prob must exceed between_prob");
    if (!(between_prob >= 0.0) || !(within_prob <= 1.0)) throw std::invalid_argument("probabilities must lie in [0, 1]");
    if (p < 2) throw std::invalid_argument("two-cluster generator needs p >= 2");
    if (first_block == 0) first_block = p / 2;
    if (first_block >= p) throw std::invalid_argument("first block must leave at least one symptom in the second");

    TwoCluster out;
    std::vector<SymptomDef> symptoms;
    for (std::size_t a = 0; a < p; ++a) {
        const std::string id = (a < 9 ? "s0" : "s") + std::to_string(a + 1);
        const bool first = a < first_block;
        out.block.push_back(first ? 0 : 1);
        symptoms.push_back({id, id, first ? Category::systemic : Category::gastrointestinal});
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<CaseRecord> cases(n);
    BinaryMatrix x(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        cases[i].id = case_id(i);
        const std::size_t active = unif(rng) < 0.5 ? 0 : 1;
        for (std::size_t a = 0; a < p; ++a) {
            const double prob = out.block[a] == active ? within_prob : between_prob;
            x(i, a) = unif(rng) < prob ? Obs::present : Obs::absent;
        }
    }
    out.cohort = Cohort(std::move(cases), std::move(symptoms), std::move(x));
    return out;
}

AgeRegime generate_age_regime(const GeneratorSpec& base, double strength, const StratificationScheme& scheme) {
    if (!(strength >= 0.0)) throw std::invalid_argument("decoupling strength must be non-negative");
    if (base.decade_weights.empty()) throw std::invalid_argument("age regime needs an age distribution");
    base.validate();

    GeneratorSpec spec = base;
    const Eigen::MatrixXd u = orthonormalize(base.loadings);
    Eigen::MatrixXd rotated = u;
    const double frac = std::min(strength, 1.0);
    for (std::size_t a = 0; a < base.symptoms.size(); ++a) {
        if (base.symptoms[a].category != Category::gastrointestinal) continue;
        const auto r = static_cast<Eigen::Index>(a);
        const double norm = u.row(r).norm();
        const double phi = std::atan2(u(r, 1), u(r, 0));
        // Toward the negative phenotype axis, away from the shared severity axis.
        const double target = -std::numbers::pi / 2.0;
        const double angle = phi + frac * (target - phi);
        rotated(r, 0) = norm * std::cos(angle);
        rotated(r, 1) = norm * std::sin(angle);
    }
    spec.loadings = u;
    spec.age_overrides = {{scheme.bands().back(), rotated}};

    AgeRegime out{generate(spec), {}};
    out.strata = stratify(out.data.cohort, scheme);
    return out;
}

std::function<std::string(std::size_t, std::size_t, Obs)> ordinal_cells(const Cohort& cohort,
                                                                       const Taxonomy& taxonomy,
                                                                       std::uint64_t seed) {
    struct Column {
        std::vector<std::string> levels;
        std::size_t threshold = 0;
    };
    std::vector<std::optional<Column>> columns;
    for (const auto& s : cohort.symptoms()) {
        const auto* rule = taxonomy.rule_for(s.id);
        if (!rule) {
            columns.emplace_back();
            continue;
        }
        const auto& levels = rule->levels();
        const auto t = static_cast<std::size_t>(std::find(levels.begin(), levels.end(), rule->threshold()) -
                                                levels.begin());
        columns.push_back(Column{levels, t});
    }
    return [columns, seed](std::size_t i, std::size_t a, Obs v) -> std::string {
        if (v == Obs::missing) return "NA";
        const auto& col = columns.at(a);
        if (!col) return v == Obs::present ? "1" : "0";
        const std::uint64_t h = mix(seed ^ mix((static_cast<std::uint64_t>(i) << 20) ^ a));
        if (v == Obs::present) return col->levels[col->threshold + h % (col->levels.size() - col->threshold)];
        if (col->threshold == 0) return "0";
        return col->levels[h % col->threshold];
    };
}

}  // namespace symco::synth

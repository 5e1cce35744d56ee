#include <doctest.h>

#include <cmath>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "symco/distance.hpp"
#include "symco/hclust.hpp"
#include "symco/io.hpp"
#include "symco/synth.hpp"

using namespace symco;

namespace {

synth::GeneratorSpec small_spec(std::uint64_t seed) {
    synth::GeneratorSpec s;
    s.n = 3000;
    for (int a = 0; a < 6; ++a) {
        s.symptoms.push_back({"s" + std::to_string(a), "", a < 2 ? Category::gastrointestinal : Category::systemic});
    }
    s.loadings.resize(6, 2);
    s.loadings << 1, 0.5, 1, 0.4, 1, -0.3, 1, -0.6, 1, 0.1, 1, -0.2;
    s.offsets = Eigen::VectorXd::LinSpaced(6, -2.0, 0.0);
    s.factor_scales = {3.0, 2.0};
    s.missing_rate = 0.05;
    s.decade_weights = {1, 1, 1, 1, 1, 1, 1, 1, 1};
    s.seed = seed;
    return s;
}

}  // namespace

TEST_CASE("orthonormalize") {
    Eigen::MatrixXd m(3, 2);
    m << 1, 1, 0, 1, 0, 0;
    const auto q = synth::orthonormalize(m);
    CHECK((q.transpose() * q - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(q(0, 0) == doctest::Approx(1.0));
    CHECK(q(1, 1) == doctest::Approx(1.0));
    Eigen::MatrixXd deficient(3, 2);
    deficient << 1, 2, 1, 2, 1, 2;
    CHECK_THROWS(synth::orthonormalize(deficient));
}

TEST_CASE("generation is deterministic and validates its spec") {
    const auto a = synth::generate(small_spec(5));
    const auto b = synth::generate(small_spec(5));
    CHECK(a.cohort.matrix() == b.cohort.matrix());
    CHECK(a.cohort.cases() == b.cohort.cases());
    CHECK(a.truth.latents == b.truth.latents);
    CHECK_FALSE(synth::generate(small_spec(6)).cohort.matrix() == a.cohort.matrix());

    auto bad = small_spec(1);
    bad.offsets.resize(3);
    CHECK_THROWS(synth::generate(bad));
    bad = small_spec(1);
    bad.missing_rate = 1.5;
    CHECK_THROWS(synth::generate(bad));
}

TEST_CASE("symptom counts fit the planted probabilities") {
    const auto g = synth::generate(small_spec(11));
    const auto& x = g.cohort.matrix();
    const std::size_t p = g.cohort.n_symptoms();
    double stat = 0.0;
    std::size_t missing = 0, cells = 0;
    for (std::size_t a = 0; a < p; ++a) {
        double expected = 0.0, variance = 0.0, observed = 0.0;
        for (std::size_t i = 0; i < g.cohort.n_cases(); ++i) {
            ++cells;
            if (x(i, a) == Obs::missing) {
                ++missing;
                continue;
            }
            const double q = synth::entry_probability(g.truth, i, a);
            expected += q;
            variance += q * (1.0 - q);
            observed += x(i, a) == Obs::present;
        }
        stat += (observed - expected) * (observed - expected) / variance;
    }
    const boost::math::chi_squared chi(static_cast<double>(p));
    CHECK(stat < boost::math::quantile(chi, 0.999));

    // Missing cells are Bernoulli(0.05) across all entries.
    const double rate = static_cast<double>(missing) / static_cast<double>(cells);
    CHECK(std::abs(rate - 0.05) < 4.0 * std::sqrt(0.05 * 0.95 / static_cast<double>(cells)));

    // Latent columns carry the requested scales.
    const Eigen::MatrixXd& z = g.truth.latents;
    const double n = static_cast<double>(z.rows());
    const Eigen::RowVector2d sd = ((z.rowwise() - z.colwise().mean()).colwise().squaredNorm() / (n - 1)).cwiseSqrt();
    CHECK(sd(0) == doctest::Approx(3.0).epsilon(0.05));
    CHECK(sd(1) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("ages follow the decade weights") {
    auto spec = small_spec(3);
    spec.decade_weights = {0, 0, 1, 0, 3};
    const auto g = synth::generate(spec);
    std::size_t young = 0, old = 0;
    for (const auto& c : g.cohort.cases()) {
        REQUIRE(c.age);
        CHECK(*c.age >= 20);
        CHECK(*c.age <= 49);
        (*c.age < 30 ? young : old) += 1;
        if (*c.age >= 30) CHECK(*c.age >= 40);
    }
    const double share = static_cast<double>(young) / static_cast<double>(young + old);
    CHECK(share == doctest::Approx(0.25).epsilon(0.1));
}

TEST_CASE("two-cluster cohorts separate under complete linkage") {
    int recovered = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto tc = synth::generate_two_cluster(10, 400, 0.7, 0.1, seed);
        const auto tree = complete_linkage(jaccard_matrix(tc.cohort));
        const auto part = cut(tree, tree.merges().back().height - 1e-12);
        bool ok = part.clusters.size() == 2;
        for (std::size_t a = 0; ok && a < 10; ++a) {
            ok = (part.assignment[a] == part.assignment[0]) == (tc.block[a] == tc.block[0]);
        }
        recovered += ok;
    }
    CHECK(recovered >= 9);
    CHECK_THROWS(synth::generate_two_cluster(10, 100, 0.1, 0.2, 1));
    CHECK_THROWS(synth::generate_two_cluster(10, 100, 0.7, 0.1, 1, 10));
}

TEST_CASE("the age regime only turns gastrointestinal rows in the oldest band") {
    const auto scheme = StratificationScheme::decade(80);
    const auto r = synth::generate_age_regime(small_spec(9), 0.5, scheme);
    REQUIRE(r.data.truth.override_loadings.size() == 1);
    const auto& base = r.data.truth.loadings;
    const auto& turned = r.data.truth.override_loadings[0];
    for (Eigen::Index a = 0; a < 6; ++a) {
        CHECK(turned.row(a).norm() == doctest::Approx(base.row(a).norm()));
        if (a < 2) {
            CHECK((turned.row(a) - base.row(a)).norm() > 1e-3);
            CHECK(turned(a, 1) < base(a, 1));
        } else {
            CHECK((turned.row(a) - base.row(a)).norm() < 1e-12);
        }
    }
    for (std::size_t i = 0; i < r.data.cohort.n_cases(); ++i) {
        const auto age = r.data.cohort.cases()[i].age;
        CHECK((r.data.truth.loading_set[i] == 0) == (age && *age >= 80));
    }
    CHECK(r.strata.size() == scheme.bands().size());

    // Strength 1 lands on the negative phenotype axis.
    const auto full = synth::generate_age_regime(small_spec(9), 1.0, scheme);
    const auto& t = full.data.truth.override_loadings[0];
    CHECK(t(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t(0, 1) < 0.0);
}

TEST_CASE("ordinal rendering round-trips through the rules") {
    const auto& preset = synth::preset("css");
    const auto spec = synth::preset_spec(preset, 400, 2);
    const auto g = synth::generate(spec);
    const auto taxonomy = preset.taxonomy();
    std::ostringstream out;
    write_cohort_csv(out, g.cohort, synth::ordinal_cells(g.cohort, taxonomy, 2));
    std::istringstream in(out.str());
    const auto back = read_cohort_csv(in, taxonomy);
    CHECK(back.matrix() == g.cohort.matrix());
}

TEST_CASE("presets calibrate to their targets") {
    for (const auto& name : synth::preset_names()) {
        const auto& p = synth::preset(name);
        const auto cal = synth::calibrate(p);
        CHECK(cal.symptomatic == doctest::Approx(p.symptomatic).epsilon(1e-3));
        CHECK(cal.offsets.size() == static_cast<Eigen::Index>(p.symptoms.size()));
    }
    CHECK_THROWS(synth::preset("nope"));
    CHECK(synth::gauss_hermite_expectation([](double z) { return z * z; }) == doctest::Approx(1.0));
}

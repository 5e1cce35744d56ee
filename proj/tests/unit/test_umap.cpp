#include <doctest.h>

#include <cmath>
#include <random>

#include "symco/umap.hpp"

using namespace symco;

namespace {

DistanceMatrix random_metric(std::mt19937_64& rng, std::size_t p, const std::string& prefix = "s") {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Eigen::Vector3d> pts;
    for (std::size_t a = 0; a < p; ++a) pts.emplace_back(u(rng), u(rng), u(rng));
    std::vector<std::vector<double>> rows(p, std::vector<double>(p, 0.0));
    std::vector<std::string> labels;
    for (std::size_t a = 0; a < p; ++a) {
        labels.push_back(prefix + std::to_string(a));
        for (std::size_t b = 0; b < p; ++b) rows[a][b] = (pts[a] - pts[b]).norm();
    }
    return DistanceMatrix::from_rows(labels, rows);
}

}  // namespace

TEST_CASE("neighbour weights are calibrated to log2(k)") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t p = 5 + rng() % 10;
        const int k = 2 + static_cast<int>(rng() % 3);
        const auto d = random_metric(rng, p);
        const auto g = umap::fuzzy_graph(d, k);
        CHECK(g.warnings.empty());
        for (std::size_t a = 0; a < p; ++a) {
            double sum = 0.0, top = 0.0;
            std::size_t edges = 0;
            for (std::size_t b = 0; b < p; ++b) {
                const double w = g.directed_weight(a, b);
                sum += w;
                top = std::max(top, w);
                edges += w > 0.0;
                const double u = g.directed_weight(a, b), v = g.directed_weight(b, a);
                CHECK(g.weight(a, b) == doctest::Approx(u + v - u * v));
            }
            CHECK(edges == static_cast<std::size_t>(k - 1));
            CHECK(top == doctest::Approx(1.0));
            CHECK(sum == doctest::Approx(std::log2(static_cast<double>(k))).epsilon(1e-4));
        }
    }
}

TEST_CASE("graph construction refuses bad neighbour counts and undefined pairs") {
    std::mt19937_64 rng(2);
    const auto d = random_metric(rng, 2);
    CHECK_THROWS_AS(umap::fuzzy_graph(d, 2), std::invalid_argument);
    const auto d5 = random_metric(rng, 5);
    CHECK_THROWS_AS(umap::fuzzy_graph(d5, 1), std::invalid_argument);
    CHECK_THROWS_AS(umap::fuzzy_graph(d5, 5), std::invalid_argument);
    const auto nan = DistanceMatrix::from_rows({"a", "b", "c"}, {{0, NAN, 1}, {NAN, 0, 1}, {1, 1, 0}});
    CHECK_THROWS_AS(umap::embed(nan, umap::EmbedParams::tight()), std::domain_error);
}

TEST_CASE("curve parameters match the least-squares reference") {
    const auto c = umap::fit_curve(0.1, 1.0);
    CHECK(c.a == doctest::Approx(1.57694).epsilon(1e-4));
    CHECK(c.b == doctest::Approx(0.89506).epsilon(1e-4));
    CHECK_THROWS(umap::fit_curve(0.0, 1.0));
    CHECK_THROWS(umap::fit_curve(3.0, 1.0));
}

TEST_CASE("presets") {
    CHECK(umap::EmbedParams::from_preset("tight").n_neighbours == 2);
    CHECK(umap::EmbedParams::from_preset("loose").n_neighbours == 4);
    CHECK_THROWS(umap::EmbedParams::from_preset("medium"));
}

TEST_CASE("embedding is deterministic for a seed") {
    std::mt19937_64 rng(3);
    const auto d = random_metric(rng, 12);
    auto params = umap::EmbedParams::loose();
    params.seed = 77;
    const auto a = umap::embed(d, params);
    const auto b = umap::embed(d, params);
    CHECK(a.coords == b.coords);
    CHECK(a.coords.rows() == 12);
    CHECK(a.coords.allFinite());
    CHECK(a.labels == d.labels());
    params.seed = 78;
    CHECK_FALSE(umap::embed(d, params).coords == a.coords);
}

TEST_CASE("an equilateral triangle links every point to the first") {
    // Ties break toward the lower index, so both b and c link to a only.
    const auto d = DistanceMatrix::from_rows({"a", "b", "c"}, {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
    const auto g = umap::fuzzy_graph(d, 2);
    CHECK(g.weight(0, 1) == 1.0);
    CHECK(g.weight(0, 2) == 1.0);
    CHECK(g.weight(1, 2) == 0.0);
    CHECK(g.connected());
    const auto e = umap::embed(d, umap::EmbedParams::tight());
    CHECK(e.init == "spectral");
    CHECK(e.coords.allFinite());
    CHECK(e.diameter() > 0.0);
}

TEST_CASE("disconnected graphs fall back to a random layout") {
    const auto g = umap::FuzzyGraph::from_weights(4, {0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0});
    CHECK_FALSE(g.connected());
    bool spectral = true;
    const auto init = umap::initial_layout(g, 5, &spectral);
    CHECK_FALSE(spectral);
    CHECK(init.minCoeff() >= 0.0);
    CHECK(init.maxCoeff() <= 10.0);
    const auto e = umap::embed(g, {"a", "b", "c", "d"}, umap::EmbedParams::tight());
    CHECK(e.init == "random");
    CHECK_FALSE(e.warnings.empty());
    CHECK_THROWS(umap::FuzzyGraph::from_weights(2, {0, 1, 0.5, 0}));
}

TEST_CASE("strength zero reproduces the independent layouts") {
    std::mt19937_64 rng(4);
    std::vector<DistanceMatrix> slices;
    for (int s = 0; s < 4; ++s) slices.push_back(random_metric(rng, 8));
    umap::AlignOptions opts;
    opts.strength = 0.0;
    const auto set = umap::aligned_embed(slices, {"a", "b", "c", "d"}, opts);
    REQUIRE(set.embeddings.size() == 4);
    for (std::size_t s = 0; s < 4; ++s) {
        auto params = opts.params;
        params.seed = umap::stratum_seed(opts.params.seed, s);
        CHECK(umap::embed(slices[s], params).coords == set.embeddings[s].coords);
    }
    // Window 2 relates every slice to the next two.
    CHECK(set.relations.size() == 5);
}

TEST_CASE("alignment pulls shared symptoms together") {
    std::mt19937_64 rng(5);
    const auto base = random_metric(rng, 10);
    std::vector<DistanceMatrix> slices(3, base);
    auto gap = [](const umap::AlignedEmbeddingSet& set) {
        return (set.embeddings[0].coords - set.embeddings[1].coords).rowwise().norm().mean() /
               set.embeddings[0].diameter();
    };
    umap::AlignOptions free, tied;
    free.strength = 0.0;
    tied.strength = 1.0;
    const auto a = umap::aligned_embed(slices, {"x", "y", "z"}, free);
    const auto b = umap::aligned_embed(slices, {"x", "y", "z"}, tied);
    CHECK(gap(b) < gap(a));
    CHECK(gap(b) < 0.05);
}

TEST_CASE("small slices are skipped and ribbons break around them") {
    std::mt19937_64 rng(6);
    std::vector<DistanceMatrix> slices{random_metric(rng, 6), random_metric(rng, 2), random_metric(rng, 6)};
    umap::AlignOptions opts;
    const auto set = umap::aligned_embed(slices, {"a", "b", "c"}, opts);
    CHECK(set.embeddings.size() == 2);
    CHECK(set.embedding_at(1) == -1);
    CHECK(set.embedding_at(2) == 1);
    CHECK_FALSE(set.warnings.empty());
    const auto ribbons = umap::interpolate_ribbon(set, 4);
    REQUIRE(ribbons.size() == 6);
    // s0 and s1 exist in the skipped slice's vocabulary but that slice has no layout.
    CHECK(ribbons[0].segments.size() == 2);
    CHECK(ribbons[0].segments[0].size() == 1);
    CHECK_THROWS(umap::interpolate_ribbon(set, 0));
}

TEST_CASE("ribbons interpolate between consecutive slices") {
    std::mt19937_64 rng(7);
    std::vector<DistanceMatrix> slices{random_metric(rng, 5), random_metric(rng, 5)};
    const auto set = umap::aligned_embed(slices, {"a", "b"}, {});
    const auto ribbons = umap::interpolate_ribbon(set, 4);
    REQUIRE(ribbons.size() == 5);
    const auto& seg = ribbons[2].segments.at(0);
    REQUIRE(seg.size() == 5);
    CHECK(seg[0][2] == 0.0);
    CHECK(seg[2][2] == doctest::Approx(0.5));
    CHECK(seg[4][2] == 1.0);
    const double mid = 0.5 * (set.embeddings[0].coords(2, 0) + set.embeddings[1].coords(2, 0));
    CHECK(seg[2][0] == doctest::Approx(mid));
}

TEST_CASE("slices with disjoint vocabularies cannot be aligned") {
    std::mt19937_64 rng(8);
    std::vector<DistanceMatrix> slices{random_metric(rng, 5, "a"), random_metric(rng, 5, "b")};
    CHECK_THROWS_AS(umap::aligned_embed(slices, {"x", "y"}, {}), std::invalid_argument);
    CHECK_THROWS(umap::aligned_embed(slices, {"x"}, {}));
    umap::AlignOptions bad;
    bad.strength = -1.0;
    CHECK_THROWS(umap::aligned_embed({slices[0], slices[0]}, {"x", "y"}, bad));
}

TEST_CASE("dataset alignment uses only the core symptoms") {
    std::mt19937_64 rng(9);
    auto a = random_metric(rng, 7);
    auto b = random_metric(rng, 6);
    const std::vector<std::string> core{"s0", "s1", "s2"};
    const auto set = umap::align_datasets({a, b}, {"A", "B"}, core, 1.0, umap::EmbedParams::tight());
    REQUIRE(set.relations.size() == 1);
    CHECK(set.relations[0].pairs.size() == 3);
    CHECK_THROWS(umap::align_datasets({a, b}, {"A", "B"}, {"s0", "s1"}, 1.0, umap::EmbedParams::tight()));
    CHECK_THROWS(umap::align_datasets({a}, {"A"}, core, 1.0, umap::EmbedParams::tight()));
    CHECK_THROWS(umap::align_datasets({a, b}, {"A", "B"}, {"s0", "s1", "s6"}, 1.0, umap::EmbedParams::tight()));
}

// Acceptance checks 1-8. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "symco/distance.hpp"
#include "symco/export.hpp"
#include "symco/hclust.hpp"
#include "symco/lpca.hpp"
#include "symco/pipeline.hpp"
#include "symco/synth.hpp"
#include "symco/umap.hpp"

using namespace symco;
namespace fs = std::filesystem;
using Eigen::MatrixXd;

namespace {

// Tolerances and thresholds.
constexpr double kJaccardTol = 1e-12;
constexpr double kGradientRelTol = 1e-5;
constexpr double kOrthoTol = 1e-8;
constexpr double kSaturatedExplained = 0.999;
constexpr double kRecoveryCorrelation = 0.9;
constexpr double kRecoveryShare = 0.9;
constexpr double kSelectShare = 0.9;
constexpr double kUniformSignShare = 0.95;
constexpr int kSeparatedSeeds = 8;
constexpr double kRecall = 0.6;
constexpr double kDisplacement = 0.10;
constexpr double kRegimeRatio = 2.0;
constexpr int kRegimeSeeds = 8;
constexpr double kSymptomaticTarget = 0.328;
constexpr double kHeadacheTarget = 0.5;
constexpr double kDescriptiveTol = 0.05;

// Runtime limits in seconds.
constexpr double kLimitJaccard = 5;
constexpr double kLimitLinkage = 5;
constexpr double kLimitLpca = 30;
constexpr double kLimitRecovery = 300;
constexpr double kLimitAlignment = 300;
constexpr double kLimitPipeline = 60;

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

BinaryMatrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t p, double missing, double present) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    BinaryMatrix x(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < p; ++a) {
            x(i, a) = u(rng) < missing ? Obs::missing : (u(rng) < present ? Obs::present : Obs::absent);
        }
    }
    return x;
}

Cohort bare_cohort(const BinaryMatrix& x) {
    std::vector<SymptomDef> defs;
    for (std::size_t a = 0; a < x.cols(); ++a) defs.push_back({"s" + std::to_string(a), "", Category::other});
    std::vector<CaseRecord> cases(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) cases[i].id = "c" + std::to_string(i);
    return Cohort(std::move(cases), std::move(defs), x);
}

// ---------------------------------------------------------------------------
// 1. Jaccard against explicit sets.

Outcome criterion_jaccard() {
    Outcome out;
    std::mt19937_64 rng(101);
    int refused = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 60, p = 2 + rng() % 11;
        const auto x = random_matrix(rng, n, p, 0.10, 0.2 + 0.6 * std::uniform_real_distribution<double>()(rng));

        // Per symptom: the rows where it is observed and where it is present.
        std::vector<std::set<std::size_t>> observed(p), present(p);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t a = 0; a < p; ++a) {
                if (x(i, a) == Obs::missing) continue;
                observed[a].insert(i);
                if (x(i, a) == Obs::present) present[a].insert(i);
            }
        }
        std::vector<std::optional<double>> expect(p * p);
        bool orphan = false;
        for (std::size_t a = 0; a < p; ++a) {
            std::size_t defined = 0;
            for (std::size_t b = 0; b < p; ++b) {
                std::set<std::size_t> both_obs, pa, pb, inter, uni;
                std::set_intersection(observed[a].begin(), observed[a].end(), observed[b].begin(), observed[b].end(),
                                      std::inserter(both_obs, both_obs.end()));
                for (auto i : both_obs) {
                    if (present[a].count(i)) pa.insert(i);
                    if (present[b].count(i)) pb.insert(i);
                }
                std::set_intersection(pa.begin(), pa.end(), pb.begin(), pb.end(), std::inserter(inter, inter.end()));
                std::set_union(pa.begin(), pa.end(), pb.begin(), pb.end(), std::inserter(uni, uni.end()));
                if (!uni.empty()) {
                    expect[a * p + b] = 1.0 - static_cast<double>(inter.size()) / static_cast<double>(uni.size());
                    if (b != a) ++defined;
                }
            }
            orphan |= defined == 0;
        }

        const auto cohort = bare_cohort(x);
        if (orphan) {
            bool threw = false;
            try {
                jaccard_matrix(cohort);
            } catch (const std::domain_error&) {
                threw = true;
            }
            if (!threw) {
                out.pass = false;
                out.detail = "trial " + std::to_string(trial) + ": symptom without defined pairs was accepted";
            }
            ++refused;
            continue;
        }
        const auto d = jaccard_matrix(cohort);
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b < p; ++b) {
                const auto got = d.at(a, b);
                const auto& want = expect[a * p + b];
                if (got.has_value() != want.has_value()) {
                    out.pass = false;
                    out.detail = "definedness differs";
                    continue;
                }
                if (!got) continue;
                worst = std::max(worst, std::abs(*got - *want));
                if (*got < 0.0 || *got > 1.0) out.pass = false;
                const auto mirror = d.at(b, a);
                if (!mirror || *mirror != *got) out.pass = false;
            }
        }
    }
    if (worst > kJaccardTol) out.pass = false;
    if (out.detail.empty()) {
        out.detail = fmt("200 cohorts, max |error| %.1e, %g refused for an undefined column", worst, refused);
    }
    return out;
}

// ---------------------------------------------------------------------------
// 2. Complete linkage against a naive reference.

std::vector<double> naive_complete_linkage(const std::vector<std::vector<double>>& d) {
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t a = 0; a < d.size(); ++a) clusters.push_back({a});
    std::vector<double> heights;
    while (clusters.size() > 1) {
        double best = INFINITY;
        std::size_t bi = 0, bj = 1;
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                double link = 0.0;
                for (auto a : clusters[i]) {
                    for (auto b : clusters[j]) link = std::max(link, d[a][b]);
                }
                if (link < best) {
                    best = link;
                    bi = i;
                    bj = j;
                }
            }
        }
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        clusters.erase(clusters.begin() + static_cast<long>(bj));
        heights.push_back(best);
    }
    return heights;
}

Outcome criterion_linkage() {
    Outcome out;
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int refinements = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t p = 2 + rng() % 11;
        std::vector<std::vector<double>> rows(p, std::vector<double>(p, 0.0));
        std::vector<std::string> labels;
        for (std::size_t a = 0; a < p; ++a) {
            labels.push_back("s" + std::to_string(a));
            for (std::size_t b = 0; b < a; ++b) rows[a][b] = rows[b][a] = u(rng);
        }
        const auto tree = complete_linkage(DistanceMatrix::from_rows(labels, rows));
        const auto want = naive_complete_linkage(rows);
        std::vector<double> got;
        for (const auto& m : tree.merges()) got.push_back(m.height);
        if (got != want) {
            out.pass = false;
            out.detail = "trial " + std::to_string(trial) + ": merge heights differ from the reference";
        }
        for (std::size_t k = 1; k < got.size(); ++k) {
            if (got[k] < got[k - 1]) out.pass = false;
        }
        for (int pair = 0; pair < 50; ++pair) {
            double h1 = u(rng), h2 = u(rng);
            if (h1 > h2) std::swap(h1, h2);
            const auto fine = cut(tree, h1), coarse = cut(tree, h2);
            for (const auto& c : fine.clusters) {
                const auto target = coarse.assignment[c.front()];
                for (auto a : c) {
                    if (coarse.assignment[a] != target) out.pass = false;
                }
            }
            ++refinements;
        }
    }
    if (out.detail.empty()) out.detail = fmt("100 trees equal to the naive reference, %g refinement pairs", refinements);
    return out;
}

// ---------------------------------------------------------------------------
// 3. LPCA correctness.

Outcome criterion_lpca() {
    Outcome out;
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 1.5);

    // (a) and (d): monotone descent, orthonormal loadings.
    int monotone = 0;
    double worst_ortho = 0.0;
    auto check_ortho = [&](const lpca::LpcaModel& m) {
        if (m.k == 0) return;
        const MatrixXd g = m.loadings.transpose() * m.loadings - MatrixXd::Identity(m.k, m.k);
        worst_ortho = std::max(worst_ortho, g.cwiseAbs().maxCoeff());
    };
    for (int fit = 0; fit < 50; ++fit) {
        const std::size_t n = 20 + rng() % 200, p = 3 + rng() % 10;
        const auto x = random_matrix(rng, n, p, 0.1 * u(rng), 0.15 + 0.5 * u(rng));
        lpca::FitOptions opts;
        opts.seed = static_cast<std::uint64_t>(fit);
        opts.random_init = fit % 2 == 1;
        opts.accelerate = fit % 3 != 0;
        const int k = 1 + static_cast<int>(rng() % std::min<std::size_t>(p, 4));
        const auto m = lpca::fit(x, k, 2.0 + 10.0 * u(rng), opts);
        bool ok = true;
        for (std::size_t i = 1; i < m.trace.size(); ++i) ok &= m.trace[i] <= m.trace[i - 1] * (1.0 + 1e-12);
        monotone += ok;
        check_ortho(m);
    }
    if (monotone != 50) out.pass = false;

    // (b) Full rank on complete 20 x 5 matrices.
    double min_explained = 1.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_matrix(rng, 20, 5, 0.0, 0.2 + 0.6 * u(rng));
        const auto m = lpca::fit(x, 5, 10.0);
        min_explained = std::min(min_explained, m.explained());
        check_ortho(m);
    }
    if (min_explained < kSaturatedExplained) out.pass = false;

    // (c) Gradient against central differences.
    double worst_grad = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_matrix(rng, 6, 4, 0.1, 0.4);
        MatrixXd theta(6, 4);
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta.data()[i] = nd(rng);
        const MatrixXd g = lpca::deviance_gradient(x, theta);
        const double h = 1e-5;
        for (Eigen::Index r = 0; r < 6; ++r) {
            for (Eigen::Index c = 0; c < 4; ++c) {
                MatrixXd up = theta, down = theta;
                up(r, c) += h;
                down(r, c) -= h;
                const double fd = (lpca::deviance(x, up) - lpca::deviance(x, down)) / (2 * h);
                worst_grad = std::max(worst_grad, std::abs(fd - g(r, c)) / std::max(1.0, std::abs(g(r, c))));
            }
        }
    }
    if (worst_grad > kGradientRelTol) out.pass = false;
    if (worst_ortho > kOrthoTol) out.pass = false;

    out.detail = fmt("(a) %g/50 monotone; (b) min P(p) %.6f; (c) max rel grad error %.1e; (d) max |U'U - I| %.1e",
                     monotone, min_explained, worst_grad, worst_ortho);
    return out;
}

// ---------------------------------------------------------------------------
// 4. Planted rank-2 structure.

// Largest per-column |cosine| deficit after rotating `fitted` onto `truth`.
double aligned_correlation(const MatrixXd& fitted, const MatrixXd& truth) {
    Eigen::JacobiSVD<MatrixXd> svd(fitted.transpose() * truth, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const MatrixXd rotated = fitted * svd.matrixU() * svd.matrixV().transpose();
    double worst = 1.0;
    for (Eigen::Index c = 0; c < truth.cols(); ++c) {
        worst = std::min(worst, std::abs(rotated.col(c).dot(truth.col(c))) / rotated.col(c).norm() / truth.col(c).norm());
    }
    return worst;
}

Outcome criterion_recovery() {
    Outcome out;
    const auto& preset = synth::preset("css");
    constexpr int kSeeds = 40;
    int recovered = 0, selected = 0, uniform = 0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        synth::GeneratorSpec spec;
        spec.n = 2000;
        spec.symptoms = preset.symptoms;
        spec.loadings = preset.raw_loadings();
        spec.offsets = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(preset.symptoms.size()), -1.0);
        spec.factor_scales = {12.0, 8.0};
        spec.seed = static_cast<std::uint64_t>(seed);
        const auto g = synth::generate(spec);

        lpca::ScanOptions so;
        so.k_max = 5;
        const auto scan = lpca::scan(g.cohort.matrix(), so);
        const auto sel = lpca::select_k(scan);
        const auto& two = scan.models[1];
        selected += sel.k == 2 && !sel.ambiguous;
        recovered += aligned_correlation(two.loadings, g.truth.loadings) >= kRecoveryCorrelation;
        const auto pc1 = two.loadings.col(0).array();
        uniform += (pc1 > 0).all() || (pc1 < 0).all();
    }
    out.pass = recovered >= kRecoveryShare * kSeeds && selected >= kSelectShare * kSeeds &&
               uniform >= kUniformSignShare * kSeeds;
    out.detail = fmt("p = %g; subspace %g/40, k = 2 selected %g/40, uniform PC1 sign %g/40",
                     static_cast<double>(preset.symptoms.size()), recovered, selected, uniform);
    return out;
}

// ---------------------------------------------------------------------------
// 5. Two-cluster embeddings.

double recall_at_3(const DistanceMatrix& d, const MatrixXd& y) {
    const std::size_t p = d.size();
    double total = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        std::vector<std::size_t> by_d, by_y;
        for (std::size_t j = 0; j < p; ++j) {
            if (j != i) by_d.push_back(j);
        }
        by_y = by_d;
        std::stable_sort(by_d.begin(), by_d.end(),
                         [&](std::size_t u, std::size_t v) { return d.value(i, u) < d.value(i, v); });
        auto dist = [&](std::size_t j) {
            return (y.row(static_cast<Eigen::Index>(i)) - y.row(static_cast<Eigen::Index>(j))).norm();
        };
        std::stable_sort(by_y.begin(), by_y.end(), [&](std::size_t u, std::size_t v) { return dist(u) < dist(v); });
        int hits = 0;
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) hits += by_d[static_cast<std::size_t>(a)] == by_y[static_cast<std::size_t>(b)];
        }
        total += hits / 3.0;
    }
    return total / static_cast<double>(p);
}

Outcome criterion_embedding() {
    Outcome out;
    int separated = 0;
    bool deterministic = true;
    double recall = 0.0, recall_min = 1.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto tc = synth::generate_two_cluster(20, 3000, 0.6, 0.05, seed);
        const auto d = jaccard_matrix(tc.cohort);

        auto tight = umap::EmbedParams::tight();
        tight.seed = seed;
        const auto e = umap::embed(d, tight);
        double within = 0, between = 0;
        int nw = 0, nb = 0;
        for (Eigen::Index a = 0; a < 20; ++a) {
            for (Eigen::Index b = a + 1; b < 20; ++b) {
                const double len = (e.coords.row(a) - e.coords.row(b)).norm();
                if (tc.block[static_cast<std::size_t>(a)] == tc.block[static_cast<std::size_t>(b)]) {
                    within += len;
                    ++nw;
                } else {
                    between += len;
                    ++nb;
                }
            }
        }
        separated += within / nw < between / nb;

        auto loose = umap::EmbedParams::loose();
        loose.seed = seed;
        const auto l = umap::embed(d, loose);
        const double r = recall_at_3(d, l.coords);
        recall += r / 10.0;
        recall_min = std::min(recall_min, r);

        deterministic &= umap::embed(d, tight).coords == e.coords;
        deterministic &= umap::embed(d, loose).coords == l.coords;
    }
    out.pass = separated >= kSeparatedSeeds && recall >= kRecall && deterministic;
    out.detail = fmt("tight separation %g/10; loose 3-NN recall mean %.3f (min %.3f); deterministic %g", separated,
                     recall, recall_min, deterministic);
    return out;
}

// ---------------------------------------------------------------------------
// 6. Aligned layouts.

std::vector<DistanceMatrix> stratum_distances(const std::vector<Stratum>& strata, std::vector<std::string>& names) {
    std::vector<DistanceMatrix> out;
    for (const auto& s : strata) {
        names.push_back(s.label);
        out.push_back(jaccard_matrix(filter_symptomatic(s.cohort).cohort));
    }
    return out;
}

// Mean over adjacent embedded strata of the mean shared-symptom distance,
// relative to the mean diameter of the two layouts.
double displacement(const umap::AlignedEmbeddingSet& set) {
    double total = 0.0;
    int gaps = 0;
    for (std::size_t i = 0; i + 1 < set.embeddings.size(); ++i) {
        const auto& a = set.embeddings[i];
        const auto& b = set.embeddings[i + 1];
        double sum = 0.0;
        int shared = 0;
        for (std::size_t x = 0; x < a.labels.size(); ++x) {
            for (std::size_t y = 0; y < b.labels.size(); ++y) {
                if (a.labels[x] != b.labels[y]) continue;
                sum += (a.coords.row(static_cast<Eigen::Index>(x)) - b.coords.row(static_cast<Eigen::Index>(y))).norm();
                ++shared;
            }
        }
        total += sum / shared / (0.5 * (a.diameter() + b.diameter()));
        ++gaps;
    }
    return total / gaps;
}

// Distance between the gastrointestinal centroid and the centroid of the
// other symptoms, relative to the layout diameter.
double gi_separation(const umap::Embedding& e, const std::vector<SymptomDef>& defs) {
    Eigen::RowVector2d gi = Eigen::RowVector2d::Zero(), rest = gi;
    int ng = 0, nr = 0;
    for (std::size_t i = 0; i < e.labels.size(); ++i) {
        const auto it = std::find_if(defs.begin(), defs.end(), [&](const SymptomDef& d) { return d.id == e.labels[i]; });
        const auto row = e.coords.row(static_cast<Eigen::Index>(i));
        if (it != defs.end() && it->category == Category::gastrointestinal) {
            gi += row;
            ++ng;
        } else {
            rest += row;
            ++nr;
        }
    }
    return (gi / ng - rest / nr).norm() / e.diameter();
}

Outcome criterion_alignment() {
    Outcome out;
    const auto& preset = synth::preset("css");
    const auto scheme = StratificationScheme::decade(80);
    bool exact = true;
    int stationary = 0, regime = 0;
    double worst_disp = 0.0;
    std::vector<double> ratios;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto spec = synth::preset_spec(preset, 20000, seed);
        spec.decade_weights.assign(spec.decade_weights.size(), 1.0);
        umap::AlignOptions opts;
        opts.params.seed = seed;

        const auto g = synth::generate(spec);
        std::vector<std::string> names;
        const auto slices = stratum_distances(stratify(g.cohort, scheme), names);

        auto free = opts;
        free.strength = 0.0;
        const auto independent = umap::aligned_embed(slices, names, free);
        for (std::size_t i = 0; i < independent.embeddings.size(); ++i) {
            auto params = opts.params;
            params.seed = umap::stratum_seed(opts.params.seed, independent.positions[i]);
            exact &= umap::embed(slices[independent.positions[i]], params).coords == independent.embeddings[i].coords;
        }

        const double disp = displacement(umap::aligned_embed(slices, names, opts));
        worst_disp = std::max(worst_disp, disp);
        stationary += disp <= kDisplacement;

        const auto ar = synth::generate_age_regime(spec, 1.0, scheme);
        std::vector<std::string> rnames;
        const auto rset = umap::aligned_embed(stratum_distances(ar.strata, rnames), rnames, opts);
        const std::size_t e = rset.embeddings.size();
        const double oldest = gi_separation(rset.embeddings[e - 1], preset.symptoms);
        double middle = 0.0;
        for (std::size_t i = 1; i + 1 < e; ++i) middle += gi_separation(rset.embeddings[i], preset.symptoms);
        middle /= static_cast<double>(e - 2);
        ratios.push_back(oldest / middle);
        regime += oldest >= kRegimeRatio * middle;
    }
    std::sort(ratios.begin(), ratios.end());
    out.pass = exact && stationary == 10 && regime >= kRegimeSeeds;
    out.detail = fmt("strength 0 exact %g; displacement <= 0.10 in %g/10 (max %.3f); regime 2x in %g/10", exact,
                     stationary, worst_disp, regime) +
                 fmt(" (median ratio %.2f)", 0.5 * (ratios[4] + ratios[5]));
    return out;
}

// ---------------------------------------------------------------------------
// 7. End to end on the bundled fixture.

int shell(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome criterion_pipeline(double& runtime) {
    Outcome out;
    const fs::path fixtures = fs::path(SYMCO_SOURCE_DIR) / "data" / "fixtures";
    const fs::path work = fs::temp_directory_path() / "symco_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    const fs::path first = work / "run", second = work / "replay";
    const std::string base = std::string(SYMCO_CLI) + " pipeline --input " + (fixtures / "cohort.csv").string() +
                             " --rules " + (fixtures / "cohort.rules").string() + " --strata broad --svg";

    const auto t0 = std::chrono::steady_clock::now();
    const int code = shell(base + " --out " + first.string() + " > " + (work / "run.log").string() + " 2>&1");
    runtime = seconds_since(t0);

    const auto manifest = pipeline::Manifest::from_json(artifact::read_json(first / pipeline::kManifestName));
    int artifacts = 0, validated = 0;
    bool valid = true;
    for (const auto& s : manifest.stages) {
        for (const auto& a : s.artifacts) {
            ++artifacts;
            if (a.path.size() < 5 || a.path.substr(a.path.size() - 5) != ".json") continue;
            try {
                artifact::validate(artifact::read_json(first / a.path));
                ++validated;
            } catch (const std::exception& e) {
                valid = false;
                out.detail = a.path + ": " + e.what();
            }
        }
    }

    const int replay_code = shell(std::string(SYMCO_CLI) + " pipeline --replay " +
                                  (first / pipeline::kManifestName).string() + " --out " + second.string() + " > " +
                                  (work / "replay.log").string() + " 2>&1");
    bool identical = slurp(first / pipeline::kManifestName) == slurp(second / pipeline::kManifestName);
    for (const auto& s : manifest.stages) {
        for (const auto& a : s.artifacts) identical &= slurp(first / a.path) == slurp(second / a.path);
    }

    out.pass = code == 0 && manifest.complete() && valid && replay_code == 0 && identical && runtime < kLimitPipeline;
    if (out.detail.empty()) {
        out.detail = fmt("exit %g, %g artifacts, %g JSON valid, replay exit %g", code, artifacts, validated, replay_code) +
                     (identical ? ", byte-identical" : ", outputs differ");
    }
    return out;
}

// ---------------------------------------------------------------------------
// 8. Descriptive fidelity of the cis preset.

Outcome criterion_descriptive() {
    Outcome out;
    const auto& preset = synth::preset("cis");
    const auto g = synth::generate(synth::preset_spec(preset, 200000, 8));
    const auto& x = g.cohort.matrix();
    const auto ids = g.cohort.symptom_ids();
    const std::size_t headache = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), "headache") - ids.begin());
    std::size_t symptomatic = 0, with_headache = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        bool any = false;
        for (std::size_t a = 0; a < x.cols(); ++a) any |= x(i, a) == Obs::present;
        if (!any) continue;
        ++symptomatic;
        with_headache += x(i, headache) == Obs::present;
    }
    const double share = static_cast<double>(symptomatic) / static_cast<double>(x.rows());
    const double freq = static_cast<double>(with_headache) / static_cast<double>(symptomatic);
    out.pass = headache < ids.size() && std::abs(share - kSymptomaticTarget) <= kDescriptiveTol &&
               std::abs(freq - kHeadacheTarget) <= kDescriptiveTol;
    out.detail = fmt("symptomatic %.4f (target 0.328), headache among symptomatic %.4f (target 0.5)", share, freq);
    return out;
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, double limit, const std::function<Outcome()>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = body();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("threw: ") + e.what();
        }
        const double t = seconds_since(t0);
        if (limit > 0 && t >= limit) {
            o.pass = false;
            o.detail += fmt("; over the %gs limit", limit);
        }
        failures += !o.pass;
        std::printf("criterion %d %-12s %s  %7.2fs  %s\n", id, name, o.pass ? "PASS" : "FAIL", t, o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "jaccard", kLimitJaccard, criterion_jaccard);
    report(2, "linkage", kLimitLinkage, criterion_linkage);
    report(3, "lpca", kLimitLpca, criterion_lpca);
    report(4, "recovery", kLimitRecovery, criterion_recovery);
    report(5, "embedding", 0, criterion_embedding);
    report(6, "alignment", kLimitAlignment, criterion_alignment);
    report(7, "pipeline", 0, [] {
        double runtime = 0.0;
        auto o = criterion_pipeline(runtime);
        o.detail += fmt("; pipeline %.2fs (limit %gs)", runtime, kLimitPipeline);
        return o;
    });
    report(8, "descriptive", 0, criterion_descriptive);

    std::printf("%s: %d of 8 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}

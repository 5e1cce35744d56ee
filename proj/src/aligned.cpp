#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "layout.hpp"
#include "symco/umap.hpp"

namespace symco::umap {

long AlignedEmbeddingSet::embedding_at(std::size_t position) const {
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (positions[i] == position) return static_cast<long>(i);
    }
    return -1;
}

std::uint64_t stratum_seed(std::uint64_t seed, std::size_t s) {
    return detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(s) + 1));
}

namespace {

/// Rotates (or reflects) and translates `moving` so its shared points best match `target`.
void procrustes_onto(Eigen::MatrixXd& moving, const Eigen::MatrixXd& target,
                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    if (pairs.size() < 2) return;
    const auto m = static_cast<Eigen::Index>(pairs.size());
    Eigen::MatrixXd x(m, 2), y(m, 2);
    for (Eigen::Index r = 0; r < m; ++r) {
        x.row(r) = moving.row(static_cast<Eigen::Index>(pairs[static_cast<std::size_t>(r)].first));
        y.row(r) = target.row(static_cast<Eigen::Index>(pairs[static_cast<std::size_t>(r)].second));
    }
    const Eigen::RowVector2d mx = x.colwise().mean(), my = y.colwise().mean();
    x.rowwise() -= mx;
    y.rowwise() -= my;
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(x.transpose() * y, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix2d rot = svd.matrixU() * svd.matrixV().transpose();
    moving = ((moving.rowwise() - mx) * rot).rowwise() + my;
}

AlignedEmbeddingSet aligned_impl(const std::vector<DistanceMatrix>& slices, const std::vector<std::string>& names,
                                 int window, double strength, const EmbedParams& params,
                                 const std::vector<std::string>* core) {
    if (names.size() != slices.size()) throw std::invalid_argument("one name per slice is required");
    if (window < 1) throw std::invalid_argument("alignment window must be at least 1");
    if (!(strength >= 0.0)) throw std::invalid_argument("alignment strength must be non-negative");

    AlignedEmbeddingSet out;
    out.strata = names;
    out.window = window;
    out.strength = strength;

    std::vector<FuzzyGraph> graphs;
    std::vector<EmbedParams> slice_params;
    for (std::size_t s = 0; s < slices.size(); ++s) {
        const auto& d = slices[s];
        if (d.size() < 3) {
            out.warnings.push_back("slice '" + names[s] + "' has " + std::to_string(d.size()) +
                                   " symptoms; skipped");
            continue;
        }
        if (d.size() <= static_cast<std::size_t>(params.n_neighbours)) {
            out.warnings.push_back("slice '" + names[s] + "' has too few symptoms for n_neighbours = " +
                                   std::to_string(params.n_neighbours) + "; skipped");
            continue;
        }
        if (!d.fully_defined()) {
            throw std::domain_error("slice '" + names[s] + "' has undefined distances; cannot embed");
        }
        EmbedParams sp = params;
        sp.seed = stratum_seed(params.seed, s);
        graphs.push_back(fuzzy_graph(d, sp.n_neighbours));
        slice_params.push_back(sp);
        out.positions.push_back(s);
    }

    const std::size_t n = graphs.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (out.positions[j] - out.positions[i] > static_cast<std::size_t>(window)) continue;
            const auto& di = slices[out.positions[i]];
            const auto& dj = slices[out.positions[j]];
            Relation rel{i, j, {}};
            for (std::size_t a = 0; a < di.size(); ++a) {
                const auto& id = di.labels()[a];
                if (core && std::find(core->begin(), core->end(), id) == core->end()) continue;
                if (auto b = dj.index_of(id)) rel.pairs.emplace_back(a, *b);
            }
            if (rel.pairs.empty()) {
                throw std::invalid_argument("slices '" + names[out.positions[i]] + "' and '" +
                                            names[out.positions[j]] + "' share no symptoms");
            }
            out.relations.push_back(std::move(rel));
        }
    }

    std::vector<detail::LayoutOptimizer> opts;
    std::vector<bool> spectral(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        bool sp = false;
        Eigen::MatrixXd init = initial_layout(graphs[i], slice_params[i].seed, &sp);
        spectral[i] = sp;
        if (strength > 0.0 && i > 0) {
            for (const auto& rel : out.relations) {
                if (rel.to == i && rel.from == i - 1) {
                    std::vector<std::pair<std::size_t, std::size_t>> flipped;
                    for (auto [a, b] : rel.pairs) flipped.emplace_back(b, a);
                    procrustes_onto(init, opts[i - 1].coords(), flipped);
                }
            }
        }
        opts.emplace_back(graphs[i], slice_params[i], std::move(init));
    }

    const int epochs = params.n_epochs;
    for (int e = 0; e < epochs; ++e) {
        const double alpha = n ? opts.front().alpha() : 0.0;
        for (auto& o : opts) o.epoch(e);
        if (strength == 0.0) continue;

        // Implicit pull of each shared point toward its related positions,
        // computed from the positions at the end of this epoch.
        const double c = 2.0 * alpha * strength;
        std::vector<Eigen::MatrixXd> sum(n), count(n);
        for (std::size_t i = 0; i < n; ++i) {
            sum[i] = Eigen::MatrixXd::Zero(opts[i].coords().rows(), 2);
            count[i] = Eigen::MatrixXd::Zero(opts[i].coords().rows(), 1);
        }
        for (const auto& rel : out.relations) {
            const auto& yf = opts[rel.from].coords();
            const auto& yt = opts[rel.to].coords();
            for (auto [a, b] : rel.pairs) {
                const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
                sum[rel.from].row(ia) += yt.row(ib);
                count[rel.from](ia, 0) += 1.0;
                sum[rel.to].row(ib) += yf.row(ia);
                count[rel.to](ib, 0) += 1.0;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            auto& y = opts[i].coords();
            for (Eigen::Index r = 0; r < y.rows(); ++r) {
                if (count[i](r, 0) == 0.0) continue;
                y.row(r) = (y.row(r) + c * sum[i].row(r)) / (1.0 + c * count[i](r, 0));
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        Embedding emb;
        emb.labels = slices[out.positions[i]].labels();
        emb.coords = opts[i].coords();
        emb.params = slice_params[i];
        emb.init = spectral[i] ? "spectral" : "random";
        emb.warnings = graphs[i].warnings;
        if (!spectral[i]) emb.warnings.push_back("graph is disconnected or degenerate; random initial layout used");
        out.embeddings.push_back(std::move(emb));
    }
    return out;
}

}  // namespace

AlignedEmbeddingSet aligned_embed(const std::vector<DistanceMatrix>& slices, const std::vector<std::string>& names,
                                  const AlignOptions& opts) {
    return aligned_impl(slices, names, opts.window, opts.strength, opts.params, nullptr);
}

AlignedEmbeddingSet align_datasets(const std::vector<DistanceMatrix>& datasets, const std::vector<std::string>& names,
                                   const std::vector<std::string>& core, double strength,
                                   const EmbedParams& params) {
    if (core.size() < 3) throw std::invalid_argument("the core symptom set needs at least three symptoms");
    if (datasets.size() < 2) throw std::invalid_argument("align_datasets needs at least two datasets");
    for (std::size_t s = 0; s < datasets.size(); ++s) {
        for (const auto& id : core) {
            if (!datasets[s].index_of(id)) {
                throw std::invalid_argument("core symptom '" + id + "' is missing from dataset '" +
                                            (s < names.size() ? names[s] : std::to_string(s)) + "'");
            }
        }
    }
    return aligned_impl(datasets, names, static_cast<int>(datasets.size()) - 1, strength, params, &core);
}

std::vector<Ribbon> interpolate_ribbon(const AlignedEmbeddingSet& set, int steps_per_gap) {
    if (steps_per_gap < 1) throw std::invalid_argument("steps_per_gap must be at least 1");

    std::vector<std::string> symptoms;
    for (const auto& e : set.embeddings) {
        for (const auto& id : e.labels) {
            if (std::find(symptoms.begin(), symptoms.end(), id) == symptoms.end()) symptoms.push_back(id);
        }
    }

    std::vector<Ribbon> out;
    for (const auto& id : symptoms) {
        Ribbon rib{id, {}};
        std::vector<std::array<double, 3>> current;
        std::optional<Eigen::RowVector2d> prev;
        for (std::size_t s = 0; s < set.strata.size(); ++s) {
            const long e = set.embedding_at(s);
            std::optional<std::size_t> idx;
            if (e >= 0) {
                const auto& labels = set.embeddings[static_cast<std::size_t>(e)].labels;
                const auto it = std::find(labels.begin(), labels.end(), id);
                if (it != labels.end()) idx = static_cast<std::size_t>(it - labels.begin());
            }
            if (!idx) {
                if (!current.empty()) rib.segments.push_back(std::move(current));
                current.clear();
                prev.reset();
                continue;
            }
            const Eigen::RowVector2d here =
                set.embeddings[static_cast<std::size_t>(e)].coords.row(static_cast<Eigen::Index>(*idx));
            const double z = static_cast<double>(s);
            if (prev) {
                for (int k = 1; k < steps_per_gap; ++k) {
                    const double t = static_cast<double>(k) / steps_per_gap;
                    const Eigen::RowVector2d v = (1.0 - t) * *prev + t * here;
                    current.push_back({v(0), v(1), z - 1.0 + t});
                }
            }
            current.push_back({here(0), here(1), z});
            prev = here;
        }
        if (!current.empty()) rib.segments.push_back(std::move(current));
        out.push_back(std::move(rib));
    }
    return out;
}

}  // namespace symco::umap

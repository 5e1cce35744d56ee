#pragma once

// Two-dimensional UMAP layouts of symptoms from a precomputed distance matrix,
// and aligned layouts across ordered strata or across datasets.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symco/distance.hpp"

namespace symco::umap {

/// Symmetric neighbour graph. `weights` and `directed` are p x p row-major;
/// a zero entry means no edge.
struct FuzzyGraph {
    std::size_t p = 0;
    std::vector<double> directed;
    std::vector<double> weights;
    std::vector<double> rho;
    std::vector<double> sigma;
    int n_neighbours = 0;
    std::vector<std::string> warnings;

    double weight(std::size_t a, std::size_t b) const { return weights[a * p + b]; }
    double directed_weight(std::size_t a, std::size_t b) const { return directed[a * p + b]; }
    bool connected() const;
    /// Graph with the given symmetric weights and no directed detail.
    static FuzzyGraph from_weights(std::size_t p, std::vector<double> weights);
};

/// Each node links to its n_neighbours - 1 nearest other nodes (the node itself
/// counts as the first neighbour). rho is the nearest distance; sigma is solved
/// so the directed weights of a node sum to log2(n_neighbours).
FuzzyGraph fuzzy_graph(const DistanceMatrix& d, int n_neighbours);

struct EmbedParams {
    int n_neighbours = 4;
    double min_dist = 0.1;
    double spread = 1.0;
    int n_epochs = 500;
    double learning_rate = 1.0;
    int negative_sample_rate = 5;
    double repulsion_strength = 1.0;
    std::uint64_t seed = 20211;
    std::string preset = "custom";

    static EmbedParams tight();
    static EmbedParams loose();
    static EmbedParams from_preset(const std::string& name);
};

/// Parameters of the low-dimensional similarity 1 / (1 + a d^(2b)).
struct Curve {
    double a = 0.0;
    double b = 0.0;
};

/// Least-squares fit of the curve to 1 below min_dist and exp(-(d - min_dist) / spread) above.
Curve fit_curve(double min_dist, double spread = 1.0);

struct Embedding {
    std::vector<std::string> labels;
    Eigen::MatrixXd coords;  ///< p x 2
    EmbedParams params;
    std::string init;        ///< "spectral" or "random"
    std::vector<std::string> warnings;

    /// Largest pairwise distance between embedded points.
    double diameter() const;
};

/// Spectral layout from the normalized graph Laplacian, scaled into [0, 10]^2.
/// Falls back to a seeded uniform layout when the graph is disconnected or the
/// solve is degenerate; `spectral` reports which was used.
Eigen::MatrixXd initial_layout(const FuzzyGraph& g, std::uint64_t seed, bool* spectral = nullptr);

Embedding embed(const FuzzyGraph& g, const std::vector<std::string>& labels, const EmbedParams& params);
/// Builds the graph with params.n_neighbours and embeds it. Refuses matrices with undefined entries.
Embedding embed(const DistanceMatrix& d, const EmbedParams& params);

/// Pairs of symptom indices that one embedding shares with another.
struct Relation {
    std::size_t from = 0;  ///< index into AlignedEmbeddingSet::embeddings
    std::size_t to = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

struct AlignedEmbeddingSet {
    std::vector<std::string> strata;      ///< every input slice, in order
    std::vector<std::size_t> positions;   ///< slice index of each embedding
    std::vector<Embedding> embeddings;    ///< slices that were embedded
    std::vector<Relation> relations;
    int window = 1;
    double strength = 0.0;
    std::vector<std::string> warnings;

    /// Index into `embeddings` for a slice, or -1 when it was skipped.
    long embedding_at(std::size_t position) const;
};

inline constexpr double kDefaultAlignmentStrength = 0.5;

struct AlignOptions {
    int window = 2;
    double strength = kDefaultAlignmentStrength;
    EmbedParams params = EmbedParams::tight();
};

/// Seed used for slice s.
std::uint64_t stratum_seed(std::uint64_t seed, std::size_t s);

/// Joint layout of ordered slices. Slices with fewer than three symptoms are
/// skipped with a warning. Strength 0 gives the independent embed() layouts.
AlignedEmbeddingSet aligned_embed(const std::vector<DistanceMatrix>& slices, const std::vector<std::string>& names,
                                  const AlignOptions& opts = {});

/// Aligns datasets with different vocabularies through the shared core symptoms
/// only. Every pair of datasets is related.
AlignedEmbeddingSet align_datasets(const std::vector<DistanceMatrix>& datasets, const std::vector<std::string>& names,
                                   const std::vector<std::string>& core, double strength,
                                   const EmbedParams& params);

struct Ribbon {
    std::string symptom;
    /// Each segment is a polyline of (x, y, slice position).
    std::vector<std::vector<std::array<double, 3>>> segments;
};

/// Linear interpolation between consecutive slices; a ribbon breaks wherever
/// the symptom is absent from a slice.
std::vector<Ribbon> interpolate_ribbon(const AlignedEmbeddingSet& set, int steps_per_gap);

}  // namespace symco::umap

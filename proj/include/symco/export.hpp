#pragma once

// JSON artifacts. Every artifact carries a "kind" field and is checked by
// validate() before it is written.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "symco/cohort.hpp"
#include "symco/distance.hpp"
#include "symco/hclust.hpp"
#include "symco/lpca.hpp"
#include "symco/umap.hpp"

namespace symco::artifact {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

class SchemaError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Counts, symptomatic split, age and sex summaries, frequencies among
/// symptomatic cases grouped by category and, when given, stratum sizes.
json cohort_summary(const Cohort& cohort, const std::vector<Stratum>* strata = nullptr);

json distance_json(const DistanceMatrix& d);
/// Square CSV with a header row; undefined entries are written as NA.
std::string distance_csv(const DistanceMatrix& d);

/// Merges, Newick string, leaf order and the distance matrix in that order.
json dendrogram_json(const Dendrogram& tree, const DistanceMatrix& d);

/// Model fields plus per-component loading bars. `scan` and `selection` are optional.
json lpca_json(const lpca::LpcaModel& model, const std::vector<SymptomDef>& symptoms,
               const lpca::DevianceScan* scan = nullptr, const lpca::KSelection* selection = nullptr);

json params_json(const umap::EmbedParams& params);
/// `frequency` holds one proportion per label and sets the scatter radius.
json embedding_json(const umap::Embedding& e, const std::vector<double>& frequency);

json aligned_json(const umap::AlignedEmbeddingSet& set, const std::vector<umap::Ribbon>& ribbons,
                  const std::vector<std::vector<double>>& frequency);

/// Throws SchemaError naming the first offending field.
void validate(const json& artifact);

/// Writes `j` with two-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

}  // namespace symco::artifact

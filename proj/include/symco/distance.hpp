#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "symco/cohort.hpp"
#include "symco/kernels.hpp"

namespace symco {

/// Jaccard distance of two columns under pairwise deletion.
struct PairDistance {
    std::optional<double> distance;  ///< nullopt when no jointly observed case has either symptom
    std::size_t support = 0;         ///< cases observed for both
    std::size_t both = 0;
    std::size_t either = 0;
};

PairDistance jaccard_pair(std::span<const Obs> a, std::span<const Obs> b);

/// Symmetric labelled distance matrix. Undefined entries are stored as NaN and
/// surfaced through `at()` as nullopt; `value()` refuses to read them.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    /// `values` is row-major p x p, NaN for undefined. `support` may be empty.
    DistanceMatrix(std::vector<std::string> labels, std::vector<double> values,
                   std::vector<std::size_t> support = {});
    /// Convenience for hand-written matrices.
    static DistanceMatrix from_rows(std::vector<std::string> labels, const std::vector<std::vector<double>>& rows);

    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    std::optional<std::size_t> index_of(std::string_view label) const;

    std::optional<double> at(std::size_t a, std::size_t b) const;
    double value(std::size_t a, std::size_t b) const;
    std::size_t support(std::size_t a, std::size_t b) const;
    bool has_support() const { return !support_.empty(); }

    bool fully_defined() const;
    std::vector<std::pair<std::size_t, std::size_t>> undefined_pairs() const;

    const std::vector<std::string>& warnings() const { return warnings_; }
    void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

    /// Rows and columns permuted to `order` (entries are old indices).
    DistanceMatrix reordered(std::span<const std::size_t> order) const;

    const std::vector<double>& raw() const { return values_; }

private:
    std::vector<std::string> labels_;
    std::vector<double> values_;
    std::vector<std::size_t> support_;
    std::vector<std::string> warnings_;
};

/// All pairwise Jaccard distances between the cohort's symptom columns. Undefined
/// off-diagonal pairs are listed in `warnings()`; a symptom undefined against
/// every other symptom is an error.
DistanceMatrix jaccard_matrix(const Cohort& cohort, kernels::Backend backend = kernels::Backend::parallel);

}  // namespace symco

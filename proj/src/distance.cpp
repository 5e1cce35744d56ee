#include "symco/distance.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace symco {

namespace {

constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

std::optional<double> jaccard_from_counts(std::uint64_t both, std::uint64_t either) {
    if (either == 0) return std::nullopt;
    return 1.0 - static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace

PairDistance jaccard_pair(std::span<const Obs> a, std::span<const Obs> b) {
    if (a.size() != b.size()) throw std::invalid_argument("jaccard_pair: columns differ in length");
    PairDistance out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == Obs::missing || b[i] == Obs::missing) continue;
        ++out.support;
        const bool pa = a[i] == Obs::present;
        const bool pb = b[i] == Obs::present;
        if (pa && pb) ++out.both;
        if (pa || pb) ++out.either;
    }
    out.distance = jaccard_from_counts(out.both, out.either);
    return out;
}

DistanceMatrix::DistanceMatrix(std::vector<std::string> labels, std::vector<double> values,
                               std::vector<std::size_t> support)
    : labels_(std::move(labels)), values_(std::move(values)), support_(std::move(support)) {
    const std::size_t p = labels_.size();
    if (values_.size() != p * p) throw std::invalid_argument("distance matrix must be square over its labels");
    if (!support_.empty() && support_.size() != p * p) {
        throw std::invalid_argument("support matrix must match the distance matrix");
    }
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b) {
            const double v = values_[a * p + b];
            const double w = values_[b * p + a];
            if (std::isnan(v) != std::isnan(w) || (!std::isnan(v) && v != w)) {
                throw std::invalid_argument("distance matrix is not symmetric at (" + labels_[a] + ", " +
                                            labels_[b] + ")");
            }
            if (!std::isnan(v) && (v < 0.0 || std::isinf(v))) {
                throw std::invalid_argument("distance matrix has a negative or infinite entry");
            }
        }
    }
}

DistanceMatrix DistanceMatrix::from_rows(std::vector<std::string> labels,
                                         const std::vector<std::vector<double>>& rows) {
    std::vector<double> values;
    for (const auto& r : rows) {
        if (r.size() != rows.size()) throw std::invalid_argument("distance rows must be square");
        values.insert(values.end(), r.begin(), r.end());
    }
    return DistanceMatrix(std::move(labels), std::move(values));
}

std::optional<std::size_t> DistanceMatrix::index_of(std::string_view label) const {
    for (std::size_t a = 0; a < labels_.size(); ++a) {
        if (labels_[a] == label) return a;
    }
    return std::nullopt;
}

std::optional<double> DistanceMatrix::at(std::size_t a, std::size_t b) const {
    const double v = values_.at(a * size() + b);
    if (std::isnan(v)) return std::nullopt;
    return v;
}

double DistanceMatrix::value(std::size_t a, std::size_t b) const {
    auto v = at(a, b);
    if (!v) {
        throw std::domain_error("distance between '" + labels_[a] + "' and '" + labels_[b] +
                                "' is undefined (no supporting cases)");
    }
    return *v;
}

std::size_t DistanceMatrix::support(std::size_t a, std::size_t b) const {
    return support_.empty() ? 0 : support_.at(a * size() + b);
}

bool DistanceMatrix::fully_defined() const {
    for (double v : values_) {
        if (std::isnan(v)) return false;
    }
    return true;
}

std::vector<std::pair<std::size_t, std::size_t>> DistanceMatrix::undefined_pairs() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t a = 0; a < size(); ++a) {
        for (std::size_t b = a; b < size(); ++b) {
            if (std::isnan(values_[a * size() + b])) out.emplace_back(a, b);
        }
    }
    return out;
}

DistanceMatrix DistanceMatrix::reordered(std::span<const std::size_t> order) const {
    const std::size_t p = size();
    if (order.size() != p) throw std::invalid_argument("reorder needs a full permutation");
    std::vector<std::string> labels(p);
    std::vector<double> values(p * p);
    std::vector<std::size_t> support(support_.empty() ? 0 : p * p);
    for (std::size_t i = 0; i < p; ++i) {
        labels[i] = labels_.at(order[i]);
        for (std::size_t j = 0; j < p; ++j) {
            values[i * p + j] = values_[order[i] * p + order[j]];
            if (!support.empty()) support[i * p + j] = support_[order[i] * p + order[j]];
        }
    }
    DistanceMatrix out(std::move(labels), std::move(values), std::move(support));
    out.warnings_ = warnings_;
    return out;
}

DistanceMatrix jaccard_matrix(const Cohort& cohort, kernels::Backend backend) {
    const std::size_t p = cohort.n_symptoms();
    if (p < 2) throw std::invalid_argument("jaccard_matrix needs at least two symptoms");

    const auto counts = kernels::pair_counts(cohort.matrix(), backend);
    std::vector<double> values(p * p, kUndefined);
    std::vector<std::size_t> support(p * p);
    for (std::size_t k = 0; k < p * p; ++k) {
        if (auto d = jaccard_from_counts(counts.both[k], counts.either[k])) values[k] = *d;
        support[k] = static_cast<std::size_t>(counts.support[k]);
    }

    auto labels = cohort.symptom_ids();
    std::vector<std::string> warnings;
    for (std::size_t a = 0; a < p; ++a) {
        std::size_t undefined = 0;
        for (std::size_t b = 0; b < p; ++b) {
            if (b == a || !std::isnan(values[a * p + b])) continue;
            ++undefined;
            if (b > a) {
                warnings.push_back("no jointly observed case reports '" + labels[a] + "' or '" + labels[b] +
                                   "'; distance undefined");
            }
        }
        if (undefined == p - 1) {
            throw std::domain_error("symptom '" + labels[a] +
                                    "' has no defined distance to any other symptom; drop the column");
        }
        if (std::isnan(values[a * p + a])) {
            warnings.push_back("symptom '" + labels[a] + "' is never reported; self-distance undefined");
        }
    }

    DistanceMatrix out(std::move(labels), std::move(values), std::move(support));
    for (auto& w : warnings) out.add_warning(std::move(w));
    return out;
}

}  // namespace symco

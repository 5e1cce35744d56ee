#include "symco/cohort.hpp"

#include <algorithm>
#include <unordered_set>

namespace symco {

std::string_view to_string(Category c) {
    switch (c) {
        case Category::systemic: return "systemic";
        case Category::lower_respiratory: return "lower_respiratory";
        case Category::upper_respiratory: return "upper_respiratory";
        case Category::gastrointestinal: return "gastrointestinal";
        case Category::altered_state: return "altered_state";
        case Category::other: return "other";
    }
    return "other";
}

Category parse_category(std::string_view token) {
    for (Category c : kAllCategories) {
        if (to_string(c) == token) return c;
    }
    throw std::invalid_argument("unknown symptom category '" + std::string(token) + "'");
}

BinarizationRule::BinarizationRule(std::string symptom, std::vector<std::string> levels,
                                   std::string_view threshold)
    : symptom_(std::move(symptom)), levels_(std::move(levels)) {
    if (levels_.size() < 2) {
        throw std::invalid_argument("rule for '" + symptom_ + "' needs at least two levels");
    }
    std::unordered_set<std::string> seen;
    for (const auto& l : levels_) {
        if (!seen.insert(l).second) {
            throw std::invalid_argument("rule for '" + symptom_ + "' repeats level '" + l + "'");
        }
    }
    auto it = std::find(levels_.begin(), levels_.end(), threshold);
    if (it == levels_.end()) {
        throw std::invalid_argument("threshold '" + std::string(threshold) + "' is not a level of '" +
                                    symptom_ + "'");
    }
    threshold_ = static_cast<std::size_t>(it - levels_.begin());
}

std::optional<Obs> BinarizationRule::apply(std::string_view token) const {
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (levels_[i] == token) return i >= threshold_ ? Obs::present : Obs::absent;
    }
    return std::nullopt;
}

const BinarizationRule* Taxonomy::rule_for(std::string_view symptom) const {
    for (const auto& r : rules) {
        if (r.symptom() == symptom) return &r;
    }
    return nullptr;
}

const SymptomDef* Taxonomy::find(std::string_view symptom) const {
    for (const auto& s : symptoms) {
        if (s.id == symptom) return &s;
    }
    return nullptr;
}

std::vector<Obs> BinaryMatrix::column(std::size_t a) const {
    std::vector<Obs> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, a);
    return out;
}

bool BinaryMatrix::row_has_present(std::size_t i) const {
    auto r = row(i);
    return std::find(r.begin(), r.end(), Obs::present) != r.end();
}

std::size_t BinaryMatrix::missing_count() const {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), Obs::missing));
}

BinaryMatrix BinaryMatrix::select_rows(std::span<const std::size_t> rows) const {
    BinaryMatrix out(rows.size(), cols_);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto src = row(rows[r]);
        std::copy(src.begin(), src.end(), out.cells_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
    }
    return out;
}

BinaryMatrix BinaryMatrix::select_cols(std::span<const std::size_t> cols) const {
    BinaryMatrix out(rows_, cols.size());
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t c = 0; c < cols.size(); ++c) out(i, c) = (*this)(i, cols[c]);
    }
    return out;
}

Cohort::Cohort(std::vector<CaseRecord> cases, std::vector<SymptomDef> symptoms, BinaryMatrix x)
    : cases_(std::move(cases)), symptoms_(std::move(symptoms)), x_(std::move(x)) {
    if (x_.rows() != cases_.size()) {
        throw CohortError("matrix has " + std::to_string(x_.rows()) + " rows but there are " +
                          std::to_string(cases_.size()) + " cases");
    }
    if (x_.cols() != symptoms_.size()) {
        throw CohortError("matrix has " + std::to_string(x_.cols()) + " columns but there are " +
                          std::to_string(symptoms_.size()) + " symptoms");
    }
    std::unordered_set<std::string> ids;
    for (const auto& s : symptoms_) {
        if (!ids.insert(s.id).second) throw CohortError("duplicate symptom id '" + s.id + "'");
    }
}

std::vector<std::string> Cohort::symptom_ids() const {
    std::vector<std::string> out;
    out.reserve(symptoms_.size());
    for (const auto& s : symptoms_) out.push_back(s.id);
    return out;
}

std::optional<std::size_t> Cohort::symptom_index(std::string_view id) const {
    for (std::size_t a = 0; a < symptoms_.size(); ++a) {
        if (symptoms_[a].id == id) return a;
    }
    return std::nullopt;
}

Cohort Cohort::select_rows(std::span<const std::size_t> rows) const {
    std::vector<CaseRecord> cases;
    cases.reserve(rows.size());
    for (auto r : rows) cases.push_back(cases_.at(r));
    return Cohort(std::move(cases), symptoms_, x_.select_rows(rows));
}

Cohort Cohort::select_symptoms(std::span<const std::string> ids) const {
    std::vector<std::size_t> cols;
    std::vector<SymptomDef> defs;
    for (const auto& id : ids) {
        auto a = symptom_index(id);
        if (!a) throw CohortError("cohort has no symptom '" + id + "'");
        cols.push_back(*a);
        defs.push_back(symptoms_[*a]);
    }
    return Cohort(cases_, std::move(defs), x_.select_cols(cols));
}

bool Cohort::all_rows_symptomatic() const {
    for (std::size_t i = 0; i < x_.rows(); ++i) {
        if (!x_.row_has_present(i)) return false;
    }
    return true;
}

FilterResult filter_symptomatic(const Cohort& cohort) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < cohort.n_cases(); ++i) {
        if (cohort.matrix().row_has_present(i)) keep.push_back(i);
    }
    if (keep.empty()) {
        throw CohortError("no case reports any symptom; nothing left after the symptomatic filter");
    }
    FilterResult out{cohort.select_rows(keep), keep.size(), cohort.n_cases() - keep.size()};
    return out;
}

StratificationScheme::StratificationScheme(Kind kind, std::vector<AgeBand> bands)
    : kind_(kind), bands_(std::move(bands)) {
    if (bands_.empty()) throw std::invalid_argument("stratification needs at least one band");
    for (std::size_t b = 0; b < bands_.size(); ++b) {
        const auto& band = bands_[b];
        if (band.hi && *band.hi <= band.lo) {
            throw std::invalid_argument("age band '" + band.label + "' is empty");
        }
        if (b + 1 < bands_.size()) {
            if (!band.hi) throw std::invalid_argument("only the last age band may be open-ended");
            if (bands_[b + 1].lo < *band.hi) {
                throw std::invalid_argument("age bands '" + band.label + "' and '" + bands_[b + 1].label +
                                            "' overlap or are out of order");
            }
        }
    }
}

StratificationScheme StratificationScheme::broad() {
    return {Kind::broad, {{0, 18, "0-17"}, {18, 55, "18-54"}, {55, std::nullopt, "55+"}}};
}

StratificationScheme StratificationScheme::decade(int open_from) {
    if (open_from < 10 || open_from % 10 != 0) {
        throw std::invalid_argument("decade scheme needs an open band starting at a positive multiple of 10");
    }
    std::vector<AgeBand> bands;
    for (int lo = 0; lo < open_from; lo += 10) {
        bands.push_back({lo, lo + 10, std::to_string(lo) + "-" + std::to_string(lo + 9)});
    }
    bands.push_back({open_from, std::nullopt, std::to_string(open_from) + "+"});
    return {Kind::decade, std::move(bands)};
}

StratificationScheme StratificationScheme::custom(std::vector<AgeBand> bands) {
    for (auto& b : bands) {
        if (b.label.empty()) {
            b.label = std::to_string(b.lo) + (b.hi ? "-" + std::to_string(*b.hi - 1) : "+");
        }
    }
    return {Kind::custom, std::move(bands)};
}

std::optional<std::size_t> StratificationScheme::band_of(std::optional<int> age) const {
    if (!age) return std::nullopt;
    for (std::size_t b = 0; b < bands_.size(); ++b) {
        if (bands_[b].contains(*age)) return b;
    }
    return std::nullopt;
}

std::vector<Stratum> stratify(const Cohort& cohort, const StratificationScheme& scheme) {
    std::vector<std::vector<std::size_t>> rows(scheme.bands().size());
    for (std::size_t i = 0; i < cohort.n_cases(); ++i) {
        if (auto b = scheme.band_of(cohort.cases()[i].age)) rows[*b].push_back(i);
    }
    std::vector<Stratum> out;
    out.reserve(rows.size());
    for (std::size_t b = 0; b < rows.size(); ++b) {
        const auto& band = scheme.bands()[b];
        out.push_back({band.label, band, cohort.select_rows(rows[b]), rows[b]});
    }
    return out;
}

FrequencyTable symptom_frequencies(const Cohort& cohort) {
    FrequencyTable table;
    if (!cohort.all_rows_symptomatic()) {
        table.warnings.push_back("cohort contains cases with no present symptom; frequencies are not "
                                 "conditional on being symptomatic");
    }
    const auto& x = cohort.matrix();
    for (std::size_t a = 0; a < cohort.n_symptoms(); ++a) {
        SymptomFrequency f;
        f.id = cohort.symptoms()[a].id;
        f.category = cohort.symptoms()[a].category;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            Obs o = x(i, a);
            if (o == Obs::missing) continue;
            ++f.observed;
            if (o == Obs::present) ++f.present;
        }
        if (f.observed > 0) f.proportion = static_cast<double>(f.present) / static_cast<double>(f.observed);
        table.rows.push_back(std::move(f));
    }
    return table;
}

}  // namespace symco

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace symco {

/// One cell of the case x symptom matrix.
enum class Obs : std::uint8_t { absent = 0, present = 1, missing = 2 };

enum class Category {
    systemic,
    lower_respiratory,
    upper_respiratory,
    gastrointestinal,
    altered_state,
    other
};

inline constexpr std::array<Category, 6> kAllCategories = {
    Category::systemic,         Category::lower_respiratory, Category::upper_respiratory,
    Category::gastrointestinal, Category::altered_state,     Category::other};

std::string_view to_string(Category c);
Category parse_category(std::string_view token);

/// Symptoms reported in every dataset; cross-dataset alignment is anchored on these.
inline constexpr std::array<std::string_view, 7> kCoreSymptoms = {
    "cough", "diarrhoea", "fatigue", "fever", "headache", "muscle_ache", "sore_throat"};

struct SymptomDef {
    std::string id;
    std::string label;
    Category category = Category::other;
};

/// Maps an ordinal response scale onto present/absent. Levels at or above the
/// threshold are present, levels below it absent, anything else missing.
class BinarizationRule {
public:
    BinarizationRule(std::string symptom, std::vector<std::string> levels, std::string_view threshold);

    const std::string& symptom() const { return symptom_; }
    const std::vector<std::string>& levels() const { return levels_; }
    const std::string& threshold() const { return levels_[threshold_]; }

    /// nullopt when the token is not one of the levels.
    std::optional<Obs> apply(std::string_view token) const;

private:
    std::string symptom_;
    std::vector<std::string> levels_;
    std::size_t threshold_ = 0;
};

/// Symptom declarations plus the ordinal rules for a dataset's vocabulary.
struct Taxonomy {
    std::vector<SymptomDef> symptoms;
    std::vector<BinarizationRule> rules;

    const BinarizationRule* rule_for(std::string_view symptom) const;
    const SymptomDef* find(std::string_view symptom) const;
};

/// Row-major n x p matrix of observations.
class BinaryMatrix {
public:
    BinaryMatrix() = default;
    BinaryMatrix(std::size_t rows, std::size_t cols, Obs fill = Obs::absent)
        : rows_(rows), cols_(cols), cells_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Obs operator()(std::size_t i, std::size_t a) const { return cells_[i * cols_ + a]; }
    Obs& operator()(std::size_t i, std::size_t a) { return cells_[i * cols_ + a]; }

    std::span<const Obs> row(std::size_t i) const { return {cells_.data() + i * cols_, cols_}; }
    std::vector<Obs> column(std::size_t a) const;
    bool row_has_present(std::size_t i) const;
    std::size_t missing_count() const;

    BinaryMatrix select_rows(std::span<const std::size_t> rows) const;
    BinaryMatrix select_cols(std::span<const std::size_t> cols) const;

    friend bool operator==(const BinaryMatrix&, const BinaryMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Obs> cells_;
};

struct CaseRecord {
    std::string id;
    std::optional<int> age;
    std::optional<std::string> sex;

    friend bool operator==(const CaseRecord&, const CaseRecord&) = default;
};

/// Immutable case x symptom data set. Safe to share read-only between threads.
class Cohort {
public:
    Cohort() = default;
    Cohort(std::vector<CaseRecord> cases, std::vector<SymptomDef> symptoms, BinaryMatrix x);

    std::size_t n_cases() const { return cases_.size(); }
    std::size_t n_symptoms() const { return symptoms_.size(); }
    const std::vector<CaseRecord>& cases() const { return cases_; }
    const std::vector<SymptomDef>& symptoms() const { return symptoms_; }
    const BinaryMatrix& matrix() const { return x_; }

    std::vector<std::string> symptom_ids() const;
    std::optional<std::size_t> symptom_index(std::string_view id) const;

    Cohort select_rows(std::span<const std::size_t> rows) const;
    Cohort select_symptoms(std::span<const std::string> ids) const;

    /// Every row has at least one present entry.
    bool all_rows_symptomatic() const;

private:
    std::vector<CaseRecord> cases_;
    std::vector<SymptomDef> symptoms_;
    BinaryMatrix x_;
};

class CohortError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FilterResult {
    Cohort cohort;
    std::size_t retained = 0;
    std::size_t dropped = 0;
};

/// Keeps the rows with at least one present symptom. Throws CohortError if none remain.
FilterResult filter_symptomatic(const Cohort& cohort);

/// Half-open age interval [lo, hi); hi == nullopt is unbounded above.
struct AgeBand {
    int lo = 0;
    std::optional<int> hi;
    std::string label;

    bool contains(int age) const { return age >= lo && (!hi || age < *hi); }
};

class StratificationScheme {
public:
    enum class Kind { broad, decade, custom };

    /// 0-17, 18-54, 55+.
    static StratificationScheme broad();
    /// 0-9, 10-19, ... with an open-ended band starting at `open_from`.
    static StratificationScheme decade(int open_from = 90);
    static StratificationScheme custom(std::vector<AgeBand> bands);

    Kind kind() const { return kind_; }
    const std::vector<AgeBand>& bands() const { return bands_; }
    std::optional<std::size_t> band_of(std::optional<int> age) const;

private:
    StratificationScheme(Kind kind, std::vector<AgeBand> bands);
    Kind kind_;
    std::vector<AgeBand> bands_;
};

struct Stratum {
    std::string label;
    AgeBand band;
    Cohort cohort;
    std::vector<std::size_t> source_rows;

    bool empty() const { return cohort.n_cases() == 0; }
};

/// One stratum per band, in band order. Cases without an age fall in none.
std::vector<Stratum> stratify(const Cohort& cohort, const StratificationScheme& scheme);

struct SymptomFrequency {
    std::string id;
    Category category = Category::other;
    std::size_t present = 0;
    std::size_t observed = 0;
    std::optional<double> proportion;
};

struct FrequencyTable {
    std::vector<SymptomFrequency> rows;
    std::vector<std::string> warnings;
};

FrequencyTable symptom_frequencies(const Cohort& cohort);

}  // namespace symco

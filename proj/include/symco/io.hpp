#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "symco/cohort.hpp"

namespace symco {

/// Parse error carrying the source name and 1-based line.
class IngestError : public std::runtime_error {
public:
    IngestError(const std::string& source, std::size_t line, const std::string& what);
    const std::string& source() const { return source_; }
    std::size_t line() const { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

// Rule files: one declaration per line, '#' starts a comment.
//
//   fatigue = systemic | Fatigue
//   fatigue : none < mild < severe @ severe
//
// The first form declares a symptom, its category and an optional display
// label. The second attaches an ordinal binarization rule to a declared symptom.
Taxonomy parse_taxonomy(std::istream& in, std::string_view source = "<rules>");
Taxonomy load_taxonomy(const std::filesystem::path& path);
std::string format_taxonomy(const Taxonomy& taxonomy);

/// Reads a case x symptom CSV with `case_id`, `age`, `sex` and one column per
/// declared symptom. Cells are 0, 1, NA, empty, or a level of the column's rule.
Cohort read_cohort_csv(std::istream& in, const Taxonomy& taxonomy, std::string_view source = "<csv>");
Cohort ingest_csv(const std::filesystem::path& path, const Taxonomy& taxonomy);

/// Writes the post-rule binary matrix in the format read_cohort_csv accepts.
void write_cohort_csv(std::ostream& out, const Cohort& cohort);

/// Same layout with each symptom cell rendered by `cell(row, column, value)`.
using CellFormatter = std::function<std::string(std::size_t, std::size_t, Obs)>;
void write_cohort_csv(std::ostream& out, const Cohort& cohort, const CellFormatter& cell);

}  // namespace symco

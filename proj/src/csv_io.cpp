#include <charconv>
#include <fstream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "symco/io.hpp"
#include "text.hpp"

namespace symco {

namespace {

bool is_missing_token(std::string_view t) { return t.empty() || t == "NA"; }

std::optional<int> parse_age(std::string_view token, const std::string& src, std::size_t line) {
    if (is_missing_token(token)) return std::nullopt;
    int v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size() || v < 0) {
        throw IngestError(src, line, "age '" + std::string(token) + "' is not a non-negative whole number");
    }
    return v;
}

std::vector<std::string> read_record(const std::string& line, const std::string& src, std::size_t line_no) {
    try {
        return text::split_csv(line);
    } catch (const boost::escaped_list_error& e) {
        throw IngestError(src, line_no, std::string("malformed CSV record: ") + e.what());
    }
}

}  // namespace

Cohort read_cohort_csv(std::istream& in, const Taxonomy& taxonomy, std::string_view source) {
    const std::string src(source);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw IngestError(src, 0, "empty file, expected a header row");
    ++line_no;
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = read_record(line, src, line_no);

    std::optional<std::size_t> id_col, age_col, sex_col;
    // column index -> symptom index in taxonomy order
    std::unordered_map<std::size_t, std::size_t> symptom_col;
    std::unordered_set<std::string> seen;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& name = header[c];
        if (!seen.insert(name).second) throw IngestError(src, line_no, "duplicate column '" + name + "'");
        if (name == "case_id") {
            id_col = c;
        } else if (name == "age") {
            age_col = c;
        } else if (name == "sex") {
            sex_col = c;
        } else {
            std::optional<std::size_t> idx;
            for (std::size_t a = 0; a < taxonomy.symptoms.size(); ++a) {
                if (taxonomy.symptoms[a].id == name) idx = a;
            }
            if (!idx) throw IngestError(src, line_no, "unknown symptom column '" + name + "'");
            symptom_col[c] = *idx;
        }
    }
    if (!id_col || !age_col || !sex_col) {
        throw IngestError(src, line_no, "header must contain case_id, age and sex columns");
    }
    for (const auto& s : taxonomy.symptoms) {
        if (!seen.contains(s.id)) throw IngestError(src, line_no, "declared symptom '" + s.id + "' has no column");
    }

    std::vector<const BinarizationRule*> rules(taxonomy.symptoms.size());
    for (std::size_t a = 0; a < rules.size(); ++a) rules[a] = taxonomy.rule_for(taxonomy.symptoms[a].id);

    const std::size_t p = taxonomy.symptoms.size();
    std::vector<CaseRecord> cases;
    std::vector<Obs> cells;
    std::unordered_set<std::string> ids;

    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        auto fields = read_record(line, src, line_no);
        if (fields.size() != header.size()) {
            throw IngestError(src, line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                                std::to_string(fields.size()));
        }
        CaseRecord rec;
        rec.id = fields[*id_col];
        if (rec.id.empty()) throw IngestError(src, line_no, "empty case_id");
        if (!ids.insert(rec.id).second) throw IngestError(src, line_no, "duplicate case id '" + rec.id + "'");
        rec.age = parse_age(fields[*age_col], src, line_no);
        if (!is_missing_token(fields[*sex_col])) rec.sex = fields[*sex_col];

        std::vector<Obs> row(p, Obs::missing);
        for (const auto& [c, a] : symptom_col) {
            const auto& tok = fields[c];
            Obs v;
            if (tok == "1") {
                v = Obs::present;
            } else if (tok == "0") {
                v = Obs::absent;
            } else if (is_missing_token(tok)) {
                v = Obs::missing;
            } else if (rules[a]) {
                // A level outside the rule's scale is treated as a non-response.
                v = rules[a]->apply(tok).value_or(Obs::missing);
            } else {
                throw IngestError(src, line_no, "column '" + header[c] + "': token '" + tok +
                                                    "' is not 0/1/NA and no rule covers it");
            }
            row[a] = v;
        }
        cells.insert(cells.end(), row.begin(), row.end());
        cases.push_back(std::move(rec));
    }

    BinaryMatrix x(cases.size(), p);
    for (std::size_t i = 0; i < cases.size(); ++i) {
        for (std::size_t a = 0; a < p; ++a) x(i, a) = cells[i * p + a];
    }
    return Cohort(std::move(cases), taxonomy.symptoms, std::move(x));
}

Cohort ingest_csv(const std::filesystem::path& path, const Taxonomy& taxonomy) {
    std::ifstream in(path);
    if (!in) throw IngestError(path.string(), 0, "cannot open input file");
    return read_cohort_csv(in, taxonomy, path.string());
}

void write_cohort_csv(std::ostream& out, const Cohort& cohort, const CellFormatter& cell) {
    out << "case_id,age,sex";
    for (const auto& s : cohort.symptoms()) out << ',' << text::quote_csv(s.id);
    out << '\n';
    const auto& x = cohort.matrix();
    for (std::size_t i = 0; i < cohort.n_cases(); ++i) {
        const auto& c = cohort.cases()[i];
        out << text::quote_csv(c.id) << ',' << (c.age ? std::to_string(*c.age) : "NA") << ','
            << (c.sex ? text::quote_csv(*c.sex) : "NA");
        for (std::size_t a = 0; a < x.cols(); ++a) out << ',' << cell(i, a, x(i, a));
        out << '\n';
    }
}

void write_cohort_csv(std::ostream& out, const Cohort& cohort) {
    write_cohort_csv(out, cohort, [](std::size_t, std::size_t, Obs v) -> std::string {
        switch (v) {
            case Obs::present: return "1";
            case Obs::absent: return "0";
            case Obs::missing: break;
        }
        return "NA";
    });
}

}  // namespace symco

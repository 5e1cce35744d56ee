#include <fstream>
#include <sstream>
#include <unordered_set>

#include "symco/io.hpp"
#include "text.hpp"

namespace symco {

IngestError::IngestError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), source_(source), line_(line) {}

namespace {

struct PendingRule {
    std::string symptom;
    std::vector<std::string> levels;
    std::string threshold;
    std::size_t line;
};

}  // namespace

Taxonomy parse_taxonomy(std::istream& in, std::string_view source) {
    const std::string src(source);
    Taxonomy tax;
    std::vector<PendingRule> pending;
    std::unordered_set<std::string> declared, ruled;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        if (line.empty()) continue;

        auto eq = line.find('=');
        auto colon = line.find(':');
        if (eq != std::string_view::npos && (colon == std::string_view::npos || eq < colon)) {
            std::string id(text::trim(line.substr(0, eq)));
            std::string_view rest = text::trim(line.substr(eq + 1));
            std::string label = id;
            if (auto bar = rest.find('|'); bar != std::string_view::npos) {
                label = std::string(text::trim(rest.substr(bar + 1)));
                rest = text::trim(rest.substr(0, bar));
            }
            if (id.empty()) throw IngestError(src, line_no, "symptom declaration without an id");
            if (!declared.insert(id).second) throw IngestError(src, line_no, "symptom '" + id + "' declared twice");
            try {
                tax.symptoms.push_back({id, label, parse_category(rest)});
            } catch (const std::invalid_argument& e) {
                throw IngestError(src, line_no, e.what());
            }
        } else if (colon != std::string_view::npos) {
            std::string id(text::trim(line.substr(0, colon)));
            std::string_view rest = line.substr(colon + 1);
            auto at = rest.find('@');
            if (at == std::string_view::npos) {
                throw IngestError(src, line_no, "rule for '" + id + "' has no '@ threshold'");
            }
            PendingRule r{id, {}, std::string(text::trim(rest.substr(at + 1))), line_no};
            for (auto level : text::split(rest.substr(0, at), '<')) r.levels.emplace_back(text::trim(level));
            if (!ruled.insert(id).second) throw IngestError(src, line_no, "second rule for '" + id + "'");
            pending.push_back(std::move(r));
        } else {
            throw IngestError(src, line_no, "expected 'id = category' or 'id : levels @ threshold'");
        }
    }

    for (auto& r : pending) {
        if (!declared.contains(r.symptom)) {
            throw IngestError(src, r.line, "rule for undeclared symptom '" + r.symptom + "'");
        }
        try {
            tax.rules.emplace_back(r.symptom, std::move(r.levels), r.threshold);
        } catch (const std::invalid_argument& e) {
            throw IngestError(src, r.line, e.what());
        }
    }
    return tax;
}

Taxonomy load_taxonomy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError(path.string(), 0, "cannot open rule file");
    return parse_taxonomy(in, path.string());
}

std::string format_taxonomy(const Taxonomy& taxonomy) {
    std::ostringstream out;
    for (const auto& s : taxonomy.symptoms) {
        out << s.id << " = " << to_string(s.category);
        if (s.label != s.id) out << " | " << s.label;
        out << '\n';
    }
    for (const auto& r : taxonomy.rules) {
        out << r.symptom() << " :";
        for (std::size_t i = 0; i < r.levels().size(); ++i) out << (i ? " < " : " ") << r.levels()[i];
        out << " @ " << r.threshold() << '\n';
    }
    return out.str();
}

}  // namespace symco

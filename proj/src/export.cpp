#include "symco/export.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace symco::artifact {

namespace {

json matrix_rows(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

json distance_values(const DistanceMatrix& d) {
    json values = json::array();
    for (double v : d.raw()) {
        if (std::isnan(v)) values.push_back(nullptr);
        else values.push_back(v);
    }
    return values;
}

}  // namespace

json cohort_summary(const Cohort& cohort, const std::vector<Stratum>* strata) {
    json out;
    out["kind"] = "cohort_summary";
    out["schema_version"] = kSchemaVersion;

    const auto& x = cohort.matrix();
    std::size_t symptomatic = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) symptomatic += x.row_has_present(i) ? 1 : 0;
    const std::size_t n = cohort.n_cases();
    out["counts"] = {{"cases", n},
                     {"symptoms", cohort.n_symptoms()},
                     {"symptomatic", symptomatic},
                     {"asymptomatic", n - symptomatic},
                     {"symptomatic_proportion", n ? static_cast<double>(symptomatic) / static_cast<double>(n) : 0.0},
                     {"missing_cells", x.missing_count()}};

    std::vector<double> ages;
    std::map<std::string, std::size_t> sexes;
    std::size_t sex_missing = 0;
    for (const auto& c : cohort.cases()) {
        if (c.age) ages.push_back(*c.age);
        if (c.sex) ++sexes[*c.sex];
        else ++sex_missing;
    }
    std::sort(ages.begin(), ages.end());
    json age = {{"observed", ages.size()}, {"missing", n - ages.size()}};
    if (!ages.empty()) {
        double sum = 0.0;
        for (double a : ages) sum += a;
        age["mean"] = sum / static_cast<double>(ages.size());
        age["median"] = quantile(ages, 0.5);
        age["q1"] = quantile(ages, 0.25);
        age["q3"] = quantile(ages, 0.75);
    }
    out["age"] = age;
    json sex = json::object();
    for (const auto& [k, v] : sexes) sex[k] = v;
    sex["missing"] = sex_missing;
    out["sex"] = sex;

    // Frequencies are among symptomatic cases.
    const auto table = symptomatic ? symptom_frequencies(filter_symptomatic(cohort).cohort) : symptom_frequencies(cohort);
    json groups = json::array();
    for (Category cat : kAllCategories) {
        json rows = json::array();
        for (const auto& r : table.rows) {
            if (r.category != cat) continue;
            json row = {{"symptom", r.id}, {"present", r.present}, {"observed", r.observed}};
            row["proportion"] = r.proportion ? json(*r.proportion) : json(nullptr);
            rows.push_back(std::move(row));
        }
        if (!rows.empty()) groups.push_back({{"category", std::string(to_string(cat))}, {"symptoms", rows}});
    }
    out["frequencies"] = groups;
    out["warnings"] = table.warnings;

    if (strata) {
        json s = json::array();
        for (const auto& st : *strata) s.push_back({{"label", st.label}, {"cases", st.cohort.n_cases()}});
        out["strata"] = s;
    }
    return out;
}

json distance_json(const DistanceMatrix& d) {
    json out;
    out["kind"] = "distance";
    out["schema_version"] = kSchemaVersion;
    out["labels"] = d.labels();
    out["D"] = distance_values(d);
    json support = json::array();
    for (std::size_t a = 0; a < d.size(); ++a) {
        for (std::size_t b = 0; b < d.size(); ++b) support.push_back(d.has_support() ? d.support(a, b) : 0);
    }
    out["support"] = support;
    out["warnings"] = d.warnings();
    return out;
}

std::string distance_csv(const DistanceMatrix& d) {
    std::ostringstream os;
    os.precision(17);
    os << "symptom";
    for (const auto& l : d.labels()) os << ',' << l;
    os << '\n';
    for (std::size_t a = 0; a < d.size(); ++a) {
        os << d.labels()[a];
        for (std::size_t b = 0; b < d.size(); ++b) {
            const auto v = d.at(a, b);
            os << ',';
            if (v) os << *v;
            else os << "NA";
        }
        os << '\n';
    }
    return os.str();
}

json dendrogram_json(const Dendrogram& tree, const DistanceMatrix& d) {
    json out;
    out["kind"] = "dendrogram";
    out["schema_version"] = kSchemaVersion;
    out["leaves"] = tree.leaves();
    json merges = json::array();
    for (const auto& m : tree.merges()) {
        merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
    }
    out["merges"] = merges;
    out["newick"] = to_newick(tree);
    const auto order = leaf_order(tree);
    out["order"] = order;
    const auto reordered = d.reordered(order);
    out["heatmap"] = {{"labels", reordered.labels()}, {"D", distance_values(reordered)}};
    return out;
}

json lpca_json(const lpca::LpcaModel& model, const std::vector<SymptomDef>& symptoms,
               const lpca::DevianceScan* scan, const lpca::KSelection* selection) {
    if (static_cast<Eigen::Index>(symptoms.size()) != model.offsets.size()) {
        throw std::invalid_argument("one symptom per model row is required");
    }
    json out;
    out["kind"] = "lpca";
    out["schema_version"] = kSchemaVersion;
    json labels = json::array();
    for (const auto& s : symptoms) labels.push_back(s.id);
    out["labels"] = labels;
    out["U"] = matrix_rows(model.loadings);
    out["mu"] = std::vector<double>(model.offsets.data(), model.offsets.data() + model.offsets.size());
    out["m"] = model.m;
    out["k"] = model.k;
    out["fit_deviance"] = model.fit_deviance;
    out["null_deviance"] = model.null_deviance;
    out["converged"] = model.converged;
    out["iterations"] = model.iterations;

    json bars = json::array();
    for (Eigen::Index j = 0; j < model.loadings.cols(); ++j) {
        json rows = json::array();
        for (std::size_t a = 0; a < symptoms.size(); ++a) {
            rows.push_back({{"symptom", symptoms[a].id},
                            {"loading", model.loadings(static_cast<Eigen::Index>(a), j)},
                            {"category", std::string(to_string(symptoms[a].category))}});
        }
        bars.push_back({{"component", j + 1}, {"rows", rows}});
    }
    out["bars"] = bars;

    if (scan) {
        out["P"] = scan->explained();
        out["M"] = scan->marginal();
        json records = json::array();
        for (const auto& r : scan->records) {
            records.push_back({{"k", r.k},
                               {"m", r.m},
                               {"explained", r.explained},
                               {"marginal", r.marginal},
                               {"cv_deviance", r.cv_deviance},
                               {"cv_by_m", r.cv_by_m},
                               {"fit_deviance", r.fit_deviance},
                               {"converged", r.converged}});
        }
        out["scan"] = {{"m_grid", scan->m_grid},
                       {"folds", scan->folds},
                       {"null_deviance", scan->null_deviance},
                       {"records", records},
                       {"warnings", scan->warnings}};
    } else {
        out["P"] = {0.0, model.explained()};
        out["M"] = {model.explained()};
    }
    if (selection) {
        out["selection"] = {{"k", selection->k},
                            {"ambiguous", selection->ambiguous},
                            {"candidates", selection->candidates},
                            {"rationale", selection->rationale}};
    }
    return out;
}

json params_json(const umap::EmbedParams& p) {
    return {{"n_neighbours", p.n_neighbours},
            {"min_dist", p.min_dist},
            {"spread", p.spread},
            {"n_epochs", p.n_epochs},
            {"learning_rate", p.learning_rate},
            {"negative_sample_rate", p.negative_sample_rate},
            {"repulsion_strength", p.repulsion_strength},
            {"seed", p.seed},
            {"preset", p.preset}};
}

namespace {

json embedding_body(const umap::Embedding& e, const std::vector<double>& frequency) {
    if (frequency.size() != e.labels.size()) throw std::invalid_argument("one frequency per label is required");
    json out;
    out["labels"] = e.labels;
    out["coords"] = matrix_rows(e.coords);
    out["frequency"] = frequency;
    out["params"] = params_json(e.params);
    out["seed"] = e.params.seed;
    out["preset"] = e.params.preset;
    out["init"] = e.init;
    out["warnings"] = e.warnings;
    return out;
}

}  // namespace

json embedding_json(const umap::Embedding& e, const std::vector<double>& frequency) {
    json out = embedding_body(e, frequency);
    out["kind"] = "embedding";
    out["schema_version"] = kSchemaVersion;
    return out;
}

json aligned_json(const umap::AlignedEmbeddingSet& set, const std::vector<umap::Ribbon>& ribbons,
                  const std::vector<std::vector<double>>& frequency) {
    if (frequency.size() != set.embeddings.size()) throw std::invalid_argument("one frequency list per embedding");
    json out;
    out["kind"] = "aligned";
    out["schema_version"] = kSchemaVersion;
    out["strata"] = set.strata;
    out["positions"] = set.positions;
    out["window"] = set.window;
    out["strength"] = set.strength;
    json embeddings = json::array();
    for (std::size_t i = 0; i < set.embeddings.size(); ++i) {
        embeddings.push_back(embedding_body(set.embeddings[i], frequency[i]));
    }
    out["embeddings"] = embeddings;
    json rel = json::array();
    for (const auto& r : set.relations) rel.push_back({{"from", r.from}, {"to", r.to}, {"pairs", r.pairs}});
    out["relations"] = rel;
    json rib = json::array();
    for (const auto& r : ribbons) rib.push_back({{"symptom", r.symptom}, {"segments", r.segments}});
    out["ribbons"] = rib;
    out["warnings"] = set.warnings;
    return out;
}

namespace {

void fail(const std::string& kind, const std::string& field, const std::string& why) {
    throw SchemaError(kind + "." + field + ": " + why);
}

const json& field(const json& j, const std::string& kind, const std::string& name) {
    if (!j.contains(name)) fail(kind, name, "missing");
    return j.at(name);
}

void number_or_null(const json& v, const std::string& kind, const std::string& name) {
    if (!v.is_number() && !v.is_null()) fail(kind, name, "expected a number or null");
}

void string_array(const json& v, const std::string& kind, const std::string& name) {
    if (!v.is_array()) fail(kind, name, "expected an array");
    for (const auto& e : v) {
        if (!e.is_string()) fail(kind, name, "expected strings");
    }
}

void number_array(const json& v, const std::string& kind, const std::string& name, std::size_t size,
                  bool nullable = false) {
    if (!v.is_array()) fail(kind, name, "expected an array");
    if (v.size() != size) fail(kind, name, "expected " + std::to_string(size) + " entries");
    for (const auto& e : v) {
        if (nullable) number_or_null(e, kind, name);
        else if (!e.is_number()) fail(kind, name, "expected numbers");
    }
}

void matrix(const json& v, const std::string& kind, const std::string& name, std::size_t rows, std::size_t cols) {
    if (!v.is_array() || v.size() != rows) fail(kind, name, "expected " + std::to_string(rows) + " rows");
    for (const auto& r : v) number_array(r, kind, name, cols);
}

void validate_embedding(const json& j, const std::string& kind) {
    string_array(field(j, kind, "labels"), kind, "labels");
    const auto p = j["labels"].size();
    matrix(field(j, kind, "coords"), kind, "coords", p, 2);
    number_array(field(j, kind, "frequency"), kind, "frequency", p);
    const auto& params = field(j, kind, "params");
    if (!params.is_object()) fail(kind, "params", "expected an object");
    for (const char* key : {"n_neighbours", "min_dist", "n_epochs", "seed"}) {
        if (!params.contains(key) || !params[key].is_number()) fail(kind, std::string("params.") + key, "missing");
    }
    if (!field(j, kind, "seed").is_number_unsigned()) fail(kind, "seed", "expected an unsigned integer");
    if (!field(j, kind, "preset").is_string()) fail(kind, "preset", "expected a string");
}

}  // namespace

void validate(const json& a) {
    if (!a.is_object()) throw SchemaError("artifact is not a JSON object");
    if (!a.contains("kind") || !a["kind"].is_string()) throw SchemaError("artifact has no kind");
    const std::string kind = a["kind"];
    if (field(a, kind, "schema_version") != kSchemaVersion) fail(kind, "schema_version", "unsupported version");

    if (kind == "cohort_summary") {
        const auto& counts = field(a, kind, "counts");
        for (const char* key : {"cases", "symptomatic", "asymptomatic"}) {
            if (!counts.contains(key) || !counts[key].is_number_unsigned()) fail(kind, std::string("counts.") + key, "missing");
        }
        if (counts["symptomatic"].get<std::size_t>() + counts["asymptomatic"].get<std::size_t>() !=
            counts["cases"].get<std::size_t>()) {
            fail(kind, "counts", "symptomatic and asymptomatic do not add up");
        }
        if (!field(a, kind, "age").is_object()) fail(kind, "age", "expected an object");
        if (!field(a, kind, "sex").is_object()) fail(kind, "sex", "expected an object");
        const auto& freq = field(a, kind, "frequencies");
        if (!freq.is_array()) fail(kind, "frequencies", "expected an array");
        for (const auto& g : freq) {
            if (!g.contains("category") || !g.contains("symptoms")) fail(kind, "frequencies", "malformed group");
        }
    } else if (kind == "distance") {
        string_array(field(a, kind, "labels"), kind, "labels");
        const auto p = a["labels"].size();
        number_array(field(a, kind, "D"), kind, "D", p * p, true);
        number_array(field(a, kind, "support"), kind, "support", p * p);
        for (std::size_t i = 0; i < p * p; ++i) {
            const auto& v = a["D"][i];
            if (v.is_number() && !(v.get<double>() >= 0.0 && v.get<double>() <= 1.0)) {
                fail(kind, "D", "entry outside [0, 1]");
            }
        }
    } else if (kind == "dendrogram") {
        string_array(field(a, kind, "leaves"), kind, "leaves");
        const auto p = a["leaves"].size();
        const auto& merges = field(a, kind, "merges");
        if (!merges.is_array() || merges.size() + 1 != std::max<std::size_t>(p, 1)) {
            fail(kind, "merges", "expected p - 1 merges");
        }
        double prev = 0.0;
        for (const auto& m : merges) {
            for (const char* key : {"left", "right", "height", "size"}) {
                if (!m.contains(key) || !m[key].is_number()) fail(kind, std::string("merges.") + key, "missing");
            }
            if (m["height"].get<double>() < prev) fail(kind, "merges", "heights decrease");
            prev = m["height"].get<double>();
        }
        if (!field(a, kind, "newick").is_string()) fail(kind, "newick", "expected a string");
        number_array(field(a, kind, "order"), kind, "order", p);
        const auto& hm = field(a, kind, "heatmap");
        if (!hm.contains("labels")) fail(kind, "heatmap.labels", "missing");
        string_array(hm["labels"], kind, "heatmap.labels");
        if (!hm.contains("D")) fail(kind, "heatmap.D", "missing");
        number_array(hm["D"], kind, "heatmap.D", p * p, true);
    } else if (kind == "lpca") {
        string_array(field(a, kind, "labels"), kind, "labels");
        const auto p = a["labels"].size();
        const auto& k = field(a, kind, "k");
        if (!k.is_number_integer()) fail(kind, "k", "expected an integer");
        matrix(field(a, kind, "U"), kind, "U", p, k.get<std::size_t>());
        number_array(field(a, kind, "mu"), kind, "mu", p);
        for (const char* key : {"m", "fit_deviance"}) {
            if (!field(a, kind, key).is_number()) fail(kind, key, "expected a number");
        }
        if (!field(a, kind, "converged").is_boolean()) fail(kind, "converged", "expected a boolean");
        const auto& P = field(a, kind, "P");
        number_array(P, kind, "P", P.size());
        const auto& M = field(a, kind, "M");
        number_array(M, kind, "M", P.size() ? P.size() - 1 : 0);
        const auto& bars = field(a, kind, "bars");
        if (!bars.is_array() || bars.size() != k.get<std::size_t>()) fail(kind, "bars", "expected one entry per component");
    } else if (kind == "embedding") {
        validate_embedding(a, kind);
    } else if (kind == "aligned") {
        string_array(field(a, kind, "strata"), kind, "strata");
        const auto& emb = field(a, kind, "embeddings");
        if (!emb.is_array()) fail(kind, "embeddings", "expected an array");
        for (const auto& e : emb) validate_embedding(e, kind + ".embeddings");
        number_array(field(a, kind, "positions"), kind, "positions", emb.size());
        const auto& rib = field(a, kind, "ribbons");
        if (!rib.is_array()) fail(kind, "ribbons", "expected an array");
        for (const auto& r : rib) {
            if (!r.contains("symptom") || !r.contains("segments")) fail(kind, "ribbons", "malformed ribbon");
            for (const auto& seg : r["segments"]) {
                for (const auto& pt : seg) number_array(pt, kind, "ribbons.segments", 3);
            }
        }
    } else {
        throw SchemaError("unknown artifact kind '" + kind + "'");
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

}  // namespace symco::artifact

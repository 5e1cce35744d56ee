#include "symco/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include <openssl/evp.h>

#include "symco/hclust.hpp"
#include "symco/io.hpp"
#include "symco/svg.hpp"

namespace symco::pipeline {

namespace fs = std::filesystem;

namespace {

const std::map<std::string, Command>& command_names() {
    static const std::map<std::string, Command> names = {
        {"describe", Command::describe}, {"jaccard", Command::jaccard}, {"hclust", Command::hclust},
        {"lpca", Command::lpca},         {"umap", Command::umap},       {"aligned", Command::aligned},
        {"pipeline", Command::pipeline}};
    return names;
}

}  // namespace

Command parse_command(const std::string& name) {
    const auto it = command_names().find(name);
    if (it == command_names().end()) throw std::invalid_argument("unknown command '" + name + "'");
    return it->second;
}

std::string to_string(Command c) {
    for (const auto& [name, cmd] : command_names()) {
        if (cmd == c) return name;
    }
    return "?";
}

json Config::to_json() const {
    return {{"command", pipeline::to_string(command)},
            {"input", input},
            {"rules", rules},
            {"strata", strata},
            {"preset", preset},
            {"seed", seed},
            {"svg", svg},
            {"k_max", k_max},
            {"m_grid", m_grid},
            {"cv_folds", cv_folds},
            {"ribbon_steps", ribbon_steps}};
}

Config Config::from_json(const json& j) {
    Config c;
    c.command = parse_command(j.at("command").get<std::string>());
    c.input = j.at("input").get<std::string>();
    c.rules = j.at("rules").get<std::string>();
    c.strata = j.at("strata").get<std::string>();
    c.preset = j.at("preset").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.svg = j.at("svg").get<bool>();
    c.k_max = j.at("k_max").get<int>();
    c.m_grid = j.at("m_grid").get<std::vector<double>>();
    c.cv_folds = j.at("cv_folds").get<int>();
    c.ribbon_steps = j.at("ribbon_steps").get<int>();
    return c;
}

void Config::validate() const {
    if (input.empty()) throw std::invalid_argument("--input is required");
    if (rules.empty()) throw std::invalid_argument("--rules is required");
    if (strata != "none" && strata != "broad" && strata != "decade") {
        throw std::invalid_argument("--strata must be none, broad or decade");
    }
    if (preset != "tight" && preset != "loose") throw std::invalid_argument("--preset must be tight or loose");
    if (command == Command::aligned && strata == "none") {
        throw std::invalid_argument("the aligned command needs --strata broad or decade");
    }
    if (k_max < 1) throw std::invalid_argument("k_max must be at least 1");
    if (m_grid.empty()) throw std::invalid_argument("m grid is empty");
    if (cv_folds < 2) throw std::invalid_argument("cv_folds must be at least 2");
    if (ribbon_steps < 1) throw std::invalid_argument("ribbon_steps must be at least 1");
}

fs::path default_output(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
    return kDefaultOutput;
}

bool Manifest::complete() const {
    return std::all_of(stages.begin(), stages.end(), [](const StageRecord& s) { return s.status == "ok"; });
}

json Manifest::to_json() const {
    json st = json::array();
    for (const auto& s : stages) {
        json arts = json::array();
        for (const auto& a : s.artifacts) arts.push_back({{"path", a.path}, {"kind", a.kind}, {"sha256", a.sha256}});
        json rec = {{"name", s.name}, {"status", s.status}, {"params", s.params}, {"artifacts", arts},
                    {"warnings", s.warnings}};
        if (!s.error.empty()) rec["error"] = s.error;
        st.push_back(std::move(rec));
    }
    return {{"tool", "symco"},
            {"schema_version", artifact::kSchemaVersion},
            {"status", complete() ? "complete" : "partial"},
            {"config", config.to_json()},
            {"inputs", {{"input", {{"path", config.input}, {"sha256", input_sha256}}},
                        {"rules", {{"path", config.rules}, {"sha256", rules_sha256}}}}},
            {"stages", st}};
}

Manifest Manifest::from_json(const json& j) {
    Manifest m;
    m.config = Config::from_json(j.at("config"));
    m.input_sha256 = j.at("inputs").at("input").at("sha256").get<std::string>();
    m.rules_sha256 = j.at("inputs").at("rules").at("sha256").get<std::string>();
    for (const auto& s : j.at("stages")) {
        StageRecord rec;
        rec.name = s.at("name").get<std::string>();
        rec.status = s.at("status").get<std::string>();
        rec.error = s.value("error", "");
        rec.params = s.at("params");
        rec.warnings = s.at("warnings").get<std::vector<std::string>>();
        for (const auto& a : s.at("artifacts")) {
            rec.artifacts.push_back({a.at("path").get<std::string>(), a.at("kind").get<std::string>(),
                                     a.at("sha256").get<std::string>()});
        }
        m.stages.push_back(std::move(rec));
    }
    return m;
}

int exit_code(const Manifest& m) { return m.complete() ? 0 : 1; }

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
    return os.str();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

namespace {

struct Context {
    const Config& config;
    fs::path out;
    std::optional<Cohort> raw;
    std::optional<Cohort> cohort;  // symptomatic cases
    std::optional<DistanceMatrix> distance;
};

class Writer {
public:
    Writer(const fs::path& out, StageRecord& stage) : out_(out), stage_(stage) {}

    void text(const std::string& name, const std::string& kind, const std::string& body) {
        std::ofstream f(out_ / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (out_ / name).string());
        f << body;
        if (!f) throw std::runtime_error("write failed for " + (out_ / name).string());
        stage_.artifacts.push_back({name, kind, sha256_hex(body)});
    }

    void artifact(const std::string& name, const json& j) {
        artifact::validate(j);
        text(name, j.at("kind").get<std::string>(), j.dump(2) + "\n");
    }

private:
    fs::path out_;
    StageRecord& stage_;
};

std::vector<double> proportions(const Cohort& c, const std::vector<std::string>& labels) {
    const auto table = symptom_frequencies(c);
    std::vector<double> out;
    for (const auto& l : labels) {
        double v = 0.0;
        for (const auto& r : table.rows) {
            if (r.id == l && r.proportion) v = *r.proportion;
        }
        out.push_back(v);
    }
    return out;
}

std::optional<StratificationScheme> scheme_of(const std::string& name) {
    if (name == "broad") return StratificationScheme::broad();
    if (name == "decade") return StratificationScheme::decade();
    return std::nullopt;
}

// Distances inside one stratum, restricted to symptoms present there and with
// every pair defined.
DistanceMatrix stratum_distance(const Cohort& c, std::vector<std::string>& warnings, const std::string& label) {
    if (c.n_cases() == 0) return {};
    std::vector<std::string> keep;
    for (const auto& r : symptom_frequencies(c).rows) {
        if (r.present > 0) keep.push_back(r.id);
    }
    while (keep.size() >= 2) {
        const auto d = jaccard_matrix(c.select_symptoms(keep));
        const auto bad = d.undefined_pairs();
        if (bad.empty()) {
            if (keep.size() < c.n_symptoms()) {
                warnings.push_back("stratum '" + label + "': " + std::to_string(c.n_symptoms() - keep.size()) +
                                   " symptoms without usable co-occurrence data dropped");
            }
            return d;
        }
        // Drop the symptom in the most undefined pairs.
        std::vector<std::size_t> hits(keep.size(), 0);
        for (auto [a, b] : bad) {
            ++hits[a];
            ++hits[b];
        }
        keep.erase(keep.begin() + (std::max_element(hits.begin(), hits.end()) - hits.begin()));
    }
    warnings.push_back("stratum '" + label + "' has fewer than two usable symptoms");
    return {};
}

using StageFn = std::function<void(Context&, StageRecord&, Writer&)>;

void stage_ingest(Context& ctx, StageRecord& rec, Writer&) {
    const auto taxonomy = load_taxonomy(ctx.config.rules);
    ctx.raw = ingest_csv(ctx.config.input, taxonomy);
    auto filtered = filter_symptomatic(*ctx.raw);
    rec.params = {{"cases", ctx.raw->n_cases()},
                  {"symptoms", ctx.raw->n_symptoms()},
                  {"symptomatic", filtered.retained},
                  {"dropped", filtered.dropped}};
    ctx.cohort = std::move(filtered.cohort);
}

void stage_describe(Context& ctx, StageRecord& rec, Writer& w) {
    const auto scheme = scheme_of(ctx.config.strata);
    std::vector<Stratum> strata;
    if (scheme) strata = stratify(*ctx.raw, *scheme);
    const auto summary = artifact::cohort_summary(*ctx.raw, scheme ? &strata : nullptr);
    rec.params = {{"strata", ctx.config.strata}};
    rec.warnings = summary.at("warnings").get<std::vector<std::string>>();
    w.artifact("cohort_summary.json", summary);
}

DistanceMatrix& need_distance(Context& ctx) {
    if (!ctx.distance) ctx.distance = jaccard_matrix(*ctx.cohort);
    return *ctx.distance;
}

void stage_distance(Context& ctx, StageRecord& rec, Writer& w) {
    const auto& d = need_distance(ctx);
    rec.params = {{"metric", "jaccard"}, {"missing", "pairwise deletion"}};
    rec.warnings = d.warnings();
    w.artifact("distance.json", artifact::distance_json(d));
    w.text("distance.csv", "distance_csv", artifact::distance_csv(d));
}

void stage_hclust(Context& ctx, StageRecord& rec, Writer& w) {
    const auto& d = need_distance(ctx);
    const auto tree = complete_linkage(d);
    const auto j = artifact::dendrogram_json(tree, d);
    rec.params = {{"linkage", "complete"}};
    w.artifact("dendrogram.json", j);
    if (ctx.config.svg) {
        w.text("heatmap.svg", "svg", svg::emit_svg(j, "heatmap"));
        w.text("dendrogram.svg", "svg", svg::emit_svg(j, "dendrogram"));
    }
}

void stage_lpca(Context& ctx, StageRecord& rec, Writer& w) {
    const auto& c = *ctx.cohort;
    lpca::ScanOptions opts;
    opts.k_max = std::min(ctx.config.k_max, static_cast<int>(c.n_symptoms()));
    opts.m_grid = ctx.config.m_grid;
    opts.cv_folds = ctx.config.cv_folds;
    opts.seed = ctx.config.seed;
    const auto scan = lpca::scan(c.matrix(), opts);
    const auto sel = lpca::select_k(scan);
    // Loadings come from the full-data fit at the selected k and its chosen m.
    const auto& model = scan.models.at(static_cast<std::size_t>(std::min(sel.k, opts.k_max) - 1));
    const auto j = artifact::lpca_json(model, c.symptoms(), &scan, &sel);
    rec.params = {{"k_max", opts.k_max}, {"m_grid", opts.m_grid}, {"cv_folds", opts.cv_folds},
                  {"seed", opts.seed},   {"k_hat", sel.k},        {"ambiguous", sel.ambiguous}};
    rec.warnings = scan.warnings;
    if (sel.ambiguous) rec.warnings.push_back(sel.rationale);
    w.artifact("lpca.json", j);
    if (ctx.config.svg) w.text("loadings.svg", "svg", svg::emit_svg(j, "loadings"));
}

StageFn stage_umap(const std::string& preset) {
    return [preset](Context& ctx, StageRecord& rec, Writer& w) {
        auto params = umap::EmbedParams::from_preset(preset);
        params.seed = ctx.config.seed;
        const auto e = umap::embed(need_distance(ctx), params);
        const auto j = artifact::embedding_json(e, proportions(*ctx.cohort, e.labels));
        rec.params = artifact::params_json(params);
        rec.warnings = e.warnings;
        w.artifact("embedding_" + preset + ".json", j);
        if (ctx.config.svg) w.text("embedding_" + preset + ".svg", "svg", svg::emit_svg(j, "embedding"));
    };
}

void stage_aligned(Context& ctx, StageRecord& rec, Writer& w) {
    const auto scheme = scheme_of(ctx.config.strata);
    if (!scheme) throw std::invalid_argument("aligned embedding needs a stratification scheme");
    const auto strata = stratify(*ctx.cohort, *scheme);
    std::vector<DistanceMatrix> slices;
    std::vector<std::string> names;
    for (const auto& s : strata) {
        slices.push_back(stratum_distance(s.cohort, rec.warnings, s.label));
        names.push_back(s.label);
    }
    umap::AlignOptions opts;
    opts.params.seed = ctx.config.seed;
    const auto set = umap::aligned_embed(slices, names, opts);
    const auto ribbons = umap::interpolate_ribbon(set, ctx.config.ribbon_steps);
    std::vector<std::vector<double>> freq;
    for (std::size_t i = 0; i < set.embeddings.size(); ++i) {
        freq.push_back(proportions(strata[set.positions[i]].cohort, set.embeddings[i].labels));
    }
    const auto j = artifact::aligned_json(set, ribbons, freq);
    rec.params = {{"scheme", ctx.config.strata},
                  {"window", opts.window},
                  {"strength", opts.strength},
                  {"ribbon_steps", ctx.config.ribbon_steps},
                  {"params", artifact::params_json(opts.params)}};
    for (const auto& wmsg : set.warnings) rec.warnings.push_back(wmsg);
    w.artifact("aligned.json", j);
    if (ctx.config.svg) w.text("aligned.svg", "svg", svg::emit_svg(j, "aligned"));
}

std::vector<std::pair<std::string, StageFn>> stages_for(const Config& c) {
    std::vector<std::pair<std::string, StageFn>> s{{"ingest", stage_ingest}};
    switch (c.command) {
        case Command::describe: s.emplace_back("describe", stage_describe); break;
        case Command::jaccard: s.emplace_back("distance", stage_distance); break;
        case Command::hclust:
            s.emplace_back("distance", stage_distance);
            s.emplace_back("hclust", stage_hclust);
            break;
        case Command::lpca: s.emplace_back("lpca", stage_lpca); break;
        case Command::umap: s.emplace_back("umap_" + c.preset, stage_umap(c.preset)); break;
        case Command::aligned: s.emplace_back("aligned", stage_aligned); break;
        case Command::pipeline:
            s.emplace_back("describe", stage_describe);
            s.emplace_back("distance", stage_distance);
            s.emplace_back("hclust", stage_hclust);
            s.emplace_back("lpca", stage_lpca);
            s.emplace_back("umap_tight", stage_umap("tight"));
            s.emplace_back("umap_loose", stage_umap("loose"));
            if (c.strata != "none") s.emplace_back("aligned", stage_aligned);
            break;
    }
    return s;
}

}  // namespace

Manifest run(const Config& config) {
    config.validate();
    fs::create_directories(config.out);

    Manifest m;
    m.config = config;
    const auto plan = stages_for(config);
    for (const auto& step : plan) {
        m.stages.emplace_back();
        m.stages.back().name = step.first;
    }

    Context ctx{config, config.out, {}, {}, {}};
    bool failed = false;
    try {
        m.input_sha256 = sha256_file(config.input);
        m.rules_sha256 = sha256_file(config.rules);
    } catch (const std::exception& e) {
        m.stages.front().status = "failed";
        m.stages.front().error = e.what();
        failed = true;
    }
    for (std::size_t i = 0; i < plan.size() && !failed; ++i) {
        auto& rec = m.stages[i];
        Writer w(config.out, rec);
        try {
            plan[i].second(ctx, rec, w);
            rec.status = "ok";
        } catch (const std::exception& e) {
            rec.status = "failed";
            rec.error = e.what();
            failed = true;
        }
    }
    artifact::write_json(config.out / kManifestName, m.to_json());
    return m;
}

ReplayResult replay(const fs::path& manifest_path, const fs::path& out) {
    const json recorded_json = artifact::read_json(manifest_path);
    const auto recorded = Manifest::from_json(recorded_json);
    Config config = recorded.config;
    config.out = out;

    ReplayResult result{run(config), {}};
    auto& mm = result.mismatches;
    if (result.rerun.input_sha256 != recorded.input_sha256) mm.push_back("input file differs from the recorded one");
    if (result.rerun.rules_sha256 != recorded.rules_sha256) mm.push_back("rule file differs from the recorded one");

    std::map<std::string, std::string> before, after;
    for (const auto& s : recorded.stages) {
        for (const auto& a : s.artifacts) before[a.path] = a.sha256;
    }
    for (const auto& s : result.rerun.stages) {
        for (const auto& a : s.artifacts) after[a.path] = sha256_file(out / a.path);
    }
    for (const auto& [path, hash] : before) {
        const auto it = after.find(path);
        if (it == after.end()) mm.push_back(path + ": not reproduced");
        else if (it->second != hash) mm.push_back(path + ": content differs");
    }
    for (const auto& [path, hash] : after) {
        if (!before.count(path)) mm.push_back(path + ": not in the recorded manifest");
    }
    if (sha256_file(out / kManifestName) != sha256_file(manifest_path)) mm.push_back("manifest differs");
    return result;
}

}  // namespace symco::pipeline

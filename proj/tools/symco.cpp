// symco: symptom co-occurrence analyses from the command line.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "symco/export.hpp"
#include "symco/io.hpp"
#include "symco/pipeline.hpp"
#include "symco/synth.hpp"

namespace {

using namespace symco;
namespace fs = std::filesystem;

struct Common {
    std::string input, rules, out, strata = "none", preset = "tight";
    std::uint64_t seed = pipeline::kDefaultSeed;
    bool svg = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_preset) {
    cmd->add_option("--input", c.input, "case x symptom CSV")->check(CLI::ExistingFile);
    cmd->add_option("--rules", c.rules, "symptom declarations and binarization rules")->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out, std::string("output directory (default $") + pipeline::kOutputEnv + " or " +
                                        pipeline::kDefaultOutput + ")");
    cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
    cmd->add_option("--strata", c.strata, "age stratification")
        ->check(CLI::IsMember({"none", "broad", "decade"}))
        ->capture_default_str();
    if (with_preset) {
        cmd->add_option("--preset", c.preset, "embedding preset")
            ->check(CLI::IsMember({"tight", "loose"}))
            ->capture_default_str();
    }
    cmd->add_flag("--svg", c.svg, "also write SVG figures");
}

int report(const pipeline::Manifest& m, const fs::path& out) {
    for (const auto& s : m.stages) {
        if (s.status == "failed") std::cerr << "symco: stage '" << s.name << "' failed: " << s.error << '\n';
        for (const auto& w : s.warnings) std::cerr << "symco: " << s.name << ": " << w << '\n';
    }
    std::cout << (out / pipeline::kManifestName).string() << '\n';
    return pipeline::exit_code(m);
}

int run_synth(const std::string& dataset, std::size_t n, std::uint64_t seed, const fs::path& out) {
    const auto& p = synth::preset(dataset);
    const auto spec = synth::preset_spec(p, n, seed);
    const auto g = synth::generate(spec);
    const auto taxonomy = p.taxonomy();
    fs::create_directories(out);

    std::ofstream csv(out / "cohort.csv", std::ios::binary);
    write_cohort_csv(csv, g.cohort, synth::ordinal_cells(g.cohort, taxonomy, seed));
    std::ofstream rules(out / "cohort.rules", std::ios::binary);
    rules << "# " << dataset << " preset, n = " << n << ", seed = " << seed << '\n' << format_taxonomy(taxonomy);

    artifact::json truth;
    truth["kind"] = "ground_truth";
    truth["dataset"] = dataset;
    truth["n"] = n;
    truth["seed"] = seed;
    artifact::json labels = artifact::json::array();
    for (const auto& s : spec.symptoms) labels.push_back(s.id);
    truth["labels"] = labels;
    artifact::json u = artifact::json::array();
    for (Eigen::Index r = 0; r < g.truth.loadings.rows(); ++r) {
        u.push_back({g.truth.loadings(r, 0), g.truth.loadings(r, 1)});
    }
    truth["loadings"] = u;
    truth["offsets"] = std::vector<double>(g.truth.offsets.data(), g.truth.offsets.data() + g.truth.offsets.size());
    truth["factor_scales"] = g.truth.factor_scales;
    truth["missing_rate"] = g.truth.missing_rate;
    std::size_t symptomatic = 0;
    for (std::size_t i = 0; i < g.cohort.n_cases(); ++i) symptomatic += g.cohort.matrix().row_has_present(i);
    truth["symptomatic_proportion"] = static_cast<double>(symptomatic) / static_cast<double>(n);
    artifact::write_json(out / "truth.json", truth);
    std::cout << (out / "cohort.csv").string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"symco: symptom co-occurrence clustering, logistic PCA and UMAP layouts"};
    app.require_subcommand(1);

    Common common;
    std::string replay;
    const std::vector<std::pair<pipeline::Command, std::string>> commands = {
        {pipeline::Command::describe, "cohort counts, age and sex summaries, symptom frequencies"},
        {pipeline::Command::jaccard, "pairwise Jaccard distances between symptoms"},
        {pipeline::Command::hclust, "complete-linkage dendrogram and heatmap order"},
        {pipeline::Command::lpca, "logistic PCA deviance scan, k selection and loadings"},
        {pipeline::Command::umap, "UMAP layout of the symptoms"},
        {pipeline::Command::aligned, "aligned UMAP layouts across age strata, with ribbons"},
        {pipeline::Command::pipeline, "every stage in sequence"}};
    std::map<CLI::App*, pipeline::Command> by_app;
    for (const auto& [cmd, help] : commands) {
        auto* sub = app.add_subcommand(pipeline::to_string(cmd), help);
        add_common(sub, common, cmd == pipeline::Command::umap);
        if (cmd == pipeline::Command::pipeline) {
            sub->add_option("--replay", replay, "re-run a manifest and compare the outputs byte for byte")
                ->check(CLI::ExistingFile);
        }
        by_app[sub] = cmd;
    }

    std::string dataset = "css";
    std::size_t n = 5000;
    std::string synth_out;
    std::uint64_t synth_seed = pipeline::kDefaultSeed;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic cohort, its rule file and ground truth");
    synth_cmd->add_option("--dataset", dataset, "preset")
        ->check(CLI::IsMember(synth::preset_names()))
        ->capture_default_str();
    synth_cmd->add_option("--n", n, "cases")->check(CLI::PositiveNumber)->capture_default_str();
    synth_cmd->add_option("--seed", synth_seed, "random seed")->capture_default_str();
    synth_cmd->add_option("--out", synth_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) return run_synth(dataset, n, synth_seed, pipeline::default_output(synth_out));

        for (const auto& [sub, cmd] : by_app) {
            if (!sub->parsed()) continue;
            const fs::path out = pipeline::default_output(common.out);
            if (!replay.empty()) {
                const auto r = pipeline::replay(replay, out);
                for (const auto& m : r.mismatches) std::cerr << "symco: replay: " << m << '\n';
                const int code = report(r.rerun, out);
                return r.identical() ? code : 2;
            }
            pipeline::Config config;
            config.command = cmd;
            config.input = common.input;
            config.rules = common.rules;
            config.out = out;
            config.strata = common.strata;
            config.preset = common.preset;
            config.seed = common.seed;
            config.svg = common.svg;
            return report(pipeline::run(config), out);
        }
    } catch (const std::exception& e) {
        std::cerr << "symco: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

#pragma once

// Staged analysis runs with a manifest of every artifact written.
//
// Each subcommand runs a subset of the stages below, in this order:
//
//   ingest -> describe -> distance -> hclust -> lpca -> umap_tight -> umap_loose -> aligned
//
// Stages run sequentially. The first failing stage stops the run; artifacts of
// completed stages stay on disk and the manifest is marked partial.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "symco/export.hpp"

namespace symco::pipeline {

using artifact::json;

inline constexpr std::uint64_t kDefaultSeed = 20211;
/// Environment variable naming the default output directory.
inline constexpr const char* kOutputEnv = "SYMCO_OUT";
inline constexpr const char* kDefaultOutput = "symco-out";

enum class Command { describe, jaccard, hclust, lpca, umap, aligned, pipeline };

Command parse_command(const std::string& name);
std::string to_string(Command c);

struct Config {
    Command command = Command::pipeline;
    std::string input;  ///< CSV path, recorded as given
    std::string rules;  ///< rule file path, recorded as given
    std::filesystem::path out;
    std::string strata = "none";   ///< none, broad or decade
    std::string preset = "tight";  ///< umap subcommand only; pipeline runs both
    std::uint64_t seed = kDefaultSeed;
    bool svg = false;
    int k_max = 6;
    std::vector<double> m_grid = {2, 4, 6, 8, 10, 12};
    int cv_folds = 10;
    int ribbon_steps = 8;

    /// Everything except `out`, so runs into different directories match.
    json to_json() const;
    static Config from_json(const json& j);
    /// Throws std::invalid_argument for bad values.
    void validate() const;
};

/// `--out`, else $SYMCO_OUT, else ./symco-out.
std::filesystem::path default_output(const std::string& flag);

struct ArtifactRecord {
    std::string path;  ///< relative to the output directory
    std::string kind;
    std::string sha256;
};

struct StageRecord {
    std::string name;
    std::string status = "not_run";  ///< ok, failed or not_run
    std::string error;
    json params = json::object();
    std::vector<ArtifactRecord> artifacts;
    std::vector<std::string> warnings;
};

struct Manifest {
    Config config;
    std::string input_sha256;
    std::string rules_sha256;
    std::vector<StageRecord> stages;

    /// True when every stage completed.
    bool complete() const;
    json to_json() const;
    static Manifest from_json(const json& j);
};

inline constexpr const char* kManifestName = "manifest.json";

/// Runs the stages of `config.command` and writes the manifest. Does not throw
/// for stage failures; they are recorded in the manifest.
Manifest run(const Config& config);

/// 0 iff the manifest lists no failed or skipped stage.
int exit_code(const Manifest& m);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct ReplayResult {
    Manifest rerun;
    std::vector<std::string> mismatches;  ///< empty when every byte matches
    bool identical() const { return mismatches.empty(); }
};

/// Re-runs the configuration recorded in `manifest_path` into `out` and
/// compares the new manifest and every artifact hash with the recorded ones.
ReplayResult replay(const std::filesystem::path& manifest_path, const std::filesystem::path& out);

}  // namespace symco::pipeline

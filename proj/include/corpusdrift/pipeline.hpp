#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "corpusdrift/corpus.hpp"
#include "corpusdrift/embedding.hpp"
#include "corpusdrift/parallel.hpp"
#include "corpusdrift/textprep.hpp"

namespace corpusdrift::pipeline {

inline constexpr const char* kVersion = "0.1.0";

// Defaults follow the published method parameters: two-year slices,
// Jelinek-Mercer lambda 0.05, Welch alpha 0.05, top 20 terms, 50-token
// minimum per bin.
struct RunConfig {
    std::filesystem::path corpus_path;
    std::filesystem::path embeddings_path;  // optional; EDE falls back to fetching
    std::filesystem::path out_dir = "out";
    std::filesystem::path cache_dir;        // empty = <out_dir>/cache

    int window = 2;
    int start_year = 0;  // 0 = first corpus year
    double lambda = 0.05;
    double alpha = 0.05;
    std::size_t top_k = 20;
    std::int64_t min_tokens = 50;
    double trend_smoothing = 1.0;  // display smoothing bandwidth, in bins
    bool whole_corpus_background = false;

    embedding::BandwidthRule bandwidth;  // scott | scott-global | fixed:<h>
    embedding::KernelMode kernel_mode = embedding::KernelMode::as_written;

    corpus::CohortSelector cohort;
    corpus::CorpusSchema schema;
    textprep::NormalizationConfig textprep;

    unsigned parallelism = 0;  // 0 = hardware concurrency; never affects outputs

    // Embedding fetch fallback (used only when embeddings_path is empty).
    std::string embed_endpoint;
    std::string embed_api_key;
    std::string embed_model = "text-embedding-3-large";
    std::size_t embed_batch_size = 64;

    // Canonical sorted-key form of every output-affecting field. Its hash
    // keys all caches and is stamped into every output file.
    std::string canonical_json() const;
    std::string config_hash() const;
};

enum class Stage { kld_sync, kld_async, ede, token_trends };

Stage parse_stage(const std::string& name);
std::string stage_name(Stage stage);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
    std::size_t computed = 0;    // freshly computed work units
    std::size_t cache_hits = 0;  // work units served from cache
};

struct RunManifest {
    std::string config_hash;
    std::string artifact_version;
    std::map<std::string, std::string> input_hashes;       // path -> sha256
    std::vector<StageTiming> stages;
    std::vector<std::pair<std::string, std::string>> outputs;  // relpath -> sha256
    std::vector<std::string> notes;
};

// Executes the requested stages, reusing caches keyed by stage-scoped
// config hashes, and writes <out_dir>/manifest.json. Missing prerequisites
// (e.g. EDE without embeddings) fail before any work starts.
RunManifest run(const RunConfig& config, const std::set<Stage>& stages);

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace corpusdrift::pipeline

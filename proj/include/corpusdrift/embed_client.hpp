#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "corpusdrift/corpus.hpp"
#include "corpusdrift/embedding.hpp"

namespace corpusdrift::embedding {

// Batch "texts in, vectors out" JSON contract:
//   POST <endpoint>  {"model": "<name>", "input": ["text", ...]}
//   200 -> {"data": [{"index": 0, "embedding": [..]}, ...]}
// Vectors are cached on disk keyed by (doc id, model name, text hash);
// cached documents cost no network calls.
struct FetchConfig {
    std::string endpoint;  // full URL, e.g. http://host:8080/v1/embeddings
    std::string api_key;   // sent as "Authorization: Bearer <key>"
    std::string model_name = "text-embedding-3-large";
    std::size_t batch_size = 64;
    std::filesystem::path cache_dir;
    int max_retries = 5;
    int backoff_initial_ms = 250;  // doubled per retry, for 429/5xx/transport errors
    unsigned concurrency = 2;      // in-flight request limit
};

struct FetchStats {
    std::size_t cache_hits = 0;
    std::size_t fetched = 0;
    std::size_t requests = 0;  // HTTP round trips, including retries
    std::size_t retries = 0;
};

struct FetchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

EmbeddingStore fetch_embeddings(const FetchConfig& config,
                                const std::vector<const corpus::Document*>& docs,
                                FetchStats* stats = nullptr);

}  // namespace corpusdrift::embedding

#include "corpusdrift/embed_client.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "corpusdrift/hashing.hpp"
#include "corpusdrift/parallel.hpp"

namespace corpusdrift::embedding {

namespace {

using nlohmann::json;

// Replace anything path-hostile in ids/model names used as file names.
std::string sanitize(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '-' || c == '_' || c == '.';
        out.push_back(ok ? c : '_');
    }
    return out;
}

std::filesystem::path cache_path(const FetchConfig& config, const corpus::Document& doc) {
    std::string text_hash = hashing::short_hash(doc.text, 16);
    return config.cache_dir / "embeddings" / sanitize(config.model_name) /
           (sanitize(doc.id) + "_" + text_hash + ".json");
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        out << content;
        if (!out) throw std::runtime_error("cannot write cache file: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // /v1/embeddings
};

Endpoint split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw FetchError("endpoint must be a full URL (got \"" + url + "\")");
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string now_utc_iso8601() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// One batch round trip with retry/backoff. Returns vectors in input order.
std::vector<std::vector<double>> post_batch(const FetchConfig& config, const Endpoint& endpoint,
                                            const std::vector<const corpus::Document*>& batch,
                                            FetchStats& stats, std::mutex& stats_mutex) {
    json request;
    request["model"] = config.model_name;
    auto& input = request["input"] = json::array();
    for (const auto* doc : batch) input.push_back(doc->text);
    const std::string body = request.dump();

    int backoff_ms = config.backoff_initial_ms;
    std::string last_error;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
            std::lock_guard<std::mutex> lock(stats_mutex);
            ++stats.retries;
        }
        httplib::Client client(endpoint.base);
        client.set_connection_timeout(30);
        client.set_read_timeout(120);
        httplib::Headers headers;
        if (!config.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config.api_key);
        {
            std::lock_guard<std::mutex> lock(stats_mutex);
            ++stats.requests;
        }
        auto res = client.Post(endpoint.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 401 || res->status == 403) {
            throw FetchError("embedding endpoint rejected credentials (HTTP " +
                             std::to_string(res->status) + ")");
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw FetchError("embedding endpoint returned HTTP " + std::to_string(res->status) +
                             ": " + res->body.substr(0, 200));
        }
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("data") || !reply["data"].is_array()) {
            throw FetchError("embedding endpoint returned malformed JSON");
        }
        const auto& data = reply["data"];
        if (data.size() != batch.size()) {
            throw FetchError("embedding endpoint returned " + std::to_string(data.size()) +
                             " vectors for a batch of " + std::to_string(batch.size()));
        }
        std::vector<std::vector<double>> vectors(batch.size());
        for (const auto& item : data) {
            if (!item.contains("embedding") || !item["embedding"].is_array())
                throw FetchError("embedding endpoint item lacks an embedding array");
            std::size_t index = item.value("index", vectors.size());
            if (index >= vectors.size()) throw FetchError("embedding endpoint index out of range");
            auto& vec = vectors[index];
            for (const auto& component : item["embedding"]) {
                double v = component.get<double>();
                if (!std::isfinite(v)) throw FetchError("embedding endpoint returned non-finite value");
                vec.push_back(v);
            }
        }
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            if (vectors[i].empty())
                throw FetchError("embedding endpoint returned no vector for batch item " +
                                 std::to_string(i));
        }
        return vectors;
    }
    std::string ids = batch.empty() ? "" : batch.front()->id;
    if (batch.size() > 1) ids += ", ... (" + std::to_string(batch.size()) + " docs)";
    throw FetchError("embedding fetch failed after " + std::to_string(config.max_retries) +
                     " retries (" + last_error + "); batch: " + ids);
}

}  // namespace

EmbeddingStore fetch_embeddings(const FetchConfig& config,
                                const std::vector<const corpus::Document*>& docs,
                                FetchStats* stats_out) {
    if (config.endpoint.empty()) throw FetchError("no embedding endpoint configured");
    if (config.cache_dir.empty()) throw FetchError("no embedding cache directory configured");
    Endpoint endpoint = split_endpoint(config.endpoint);

    EmbeddingStore store;
    store.model_name = config.model_name;
    store.fetched_at = now_utc_iso8601();
    FetchStats local;
    FetchStats& stats = stats_out ? *stats_out : local;
    std::mutex stats_mutex;
    std::mutex store_mutex;

    // Cache pass.
    std::vector<const corpus::Document*> missing;
    for (const auto* doc : docs) {
        auto path = cache_path(config, *doc);
        std::ifstream in(path);
        if (!in) {
            missing.push_back(doc);
            continue;
        }
        json cached = json::parse(in, nullptr, false);
        if (cached.is_discarded() || !cached.contains("embedding")) {
            missing.push_back(doc);
            continue;
        }
        std::vector<double> vec = cached["embedding"].get<std::vector<double>>();
        ++stats.cache_hits;
        store.vectors[doc->id] = std::move(vec);
    }

    // Batched fetch for the rest, bounded by config.concurrency.
    std::vector<std::vector<const corpus::Document*>> batches;
    for (std::size_t i = 0; i < missing.size(); i += config.batch_size) {
        batches.emplace_back(missing.begin() + i,
                             missing.begin() + std::min(missing.size(), i + config.batch_size));
    }
    parallel_for(batches.size(), config.concurrency, [&](std::size_t b) {
        auto vectors = post_batch(config, endpoint, batches[b], stats, stats_mutex);
        for (std::size_t i = 0; i < batches[b].size(); ++i) {
            const auto* doc = batches[b][i];
            json entry;
            entry["doc_id"] = doc->id;
            entry["model"] = config.model_name;
            entry["dim"] = vectors[i].size();
            entry["embedding"] = vectors[i];
            atomic_write(cache_path(config, *doc), entry.dump());
            std::lock_guard<std::mutex> lock(store_mutex);
            ++stats.fetched;
            store.vectors[doc->id] = std::move(vectors[i]);
        }
    });

    // Dimension consistency across the whole store.
    for (const auto& [id, vec] : store.vectors) {
        if (store.dim == 0) store.dim = vec.size();
        if (vec.size() != store.dim) {
            throw FetchError("inconsistent embedding dimensions: doc \"" + id + "\" has " +
                             std::to_string(vec.size()) + ", expected " +
                             std::to_string(store.dim));
        }
    }
    return store;
}

}  // namespace corpusdrift::embedding

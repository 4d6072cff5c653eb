#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "corpusdrift/embed_client.hpp"
#include "oracles.hpp"

using namespace corpusdrift;
using nlohmann::json;

namespace {

// Scripted embedding endpoint. Vectors are a deterministic function of the
// text so responses can be verified without bookkeeping.
struct MockServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> requests{0};
    std::atomic<int> fail_first_n{0};   // respond 429 to this many requests
    std::atomic<bool> short_batch{false};
    std::atomic<bool> reject_auth{false};

    static std::vector<double> vector_for(const std::string& text) {
        return {double(text.size()), double(text.empty() ? 0 : text[0]), 1.0};
    }

    MockServer() {
        server.Post("/v1/embeddings", [this](const httplib::Request& req,
                                             httplib::Response& res) {
            ++requests;
            if (reject_auth && req.get_header_value("Authorization") != "Bearer good-key") {
                res.status = 401;
                return;
            }
            if (fail_first_n.fetch_sub(1) > 0) {
                res.status = 429;
                return;
            }
            auto body = json::parse(req.body);
            json data = json::array();
            std::size_t count = body["input"].size();
            if (short_batch && count > 1) --count;
            for (std::size_t i = 0; i < count; ++i) {
                data.push_back(json{{"index", i},
                                    {"embedding", vector_for(body["input"][i])}});
            }
            res.set_content(json{{"data", data}}.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
        fail_first_n = 0;
    }

    ~MockServer() {
        server.stop();
        thread.join();
    }

    std::string endpoint() const {
        return "http://127.0.0.1:" + std::to_string(port) + "/v1/embeddings";
    }
};

std::vector<corpus::Document> make_docs(int n) {
    std::vector<corpus::Document> docs;
    for (int i = 0; i < n; ++i) {
        corpus::Document d;
        d.id = "doc" + std::to_string(i);
        d.year = 1960;
        d.text = "text body number " + std::to_string(i);
        docs.push_back(std::move(d));
    }
    return docs;
}

std::vector<const corpus::Document*> pointers(const std::vector<corpus::Document>& docs) {
    std::vector<const corpus::Document*> out;
    for (const auto& d : docs) out.push_back(&d);
    return out;
}

embedding::FetchConfig config_for(const MockServer& server, const std::filesystem::path& cache) {
    embedding::FetchConfig config;
    config.endpoint = server.endpoint();
    config.model_name = "mock-model";
    config.batch_size = 10;
    config.cache_dir = cache;
    config.max_retries = 4;
    config.backoff_initial_ms = 1;
    config.concurrency = 2;
    return config;
}

}  // namespace

TEST_CASE("fetch_embeddings: batches, caching, and retry behaviour") {
    MockServer server;
    oracles::TempDir dir("fetch");
    auto docs = make_docs(100);
    auto config = config_for(server, dir.path);

    SUBCASE("a transient 429 is retried and the batch still succeeds") {
        server.fail_first_n = 1;
        embedding::FetchStats stats;
        auto store = embedding::fetch_embeddings(config, pointers(docs), &stats);
        CHECK(store.vectors.size() == 100);
        CHECK(store.dim == 3);
        CHECK(stats.fetched == 100);
        CHECK(stats.retries >= 1);
        // Deterministic vectors, independent of which batch carried them.
        for (const auto& d : docs) {
            CHECK(*store.find(d.id) == MockServer::vector_for(d.text));
        }
    }

    SUBCASE("a second run is served entirely from the cache") {
        embedding::fetch_embeddings(config, pointers(docs));
        int requests_after_first = server.requests;
        CHECK(requests_after_first == 10);  // 100 docs / batch 10

        embedding::FetchStats stats;
        auto store = embedding::fetch_embeddings(config, pointers(docs), &stats);
        CHECK(server.requests == requests_after_first);  // zero network calls
        CHECK(stats.cache_hits == 100);
        CHECK(stats.fetched == 0);
        CHECK(store.vectors.size() == 100);
    }

    SUBCASE("changing a document's text misses the cache for that id") {
        embedding::fetch_embeddings(config, pointers(docs));
        auto changed = docs;
        changed[7].text += " (revised)";
        embedding::FetchStats stats;
        embedding::fetch_embeddings(config, pointers(changed), &stats);
        CHECK(stats.cache_hits == 99);
        CHECK(stats.fetched == 1);
    }
}

TEST_CASE("fetch_embeddings: auth failures are immediate errors") {
    MockServer server;
    server.reject_auth = true;
    oracles::TempDir dir("fetch");
    auto docs = make_docs(3);
    auto config = config_for(server, dir.path);
    config.api_key = "bad-key";
    CHECK_THROWS_AS(embedding::fetch_embeddings(config, pointers(docs)),
                    embedding::FetchError);
    CHECK(server.requests == 1);  // no retry on 401

    config.api_key = "good-key";
    auto store = embedding::fetch_embeddings(config, pointers(docs));
    CHECK(store.vectors.size() == 3);
}

TEST_CASE("fetch_embeddings: response/batch length mismatch is an error") {
    MockServer server;
    server.short_batch = true;
    oracles::TempDir dir("fetch");
    auto docs = make_docs(5);
    auto config = config_for(server, dir.path);
    CHECK_THROWS_AS(embedding::fetch_embeddings(config, pointers(docs)),
                    embedding::FetchError);
}

TEST_CASE("fetch_embeddings: retries exhausted reports the batch") {
    MockServer server;
    server.fail_first_n = 1000;
    oracles::TempDir dir("fetch");
    auto docs = make_docs(2);
    auto config = config_for(server, dir.path);
    config.max_retries = 2;
    try {
        embedding::fetch_embeddings(config, pointers(docs));
        FAIL("expected FetchError");
    } catch (const embedding::FetchError& e) {
        std::string message = e.what();
        CHECK(message.find("doc0") != std::string::npos);
        CHECK(message.find("429") != std::string::npos);
    }
}

TEST_CASE("fetch_embeddings: configuration errors") {
    embedding::FetchConfig config;
    std::vector<const corpus::Document*> none;
    CHECK_THROWS_AS(embedding::fetch_embeddings(config, none), embedding::FetchError);
    config.endpoint = "not-a-url";
    config.cache_dir = "/tmp";
    CHECK_THROWS_AS(embedding::fetch_embeddings(config, none), embedding::FetchError);
}

#include "corpusdrift/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "corpusdrift/divergence.hpp"
#include "corpusdrift/embed_client.hpp"
#include "corpusdrift/hashing.hpp"
#include "corpusdrift/report.hpp"
#include "corpusdrift/svg.hpp"
#include "corpusdrift/unigram.hpp"

namespace corpusdrift::pipeline {

namespace {

using nlohmann::json;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
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

// ---- token slice cache (versioned binary) ----

constexpr char kTokenMagic[4] = {'C', 'D', 'T', 'K'};
constexpr std::uint32_t kTokenVersion = 1;

std::string encode_token_slice(const std::vector<textprep::TokenStream>& streams) {
    std::string out;
    auto put_pod = [&out](const auto& v) {
        out.append(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    auto put_str = [&](const std::string& s) {
        put_pod(std::uint32_t(s.size()));
        out.append(s);
    };
    out.append(kTokenMagic, sizeof(kTokenMagic));
    put_pod(kTokenVersion);
    put_pod(std::uint64_t(streams.size()));
    for (const auto& stream : streams) {
        put_str(stream.doc_id);
        put_pod(std::uint64_t(stream.tokens.size()));
        for (const auto& token : stream.tokens) put_str(token);
    }
    return out;
}

bool decode_token_slice(const std::filesystem::path& path,
                        std::vector<textprep::TokenStream>& streams) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[4];
    std::uint32_t version = 0;
    in.read(magic, sizeof(magic));
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || std::memcmp(magic, kTokenMagic, sizeof(magic)) != 0 || version != kTokenVersion)
        return false;
    auto get_str = [&in](std::string& s) {
        std::uint32_t len = 0;
        in.read(reinterpret_cast<char*>(&len), sizeof(len));
        s.resize(len);
        in.read(s.data(), len);
    };
    std::uint64_t n_docs = 0;
    in.read(reinterpret_cast<char*>(&n_docs), sizeof(n_docs));
    streams.clear();
    for (std::uint64_t d = 0; d < n_docs && in; ++d) {
        textprep::TokenStream stream;
        get_str(stream.doc_id);
        std::uint64_t n_tokens = 0;
        in.read(reinterpret_cast<char*>(&n_tokens), sizeof(n_tokens));
        stream.tokens.resize(n_tokens);
        for (auto& token : stream.tokens) get_str(token);
        streams.push_back(std::move(stream));
    }
    return bool(in);
}

// ---- stage context ----

struct Context {
    const RunConfig& config;
    unsigned parallelism;
    std::filesystem::path cache_dir;
    std::string config_hash;
    std::string corpus_sha;
    report::Provenance prov;
    corpus::Corpus corpus;
    std::vector<corpus::TimeSlice> slices;
    // Token streams per slice, split by cohort membership (cohort first).
    std::vector<std::vector<textprep::TokenStream>> cohort_tokens;
    std::vector<std::vector<textprep::TokenStream>> field_tokens;
    RunManifest manifest;
};

std::string tokens_scope(const Context& ctx) {
    const auto& c = ctx.config;
    std::string key = "tokens/1;" + ctx.corpus_sha + ";" + c.textprep.fingerprint() + ";window=" +
                      std::to_string(c.window) + ";start=" + std::to_string(c.start_year) +
                      ";bounds=" + std::to_string(c.schema.year_lower_bound) + ".." +
                      std::to_string(c.schema.year_upper_bound) + ";cohort=" +
                      c.cohort.fingerprint();
    return hashing::short_hash(key);
}

std::string models_scope(const Context& ctx) {
    // lambda is part of the model scope: a lambda change invalidates the
    // model cache while the token/slice cache above is reused.
    return hashing::short_hash("models/1;" + tokens_scope(ctx) + ";lambda=" +
                               report::format_double(ctx.config.lambda));
}

std::string reports_scope(const Context& ctx) {
    return hashing::short_hash("reports/1;" + models_scope(ctx) + ";alpha=" +
                               report::format_double(ctx.config.alpha) + ";global_bg=" +
                               (ctx.config.whole_corpus_background ? "1" : "0"));
}

std::string trends_scope(const Context& ctx) {
    return hashing::short_hash("trends/1;" + tokens_scope(ctx) + ";top_k=" +
                               std::to_string(ctx.config.top_k) + ";min_tokens=" +
                               std::to_string(ctx.config.min_tokens) + ";smoothing=" +
                               report::format_double(ctx.config.trend_smoothing));
}

std::string ede_scope(const Context& ctx, const std::string& embeddings_id) {
    const auto& c = ctx.config;
    return hashing::short_hash("ede/1;" + ctx.corpus_sha + ";" + embeddings_id + ";window=" +
                               std::to_string(c.window) + ";start=" + std::to_string(c.start_year) +
                               ";bw=" + c.bandwidth.str() + ";kernel=" +
                               embedding::kernel_mode_name(c.kernel_mode) + ";cohort=" +
                               c.cohort.fingerprint());
}

// Tokenizes all slices (cohort/field split), serving from cache when possible.
void prepare_tokens(Context& ctx, StageTiming& timing) {
    auto scope = tokens_scope(ctx);
    auto dir = ctx.cache_dir / "tokens" / scope;
    std::filesystem::create_directories(dir);  // before the workers race on it
    std::size_t n = ctx.slices.size();
    ctx.cohort_tokens.assign(n, {});
    ctx.field_tokens.assign(n, {});
    std::vector<unsigned char> hit(n, 0);
    parallel_for(n, ctx.parallelism, [&](std::size_t i) {
        auto cohort_path = dir / (ctx.slices[i].id() + ".cohort.tok");
        auto field_path = dir / (ctx.slices[i].id() + ".field.tok");
        if (decode_token_slice(cohort_path, ctx.cohort_tokens[i]) &&
            decode_token_slice(field_path, ctx.field_tokens[i])) {
            hit[i] = 1;
            return;
        }
        auto [cohort_docs, field_docs] = partition_slice(ctx.slices[i], ctx.config.cohort);
        for (const auto* doc : cohort_docs)
            ctx.cohort_tokens[i].push_back(
                textprep::normalize(doc->text, doc->id, ctx.config.textprep));
        for (const auto* doc : field_docs)
            ctx.field_tokens[i].push_back(
                textprep::normalize(doc->text, doc->id, ctx.config.textprep));
        atomic_write_file(cohort_path, encode_token_slice(ctx.cohort_tokens[i]));
        atomic_write_file(field_path, encode_token_slice(ctx.field_tokens[i]));
    });
    for (std::size_t i = 0; i < n; ++i) {
        if (hit[i]) ++timing.cache_hits;
        else ++timing.computed;
    }
}

std::optional<unigram::UnigramModel> model_from_streams(
    const std::vector<textprep::TokenStream>& streams) {
    bool any = std::any_of(streams.begin(), streams.end(),
                           [](const auto& s) { return !s.tokens.empty(); });
    if (!any) return std::nullopt;
    return unigram::build_model(streams);
}

// Per-slice cohort/field models through the binary model cache. A .meta
// marker records which sides exist so "absent" is distinguishable from
// "not cached yet".
std::vector<divergence::SliceModels> ensure_models(Context& ctx, StageTiming& timing) {
    auto dir = ctx.cache_dir / "models" / models_scope(ctx);
    std::filesystem::create_directories(dir);
    std::size_t n = ctx.slices.size();
    std::vector<divergence::SliceModels> models(n);
    std::vector<unsigned char> hit(n, 0);
    parallel_for(n, ctx.parallelism, [&](std::size_t i) {
        auto& m = models[i];
        m.slice_id = ctx.slices[i].id();
        auto meta_path = dir / (m.slice_id + ".meta");
        auto cohort_path = dir / (m.slice_id + ".cohort.um");
        auto field_path = dir / (m.slice_id + ".field.um");
        std::ifstream meta_in(meta_path);
        if (meta_in) {
            json meta = json::parse(meta_in, nullptr, false);
            if (!meta.is_discarded()) {
                bool ok = true;
                try {
                    if (meta.value("cohort", false)) m.cohort = unigram::load_model(cohort_path);
                    if (meta.value("field", false)) m.field = unigram::load_model(field_path);
                } catch (const std::exception&) {
                    ok = false;
                    m.cohort.reset();
                    m.field.reset();
                }
                if (ok) {
                    hit[i] = 1;
                    return;
                }
            }
        }
        m.cohort = model_from_streams(ctx.cohort_tokens[i]);
        m.field = model_from_streams(ctx.field_tokens[i]);
        if (m.cohort) unigram::save_model(*m.cohort, cohort_path);
        if (m.field) unigram::save_model(*m.field, field_path);
        json meta;
        meta["cohort"] = bool(m.cohort);
        meta["field"] = bool(m.field);
        atomic_write_file(meta_path, meta.dump());
    });
    for (std::size_t i = 0; i < n; ++i) {
        if (hit[i]) ++timing.cache_hits;
        else ++timing.computed;
    }
    return models;
}

divergence::DivergenceConfig divergence_config(const Context& ctx) {
    divergence::DivergenceConfig dc;
    dc.window = ctx.config.window;
    dc.start_year = ctx.config.start_year;
    dc.lambda = ctx.config.lambda;
    dc.alpha = ctx.config.alpha;
    dc.whole_corpus_background = ctx.config.whole_corpus_background;
    dc.parallelism = ctx.parallelism;
    dc.textprep = ctx.config.textprep;
    dc.config_hash = ctx.config_hash;
    return dc;
}

void record_output(Context& ctx, const std::filesystem::path& path) {
    auto rel = std::filesystem::relative(path, ctx.config.out_dir).generic_string();
    ctx.manifest.outputs.emplace_back(rel, hashing::sha256_file_hex(path));
}

void write_text_output(Context& ctx, const std::filesystem::path& path,
                       const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write output: " + path.string());
    out.close();
    record_output(ctx, path);
}

void run_kld_sync(Context& ctx) {
    StageTiming timing{stage_name(Stage::kld_sync), 0, 0, 0};
    auto t0 = std::chrono::steady_clock::now();
    auto dc = divergence_config(ctx);
    auto reports_dir = ctx.cache_dir / "reports" / reports_scope(ctx);

    std::size_t n = ctx.slices.size();
    std::vector<divergence::SliceOutcome> series(n);
    std::vector<unsigned char> hit(n, 0);

    // Pass 1: serve what we can from the report cache.
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < n; ++i) {
        auto path = reports_dir / ("sync_" + ctx.slices[i].id() + ".json");
        std::error_code ec;
        if (!std::filesystem::exists(path, ec)) {
            missing.push_back(i);
            continue;
        }
        try {
            json j;
            {
                std::ifstream in(path);
                j = json::parse(in);
            }
            series[i].slice_id = ctx.slices[i].id();
            if (j.value("gap", false)) {
                series[i].gap_reason = j.value("gap_reason", "");
            } else {
                series[i].report = report::read_report_json(path);
            }
            hit[i] = 1;
        } catch (const std::exception&) {
            missing.push_back(i);
        }
    }

    // Pass 2: compute the rest from (cached) models.
    if (!missing.empty() || ctx.config.whole_corpus_background) {
        StageTiming model_timing{"models", 0, 0, 0};
        auto tm = std::chrono::steady_clock::now();
        auto models = ensure_models(ctx, model_timing);
        model_timing.seconds = seconds_since(tm);
        ctx.manifest.stages.push_back(model_timing);
        std::optional<unigram::UnigramModel> global_bg;
        if (ctx.config.whole_corpus_background)
            global_bg = divergence::global_background(models);
        std::filesystem::create_directories(reports_dir);
        parallel_for(missing.size(), ctx.parallelism, [&](std::size_t k) {
            std::size_t i = missing[k];
            const auto& m = models[i];
            divergence::SliceOutcome outcome;
            outcome.slice_id = m.slice_id;
            if (!m.cohort) outcome.gap_reason = "no cohort documents";
            else if (!m.field) outcome.gap_reason = "no field documents";
            else {
                outcome.report = divergence::compare_models(
                    *m.cohort, *m.field, dc, m.slice_id, m.slice_id,
                    global_bg ? &*global_bg : nullptr);
            }
            auto path = reports_dir / ("sync_" + m.slice_id + ".json");
            if (outcome.report) {
                report::write_report_json(path, *outcome.report, ctx.prov);
            } else {
                json j = {{"gap", true}, {"gap_reason", outcome.gap_reason}};
                atomic_write_file(path, j.dump());
            }
            series[i] = std::move(outcome);
        });
    }
    timing.computed = missing.size();
    timing.cache_hits = n - missing.size();

    bool cohort_anywhere = std::any_of(series.begin(), series.end(),
                                       [](const auto& s) { return bool(s.report); });
    if (!cohort_anywhere)
        throw corpus::DataError("cohort matches no documents in any time slice");

    auto out_dir = ctx.config.out_dir;
    report::write_series_csv(out_dir / "kld_sync_series.csv", series, ctx.prov);
    record_output(ctx, out_dir / "kld_sync_series.csv");
    report::write_series_json(out_dir / "kld_sync_series.json", series, ctx.prov);
    record_output(ctx, out_dir / "kld_sync_series.json");
    for (const auto& outcome : series) {
        if (!outcome.report) continue;
        auto csv = out_dir / "terms" / (outcome.slice_id + ".csv");
        report::write_report_csv(csv, *outcome.report, ctx.prov);
        record_output(ctx, csv);
        auto js = out_dir / "terms" / (outcome.slice_id + ".json");
        report::write_report_json(js, *outcome.report, ctx.prov);
        record_output(ctx, js);
    }
    write_text_output(ctx, out_dir / "kld_sync_series.svg",
                      svg::series_chart(series, "Summed synchronous KLD (significant terms)",
                                        ctx.prov));
    write_text_output(ctx, out_dir / "kld_terms.svg",
                      svg::term_lines_chart(series, 150, "Pointwise KLD per term", ctx.prov));
    timing.seconds = seconds_since(t0);
    ctx.manifest.stages.push_back(timing);
}

void run_kld_async(Context& ctx) {
    StageTiming timing{stage_name(Stage::kld_async), 0, 0, 0};
    auto t0 = std::chrono::steady_clock::now();
    auto dc = divergence_config(ctx);
    auto cache_path = ctx.cache_dir / "reports" / reports_scope(ctx) / "async_matrix.json";

    divergence::KldMatrix matrix;
    std::size_t n_cells = ctx.slices.size() * ctx.slices.size();
    bool cached = false;
    if (std::filesystem::exists(cache_path)) {
        try {
            matrix = report::read_matrix_json(cache_path);
            cached = matrix.rows.size() == ctx.slices.size();
        } catch (const std::exception&) {
            cached = false;
        }
    }
    if (cached) {
        timing.cache_hits = n_cells;
    } else {
        StageTiming model_timing{"models", 0, 0, 0};
        auto tm = std::chrono::steady_clock::now();
        auto models = ensure_models(ctx, model_timing);
        model_timing.seconds = seconds_since(tm);
        ctx.manifest.stages.push_back(model_timing);
        bool cohort_anywhere = std::any_of(models.begin(), models.end(),
                                           [](const auto& m) { return bool(m.cohort); });
        if (!cohort_anywhere)
            throw corpus::DataError("cohort matches no documents in any time slice");
        if (ctx.config.whole_corpus_background) {
            auto bg = divergence::global_background(models);
            matrix = divergence::asynchronous_from_models(models, dc, &bg);
        } else {
            matrix = divergence::asynchronous_from_models(models, dc);
        }
        report::write_matrix_json(cache_path, matrix, ctx.prov);
        timing.computed = n_cells;
    }

    auto out_dir = ctx.config.out_dir;
    report::write_matrix_csv(out_dir / "kld_async_matrix.csv", matrix, ctx.prov);
    record_output(ctx, out_dir / "kld_async_matrix.csv");
    report::write_matrix_json(out_dir / "kld_async_matrix.json", matrix, ctx.prov);
    record_output(ctx, out_dir / "kld_async_matrix.json");
    write_text_output(ctx, out_dir / "kld_async_matrix.svg",
                      svg::matrix_heatmap(matrix, "Asynchronous summed KLD", ctx.prov));
    timing.seconds = seconds_since(t0);
    ctx.manifest.stages.push_back(timing);
}

void run_trends(Context& ctx) {
    StageTiming timing{stage_name(Stage::token_trends), 0, 0, 0};
    auto t0 = std::chrono::steady_clock::now();
    auto cache_path = ctx.cache_dir / "trends" / trends_scope(ctx) / "table.json";
    report::FrequencyTrendTable table;
    bool cached = false;
    if (std::filesystem::exists(cache_path)) {
        try {
            table = report::read_trends_json(cache_path);
            cached = true;
        } catch (const std::exception&) {
            cached = false;
        }
    }
    if (cached) {
        timing.cache_hits = 1;
    } else {
        int start = ctx.config.start_year != 0 ? ctx.config.start_year : ctx.corpus.year_min;
        table = report::token_frequency_trends(ctx.corpus, ctx.config.cohort, ctx.config.textprep,
                                               ctx.config.window, start, ctx.config.top_k,
                                               ctx.config.min_tokens, ctx.config.trend_smoothing);
        report::write_trends_json(cache_path, table, ctx.prov);
        timing.computed = 1;
    }
    auto out_dir = ctx.config.out_dir;
    report::write_trends_csv(out_dir / "trends.csv", table, ctx.prov);
    record_output(ctx, out_dir / "trends.csv");
    report::write_trends_json(out_dir / "trends.json", table, ctx.prov);
    record_output(ctx, out_dir / "trends.json");
    write_text_output(ctx, out_dir / "trends.svg",
                      svg::trends_chart(table, "Relative token usage over time", ctx.prov));
    timing.seconds = seconds_since(t0);
    ctx.manifest.stages.push_back(timing);
}

void run_ede(Context& ctx) {
    StageTiming timing{stage_name(Stage::ede), 0, 0, 0};
    auto t0 = std::chrono::steady_clock::now();

    embedding::EmbeddingStore store;
    std::string embeddings_id;
    if (!ctx.config.embeddings_path.empty()) {
        store = embedding::load_embeddings(ctx.config.embeddings_path);
        auto sha = hashing::sha256_file_hex(ctx.config.embeddings_path);
        ctx.manifest.input_hashes[ctx.config.embeddings_path.generic_string()] = sha;
        embeddings_id = "file:" + sha;
    } else {
        embedding::FetchConfig fc;
        fc.endpoint = ctx.config.embed_endpoint;
        fc.api_key = ctx.config.embed_api_key;
        fc.model_name = ctx.config.embed_model;
        fc.batch_size = ctx.config.embed_batch_size;
        fc.cache_dir = ctx.cache_dir;
        std::vector<const corpus::Document*> docs;
        for (const auto& doc : ctx.corpus.documents) docs.push_back(&doc);
        embedding::FetchStats stats;
        store = embedding::fetch_embeddings(fc, docs, &stats);
        ctx.manifest.notes.push_back(
            "embeddings fetched from endpoint: " + std::to_string(stats.fetched) + " fetched, " +
            std::to_string(stats.cache_hits) + " cached");
        embeddings_id = "fetch:" + ctx.config.embed_model;
    }

    auto cache_path = ctx.cache_dir / "ede" / ede_scope(ctx, embeddings_id) / "batch.json";
    embedding::EdeBatch batch;
    bool cached = false;
    if (std::filesystem::exists(cache_path)) {
        try {
            batch = report::read_ede_json(cache_path);
            cached = true;
        } catch (const std::exception&) {
            cached = false;
        }
    }
    if (cached) {
        timing.cache_hits = batch.trajectories.size();
    } else {
        std::vector<const corpus::Document*> references;
        for (const auto& doc : ctx.corpus.documents) {
            if (ctx.config.cohort.matches(doc)) references.push_back(&doc);
        }
        if (references.empty())
            throw corpus::DataError("cohort matches no documents; no trajectories to compute");
        embedding::TrajectoryConfig tc;
        tc.bandwidth = ctx.config.bandwidth;
        tc.mode = ctx.config.kernel_mode;
        batch = embedding::ede_batch(ctx.slices, store, references, tc, ctx.parallelism);
        report::write_ede_json(cache_path, batch, ctx.config.bandwidth.str(),
                               embedding::kernel_mode_name(ctx.config.kernel_mode), ctx.prov);
        timing.computed = batch.trajectories.size();
    }
    if (!batch.skipped.empty()) {
        ctx.manifest.notes.push_back("ede: " + std::to_string(batch.skipped.size()) +
                                     " reference(s) skipped (no embedding or out of range)");
    }

    auto out_dir = ctx.config.out_dir;
    report::write_ede_trajectories_csv(out_dir / "ede_trajectories.csv", batch.trajectories,
                                       ctx.prov);
    record_output(ctx, out_dir / "ede_trajectories.csv");
    report::write_ede_median_csv(out_dir / "ede_median.csv", batch.median, ctx.prov);
    record_output(ctx, out_dir / "ede_median.csv");
    report::write_ede_json(out_dir / "ede.json", batch, ctx.config.bandwidth.str(),
                           embedding::kernel_mode_name(ctx.config.kernel_mode), ctx.prov);
    record_output(ctx, out_dir / "ede.json");
    write_text_output(ctx, out_dir / "ede.svg",
                      svg::trajectories_chart(batch.trajectories, batch.median,
                                              "Embedding density around references", ctx.prov));
    timing.seconds = seconds_since(t0);
    ctx.manifest.stages.push_back(timing);
}

}  // namespace

std::string RunConfig::canonical_json() const {
    json j;  // nlohmann::json objects iterate in sorted key order
    j["format"] = "corpusdrift.config/1";
    j["alpha"] = alpha;
    j["bandwidth"] = bandwidth.str();
    j["cohort"] = cohort.fingerprint();
    j["embed_model"] = embeddings_path.empty() ? embed_model : "";
    j["kernel_mode"] = embedding::kernel_mode_name(kernel_mode);
    j["lambda"] = lambda;
    j["min_tokens"] = min_tokens;
    j["start_year"] = start_year;
    j["textprep"] = textprep.fingerprint();
    j["top_k"] = top_k;
    j["trend_smoothing"] = trend_smoothing;
    j["whole_corpus_background"] = whole_corpus_background;
    j["window"] = window;
    j["year_bounds"] = std::to_string(schema.year_lower_bound) + ".." +
                       std::to_string(schema.year_upper_bound);
    return j.dump();
}

std::string RunConfig::config_hash() const {
    return hashing::sha256_hex(canonical_json());
}

Stage parse_stage(const std::string& name) {
    if (name == "kld-sync") return Stage::kld_sync;
    if (name == "kld-async") return Stage::kld_async;
    if (name == "ede") return Stage::ede;
    if (name == "token-trends") return Stage::token_trends;
    throw std::invalid_argument("unknown stage: " + name);
}

std::string stage_name(Stage stage) {
    switch (stage) {
        case Stage::kld_sync: return "kld-sync";
        case Stage::kld_async: return "kld-async";
        case Stage::ede: return "ede";
        case Stage::token_trends: return "token-trends";
    }
    return "?";
}

RunManifest run(const RunConfig& config, const std::set<Stage>& stages) {
    if (stages.empty()) throw std::invalid_argument("no stages requested");

    // Preconditions, checked before any work.
    if (!std::filesystem::exists(config.corpus_path))
        throw corpus::DataError("corpus file not found: " + config.corpus_path.string());
    if (stages.count(Stage::ede)) {
        bool have_file =
            !config.embeddings_path.empty() && std::filesystem::exists(config.embeddings_path);
        if (!config.embeddings_path.empty() && !have_file)
            throw corpus::DataError("embeddings file not found: " +
                                    config.embeddings_path.string());
        if (!have_file && config.embed_endpoint.empty())
            throw corpus::DataError(
                "ede stage needs an embeddings file (--embeddings) or an embedding endpoint "
                "(EMBED_ENDPOINT)");
    }

    Context ctx{config,
                config.parallelism == 0 ? default_parallelism() : config.parallelism,
                config.cache_dir.empty() ? config.out_dir / "cache" : config.cache_dir,
                config.config_hash(),
                {},
                {},
                {},
                {},
                {},
                {},
                {}};
    ctx.manifest.config_hash = ctx.config_hash;
    ctx.manifest.artifact_version = kVersion;
    ctx.corpus_sha = hashing::sha256_file_hex(config.corpus_path);
    ctx.manifest.input_hashes[config.corpus_path.generic_string()] = ctx.corpus_sha;
    ctx.prov = {ctx.config_hash, config.textprep.stopwords_sha256};

    StageTiming prepare_timing{"prepare", 0, 0, 0};
    auto t0 = std::chrono::steady_clock::now();
    corpus::LoadStats load_stats;
    ctx.corpus = corpus::load_corpus(config.corpus_path, config.schema, &load_stats);
    if (load_stats.rejected > 0) {
        ctx.manifest.notes.push_back("corpus load: " + std::to_string(load_stats.rejected) +
                                     " record(s) rejected");
    }
    int start = config.start_year != 0 ? config.start_year : ctx.corpus.year_min;
    ctx.slices = corpus::slice_corpus(ctx.corpus, config.window, start);

    bool needs_tokens = stages.count(Stage::kld_sync) || stages.count(Stage::kld_async);
    if (needs_tokens) prepare_tokens(ctx, prepare_timing);
    prepare_timing.seconds = seconds_since(t0);
    ctx.manifest.stages.push_back(prepare_timing);

    // Fixed stage order regardless of the set's construction order.
    if (stages.count(Stage::kld_sync)) run_kld_sync(ctx);
    if (stages.count(Stage::kld_async)) run_kld_async(ctx);
    if (stages.count(Stage::ede)) run_ede(ctx);
    if (stages.count(Stage::token_trends)) run_trends(ctx);

    std::sort(ctx.manifest.outputs.begin(), ctx.manifest.outputs.end());
    write_manifest(config.out_dir / "manifest.json", ctx.manifest);
    return ctx.manifest;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    json j;
    j["format"] = "corpusdrift.manifest/1";
    j["config_hash"] = manifest.config_hash;
    j["artifact_version"] = manifest.artifact_version;
    j["input_hashes"] = manifest.input_hashes;
    auto& stages = j["stages"] = json::array();
    for (const auto& s : manifest.stages) {
        stages.push_back(json{{"stage", s.stage},
                              {"seconds", s.seconds},
                              {"computed", s.computed},
                              {"cache_hits", s.cache_hits}});
    }
    auto& outputs = j["outputs"] = json::array();
    for (const auto& [rel, sha] : manifest.outputs)
        outputs.push_back(json{{"path", rel}, {"sha256", sha}});
    j["notes"] = manifest.notes;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
}

}  // namespace corpusdrift::pipeline

#include "corpusdrift/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>

#include <CLI11.hpp>
#include <json.hpp>

#include "corpusdrift/corpus.hpp"
#include "corpusdrift/embed_client.hpp"
#include "corpusdrift/hashing.hpp"
#include "corpusdrift/pipeline.hpp"
#include "corpusdrift/report.hpp"
#include "corpusdrift/svg.hpp"

namespace corpusdrift::cli {

namespace {

struct CommonOpts {
    std::string corpus;
    std::vector<std::string> cohort_authors;
    std::string cohort_file;
    int window = 2;
    int start_year = 0;
    double lambda = 0.05;
    double alpha = 0.05;
    std::string out_dir = "out";
    std::string cache_dir;
    std::string stopwords_file;
    std::string lemma_file;
    std::string normalizer = "suffix-stemmer";
    unsigned parallelism = 0;
    std::size_t top_k = 20;
    std::int64_t min_tokens = 50;
    std::string bandwidth = "scott";
    std::string kernel_mode = "as-written";
    std::string embeddings;
    bool whole_corpus_background = false;
};

void add_common_options(CLI::App* cmd, CommonOpts& opts, bool needs_corpus = true) {
    auto* corpus_opt =
        cmd->add_option("--corpus", opts.corpus, "Corpus file (line-delimited JSON records)");
    if (needs_corpus) corpus_opt->required();
    cmd->add_option("--cohort-authors", opts.cohort_authors,
                    "Author identifier selecting the cohort (repeatable)");
    cmd->add_option("--cohort-file", opts.cohort_file,
                    "File with one cohort author identifier per line");
    cmd->add_option("--window", opts.window, "Time slice width in years")
        ->capture_default_str();
    cmd->add_option("--start-year", opts.start_year,
                    "First slice start year (default: first corpus year)");
    cmd->add_option("--lambda", opts.lambda, "Jelinek-Mercer background weight")
        ->capture_default_str();
    cmd->add_option("--alpha", opts.alpha, "Welch test significance level")
        ->capture_default_str();
    cmd->add_option("--out-dir", opts.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--cache-dir", opts.cache_dir, "Cache directory (default: <out-dir>/cache)");
    cmd->add_option("--stopwords", opts.stopwords_file,
                    "Stopword file overriding the shipped English list");
    cmd->add_option("--lemma-table", opts.lemma_file,
                    "Tab-separated term\\tlemma table (switches the normalizer)");
    cmd->add_option("--normalizer", opts.normalizer,
                    "Token normalizer: none, suffix-stemmer, lemma-table")
        ->capture_default_str();
    cmd->add_option("--parallelism", opts.parallelism,
                    "Worker threads (0 = hardware concurrency)")
        ->capture_default_str();
    cmd->add_flag("--whole-corpus-background", opts.whole_corpus_background,
                  "Smooth against the whole corpus instead of the per-pair union");
}

corpus::CohortSelector make_cohort(const CommonOpts& opts) {
    corpus::CohortSelector cohort;
    cohort.mode = corpus::CohortSelector::Mode::author_ids;
    cohort.values = opts.cohort_authors;
    if (!opts.cohort_file.empty()) {
        for (const auto& id : textprep::load_stopword_file(opts.cohort_file)) {
            cohort.values.push_back(id);
        }
    }
    return cohort;
}

pipeline::RunConfig make_run_config(const CommonOpts& opts) {
    pipeline::RunConfig config;
    config.corpus_path = opts.corpus;
    config.out_dir = opts.out_dir;
    if (!opts.cache_dir.empty()) config.cache_dir = opts.cache_dir;
    config.window = opts.window;
    config.start_year = opts.start_year;
    config.lambda = opts.lambda;
    config.alpha = opts.alpha;
    config.top_k = opts.top_k;
    config.min_tokens = opts.min_tokens;
    config.whole_corpus_background = opts.whole_corpus_background;
    config.bandwidth = embedding::BandwidthRule::parse(opts.bandwidth);
    config.kernel_mode = embedding::parse_kernel_mode(opts.kernel_mode);
    config.cohort = make_cohort(opts);
    config.parallelism = opts.parallelism;
    if (!opts.embeddings.empty()) config.embeddings_path = opts.embeddings;

    if (!opts.stopwords_file.empty()) {
        config.textprep.stopwords = textprep::load_stopword_file(opts.stopwords_file);
        config.textprep.stopwords_sha256 = hashing::sha256_file_hex(opts.stopwords_file);
    }
    if (opts.normalizer == "none") config.textprep.normalizer = textprep::Normalizer::none;
    else if (opts.normalizer == "suffix-stemmer")
        config.textprep.normalizer = textprep::Normalizer::suffix_stemmer;
    else if (opts.normalizer == "lemma-table")
        config.textprep.normalizer = textprep::Normalizer::lemma_table;
    else throw CLI::ValidationError("--normalizer", "unknown normalizer: " + opts.normalizer);
    if (!opts.lemma_file.empty()) {
        config.textprep.lemma_table = textprep::load_lemma_table(opts.lemma_file);
        config.textprep.lemma_table_sha256 = hashing::sha256_file_hex(opts.lemma_file);
        config.textprep.normalizer = textprep::Normalizer::lemma_table;
    }

    if (const char* endpoint = std::getenv("EMBED_ENDPOINT")) config.embed_endpoint = endpoint;
    if (const char* key = std::getenv("EMBED_API_KEY")) config.embed_api_key = key;
    return config;
}

void print_manifest_summary(const pipeline::RunManifest& manifest, const std::string& out_dir,
                            std::ostream& out) {
    for (const auto& stage : manifest.stages) {
        out << stage.stage << ": " << stage.computed << " computed, " << stage.cache_hits
            << " cached (" << std::fixed << std::setprecision(2) << stage.seconds << "s)\n";
    }
    out.unsetf(std::ios::fixed);
    out << manifest.outputs.size() << " output file(s) in " << out_dir << "\n";
    for (const auto& note : manifest.notes) out << "note: " << note << "\n";
}

int run_stage(const CommonOpts& opts, pipeline::Stage stage, std::ostream& out) {
    auto config = make_run_config(opts);
    auto manifest = pipeline::run(config, {stage});
    print_manifest_summary(manifest, opts.out_dir, out);
    return 0;
}

report::Provenance provenance_from(const std::filesystem::path& json_path) {
    report::Provenance prov;
    std::ifstream in(json_path);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (!j.is_discarded()) {
        prov.config_hash = j.value("config_hash", "");
        prov.stopwords_sha256 = j.value("stopwords_sha256", "");
    }
    return prov;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Time-sliced corpus divergence and embedding-density trajectories",
                 "corpusdrift"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* validate = app.add_subcommand("validate", "Load a corpus and report what was accepted");
    add_common_options(validate, opts);

    auto* slice_stats =
        app.add_subcommand("slice-stats", "Per-slice document counts for a cohort split");
    add_common_options(slice_stats, opts);

    auto* kld_sync = app.add_subcommand(
        "kld-sync", "Summed + pointwise KLD of cohort vs field, slice by slice");
    add_common_options(kld_sync, opts);

    auto* kld_async = app.add_subcommand(
        "kld-async", "KLD of each cohort slice against every field slice (matrix)");
    add_common_options(kld_async, opts);

    auto* kld_terms = app.add_subcommand(
        "kld-terms", "Show top diverging terms for one slice of a previous kld-sync run");
    std::string terms_slice;
    std::size_t terms_top = 10;
    bool terms_all = false;
    kld_terms->add_option("--out-dir", opts.out_dir, "Directory of the kld-sync run")
        ->capture_default_str();
    kld_terms->add_option("--slice", terms_slice, "Slice id, e.g. 1999-2000")->required();
    kld_terms->add_option("--top", terms_top, "Rows to show")->capture_default_str();
    kld_terms->add_flag("--all", terms_all, "Include non-significant terms");

    auto* ede = app.add_subcommand(
        "ede", "Embedding density trajectories around each cohort publication");
    add_common_options(ede, opts);
    ede->add_option("--embeddings", opts.embeddings,
                    "Embedding file (falls back to EMBED_ENDPOINT fetch if omitted)");
    ede->add_option("--bandwidth", opts.bandwidth,
                    "KDE bandwidth rule: scott, scott-global, or fixed:<h>")
        ->capture_default_str();
    ede->add_option("--kernel-mode", opts.kernel_mode,
                    "as-written or multivariate-normalized")
        ->capture_default_str();

    auto* trends =
        app.add_subcommand("trends", "Relative frequency trends of the cohort's top terms");
    add_common_options(trends, opts);
    trends->add_option("--top-k", opts.top_k, "Number of top terms")->capture_default_str();
    trends->add_option("--min-tokens", opts.min_tokens,
                       "Exclude bins with fewer total tokens")
        ->capture_default_str();

    auto* fetch = app.add_subcommand("fetch-embeddings",
                                     "Fetch embeddings for every corpus document via HTTP");
    std::string fetch_out = "embeddings.csv";
    std::string fetch_model = "text-embedding-3-large";
    std::size_t fetch_batch = 64;
    std::string fetch_cache = "embed-cache";
    fetch->add_option("--corpus", opts.corpus, "Corpus file")->required();
    fetch->add_option("--out", fetch_out, "Embedding file to write")->capture_default_str();
    fetch->add_option("--model", fetch_model, "Embedding model name")->capture_default_str();
    fetch->add_option("--batch-size", fetch_batch, "Documents per request")
        ->capture_default_str();
    fetch->add_option("--cache-dir", fetch_cache, "Disk cache for fetched vectors")
        ->capture_default_str();

    auto* rerender = app.add_subcommand(
        "report", "Re-render SVG plots from a previous run's JSON artifacts");
    rerender->add_option("--out-dir", opts.out_dir, "Directory of a previous run")
        ->capture_default_str();

    std::reverse(args.begin(), args.end());  // CLI11 wants reversed args
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (validate->parsed()) {
            corpus::LoadStats stats;
            auto corpus = corpus::load_corpus(opts.corpus, {}, &stats);
            out << "loaded " << stats.loaded << " document(s), years " << corpus.year_min << "-"
                << corpus.year_max << ", rejected " << stats.rejected << "\n";
            for (const auto& warning : stats.warnings) err << "warning: " << warning << "\n";
            return 0;
        }
        if (slice_stats->parsed()) {
            auto corpus = corpus::load_corpus(opts.corpus);
            int start = opts.start_year != 0 ? opts.start_year : corpus.year_min;
            auto slices = corpus::slice_corpus(corpus, opts.window, start);
            auto cohort = make_cohort(opts);
            out << "slice,docs,cohort,field,partial\n";
            for (const auto& slice : slices) {
                auto [cohort_docs, field_docs] = corpus::partition_slice(slice, cohort);
                out << slice.id() << ',' << slice.documents.size() << ',' << cohort_docs.size()
                    << ',' << field_docs.size() << ',' << (slice.partial ? 1 : 0) << "\n";
            }
            return 0;
        }
        if (kld_sync->parsed()) return run_stage(opts, pipeline::Stage::kld_sync, out);
        if (kld_async->parsed()) return run_stage(opts, pipeline::Stage::kld_async, out);
        if (ede->parsed()) return run_stage(opts, pipeline::Stage::ede, out);
        if (trends->parsed()) return run_stage(opts, pipeline::Stage::token_trends, out);
        if (kld_terms->parsed()) {
            auto path = std::filesystem::path(opts.out_dir) / "terms" / (terms_slice + ".csv");
            if (!std::filesystem::exists(path)) {
                throw corpus::DataError("no term report for slice " + terms_slice + " under " +
                                        opts.out_dir + " (run kld-sync first)");
            }
            auto report = report::read_report_csv(path);
            out << "slice " << report.d_slice << " vs field " << report.q_slice << " (alpha "
                << report.alpha << ")\n";
            out << "term,kld_bits,p_d,p_q,p_value,significant\n";
            std::size_t shown = 0;
            for (const auto& c : report.contributions) {
                if (!terms_all && !c.significant) continue;
                out << c.term << ',' << report::format_double(c.kld_bits) << ','
                    << report::format_double(c.p_d) << ',' << report::format_double(c.p_q) << ','
                    << report::format_double(c.p_value) << ',' << (c.significant ? 1 : 0) << "\n";
                if (++shown >= terms_top) break;
            }
            return 0;
        }
        if (fetch->parsed()) {
            const char* endpoint = std::getenv("EMBED_ENDPOINT");
            if (!endpoint || !*endpoint)
                throw corpus::DataError("fetch-embeddings needs EMBED_ENDPOINT set");
            embedding::FetchConfig fc;
            fc.endpoint = endpoint;
            if (const char* key = std::getenv("EMBED_API_KEY")) fc.api_key = key;
            fc.model_name = fetch_model;
            fc.batch_size = fetch_batch;
            fc.cache_dir = fetch_cache;
            auto corpus = corpus::load_corpus(opts.corpus);
            std::vector<const corpus::Document*> docs;
            for (const auto& doc : corpus.documents) docs.push_back(&doc);
            embedding::FetchStats stats;
            auto store = embedding::fetch_embeddings(fc, docs, &stats);
            embedding::save_embeddings(store, fetch_out);
            out << "wrote " << store.vectors.size() << " vector(s) (dim " << store.dim << ") to "
                << fetch_out << "; " << stats.fetched << " fetched, " << stats.cache_hits
                << " from cache\n";
            return 0;
        }
        if (rerender->parsed()) {
            namespace fs = std::filesystem;
            fs::path dir(opts.out_dir);
            int rendered = 0;
            if (fs::exists(dir / "kld_sync_series.json")) {
                auto prov = provenance_from(dir / "kld_sync_series.json");
                auto series = report::read_series_json(dir / "kld_sync_series.json");
                std::vector<divergence::SliceOutcome> full(series.begin(), series.end());
                // Per-slice term reports (when present) restore the contributions.
                for (auto& outcome : full) {
                    auto terms_path = dir / "terms" / (outcome.slice_id + ".json");
                    if (outcome.report && fs::exists(terms_path))
                        outcome.report = report::read_report_json(terms_path);
                }
                std::ofstream(dir / "kld_sync_series.svg")
                    << svg::series_chart(full, "Summed synchronous KLD (significant terms)", prov);
                std::ofstream(dir / "kld_terms.svg")
                    << svg::term_lines_chart(full, 150, "Pointwise KLD per term", prov);
                rendered += 2;
            }
            if (fs::exists(dir / "kld_async_matrix.json")) {
                auto prov = provenance_from(dir / "kld_async_matrix.json");
                auto matrix = report::read_matrix_json(dir / "kld_async_matrix.json");
                std::ofstream(dir / "kld_async_matrix.svg")
                    << svg::matrix_heatmap(matrix, "Asynchronous summed KLD", prov);
                ++rendered;
            }
            if (fs::exists(dir / "ede.json")) {
                auto prov = provenance_from(dir / "ede.json");
                auto batch = report::read_ede_json(dir / "ede.json");
                std::ofstream(dir / "ede.svg") << svg::trajectories_chart(
                    batch.trajectories, batch.median, "Embedding density around references", prov);
                ++rendered;
            }
            if (fs::exists(dir / "trends.json")) {
                auto prov = provenance_from(dir / "trends.json");
                auto table = report::read_trends_json(dir / "trends.json");
                std::ofstream(dir / "trends.svg")
                    << svg::trends_chart(table, "Relative token usage over time", prov);
                ++rendered;
            }
            if (rendered == 0)
                throw corpus::DataError("no renderable artifacts found in " + opts.out_dir);
            out << "rendered " << rendered << " plot(s) in " << opts.out_dir << "\n";
            return 0;
        }
    } catch (const corpus::DataError& e) {
        err << "data error: " << e.what() << "\n";
        return 2;
    } catch (const embedding::FetchError& e) {
        err << "fetch error: " << e.what() << "\n";
        return 2;
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace corpusdrift::cli

#include "corpusdrift/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "corpusdrift/parallel.hpp"
#include "corpusdrift/stats.hpp"

namespace corpusdrift::divergence {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same_vocabulary(const unigram::SmoothedUnigramModel& a,
                     const unigram::SmoothedUnigramModel& b) {
    if (a.vocab == b.vocab) return true;
    return a.vocab && b.vocab && *a.vocab == *b.vocab;
}

void sort_contributions(std::vector<TermContribution>& contributions) {
    std::sort(contributions.begin(), contributions.end(),
              [](const TermContribution& x, const TermContribution& y) {
                  if (x.kld_bits != y.kld_bits) return x.kld_bits > y.kld_bits;
                  return x.term < y.term;
              });
}

}  // namespace

bool KldMatrix::cell_valid(std::size_t i, std::size_t j) const {
    return i < values.size() && j < values[i].size() && !std::isnan(values[i][j]);
}

std::vector<TermContribution> pointwise_kld(const unigram::SmoothedUnigramModel& d_model,
                                            const unigram::SmoothedUnigramModel& q_model) {
    if (!same_vocabulary(d_model, q_model))
        throw std::invalid_argument("pointwise_kld: models use different background vocabularies");
    const auto& vocab = *d_model.vocab;
    std::vector<TermContribution> out;
    out.reserve(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        TermContribution c;
        c.term = vocab[i];
        c.p_d = d_model.probs[i];
        c.p_q = q_model.probs[i];
        c.kld_bits = c.p_d * std::log2(c.p_d / c.p_q);
        out.push_back(std::move(c));
    }
    sort_contributions(out);
    return out;
}

SignificanceResult significance_filter(const unigram::UnigramModel& d_docs,
                                       const unigram::UnigramModel& q_docs,
                                       const std::vector<std::string>& vocab, double alpha) {
    SignificanceResult result;
    result.tested = d_docs.n_docs >= 2 && q_docs.n_docs >= 2;
    for (const auto& term : vocab) {
        SignificanceOutcome outcome;
        if (result.tested) {
            auto welch = stats::welch_t(d_docs.term_summary(term), q_docs.term_summary(term));
            outcome.p_value = welch.p_two_sided;
            outcome.significant = welch.p_two_sided < alpha;
        }
        result.by_term[term] = outcome;
    }
    return result;
}

KldReport compare_models(const unigram::UnigramModel& d_model,
                         const unigram::UnigramModel& q_model, const DivergenceConfig& config,
                         std::string d_slice, std::string q_slice,
                         const unigram::UnigramModel* background) {
    unigram::UnigramModel pair_background;
    std::string background_id;
    if (background == nullptr) {
        pair_background = unigram::union_background(d_model, q_model);
        background = &pair_background;
        background_id = d_slice + "|" + q_slice;
    } else {
        background_id = "corpus";
    }
    auto vocab = unigram::vocabulary(*background);
    auto d_smoothed = unigram::smooth(d_model, *background, config.lambda, vocab, background_id);
    auto q_smoothed = unigram::smooth(q_model, *background, config.lambda, vocab, background_id);

    KldReport report;
    report.d_slice = std::move(d_slice);
    report.q_slice = std::move(q_slice);
    report.alpha = config.alpha;
    report.config_hash = config.config_hash;
    report.n_d_docs = d_model.n_docs;
    report.n_q_docs = q_model.n_docs;

    auto significance = significance_filter(d_model, q_model, *vocab, config.alpha);
    report.welch_tested = significance.tested;

    // Contributions in sorted vocabulary order; both sums accumulate in
    // that same order so results do not depend on scheduling.
    report.contributions.reserve(vocab->size());
    for (std::size_t i = 0; i < vocab->size(); ++i) {
        TermContribution c;
        c.term = (*vocab)[i];
        c.p_d = d_smoothed.probs[i];
        c.p_q = q_smoothed.probs[i];
        c.kld_bits = c.p_d * std::log2(c.p_d / c.p_q);
        const auto& outcome = significance.by_term[c.term];
        c.p_value = outcome.p_value;
        c.significant = outcome.significant;
        report.summed_all_bits += c.kld_bits;
        if (c.significant) report.summed_significant_bits += c.kld_bits;
        report.contributions.push_back(std::move(c));
    }
    sort_contributions(report.contributions);
    return report;
}

std::vector<SliceModels> build_slice_models(const std::vector<corpus::TimeSlice>& slices,
                                            const corpus::CohortSelector& cohort,
                                            const textprep::NormalizationConfig& config,
                                            unsigned parallelism) {
    std::vector<SliceModels> out(slices.size());
    parallel_for(slices.size(), parallelism, [&](std::size_t i) {
        const auto& slice = slices[i];
        out[i].slice_id = slice.id();
        auto [cohort_docs, field_docs] = partition_slice(slice, cohort);
        auto build_side = [&](const std::vector<const corpus::Document*>& docs)
            -> std::optional<unigram::UnigramModel> {
            std::vector<textprep::TokenStream> streams;
            streams.reserve(docs.size());
            for (const auto* doc : docs)
                streams.push_back(textprep::normalize(doc->text, doc->id, config));
            bool any_tokens = std::any_of(streams.begin(), streams.end(),
                                          [](const auto& s) { return !s.tokens.empty(); });
            if (!any_tokens) return std::nullopt;
            return unigram::build_model(streams);
        };
        out[i].cohort = build_side(cohort_docs);
        out[i].field = build_side(field_docs);
    });
    return out;
}

unigram::UnigramModel global_background(const std::vector<SliceModels>& models) {
    unigram::UnigramModel bg;
    for (const auto& m : models) {
        for (const auto* side : {&m.cohort, &m.field}) {
            if (!side->has_value()) continue;
            for (const auto& [term, count] : (*side)->counts) bg.counts[term] += count;
            bg.total += (*side)->total;
        }
    }
    return bg;
}

std::vector<SliceOutcome> synchronous_from_models(const std::vector<SliceModels>& models,
                                                  const DivergenceConfig& config,
                                                  const unigram::UnigramModel* background) {
    std::vector<SliceOutcome> out(models.size());
    parallel_for(models.size(), config.parallelism, [&](std::size_t i) {
        const auto& m = models[i];
        out[i].slice_id = m.slice_id;
        if (!m.cohort) {
            out[i].gap_reason = "no cohort documents";
            return;
        }
        if (!m.field) {
            out[i].gap_reason = "no field documents";
            return;
        }
        out[i].report =
            compare_models(*m.cohort, *m.field, config, m.slice_id, m.slice_id, background);
    });
    return out;
}

KldMatrix asynchronous_from_models(const std::vector<SliceModels>& models,
                                   const DivergenceConfig& config,
                                   const unigram::UnigramModel* background) {
    KldMatrix matrix;
    std::size_t n = models.size();
    for (const auto& m : models) {
        matrix.rows.push_back(m.slice_id);
        matrix.cols.push_back(m.slice_id);
    }
    matrix.values.assign(n, std::vector<double>(n, kNaN));
    // (i, j) cells are independent work units.
    parallel_for(n * n, config.parallelism, [&](std::size_t cell) {
        std::size_t i = cell / n, j = cell % n;
        if (!models[i].cohort || !models[j].field) return;
        auto report = compare_models(*models[i].cohort, *models[j].field, config,
                                     models[i].slice_id, models[j].slice_id, background);
        matrix.values[i][j] = report.summed_significant_bits;
    });
    matrix.argmin_per_row.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (std::isnan(matrix.values[i][j])) continue;
            int& best = matrix.argmin_per_row[i];
            if (best < 0 || matrix.values[i][j] < matrix.values[i][std::size_t(best)]) {
                best = int(j);
            }
        }
    }
    return matrix;
}

namespace {

std::vector<SliceModels> models_for(const corpus::Corpus& corpus,
                                    const corpus::CohortSelector& cohort,
                                    const DivergenceConfig& config) {
    int start = config.start_year != 0 ? config.start_year : corpus.year_min;
    auto slices = corpus::slice_corpus(corpus, config.window, start);
    auto models = build_slice_models(slices, cohort, config.textprep, config.parallelism);
    bool cohort_anywhere =
        std::any_of(models.begin(), models.end(), [](const auto& m) { return bool(m.cohort); });
    if (!cohort_anywhere)
        throw corpus::DataError("cohort matches no documents in any time slice");
    return models;
}

}  // namespace

std::vector<SliceOutcome> synchronous_series(const corpus::Corpus& corpus,
                                             const corpus::CohortSelector& cohort,
                                             const DivergenceConfig& config) {
    auto models = models_for(corpus, cohort, config);
    if (config.whole_corpus_background) {
        auto bg = global_background(models);
        return synchronous_from_models(models, config, &bg);
    }
    return synchronous_from_models(models, config);
}

KldMatrix asynchronous_matrix(const corpus::Corpus& corpus, const corpus::CohortSelector& cohort,
                              const DivergenceConfig& config) {
    auto models = models_for(corpus, cohort, config);
    if (config.whole_corpus_background) {
        auto bg = global_background(models);
        return asynchronous_from_models(models, config, &bg);
    }
    return asynchronous_from_models(models, config);
}

}  // namespace corpusdrift::divergence

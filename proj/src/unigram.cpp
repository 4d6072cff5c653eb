#include "corpusdrift/unigram.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace corpusdrift::unigram {

double UnigramModel::probability(const std::string& term) const {
    auto it = counts.find(term);
    if (it == counts.end()) return 0.0;
    return double(it->second) / double(total);
}

std::vector<double> UnigramModel::doc_freqs_zero_filled(const std::string& term) const {
    std::vector<double> out(n_docs, 0.0);
    auto it = doc_freqs.find(term);
    if (it != doc_freqs.end()) {
        for (const auto& [doc_idx, freq] : it->second) out[doc_idx] = freq;
    }
    return out;
}

stats::SampleSummary UnigramModel::term_summary(const std::string& term) const {
    stats::SampleSummary s;
    s.n = n_docs;
    if (n_docs == 0) return s;
    double sum = 0.0, sum_sq = 0.0;
    auto it = doc_freqs.find(term);
    if (it != doc_freqs.end()) {
        for (const auto& [doc_idx, freq] : it->second) {
            sum += freq;
            sum_sq += freq * freq;
        }
    }
    s.mean = sum / double(s.n);
    if (s.n >= 2) {
        double ss = sum_sq - double(s.n) * s.mean * s.mean;
        s.variance = std::max(0.0, ss / double(s.n - 1));
    }
    return s;
}

UnigramModel build_model(const std::vector<textprep::TokenStream>& streams) {
    UnigramModel model;
    for (const auto& stream : streams) {
        if (stream.tokens.empty()) continue;
        std::uint32_t doc_idx = model.n_docs++;
        std::map<std::string, std::int64_t> local;
        for (const auto& token : stream.tokens) ++local[token];
        double doc_total = double(stream.tokens.size());
        for (const auto& [term, count] : local) {
            model.counts[term] += count;
            model.doc_freqs[term].emplace_back(doc_idx, double(count) / doc_total);
        }
        model.total += std::int64_t(stream.tokens.size());
    }
    if (model.total == 0) throw std::invalid_argument("empty model: no tokens in any stream");
    return model;
}

UnigramModel union_background(const UnigramModel& a, const UnigramModel& b) {
    UnigramModel bg;
    bg.counts = a.counts;
    for (const auto& [term, count] : b.counts) bg.counts[term] += count;
    bg.total = a.total + b.total;
    return bg;
}

std::shared_ptr<const std::vector<std::string>> vocabulary(const UnigramModel& model) {
    auto vocab = std::make_shared<std::vector<std::string>>();
    vocab->reserve(model.counts.size());
    for (const auto& [term, count] : model.counts) vocab->push_back(term);  // map is sorted
    return vocab;
}

double SmoothedUnigramModel::probability(const std::string& term) const {
    auto it = std::lower_bound(vocab->begin(), vocab->end(), term);
    if (it == vocab->end() || *it != term) return 0.0;
    return probs[std::size_t(it - vocab->begin())];
}

SmoothedUnigramModel smooth(const UnigramModel& model, const UnigramModel& background,
                            double lambda, std::string background_id) {
    return smooth(model, background, lambda, vocabulary(background), std::move(background_id));
}

SmoothedUnigramModel smooth(const UnigramModel& model, const UnigramModel& background,
                            double lambda,
                            std::shared_ptr<const std::vector<std::string>> background_vocab,
                            std::string background_id) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("smoothing lambda must be in (0, 1)");
    for (const auto& [term, count] : model.counts) {
        if (!background.counts.count(term))
            throw std::invalid_argument("background model missing term \"" + term + "\"");
    }
    SmoothedUnigramModel out;
    out.vocab = std::move(background_vocab);
    out.lambda = lambda;
    out.background_id = std::move(background_id);
    out.probs.resize(out.vocab->size());
    double bg_total = double(background.total);
    double model_total = double(model.total);
    for (std::size_t i = 0; i < out.vocab->size(); ++i) {
        const std::string& term = (*out.vocab)[i];
        auto bg_it = background.counts.find(term);
        double p_bg = bg_it == background.counts.end() ? 0.0 : double(bg_it->second) / bg_total;
        auto m_it = model.counts.find(term);
        double p_m = m_it == model.counts.end() ? 0.0 : double(m_it->second) / model_total;
        out.probs[i] = (1.0 - lambda) * p_m + lambda * p_bg;
    }
    return out;
}

namespace {

constexpr char kMagic[4] = {'C', 'D', 'U', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
}

void write_string(std::ostream& os, const std::string& s) {
    write_pod(os, std::uint32_t(s.size()));
    os.write(s.data(), std::streamsize(s.size()));
}

std::string read_string(std::istream& is) {
    std::uint32_t len = 0;
    read_pod(is, len);
    std::string s(len, '\0');
    is.read(s.data(), std::streamsize(len));
    return s;
}

}  // namespace

void save_model(const UnigramModel& model, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write model file: " + path.string());
    os.write(kMagic, sizeof(kMagic));
    write_pod(os, kVersion);
    write_pod(os, model.total);
    write_pod(os, model.n_docs);
    write_pod(os, std::uint64_t(model.counts.size()));
    for (const auto& [term, count] : model.counts) {
        write_string(os, term);
        write_pod(os, count);
        auto df = model.doc_freqs.find(term);
        std::uint64_t entries = df == model.doc_freqs.end() ? 0 : df->second.size();
        write_pod(os, entries);
        if (df != model.doc_freqs.end()) {
            for (const auto& [doc_idx, freq] : df->second) {
                write_pod(os, doc_idx);
                write_pod(os, freq);
            }
        }
    }
    if (!os) throw std::runtime_error("short write to model file: " + path.string());
}

UnigramModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open model file: " + path.string());
    char magic[4];
    is.read(magic, sizeof(magic));
    std::uint32_t version = 0;
    read_pod(is, version);
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0 || version != kVersion)
        throw std::runtime_error("not a model cache file (or wrong version): " + path.string());
    UnigramModel model;
    read_pod(is, model.total);
    read_pod(is, model.n_docs);
    std::uint64_t n_terms = 0;
    read_pod(is, n_terms);
    for (std::uint64_t i = 0; i < n_terms && is; ++i) {
        std::string term = read_string(is);
        std::int64_t count = 0;
        read_pod(is, count);
        model.counts[term] = count;
        std::uint64_t entries = 0;
        read_pod(is, entries);
        if (entries > 0) {
            auto& vec = model.doc_freqs[term];
            vec.resize(entries);
            for (auto& [doc_idx, freq] : vec) {
                read_pod(is, doc_idx);
                read_pod(is, freq);
            }
        }
    }
    if (!is) throw std::runtime_error("truncated model cache file: " + path.string());
    return model;
}

}  // namespace corpusdrift::unigram

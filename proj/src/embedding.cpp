#include "corpusdrift/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "corpusdrift/parallel.hpp"

namespace corpusdrift::embedding {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;  // 1/sqrt(2*pi)

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

const std::vector<double>* EmbeddingStore::find(const std::string& doc_id) const {
    auto it = vectors.find(doc_id);
    return it == vectors.end() ? nullptr : &it->second;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw corpus::DataError("cannot open embeddings file: " + path.string());
    EmbeddingStore store;
    std::string line;
    if (!std::getline(in, line))
        throw corpus::DataError("embeddings file is empty: " + path.string());

    // Header: dim=<d> model=<name>
    {
        std::istringstream hs(line);
        std::string field;
        while (hs >> field) {
            if (field.rfind("dim=", 0) == 0) store.dim = std::stoul(field.substr(4));
            else if (field.rfind("model=", 0) == 0) store.model_name = field.substr(6);
            else if (field.rfind("fetched_at=", 0) == 0) store.fetched_at = field.substr(11);
        }
    }
    if (store.dim == 0)
        throw corpus::DataError("embeddings header must declare dim=<d>: " + path.string());

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos || comma == 0) {
            throw corpus::DataError("embeddings line " + std::to_string(line_no) +
                                    ": expected 'id,v1,v2,...'");
        }
        std::string id = line.substr(0, comma);
        std::vector<double> vec;
        vec.reserve(store.dim);
        const char* p = line.data() + comma + 1;
        const char* end = line.data() + line.size();
        while (p < end) {
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc()) {
                throw corpus::DataError("embeddings: unparseable component for doc \"" + id + "\"");
            }
            if (!std::isfinite(v)) {
                throw corpus::DataError("embeddings: non-finite component for doc \"" + id + "\"");
            }
            vec.push_back(v);
            p = next;
            if (p < end && *p == ',') ++p;
        }
        if (vec.size() != store.dim) {
            throw corpus::DataError("embeddings: doc \"" + id + "\" has " +
                                    std::to_string(vec.size()) + " components, header says " +
                                    std::to_string(store.dim));
        }
        store.vectors[id] = std::move(vec);
    }
    return store;
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write embeddings file: " + path.string());
    out << "dim=" << store.dim << " model=" << store.model_name;
    if (!store.fetched_at.empty()) out << " fetched_at=" << store.fetched_at;
    out << "\n";
    char buf[40];
    for (const auto& [id, vec] : store.vectors) {
        out << id;
        for (double v : vec) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        out << "\n";
    }
}

KernelMode parse_kernel_mode(const std::string& name) {
    if (name == "as-written") return KernelMode::as_written;
    if (name == "multivariate-normalized") return KernelMode::multivariate_normalized;
    throw std::invalid_argument("unknown kernel mode: " + name);
}

std::string kernel_mode_name(KernelMode mode) {
    return mode == KernelMode::as_written ? "as-written" : "multivariate-normalized";
}

double kde_density(const KdeModel& model, std::span<const double> x) {
    if (model.sample.empty()) throw std::invalid_argument("kde_density: empty sample");
    if (!(model.bandwidth > 0.0)) throw std::invalid_argument("kde_density: bandwidth must be > 0");
    const double h = model.bandwidth;
    const std::size_t d = x.size();
    double acc = 0.0;
    for (const auto& xi : model.sample) {
        if (xi.size() != d)
            throw std::invalid_argument("kde_density: dimension mismatch in sample");
        double u2 = squared_distance(x, xi) / (h * h);
        acc += std::exp(-0.5 * u2);
    }
    double n = double(model.sample.size());
    if (model.mode == KernelMode::as_written) {
        return acc * kInvSqrt2Pi / (n * h);
    }
    // (2 pi)^(-d/2) * h^(-d) per point
    double log_const = -0.5 * double(d) * std::log(2.0 * M_PI) - double(d) * std::log(h);
    return acc * std::exp(log_const) / n;
}

double scott_bandwidth(const std::vector<std::vector<double>>& sample) {
    std::size_t n = sample.size();
    if (n < 2) return 1.0;
    std::size_t d = sample[0].size();
    double sd_sum = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        double mean = 0.0;
        for (const auto& v : sample) mean += v[k];
        mean /= double(n);
        double ss = 0.0;
        for (const auto& v : sample) {
            double diff = v[k] - mean;
            ss += diff * diff;
        }
        sd_sum += std::sqrt(ss / double(n - 1));
    }
    double mean_sd = sd_sum / double(d);
    if (!(mean_sd > 0.0) || !std::isfinite(mean_sd)) return 1.0;
    return std::pow(double(n), -1.0 / (double(d) + 4.0)) * mean_sd;
}

BandwidthRule BandwidthRule::parse(const std::string& text) {
    if (text == "scott") return {Kind::scott, 0.0};
    if (text == "scott-global") return {Kind::scott_global, 0.0};
    if (text.rfind("fixed:", 0) == 0) {
        double h = std::stod(text.substr(6));
        if (!(h > 0.0)) throw std::invalid_argument("fixed bandwidth must be > 0");
        return {Kind::fixed, h};
    }
    throw std::invalid_argument("unknown bandwidth rule: " + text +
                                " (expected scott, scott-global, or fixed:<h>)");
}

std::string BandwidthRule::str() const {
    switch (kind) {
        case Kind::scott: return "scott";
        case Kind::scott_global: return "scott-global";
        case Kind::fixed: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "fixed:%.17g", value);
            return buf;
        }
    }
    return "scott";
}

namespace {

// Slice sample for one reference: every embedded slice document plus the
// reference vector exactly once. Doc-id order keeps summation stable.
std::vector<std::vector<double>> slice_sample(const corpus::TimeSlice& slice,
                                              const EmbeddingStore& store,
                                              const std::string& reference_id,
                                              const std::vector<double>& reference_vec) {
    std::vector<std::pair<std::string, const std::vector<double>*>> members;
    for (const auto* doc : slice.documents) {
        const auto* vec = store.find(doc->id);
        if (vec) members.emplace_back(doc->id, vec);
    }
    std::sort(members.begin(), members.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::vector<double>> sample;
    sample.reserve(members.size() + 1);
    bool reference_present = false;
    for (const auto& [id, vec] : members) {
        if (id == reference_id) reference_present = true;
        sample.push_back(*vec);
    }
    if (!reference_present) sample.push_back(reference_vec);
    return sample;
}

double resolve_bandwidth(const BandwidthRule& rule, double global_h,
                         const std::vector<std::vector<double>>& sample) {
    switch (rule.kind) {
        case BandwidthRule::Kind::fixed: return rule.value;
        case BandwidthRule::Kind::scott_global: return global_h;
        case BandwidthRule::Kind::scott: return scott_bandwidth(sample);
    }
    return 1.0;
}

double compute_global_bandwidth(const std::vector<corpus::TimeSlice>& slices,
                                const EmbeddingStore& store) {
    std::vector<std::vector<double>> all;
    for (const auto& slice : slices) {
        for (const auto* doc : slice.documents) {
            const auto* vec = store.find(doc->id);
            if (vec) all.push_back(*vec);
        }
    }
    return scott_bandwidth(all);
}

EdeTrajectory trajectory_impl(const std::vector<corpus::TimeSlice>& slices,
                              const EmbeddingStore& store, const corpus::Document& reference,
                              const TrajectoryConfig& config, double global_h) {
    const auto* ref_vec = store.find(reference.id);
    if (!ref_vec)
        throw corpus::DataError("reference document \"" + reference.id + "\" has no embedding");
    std::size_t start = slices.size();
    for (std::size_t i = 0; i < slices.size(); ++i) {
        if (reference.year >= slices[i].start_year && reference.year <= slices[i].end_year) {
            start = i;
            break;
        }
    }
    if (start == slices.size()) {
        throw corpus::DataError("reference document \"" + reference.id + "\" (year " +
                                std::to_string(reference.year) + ") is outside the sliced range");
    }
    EdeTrajectory trajectory;
    trajectory.reference_doc = reference.id;
    trajectory.start_slice = slices[start].id();
    for (std::size_t i = start; i < slices.size(); ++i) {
        KdeModel model;
        model.sample = slice_sample(slices[i], store, reference.id, *ref_vec);
        model.mode = config.mode;
        model.bandwidth = resolve_bandwidth(config.bandwidth, global_h, model.sample);
        trajectory.points.emplace_back(slices[i].id(), kde_density(model, *ref_vec));
    }
    return trajectory;
}

}  // namespace

EdeTrajectory ede_trajectory(const std::vector<corpus::TimeSlice>& slices,
                             const EmbeddingStore& store, const corpus::Document& reference,
                             const TrajectoryConfig& config) {
    double global_h = config.bandwidth.kind == BandwidthRule::Kind::scott_global
                          ? compute_global_bandwidth(slices, store)
                          : 0.0;
    return trajectory_impl(slices, store, reference, config, global_h);
}

std::vector<MedianPoint> median_series(const std::vector<EdeTrajectory>& trajectories,
                                       const std::vector<std::string>& slice_order) {
    if (trajectories.empty())
        throw std::invalid_argument("median_series: no trajectories");
    std::vector<MedianPoint> out;
    for (const auto& slice_id : slice_order) {
        std::vector<double> values;
        for (const auto& t : trajectories) {
            for (const auto& [sid, density] : t.points) {
                if (sid == slice_id) {
                    values.push_back(density);
                    break;
                }
            }
        }
        if (values.empty()) continue;
        std::sort(values.begin(), values.end());
        MedianPoint p;
        p.slice_id = slice_id;
        p.count = values.size();
        std::size_t mid = values.size() / 2;
        p.median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
        double sum = 0.0;
        for (double v : values) sum += v;
        p.mean = sum / double(values.size());
        out.push_back(std::move(p));
    }
    return out;
}

EdeBatch ede_batch(const std::vector<corpus::TimeSlice>& slices, const EmbeddingStore& store,
                   const std::vector<const corpus::Document*>& references,
                   const TrajectoryConfig& config, unsigned parallelism) {
    EdeBatch batch;
    if (config.bandwidth.kind == BandwidthRule::Kind::scott_global) {
        batch.global_bandwidth = compute_global_bandwidth(slices, store);
    } else if (config.bandwidth.kind == BandwidthRule::Kind::fixed) {
        batch.global_bandwidth = config.bandwidth.value;
    }

    std::vector<const corpus::Document*> embedded;
    for (const auto* doc : references) {
        if (!store.find(doc->id)) {
            batch.skipped.push_back(doc->id);
            continue;
        }
        bool in_range = !slices.empty() && doc->year >= slices.front().start_year &&
                        doc->year <= slices.back().end_year;
        if (!in_range) {
            batch.skipped.push_back(doc->id);
            continue;
        }
        embedded.push_back(doc);
    }
    std::vector<EdeTrajectory> trajectories(embedded.size());
    parallel_for(embedded.size(), parallelism, [&](std::size_t i) {
        trajectories[i] = trajectory_impl(slices, store, *embedded[i], config,
                                          batch.global_bandwidth);
    });
    batch.trajectories = std::move(trajectories);

    std::vector<std::string> slice_order;
    slice_order.reserve(slices.size());
    for (const auto& s : slices) slice_order.push_back(s.id());
    if (!batch.trajectories.empty()) {
        batch.median = median_series(batch.trajectories, slice_order);
    }
    return batch;
}

}  // namespace corpusdrift::embedding

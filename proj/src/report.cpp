#include "corpusdrift/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace corpusdrift::report {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::pair<int, int> split_slice_id(const std::string& id) {
    auto dash = id.find('-', 1);  // tolerate a negative start year
    if (dash == std::string::npos) throw std::runtime_error("bad slice id: " + id);
    return {std::stoi(id.substr(0, dash)), std::stoi(id.substr(dash + 1))};
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file: " + path.string());
    return out;
}

void write_provenance(std::ostream& out, const Provenance& prov) {
    out << "# config_hash=" << prov.config_hash << "\n";
    out << "# stopwords_sha256=" << prov.stopwords_sha256 << "\n";
}

void dump_json(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw std::runtime_error("malformed JSON in " + path.string());
    return j;
}

json provenance_fields(const Provenance& prov) {
    return json{{"config_hash", prov.config_hash}, {"stopwords_sha256", prov.stopwords_sha256}};
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

FrequencyTrendTable token_frequency_trends(const corpus::Corpus& corpus,
                                           const corpus::CohortSelector& cohort,
                                           const textprep::NormalizationConfig& config,
                                           int window, int start_year, std::size_t top_k,
                                           std::int64_t min_tokens, double smoothing_bandwidth) {
    if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
    if (min_tokens < 0) throw std::invalid_argument("min_tokens must be >= 0");
    int start = start_year != 0 ? start_year : corpus.year_min;
    auto slices = corpus::slice_corpus(corpus, window, start);

    struct Bin {
        std::string id;
        std::map<std::string, std::int64_t> counts;
        std::int64_t total = 0;
    };
    std::vector<Bin> bins;
    std::map<std::string, std::int64_t> global_counts;
    bool cohort_seen = false;
    for (const auto& slice : slices) {
        Bin bin;
        bin.id = slice.id();
        auto [cohort_docs, field_docs] = partition_slice(slice, cohort);
        (void)field_docs;
        for (const auto* doc : cohort_docs) {
            cohort_seen = true;
            for (auto& token : textprep::tokenize(doc->text, config)) {
                ++bin.counts[token];
                ++global_counts[token];
                ++bin.total;
            }
        }
        bins.push_back(std::move(bin));
    }
    if (!cohort_seen) throw corpus::DataError("cohort matches no documents; no trends to compute");

    // Rank by total count, ties by term.
    std::vector<std::pair<std::string, std::int64_t>> ranked(global_counts.begin(),
                                                             global_counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    FrequencyTrendTable table;
    table.smoothing_bandwidth = smoothing_bandwidth;
    for (std::size_t i = 0; i < ranked.size() && i < top_k; ++i)
        table.terms.push_back(ranked[i].first);

    for (const auto& bin : bins) {
        if (bin.total < min_tokens || bin.total == 0) {
            table.excluded_bins.push_back(bin.id);
            continue;
        }
        table.bins.push_back(bin.id);
        table.bin_totals.push_back(bin.total);
        for (const auto& term : table.terms) {
            auto it = bin.counts.find(term);
            double freq = it == bin.counts.end() ? 0.0 : double(it->second) / double(bin.total);
            table.values[term].push_back(freq);
        }
    }

    // Display smoothing: Gaussian over bin index, renormalized at the edges.
    if (smoothing_bandwidth > 0.0 && !table.bins.empty()) {
        std::size_t nbins = table.bins.size();
        for (const auto& term : table.terms) {
            const auto& raw = table.values[term];
            std::vector<double> smooth(nbins, 0.0);
            for (std::size_t i = 0; i < nbins; ++i) {
                double num = 0.0, den = 0.0;
                for (std::size_t j = 0; j < nbins; ++j) {
                    double dz = (double(i) - double(j)) / smoothing_bandwidth;
                    double w = std::exp(-0.5 * dz * dz);
                    num += w * raw[j];
                    den += w;
                }
                smooth[i] = num / den;
            }
            table.smoothed[term] = std::move(smooth);
        }
    }
    return table;
}

void write_series_csv(const std::filesystem::path& path,
                      const std::vector<divergence::SliceOutcome>& series,
                      const Provenance& prov) {
    auto out = open_out(path);
    write_provenance(out, prov);
    out << "slice_start,slice_end,summed_significant_bits,summed_all_bits,"
           "n_cohort_docs,n_field_docs,n_significant_terms,welch_tested,gap,gap_reason\n";
    for (const auto& outcome : series) {
        auto [start, end] = split_slice_id(outcome.slice_id);
        out << start << ',' << end << ',';
        if (outcome.report) {
            const auto& r = *outcome.report;
            std::size_t n_sig = 0;
            for (const auto& c : r.contributions) n_sig += c.significant;
            out << format_double(r.summed_significant_bits) << ','
                << format_double(r.summed_all_bits) << ',' << r.n_d_docs << ',' << r.n_q_docs
                << ',' << n_sig << ',' << (r.welch_tested ? 1 : 0) << ",0,\n";
        } else {
            out << ",,,,,," << "1," << csv_quote(outcome.gap_reason) << "\n";
        }
    }
}

namespace {

json series_to_json(const std::vector<divergence::SliceOutcome>& series, const Provenance& prov) {
    json j = provenance_fields(prov);
    j["format"] = "corpusdrift.kld_series/1";
    auto& slices = j["slices"] = json::array();
    for (const auto& outcome : series) {
        json s;
        s["slice"] = outcome.slice_id;
        if (outcome.report) {
            const auto& r = *outcome.report;
            std::size_t n_sig = 0;
            for (const auto& c : r.contributions) n_sig += c.significant;
            s["gap"] = false;
            s["summed_significant_bits"] = r.summed_significant_bits;
            s["summed_all_bits"] = r.summed_all_bits;
            s["n_cohort_docs"] = r.n_d_docs;
            s["n_field_docs"] = r.n_q_docs;
            s["n_significant_terms"] = n_sig;
            s["welch_tested"] = r.welch_tested;
        } else {
            s["gap"] = true;
            s["gap_reason"] = outcome.gap_reason;
        }
        slices.push_back(std::move(s));
    }
    return j;
}

}  // namespace

void write_series_json(const std::filesystem::path& path,
                       const std::vector<divergence::SliceOutcome>& series,
                       const Provenance& prov) {
    dump_json(path, series_to_json(series, prov));
}

std::vector<divergence::SliceOutcome> read_series_json(const std::filesystem::path& path) {
    json j = load_json(path);
    std::vector<divergence::SliceOutcome> out;
    for (const auto& s : j.at("slices")) {
        divergence::SliceOutcome outcome;
        outcome.slice_id = s.at("slice").get<std::string>();
        if (!s.at("gap").get<bool>()) {
            divergence::KldReport r;
            r.d_slice = r.q_slice = outcome.slice_id;
            r.summed_significant_bits = s.at("summed_significant_bits").get<double>();
            r.summed_all_bits = s.at("summed_all_bits").get<double>();
            r.n_d_docs = s.at("n_cohort_docs").get<std::uint32_t>();
            r.n_q_docs = s.at("n_field_docs").get<std::uint32_t>();
            r.welch_tested = s.at("welch_tested").get<bool>();
            outcome.report = std::move(r);
        } else {
            outcome.gap_reason = s.value("gap_reason", "");
        }
        out.push_back(std::move(outcome));
    }
    return out;
}

void write_report_csv(const std::filesystem::path& path, const divergence::KldReport& report,
                      const Provenance& prov) {
    auto out = open_out(path);
    write_provenance(out, prov);
    out << "# d_slice=" << report.d_slice << "\n";
    out << "# q_slice=" << report.q_slice << "\n";
    out << "# alpha=" << format_double(report.alpha) << "\n";
    out << "# n_d_docs=" << report.n_d_docs << "\n";
    out << "# n_q_docs=" << report.n_q_docs << "\n";
    out << "# welch_tested=" << (report.welch_tested ? 1 : 0) << "\n";
    out << "# summed_significant_bits=" << format_double(report.summed_significant_bits) << "\n";
    out << "# summed_all_bits=" << format_double(report.summed_all_bits) << "\n";
    out << "term,kld_bits,p_d,p_q,p_value,significant\n";
    for (const auto& c : report.contributions) {
        out << csv_quote(c.term) << ',' << format_double(c.kld_bits) << ','
            << format_double(c.p_d) << ',' << format_double(c.p_q) << ','
            << format_double(c.p_value) << ',' << (c.significant ? 1 : 0) << "\n";
    }
}

divergence::KldReport read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report CSV: " + path.string());
    divergence::KldReport report;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(2, eq - 2);
            std::string value = line.substr(eq + 1);
            if (key == "d_slice") report.d_slice = value;
            else if (key == "q_slice") report.q_slice = value;
            else if (key == "alpha") report.alpha = std::stod(value);
            else if (key == "n_d_docs") report.n_d_docs = std::uint32_t(std::stoul(value));
            else if (key == "n_q_docs") report.n_q_docs = std::uint32_t(std::stoul(value));
            else if (key == "welch_tested") report.welch_tested = value == "1";
            else if (key == "config_hash") report.config_hash = value;
            continue;
        }
        if (!header_seen) {  // column header row
            header_seen = true;
            continue;
        }
        auto fields = csv_split(line);
        if (fields.size() != 6)
            throw std::runtime_error("report CSV: bad row in " + path.string() + ": " + line);
        divergence::TermContribution c;
        c.term = fields[0];
        c.kld_bits = std::stod(fields[1]);
        c.p_d = std::stod(fields[2]);
        c.p_q = std::stod(fields[3]);
        c.p_value = std::stod(fields[4]);
        c.significant = fields[5] == "1";
        report.summed_all_bits += c.kld_bits;
        if (c.significant) report.summed_significant_bits += c.kld_bits;
        report.contributions.push_back(std::move(c));
    }
    return report;
}

void write_report_json(const std::filesystem::path& path, const divergence::KldReport& report,
                       const Provenance& prov) {
    json j = provenance_fields(prov);
    j["format"] = "corpusdrift.kld_report/1";
    j["d_slice"] = report.d_slice;
    j["q_slice"] = report.q_slice;
    j["alpha"] = report.alpha;
    j["n_d_docs"] = report.n_d_docs;
    j["n_q_docs"] = report.n_q_docs;
    j["welch_tested"] = report.welch_tested;
    j["summed_significant_bits"] = report.summed_significant_bits;
    j["summed_all_bits"] = report.summed_all_bits;
    auto& contributions = j["contributions"] = json::array();
    for (const auto& c : report.contributions) {
        contributions.push_back(json{{"term", c.term},
                                     {"kld_bits", c.kld_bits},
                                     {"p_d", c.p_d},
                                     {"p_q", c.p_q},
                                     {"p_value", c.p_value},
                                     {"significant", c.significant}});
    }
    dump_json(path, j);
}

divergence::KldReport read_report_json(const std::filesystem::path& path) {
    json j = load_json(path);
    divergence::KldReport report;
    report.d_slice = j.at("d_slice").get<std::string>();
    report.q_slice = j.at("q_slice").get<std::string>();
    report.alpha = j.at("alpha").get<double>();
    report.n_d_docs = j.at("n_d_docs").get<std::uint32_t>();
    report.n_q_docs = j.at("n_q_docs").get<std::uint32_t>();
    report.welch_tested = j.at("welch_tested").get<bool>();
    report.summed_significant_bits = j.at("summed_significant_bits").get<double>();
    report.summed_all_bits = j.at("summed_all_bits").get<double>();
    report.config_hash = j.value("config_hash", "");
    for (const auto& item : j.at("contributions")) {
        divergence::TermContribution c;
        c.term = item.at("term").get<std::string>();
        c.kld_bits = item.at("kld_bits").get<double>();
        c.p_d = item.at("p_d").get<double>();
        c.p_q = item.at("p_q").get<double>();
        c.p_value = item.at("p_value").get<double>();
        c.significant = item.at("significant").get<bool>();
        report.contributions.push_back(std::move(c));
    }
    return report;
}

void write_matrix_csv(const std::filesystem::path& path, const divergence::KldMatrix& matrix,
                      const Provenance& prov) {
    auto out = open_out(path);
    write_provenance(out, prov);
    out << "d_slice\\q_slice";
    for (const auto& col : matrix.cols) out << ',' << col;
    out << "\n";
    for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
        out << matrix.rows[i];
        for (std::size_t j = 0; j < matrix.cols.size(); ++j) {
            out << ',';
            if (matrix.cell_valid(i, j)) out << format_double(matrix.values[i][j]);
        }
        out << "\n";
    }
}

void write_matrix_json(const std::filesystem::path& path, const divergence::KldMatrix& matrix,
                       const Provenance& prov) {
    json j = provenance_fields(prov);
    j["format"] = "corpusdrift.kld_matrix/1";
    j["rows"] = matrix.rows;
    j["cols"] = matrix.cols;
    auto& values = j["values"] = json::array();
    for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
        json row = json::array();
        for (std::size_t j2 = 0; j2 < matrix.cols.size(); ++j2) {
            if (matrix.cell_valid(i, j2)) row.push_back(matrix.values[i][j2]);
            else row.push_back(nullptr);
        }
        values.push_back(std::move(row));
    }
    j["argmin_per_row"] = matrix.argmin_per_row;
    dump_json(path, j);
}

divergence::KldMatrix read_matrix_json(const std::filesystem::path& path) {
    json j = load_json(path);
    divergence::KldMatrix matrix;
    matrix.rows = j.at("rows").get<std::vector<std::string>>();
    matrix.cols = j.at("cols").get<std::vector<std::string>>();
    for (const auto& row : j.at("values")) {
        std::vector<double> vals;
        for (const auto& cell : row) vals.push_back(cell.is_null() ? kNaN : cell.get<double>());
        matrix.values.push_back(std::move(vals));
    }
    matrix.argmin_per_row = j.at("argmin_per_row").get<std::vector<int>>();
    return matrix;
}

void write_trends_csv(const std::filesystem::path& path, const FrequencyTrendTable& table,
                      const Provenance& prov) {
    auto out = open_out(path);
    write_provenance(out, prov);
    if (!table.excluded_bins.empty()) {
        out << "# excluded_bins=";
        for (std::size_t i = 0; i < table.excluded_bins.size(); ++i) {
            if (i) out << ';';
            out << table.excluded_bins[i];
        }
        out << "\n";
    }
    out << "term,slice_start,slice_end,rel_freq\n";
    for (const auto& term : table.terms) {
        const auto& vals = table.values.at(term);
        for (std::size_t b = 0; b < table.bins.size(); ++b) {
            auto [start, end] = split_slice_id(table.bins[b]);
            out << csv_quote(term) << ',' << start << ',' << end << ','
                << format_double(vals[b]) << "\n";
        }
    }
}

void write_trends_json(const std::filesystem::path& path, const FrequencyTrendTable& table,
                       const Provenance& prov) {
    json j = provenance_fields(prov);
    j["format"] = "corpusdrift.trends/1";
    j["terms"] = table.terms;
    j["bins"] = table.bins;
    j["excluded_bins"] = table.excluded_bins;
    j["bin_totals"] = table.bin_totals;
    j["values"] = table.values;
    j["smoothed"] = table.smoothed;
    j["smoothing_bandwidth"] = table.smoothing_bandwidth;
    dump_json(path, j);
}

FrequencyTrendTable read_trends_json(const std::filesystem::path& path) {
    json j = load_json(path);
    FrequencyTrendTable table;
    table.terms = j.at("terms").get<std::vector<std::string>>();
    table.bins = j.at("bins").get<std::vector<std::string>>();
    table.excluded_bins = j.at("excluded_bins").get<std::vector<std::string>>();
    table.bin_totals = j.at("bin_totals").get<std::vector<std::int64_t>>();
    table.values = j.at("values").get<std::map<std::string, std::vector<double>>>();
    table.smoothed = j.at("smoothed").get<std::map<std::string, std::vector<double>>>();
    table.smoothing_bandwidth = j.at("smoothing_bandwidth").get<double>();
    return table;
}

void write_ede_trajectories_csv(const std::filesystem::path& path,
                                const std::vector<embedding::EdeTrajectory>& trajectories,
                                const Provenance& prov) {
    auto out = open_out(path);
    write_provenance(out, prov);
    out << "reference_id,slice_start,slice_end,density\n";
    for (const auto& t : trajectories) {
        for (const auto& [slice_id, density] : t.points) {
            auto [start, end] = split_slice_id(slice_id);
            out << csv_quote(t.reference_doc) << ',' << start << ',' << end << ','
                << format_double(density) << "\n";
        }
    }
}

void write_ede_median_csv(const std::filesystem::path& path,
                          const std::vector<embedding::MedianPoint>& median,
                          const Provenance& prov) {
    auto out = open_out(path);
    write_provenance(out, prov);
    out << "slice_start,slice_end,median_density,mean_density,n_trajectories\n";
    for (const auto& p : median) {
        auto [start, end] = split_slice_id(p.slice_id);
        out << start << ',' << end << ',' << format_double(p.median) << ','
            << format_double(p.mean) << ',' << p.count << "\n";
    }
}

void write_ede_json(const std::filesystem::path& path, const embedding::EdeBatch& batch,
                    const std::string& bandwidth_rule, const std::string& kernel_mode,
                    const Provenance& prov) {
    json j = provenance_fields(prov);
    j["format"] = "corpusdrift.ede/1";
    j["bandwidth_rule"] = bandwidth_rule;
    j["kernel_mode"] = kernel_mode;
    j["global_bandwidth"] = batch.global_bandwidth;
    j["skipped_references"] = batch.skipped;
    auto& trajectories = j["trajectories"] = json::array();
    for (const auto& t : batch.trajectories) {
        json tj;
        tj["reference"] = t.reference_doc;
        tj["start_slice"] = t.start_slice;
        auto& points = tj["points"] = json::array();
        for (const auto& [slice_id, density] : t.points)
            points.push_back(json{{"slice", slice_id}, {"density", density}});
        trajectories.push_back(std::move(tj));
    }
    auto& median = j["median"] = json::array();
    for (const auto& p : batch.median) {
        median.push_back(json{{"slice", p.slice_id},
                              {"median", p.median},
                              {"mean", p.mean},
                              {"count", p.count}});
    }
    dump_json(path, j);
}

embedding::EdeBatch read_ede_json(const std::filesystem::path& path) {
    json j = load_json(path);
    embedding::EdeBatch batch;
    batch.global_bandwidth = j.at("global_bandwidth").get<double>();
    batch.skipped = j.at("skipped_references").get<std::vector<std::string>>();
    for (const auto& tj : j.at("trajectories")) {
        embedding::EdeTrajectory t;
        t.reference_doc = tj.at("reference").get<std::string>();
        t.start_slice = tj.at("start_slice").get<std::string>();
        for (const auto& p : tj.at("points"))
            t.points.emplace_back(p.at("slice").get<std::string>(), p.at("density").get<double>());
        batch.trajectories.push_back(std::move(t));
    }
    for (const auto& p : j.at("median")) {
        embedding::MedianPoint m;
        m.slice_id = p.at("slice").get<std::string>();
        m.median = p.at("median").get<double>();
        m.mean = p.at("mean").get<double>();
        m.count = p.at("count").get<std::size_t>();
        batch.median.push_back(std::move(m));
    }
    return batch;
}

}  // namespace corpusdrift::report

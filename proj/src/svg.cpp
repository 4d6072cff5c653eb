#include "corpusdrift/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace corpusdrift::svg {

namespace {

constexpr double kWidth = 900, kHeight = 420;
constexpr double kLeft = 70, kRight = 30, kTop = 44, kBottom = 64;
constexpr double kPlotW = kWidth - kLeft - kRight;
constexpr double kPlotH = kHeight - kTop - kBottom;

const char* kPalette[12] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                            "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#ad494a"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string escape_text(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

struct Scale {
    double lo = 0, hi = 1;
    double map(double v, double from, double to) const {
        if (hi == lo) return (from + to) / 2;
        return from + (v - lo) / (hi - lo) * (to - from);
    }
};

struct Chart {
    std::ostringstream out;
    Scale x, y;

    Chart(const std::string& title, const report::Provenance& prov) {
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
            << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
        out << "<!-- config_hash=" << prov.config_hash
            << " stopwords_sha256=" << prov.stopwords_sha256 << " -->\n";
        out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"15\">" << escape_text(title)
            << "</text>\n";
    }

    double px(double v) const { return x.map(v, kLeft, kLeft + kPlotW); }
    double py(double v) const { return y.map(v, kTop + kPlotH, kTop); }

    void frame() {
        out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\""
            << num(kPlotW) << "\" height=\"" << num(kPlotH)
            << "\" fill=\"none\" stroke=\"#444444\"/>\n";
    }

    void y_ticks(int n = 5) {
        for (int i = 0; i <= n; ++i) {
            double v = y.lo + (y.hi - y.lo) * i / n;
            double yy = py(v);
            out << "<line x1=\"" << num(kLeft - 4) << "\" y1=\"" << num(yy) << "\" x2=\""
                << num(kLeft) << "\" y2=\"" << num(yy) << "\" stroke=\"#444444\"/>\n";
            out << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(yy + 4)
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
                << tick_label(v) << "</text>\n";
        }
    }

    void x_slice_labels(const std::vector<std::string>& labels) {
        if (labels.empty()) return;
        std::size_t step = std::max<std::size_t>(1, (labels.size() + 11) / 12);
        for (std::size_t i = 0; i < labels.size(); i += step) {
            double xx = px(double(i));
            out << "<line x1=\"" << num(xx) << "\" y1=\"" << num(kTop + kPlotH) << "\" x2=\""
                << num(xx) << "\" y2=\"" << num(kTop + kPlotH + 4) << "\" stroke=\"#444444\"/>\n";
            out << "<text x=\"" << num(xx) << "\" y=\"" << num(kTop + kPlotH + 18)
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
                << escape_text(labels[i]) << "</text>\n";
        }
    }

    // Breaks at NaN rather than interpolating across missing slices.
    void polyline(const std::vector<double>& values, const std::string& color, double width,
                  double opacity = 1.0, bool dots = false) {
        std::string points;
        auto flush = [&] {
            if (points.empty()) return;
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
                << num(width) << "\" stroke-opacity=\"" << num(opacity) << "\" points=\""
                << points << "\"/>\n";
            points.clear();
        };
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (std::isnan(values[i])) {
                flush();
                continue;
            }
            if (!points.empty()) points += ' ';
            points += num(px(double(i))) + "," + num(py(values[i]));
        }
        flush();
        if (dots) {
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (std::isnan(values[i])) continue;
                out << "<circle cx=\"" << num(px(double(i))) << "\" cy=\""
                    << num(py(values[i])) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
            }
        }
    }

    void legend_line(int index, const std::string& color, const std::string& label) {
        double yy = kTop + 12 + 16 * index;
        double xx = kLeft + kPlotW - 150;
        out << "<line x1=\"" << num(xx) << "\" y1=\"" << num(yy - 4) << "\" x2=\""
            << num(xx + 22) << "\" y2=\"" << num(yy - 4) << "\" stroke=\"" << color
            << "\" stroke-width=\"2.5\"/>\n";
        out << "<text x=\"" << num(xx + 28) << "\" y=\"" << num(yy)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_text(label)
            << "</text>\n";
    }

    std::string finish() {
        out << "</svg>\n";
        return out.str();
    }
};

void fit_y(Scale& y, const std::vector<double>& values, bool include_zero) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values) {
        if (std::isnan(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(lo <= hi)) {
        lo = 0;
        hi = 1;
    }
    if (include_zero) lo = std::min(lo, 0.0);
    if (lo == hi) hi = lo + 1;
    double pad = (hi - lo) * 0.05;
    y.lo = lo == 0 && include_zero ? 0 : lo - pad;
    y.hi = hi + pad;
}

}  // namespace

std::string series_chart(const std::vector<divergence::SliceOutcome>& series,
                         const std::string& title, const report::Provenance& prov) {
    Chart chart(title, prov);
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& outcome : series) {
        labels.push_back(outcome.slice_id);
        values.push_back(outcome.report ? outcome.report->summed_significant_bits
                                        : std::numeric_limits<double>::quiet_NaN());
    }
    chart.x = {0.0, double(std::max<std::size_t>(1, values.size() - 1))};
    fit_y(chart.y, values, true);
    chart.frame();
    chart.y_ticks();
    chart.x_slice_labels(labels);
    chart.polyline(values, "#1f77b4", 2.0, 1.0, true);
    return chart.finish();
}

std::string term_lines_chart(const std::vector<divergence::SliceOutcome>& series,
                             std::size_t max_series, const std::string& title,
                             const report::Provenance& prov) {
    // Per-term contribution series over the slice axis; slices without a
    // report stay NaN so lines break across gaps.
    std::vector<std::string> labels;
    for (const auto& outcome : series) labels.push_back(outcome.slice_id);
    std::map<std::string, std::vector<double>> by_term;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!series[i].report) continue;
        for (const auto& c : series[i].report->contributions) {
            auto& vec = by_term[c.term];
            if (vec.empty()) vec.assign(series.size(), std::numeric_limits<double>::quiet_NaN());
            vec[i] = c.kld_bits;
        }
    }

    // Cumulative |contribution| ranks the lines; extremes get highlighted.
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& [term, vec] : by_term) {
        double score = 0.0;
        for (double v : vec) {
            if (!std::isnan(v)) score += std::fabs(v);
        }
        scored.emplace_back(score, term);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    Chart chart(title, prov);
    chart.x = {0.0, double(std::max<std::size_t>(1, labels.size() - 1))};
    std::vector<double> all;
    std::size_t drawn = std::min(max_series, scored.size());
    for (std::size_t k = 0; k < drawn; ++k) {
        for (double v : by_term[scored[k].second]) all.push_back(v);
    }
    fit_y(chart.y, all, false);
    chart.frame();
    chart.y_ticks();
    chart.x_slice_labels(labels);

    std::string max_term = scored.empty() ? "" : scored.front().second;
    std::string min_term = scored.empty() ? "" : scored.back().second;
    for (std::size_t k = drawn; k-- > 0;) {
        const std::string& term = scored[k].second;
        if (term == max_term || term == min_term) continue;
        chart.polyline(by_term[term], "#999999", 0.8, 0.35);
    }
    if (!min_term.empty() && min_term != max_term) {
        chart.polyline(by_term[min_term], "#1f77b4", 2.2);
        chart.legend_line(1, "#1f77b4", min_term + " (min)");
    }
    if (!max_term.empty()) {
        chart.polyline(by_term[max_term], "#d62728", 2.2);
        chart.legend_line(0, "#d62728", max_term + " (max)");
    }
    return chart.finish();
}

std::string matrix_heatmap(const divergence::KldMatrix& matrix, const std::string& title,
                           const report::Provenance& prov) {
    Chart chart(title, prov);
    std::size_t nrows = matrix.rows.size(), ncols = matrix.cols.size();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < nrows; ++i) {
        for (std::size_t j = 0; j < ncols; ++j) {
            if (!matrix.cell_valid(i, j)) continue;
            lo = std::min(lo, matrix.values[i][j]);
            hi = std::max(hi, matrix.values[i][j]);
        }
    }
    if (!(lo <= hi)) {
        lo = 0;
        hi = 1;
    }
    double cell_w = kPlotW / double(std::max<std::size_t>(1, ncols));
    double cell_h = kPlotH / double(std::max<std::size_t>(1, nrows));
    for (std::size_t i = 0; i < nrows; ++i) {
        for (std::size_t j = 0; j < ncols; ++j) {
            double x0 = kLeft + cell_w * double(j);
            // Row 0 (earliest slice) at the bottom.
            double y0 = kTop + cell_h * double(nrows - 1 - i);
            std::string fill = "#dddddd";
            if (matrix.cell_valid(i, j)) {
                double t = hi == lo ? 0.0 : (matrix.values[i][j] - lo) / (hi - lo);
                int r = int(std::lround(255 + (178 - 255) * t));
                int g = int(std::lround(247 + (24 - 247) * t));
                int b = int(std::lround(251 + (43 - 251) * t));
                char buf[8];
                std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
                fill = buf;
            }
            chart.out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\""
                      << num(cell_w) << "\" height=\"" << num(cell_h) << "\" fill=\"" << fill
                      << "\"/>\n";
        }
    }
    // Outline each row's minimum-divergence cell.
    for (std::size_t i = 0; i < nrows; ++i) {
        int j = matrix.argmin_per_row[i];
        if (j < 0) continue;
        double x0 = kLeft + cell_w * double(j);
        double y0 = kTop + cell_h * double(nrows - 1 - i);
        chart.out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\""
                  << num(cell_w) << "\" height=\"" << num(cell_h)
                  << "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    }
    chart.frame();
    std::size_t step = std::max<std::size_t>(1, (ncols + 11) / 12);
    for (std::size_t j = 0; j < ncols; j += step) {
        double xx = kLeft + cell_w * (double(j) + 0.5);
        chart.out << "<text x=\"" << num(xx) << "\" y=\"" << num(kTop + kPlotH + 18)
                  << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
                  << escape_text(matrix.cols[j]) << "</text>\n";
    }
    step = std::max<std::size_t>(1, (nrows + 11) / 12);
    for (std::size_t i = 0; i < nrows; i += step) {
        double yy = kTop + cell_h * (double(nrows - 1 - i) + 0.5) + 4;
        chart.out << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(yy)
                  << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
                  << escape_text(matrix.rows[i]) << "</text>\n";
    }
    return chart.finish();
}

std::string trajectories_chart(const std::vector<embedding::EdeTrajectory>& trajectories,
                               const std::vector<embedding::MedianPoint>& median,
                               const std::string& title, const report::Provenance& prov) {
    // Slice axis: the median series covers every populated slice.
    std::vector<std::string> labels;
    for (const auto& p : median) labels.push_back(p.slice_id);
    if (labels.empty()) {
        const embedding::EdeTrajectory* longest = nullptr;
        for (const auto& t : trajectories) {
            if (!longest || t.points.size() > longest->points.size()) longest = &t;
        }
        if (longest) {
            for (const auto& [slice_id, density] : longest->points) labels.push_back(slice_id);
        }
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = i;

    Chart chart(title, prov);
    chart.x = {0.0, double(std::max<std::size_t>(1, labels.size() - 1))};
    std::vector<double> all;
    auto to_row = [&](const auto& points) {
        std::vector<double> row(labels.size(), std::numeric_limits<double>::quiet_NaN());
        for (const auto& [slice_id, value] : points) {
            auto it = index.find(slice_id);
            if (it != index.end()) row[it->second] = value;
        }
        return row;
    };
    std::vector<std::vector<double>> rows;
    for (const auto& t : trajectories) {
        rows.push_back(to_row(t.points));
        for (double v : rows.back()) all.push_back(v);
    }
    std::vector<double> median_row(labels.size(), std::numeric_limits<double>::quiet_NaN());
    for (const auto& p : median) {
        auto it = index.find(p.slice_id);
        if (it != index.end()) median_row[it->second] = p.median;
    }
    for (double v : median_row) all.push_back(v);
    fit_y(chart.y, all, true);
    chart.frame();
    chart.y_ticks();
    chart.x_slice_labels(labels);
    for (const auto& row : rows) chart.polyline(row, "#888888", 0.8, 0.45);
    chart.polyline(median_row, "#000000", 3.0);
    chart.legend_line(0, "#000000", "median");
    return chart.finish();
}

std::string trends_chart(const report::FrequencyTrendTable& table, const std::string& title,
                         const report::Provenance& prov) {
    Chart chart(title, prov);
    chart.x = {0.0, double(std::max<std::size_t>(1, table.bins.size() - 1))};
    const auto& source = table.smoothed.empty() ? table.values : table.smoothed;
    std::vector<double> all;
    for (const auto& term : table.terms) {
        auto it = source.find(term);
        if (it == source.end()) continue;
        for (double v : it->second) all.push_back(v);
    }
    fit_y(chart.y, all, true);
    chart.frame();
    chart.y_ticks();
    chart.x_slice_labels(table.bins);
    int idx = 0;
    for (const auto& term : table.terms) {
        auto it = source.find(term);
        if (it == source.end()) continue;
        const char* color = kPalette[idx % 12];
        chart.polyline(it->second, color, 1.6);
        if (idx < 12) chart.legend_line(idx, color, term);
        ++idx;
    }
    return chart.finish();
}

}  // namespace corpusdrift::svg

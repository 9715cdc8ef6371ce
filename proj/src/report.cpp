#include "bbal/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "bbal/errors.hpp"
#include "bbal/io.hpp"

namespace bbal {

std::vector<ResultRow> parse_results_csv(std::string_view text) {
    auto lines = io::split_lines(text);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty() || lines[0] != "method,trial,round,n_train,metric,value,seconds")
        throw InputError("line 1: expected header 'method,trial,round,n_train,metric,value,seconds'");
    std::vector<ResultRow> rows;
    for (std::size_t l = 1; l < lines.size(); ++l) {
        auto f = io::split_fields(lines[l]);
        const auto where = "line " + std::to_string(l + 1) + ": ";
        if (f.size() != 7) throw InputError(where + "expected 7 fields");
        auto trial = io::parse_uint(f[1]);
        auto round = io::parse_uint(f[2]);
        auto n_train = io::parse_uint(f[3]);
        auto value = io::parse_double(f[5]);
        auto seconds = io::parse_double(f[6]);
        if (!trial || !round || !n_train || !value || !seconds) throw InputError(where + "malformed field");
        rows.push_back({std::string(f[0]), *trial, *round, *n_train, std::string(f[4]), *value, *seconds});
    }
    return rows;
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
    return parse_results_csv(io::read_file(path));
}

namespace {

struct Summary {
    double mean = 0.0;
    double stderr_ = 0.0;
};

Summary summarize(const std::vector<double>& v) {
    Summary s;
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stderr_ = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    return s;
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, a, b);
    return buf;
}

/// method -> round -> (mean n_train, mean log RMSE)
std::map<std::string, std::map<std::size_t, std::pair<double, double>>> curves(const std::vector<ResultRow>& rows) {
    std::map<std::string, std::map<std::size_t, std::vector<std::pair<double, double>>>> raw;
    for (const auto& r : rows)
        if (r.metric == "RMSE" && r.value > 0.0)
            raw[r.method][r.round].emplace_back(static_cast<double>(r.n_train), std::log(r.value));
    std::map<std::string, std::map<std::size_t, std::pair<double, double>>> out;
    for (const auto& [method, rounds] : raw)
        for (const auto& [round, pts] : rounds) {
            double n = 0.0, l = 0.0;
            for (const auto& [a, b] : pts) {
                n += a;
                l += b;
            }
            out[method][round] = {n / static_cast<double>(pts.size()), l / static_cast<double>(pts.size())};
        }
    return out;
}

}  // namespace

std::string format_report(const std::vector<ResultRow>& rows) {
    if (rows.empty()) return "no records\n";

    // method -> trial -> final round
    std::map<std::string, std::map<std::size_t, std::size_t>> last_round;
    std::vector<std::string> metrics;
    for (const auto& r : rows) {
        auto& lr = last_round[r.method][r.trial];
        lr = std::max(lr, r.round);
        if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
    }
    std::sort(metrics.begin(), metrics.end());
    std::map<std::string, std::map<std::string, std::vector<double>>> finals;
    for (const auto& r : rows)
        if (r.round == last_round[r.method][r.trial]) finals[r.method][r.metric].push_back(r.value);

    std::string out = "final round (mean +- standard error over trials)\n";
    out += "method    trials";
    for (const auto& m : metrics) {
        char col[64];
        std::snprintf(col, sizeof(col), "%22s", m.c_str());
        out += col;
    }
    out += "\n";
    for (const auto& [method, per_metric] : finals) {
        char head[64];
        std::snprintf(head, sizeof(head), "%-9s %6zu", method.c_str(), last_round[method].size());
        out += head;
        for (const auto& m : metrics) {
            auto s = summarize(per_metric.count(m) ? per_metric.at(m) : std::vector<double>{});
            out += fmt("%12.4f +- %6.4f", s.mean, s.stderr_);
        }
        out += "\n";
    }

    out += "\nmean log RMSE by round\n";
    const auto curve = curves(rows);
    out += "method   ";
    for (const auto& [round, pt] : curve.begin()->second) {
        char col[32];
        std::snprintf(col, sizeof(col), " %9s", ("round " + std::to_string(round)).c_str());
        out += col;
    }
    out += "\n";
    for (const auto& [method, rounds] : curve) {
        char head[64];
        std::snprintf(head, sizeof(head), "%-9s", method.c_str());
        out += head;
        for (const auto& [round, pt] : rounds) out += fmt(" %9.4f", pt.second);
        out += "\n";
    }
    return out;
}

std::string format_report_svg(const std::vector<ResultRow>& rows) {
    const auto data = curves(rows);
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& [_, rounds] : data)
        for (const auto& [__, pt] : rounds) {
            x0 = std::min(x0, pt.first);
            x1 = std::max(x1, pt.first);
            y0 = std::min(y0, pt.second);
            y1 = std::max(y1, pt.second);
        }
    const double w = 640, h = 400, pad = 50;
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (data.empty()) return svg + "<text x=\"20\" y=\"40\">no records</text>\n</svg>\n";
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    std::size_t c = 0;
    for (const auto& [method, rounds] : data) {
        std::string pts;
        for (const auto& [_, pt] : rounds) {
            const double px = pad + (pt.first - x0) / (x1 - x0) * (w - 2 * pad);
            const double py = h - pad - (pt.second - y0) / (y1 - y0) * (h - 2 * pad);
            pts += fmt("%.1f,%.1f ", px, py);
        }
        const char* color = colors[c % 8];
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
        svg += "<text x=\"" + fmt("%.0f", w - pad - 60) + "\" y=\"" + fmt("%.0f", pad + 16.0 * static_cast<double>(c)) +
               "\" fill=\"" + color + "\">" + method + "</text>\n";
        ++c;
    }
    svg += "<text x=\"" + fmt("%.0f", w / 2 - 40) + "\" y=\"" + fmt("%.0f", h - 10) + "\">labeled points</text>\n";
    svg += "<text x=\"10\" y=\"30\">mean log RMSE</text>\n</svg>\n";
    return svg;
}

}  // namespace bbal

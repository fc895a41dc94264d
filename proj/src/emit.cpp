#include "acss/bench.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace acss {

namespace {

const char* kHeader = "experiment,method,grid,rep,seed,pval,reject,error,ms";

// Shortest representation that parses back to the same double.
std::string num(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_num(const std::string& s, const std::string& what) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::runtime_error("csv: bad " + what + " '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            f.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    f.push_back(cur);
    return f;
}

}  // namespace

OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return OutputFormat::Csv;
    if (s == "json") return OutputFormat::Json;
    if (s == "svg-lines" || s == "svg") return OutputFormat::SvgLines;
    throw ConfigError("unknown format '" + s + "' (csv|json|svg-lines)");
}

void write_csv(std::ostream& os, const std::vector<ExperimentRow>& rows) {
    os << kHeader << '\n';
    for (const auto& r : rows) {
        // error text is sanitized at the source: no commas or newlines
        os << r.experiment << ',' << r.method << ',' << num(r.grid) << ',' << r.rep << ',' << r.seed << ','
           << num(r.pval) << ',' << (r.reject ? 1 : 0) << ',' << r.error << ',' << num(r.ms) << '\n';
    }
}

std::vector<ExperimentRow> read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kHeader) throw std::runtime_error("csv: missing or unexpected header");
    std::vector<ExperimentRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 9) throw std::runtime_error("csv: expected 9 fields, got " + std::to_string(f.size()));
        ExperimentRow r;
        r.experiment = f[0];
        r.method = f[1];
        r.grid = parse_num(f[2], "grid");
        r.rep = std::stoi(f[3]);
        r.seed = std::stoull(f[4]);
        r.pval = parse_num(f[5], "pval");
        r.reject = f[6] == "1";
        r.error = f[7];
        r.ms = parse_num(f[8], "ms");
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_json(std::ostream& os, const std::vector<ExperimentRow>& rows, const std::vector<SummaryRow>& table) {
    nlohmann::ordered_json j;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        j["rows"].push_back({{"experiment", r.experiment}, {"method", r.method}, {"grid", r.grid}, {"rep", r.rep},
                             {"seed", r.seed}, {"pval", r.pval}, {"reject", r.reject}, {"error", r.error},
                             {"ms", r.ms}});
    }
    j["summary"] = nlohmann::ordered_json::array();
    for (const auto& s : table) {
        j["summary"].push_back({{"method", s.method}, {"grid", s.grid}, {"reps", s.reps}, {"errors", s.errors},
                                {"rate", s.rate}, {"se", s.se}});
    }
    os << j.dump(2) << '\n';
}

void write_svg(std::ostream& os, const std::vector<SummaryRow>& table, double alpha, const std::string& title) {
    const double W = 640, H = 420, L = 60, R = 150, T = 30, B = 50;
    double gmin = 0, gmax = 1;
    if (!table.empty()) {
        gmin = gmax = table.front().grid;
        for (const auto& s : table) {
            gmin = std::min(gmin, s.grid);
            gmax = std::max(gmax, s.grid);
        }
    }
    if (gmax <= gmin) gmax = gmin + 1.0;
    auto px = [&](double g) { return L + (g - gmin) / (gmax - gmin) * (W - L - R); };
    auto py = [&](double r) { return H - B - r * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    if (!title.empty()) os << "<text x=\"" << L << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << py(0) << "\" x2=\"" << W - R << "\" y2=\"" << py(0) << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << py(0) << "\" x2=\"" << L << "\" y2=\"" << py(1) << "\" stroke=\"black\"/>\n";
    for (double r : {0.0, 0.25, 0.5, 0.75, 1.0})
        os << "<text x=\"" << L - 35 << "\" y=\"" << py(r) + 4 << "\" font-size=\"11\">" << r << "</text>\n";
    os << "<text x=\"" << px(gmin) << "\" y=\"" << H - B + 18 << "\" font-size=\"11\">" << gmin << "</text>\n";
    os << "<text x=\"" << px(gmax) - 10 << "\" y=\"" << H - B + 18 << "\" font-size=\"11\">" << gmax << "</text>\n";
    os << "<line class=\"alpha\" x1=\"" << L << "\" y1=\"" << py(alpha) << "\" x2=\"" << W - R << "\" y2=\"" << py(alpha)
       << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";

    std::vector<std::string> methods;
    for (const auto& s : table)
        if (std::find(methods.begin(), methods.end(), s.method) == methods.end()) methods.push_back(s.method);
    for (std::size_t k = 0; k < methods.size(); ++k) {
        std::vector<const SummaryRow*> pts;
        for (const auto& s : table)
            if (s.method == methods[k]) pts.push_back(&s);
        std::sort(pts.begin(), pts.end(), [](auto a, auto b) { return a->grid < b->grid; });
        const char* col = colors[k % 8];
        os << "<polyline data-method=\"" << methods[k] << "\" fill=\"none\" stroke=\"" << col << "\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) os << (i ? " " : "") << px(pts[i]->grid) << ',' << py(pts[i]->rate);
        os << "\"/>\n";
        os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" font-size=\"12\" fill=\"" << col << "\">"
           << methods[k] << "</text>\n";
    }
    os << "</svg>\n";
}

void emit(const std::vector<ExperimentRow>& rows, double alpha, OutputFormat fmt, const std::string& path) {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (path != "-" && !path.empty()) {
        file.open(path);
        if (!file) throw std::runtime_error("cannot open output '" + path + "' for writing");
        os = &file;
    }
    switch (fmt) {
    case OutputFormat::Csv: write_csv(*os, rows); break;
    case OutputFormat::Json: write_json(*os, rows, summarize(rows, alpha)); break;
    case OutputFormat::SvgLines:
        write_svg(*os, summarize(rows, alpha), alpha, rows.empty() ? "" : rows.front().experiment);
        break;
    }
    os->flush();
    if (!*os) throw std::runtime_error("write failed for '" + (path.empty() ? std::string("-") : path) + "'");
}

}  // namespace acss

#include "exdiff/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace exdiff {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string skeletons_csv(std::span<const Skeleton> paths) {
    std::string out = "path_id,t,x,l\n";
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const std::string id = std::to_string(i);
        for (const auto& p : paths[i].points) {
            out += id;
            out += ',';
            out += format_double(p.t);
            out += ',';
            out += format_double(p.x);
            out += ',';
            out += format_double(p.l);
            out += '\n';
        }
    }
    return out;
}

std::string kde_comparison_csv(std::span<const double> grid, std::span<const double> exact,
                               std::span<const double> euler) {
    if (grid.size() != exact.size() || grid.size() != euler.size())
        throw std::invalid_argument("kde csv: column lengths differ");
    std::string out = "grid,kde_exact,kde_euler\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
        out += format_double(grid[i]) + ',' + format_double(exact[i]) + ',' + format_double(euler[i]) + '\n';
    return out;
}

namespace {

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.emplace_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

double parse_number(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("svg: non-numeric CSV cell '" + s + "'");
    return v;
}

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
    bool dashed = false;
};

std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string plot(const std::vector<Series>& series, std::string_view title, std::string_view x_label,
                 std::string_view y_label) {
    constexpr double W = 640, H = 420, L = 60, R = 20, Tm = 40, B = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!(x0 < x1)) x1 = x0 + 1.0;
    if (!(y0 < y1)) y1 = y0 + 1.0;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - Tm - B); };

    std::ostringstream svg;
    svg.precision(6);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
        << ' ' << H << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
        << escape(title) << "</text>\n";
    svg << "<g stroke=\"black\" stroke-width=\"1\">\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\"/>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\"/>\n";
    svg << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4;
        const double yv = y0 + (y1 - y0) * i / 4;
        svg << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
        svg << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
    }
    svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape(x_label)
        << "</text>\n";
    svg << "<text x=\"16\" y=\"" << (Tm + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << (Tm + H - B) / 2 << ")\">" << escape(y_label) << "</text>\n</g>\n";

    static const char* colours[] = {"#1f4e9a", "#b2361f", "#2b8a3e", "#7a3da8", "#c77c02"};
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* colour = series.size() > 5 ? "#1f4e9a" : colours[k];
        svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"" << (series.size() > 5 ? 0.6 : 1.6)
            << "\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
        for (auto [x, y] : s.points) svg << px(x) << ',' << py(y) << ' ';
        svg << "\"/>\n";
    }
    if (series.size() <= 5) {
        for (std::size_t k = 0; k < series.size(); ++k) {
            const double y = Tm + 14 + 16 * k;
            svg << "<line x1=\"" << W - R - 150 << "\" y1=\"" << y << "\" x2=\"" << W - R - 120 << "\" y2=\"" << y
                << "\" stroke=\"" << colours[k] << "\" stroke-width=\"1.6\""
                << (series[k].dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
            svg << "<text x=\"" << W - R - 114 << "\" y=\"" << y + 4
                << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(series[k].name) << "</text>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

std::string render_svg(std::string_view csv, std::string_view title, std::size_t max_paths) {
    std::istringstream in{std::string(csv)};
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("svg: empty CSV");
    const auto header = split(line);
    if (header.size() < 2) throw std::invalid_argument("svg: need at least two columns");

    std::vector<Series> series;
    if (header == std::vector<std::string>{"path_id", "t", "x", "l"}) {
        std::map<long long, std::size_t> index;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto cells = split(line);
            if (cells.size() != 4) throw std::invalid_argument("svg: malformed skeleton row");
            const long long id = std::stoll(cells[0]);
            auto it = index.find(id);
            if (it == index.end()) {
                if (index.size() >= max_paths) continue;
                it = index.emplace(id, series.size()).first;
                series.push_back({"path " + cells[0], {}, false});
            }
            series[it->second].points.emplace_back(parse_number(cells[1]), parse_number(cells[2]));
        }
        return plot(series, title, "t", "X_t");
    }

    for (std::size_t c = 1; c < header.size(); ++c) series.push_back({header[c], {}, c > 1});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) throw std::invalid_argument("svg: ragged CSV row");
        const double x = parse_number(cells[0]);
        for (std::size_t c = 1; c < cells.size(); ++c) series[c - 1].points.emplace_back(x, parse_number(cells[c]));
    }
    return plot(series, title, header[0], "density");
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error("write to " + tmp.string() + " failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw std::runtime_error("cannot move output into place at " + path.string());
    }
}

}  // namespace exdiff

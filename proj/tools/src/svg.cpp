#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "skolr/error.hpp"

namespace skolr::cli {

namespace {

constexpr double width = 720, height = 420, margin = 50;
const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::ofstream open(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return out;
}

struct Frame {
    double x0, x1, y0, y1;
    double px(double x) const { return margin + (x - x0) / (x1 - x0) * (width - 2 * margin); }
    double py(double y) const { return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin); }
};

void axes(std::ofstream& out, const Frame& f, const std::string& title)
{
    out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width - 2 * margin << "\" height=\""
        << height - 2 * margin << "\" fill=\"none\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << margin << "\" y=\"" << height - margin + 16 << "\">" << f.x0 << "</text>\n";
    out << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 16 << "\" text-anchor=\"end\">" << f.x1
        << "</text>\n";
    out << "<text x=\"" << margin - 4 << "\" y=\"" << height - margin << "\" text-anchor=\"end\">" << f.y0 << "</text>\n";
    out << "<text x=\"" << margin - 4 << "\" y=\"" << margin + 10 << "\" text-anchor=\"end\">" << f.y1 << "</text>\n";
}

void pad(double& lo, double& hi)
{
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
}

}  // namespace

void write_line_svg(const std::filesystem::path& path, const std::string& title, const std::vector<Series>& series)
{
    Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            f.x0 = std::min(f.x0, s.x[i]);
            f.x1 = std::max(f.x1, s.x[i]);
            f.y0 = std::min(f.y0, s.y[i]);
            f.y1 = std::max(f.y1, s.y[i]);
        }
    if (!std::isfinite(f.x0)) f = {0, 1, 0, 1};
    pad(f.x0, f.x1);
    pad(f.y0, f.y1);

    auto out = open(path);
    axes(out, f, title);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* colour = palette[k % std::size(palette)];
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) out << f.px(s.x[i]) << ',' << f.py(s.y[i]) << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << width - margin + 4 - 100 << "\" y=\"" << margin + 14 + 14 * k << "\" fill=\"" << colour
            << "\">" << s.name << "</text>\n";
    }
    out << "</svg>\n";
}

void write_spectrum_svg(const std::filesystem::path& path, const std::vector<SpectrumReport>& reports)
{
    double reach = 1.1;
    for (const auto& r : reports) reach = std::max(reach, 1.05 * r.spectral_radius());
    // Square plotting area centred on the origin.
    const double span = height - 2 * margin, cx = width / 2, cy = height / 2;
    auto px = [&](double re) { return cx + re / reach * span / 2; };
    auto py = [&](double im) { return cy - im / reach * span / 2; };

    auto out = open(path);
    out << "<text x=\"" << cx << "\" y=\"20\" text-anchor=\"middle\">transition eigenvalues</text>\n";
    out << "<line x1=\"" << px(-reach) << "\" y1=\"" << cy << "\" x2=\"" << px(reach) << "\" y2=\"" << cy
        << "\" stroke=\"#bbb\"/>\n";
    out << "<line x1=\"" << cx << "\" y1=\"" << py(-reach) << "\" x2=\"" << cx << "\" y2=\"" << py(reach)
        << "\" stroke=\"#bbb\"/>\n";
    out << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << span / 2 / reach
        << "\" fill=\"none\" stroke=\"#444\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const char* colour = palette[k % std::size(palette)];
        for (const auto& l : reports[k].eigenvalues)
            out << "<circle cx=\"" << px(l.real()) << "\" cy=\"" << py(l.imag()) << "\" r=\"3\" fill=\"" << colour
                << "\" fill-opacity=\"0.7\"/>\n";
        out << "<text x=\"" << width - margin << "\" y=\"" << margin + 14 * k << "\" fill=\"" << colour
            << "\" text-anchor=\"end\">branch " << reports[k].branch << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace skolr::cli

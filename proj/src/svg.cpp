#include "ykrl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ykrl {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

}  // namespace

SvgLinePlot::SvgLinePlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgLinePlot::add_series(const std::string& name, const std::vector<double>& x,
                             const std::vector<double>& y) {
    series_.push_back({name, x, y});
}

void SvgLinePlot::add_band(const std::vector<double>& x, const std::vector<double>& lo,
                           const std::vector<double>& hi) {
    bands_.push_back({x, lo, hi});
}

void SvgLinePlot::add_hline(double y, const std::string& name) { hlines_.emplace_back(y, name); }

void SvgLinePlot::write(const std::filesystem::path& path) const {
    const double W = 640, H = 420;
    const double ml = 64, mr = 16, mt = 36, mb = 48;

    double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
    double ymin = xmin, ymax = xmax;
    auto grow = [&](const std::vector<double>& xs, const std::vector<double>& ys) {
        for (double v : xs) {
            if (std::isfinite(v)) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
        }
        for (double v : ys) {
            if (std::isfinite(v)) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
        }
    };
    for (const auto& s : series_) grow(s.x, s.y);
    for (const auto& b : bands_) {
        grow(b.x, b.lo);
        grow(b.x, b.hi);
    }
    for (const auto& [y, _] : hlines_) ymin = std::min(ymin, y), ymax = std::max(ymax, y);
    if (!(xmin < xmax)) xmax = xmin + 1;
    if (!(ymin < ymax)) ymax = ymin + 1;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << title_ << "</text>\n";

    // axes with a handful of ticks
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 4.0;
        const double yv = ymin + (ymax - ymin) * i / 4.0;
        out << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 16
            << "\" text-anchor=\"middle\" font-size=\"10\">" << num(xv) << "</text>\n";
        out << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 3
            << "\" text-anchor=\"end\" font-size=\"10\">" << num(yv) << "</text>\n";
    }
    out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10
        << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label_ << "</text>\n";
    out << "<text x=\"14\" y=\"" << (mt + H - mb) / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
        << (mt + H - mb) / 2 << ")\">" << y_label_ << "</text>\n";

    for (const auto& b : bands_) {
        out << "<polygon fill=\"#1f77b4\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < b.x.size(); ++i) out << px(b.x[i]) << ',' << py(b.lo[i]) << ' ';
        for (std::size_t i = b.x.size(); i-- > 0;) out << px(b.x[i]) << ',' << py(b.hi[i]) << ' ';
        out << "\"/>\n";
    }
    for (const auto& [y, name] : hlines_) {
        out << "<line x1=\"" << ml << "\" y1=\"" << py(y) << "\" x2=\"" << W - mr << "\" y2=\""
            << py(y) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
        if (!name.empty())
            out << "<text x=\"" << W - mr - 4 << "\" y=\"" << py(y) - 4
                << "\" text-anchor=\"end\" font-size=\"10\" fill=\"gray\">" << name << "</text>\n";
    }
    for (std::size_t k = 0; k < series_.size(); ++k) {
        const auto& s = series_[k];
        const char* color = kPalette[k % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (std::isfinite(s.y[i])) out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << W - mr - 4 << "\" y=\"" << mt + 14 * (k + 1)
            << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << s.name
            << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace ykrl

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ykrl {

// Minimal self-contained SVG line chart. CSV files are the canonical outputs;
// these plots exist for quick visual checks only.
class SvgLinePlot {
  public:
    SvgLinePlot(std::string title, std::string x_label, std::string y_label);

    void add_series(const std::string& name, const std::vector<double>& x,
                    const std::vector<double>& y);
    // Shaded band between lo and hi (same x grid).
    void add_band(const std::vector<double>& x, const std::vector<double>& lo,
                  const std::vector<double>& hi);
    void add_hline(double y, const std::string& name = "");

    void write(const std::filesystem::path& path) const;

  private:
    struct Series {
        std::string name;
        std::vector<double> x, y;
    };
    struct Band {
        std::vector<double> x, lo, hi;
    };
    std::string title_, x_label_, y_label_;
    std::vector<Series> series_;
    std::vector<Band> bands_;
    std::vector<std::pair<double, std::string>> hlines_;
};

}  // namespace ykrl

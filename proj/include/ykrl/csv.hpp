#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace ykrl {

// Formats a double the same way everywhere so that reruns with the same seed
// produce byte-identical files.
std::string csv_format(double v);

class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    void row(const std::vector<double>& values);
    void row(const std::vector<std::string>& cells);

  private:
    std::ofstream out_;
    std::size_t columns_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv_table(const std::filesystem::path& path);

}  // namespace ykrl

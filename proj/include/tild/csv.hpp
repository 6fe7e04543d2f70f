#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace tild::csv {

// Shortest round-trip decimal form (std::to_chars); byte-stable across runs.
std::string format_double(double v);

// Comma-separated rows with LF line endings, written in binary mode so output
// bytes are platform-independent.
class CsvFile {
 public:
  explicit CsvFile(const std::filesystem::path& file);
  void write_row(const std::vector<std::string>& cells);
  void close();

 private:
  std::ofstream out_;
};

}  // namespace tild::csv

#include "tild/csv.hpp"

#include <charconv>
#include <stdexcept>
#include <system_error>

namespace tild::csv {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
  return std::string(buf, res.ptr);
}

CsvFile::CsvFile(const std::filesystem::path& file)
    : out_(file, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open " + file.string() + " for writing");
}

void CsvFile::write_row(const std::vector<std::string>& cells) {
  std::string line;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  line += '\n';
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  if (!out_) throw std::runtime_error("csv write failed");
}

void CsvFile::close() {
  out_.close();
  if (out_.fail()) throw std::runtime_error("csv close failed");
}

}  // namespace tild::csv

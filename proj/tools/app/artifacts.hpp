#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace superfractal::app {

// Shortest decimal form that reads back to the same double; "nan", "inf",
// "-inf" for non-finite values.
std::string format_number(double v);

// CSV text with a header line; rows are joined with commas.
class CsvText {
 public:
  explicit CsvText(const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

// Writes to a temporary file in the same directory, then renames it over
// the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

std::string sha256_hex(const std::string& content);

}  // namespace superfractal::app

#pragma once

// Minimal RFC 4180 CSV reading and writing.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgl {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based source line of each row (header is line 1).
  std::vector<std::size_t> lines;

  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name, const std::string& source) const;
};

CsvTable parse_csv(std::string_view text, const std::string& source = "<memory>");
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& fields);
  const std::string& str() const { return out_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t width_;
  std::string out_;
};

}  // namespace kgl

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace wikialumni {

// A header-first tab-separated table held in memory. Blank lines and lines
// starting with '#' are skipped; CRLF endings are accepted.
class TsvTable {
 public:
  static TsvTable read(const std::filesystem::path& path);
  static TsvTable parse(std::string_view text, std::string origin = "<memory>");

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  const std::string& origin() const { return origin_; }

  // Index of a named column; throws IoError naming the file when missing.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;

 private:
  std::string origin_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::vector<std::string_view> split_tabs(std::string_view line);

// Tabs and line breaks inside a field become single spaces.
std::string tsv_field(std::string_view value);

// Writes `content` to `path` through a temporary file and rename, so readers
// never observe a half-written file. Parent directories are created.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace wikialumni

#include "wikialumni/tsv.hpp"

#include <fmt/format.h>
#include <unistd.h>

#include <atomic>
#include <fstream>
#include <sstream>

#include "wikialumni/errors.hpp"

namespace wikialumni {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

std::string tsv_field(std::string_view value) {
  std::string out(value);
  for (char& ch : out) {
    if (ch == '\t' || ch == '\n' || ch == '\r') ch = ' ';
  }
  return out;
}

TsvTable TsvTable::read(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

TsvTable TsvTable::parse(std::string_view text, std::string origin) {
  TsvTable table;
  table.origin_ = std::move(origin);
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_tabs(line);
    if (!have_header) {
      for (auto f : fields) table.header_.emplace_back(f);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header_.size()) {
      throw IoError(fmt::format("{}:{}: expected {} tab-separated fields, got {}",
                                table.origin_, line_no, table.header_.size(),
                                fields.size()));
    }
    std::vector<std::string> row;
    row.reserve(fields.size());
    for (auto f : fields) row.emplace_back(f);
    table.rows_.push_back(std::move(row));
  }
  if (!have_header) {
    throw IoError(fmt::format("{}: missing header row", table.origin_));
  }
  return table;
}

bool TsvTable::has_column(std::string_view name) const {
  for (const auto& h : header_) {
    if (h == name) return true;
  }
  return false;
}

std::size_t TsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  throw IoError(fmt::format("{}: missing column '{}'", origin_, name));
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError(fmt::format("cannot create directory {}: {}",
                                path.parent_path().string(), ec.message()));
    }
  }
  auto tmp = path;
  static std::atomic<unsigned> counter{0};
  tmp += fmt::format(".tmp{}.{}", ::getpid(), counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open {} for writing", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError(fmt::format("write failed for {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError(fmt::format("cannot move {} into place: {}", path.string(),
                              ec.message()));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

}  // namespace wikialumni

#include "wikialumni/person_extract.hpp"

#include <fmt/format.h>

#include <charconv>
#include <chrono>
#include <fstream>

#include "wikialumni/errors.hpp"
#include "wikialumni/text.hpp"
#include "wikialumni/tsv.hpp"

namespace wikialumni {

int current_year() {
  const auto now = std::chrono::system_clock::now();
  const std::chrono::year_month_day ymd{
      std::chrono::floor<std::chrono::days>(now)};
  return static_cast<int>(ymd.year());
}

std::optional<std::string> detect_person(const WikiPage& page,
                                         const MarkerDictionary& dict) {
  if (page.is_redirect() || page.ns != 0) return std::nullopt;
  const std::string folded = fold_case(page.wikitext);
  for (const auto& marker : dict.person_markers) {
    if (folded.find(fold_case(marker)) != std::string::npos) return marker;
  }
  return std::nullopt;
}

namespace {

bool is_ascii_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::optional<int> extract_birth_year(std::string_view wikitext,
                                      const YearRange& range) {
  std::size_t words = 0;
  std::size_t i = 0;
  const std::size_t n = wikitext.size();
  while (i < n && words < kBirthYearWordWindow) {
    while (i < n && is_space(static_cast<unsigned char>(wikitext[i]))) ++i;
    if (i == n) break;
    std::size_t end = i;
    while (end < n && !is_space(static_cast<unsigned char>(wikitext[end]))) {
      ++end;
    }
    ++words;
    const std::string_view word = wikitext.substr(i, end - i);
    for (std::size_t k = 0; k < word.size();) {
      if (!is_digit(word[k])) {
        ++k;
        continue;
      }
      std::size_t run_end = k;
      while (run_end < word.size() && is_digit(word[run_end])) ++run_end;
      const bool left_ok = k == 0 || !is_ascii_alnum(word[k - 1]);
      const bool right_ok =
          run_end == word.size() || !is_ascii_alnum(word[run_end]);
      if (run_end - k == 4 && left_ok && right_ok) {
        int year = 0;
        std::from_chars(word.data() + k, word.data() + run_end, year);
        if (range.contains(year)) return year;
      }
      k = run_end;
    }
    i = end;
  }
  return std::nullopt;
}

std::optional<PersonPage> extract_person(const WikiPage& page,
                                         const MarkerDictionary& dict,
                                         const YearRange& range) {
  auto marker = detect_person(page, dict);
  if (!marker) return std::nullopt;
  PersonPage person;
  person.page = page;
  person.birth_year = extract_birth_year(page.wikitext, range);
  person.marker_hit = std::move(*marker);
  return person;
}

std::string person_file_name(std::int64_t page_id,
                             std::optional<int> birth_year) {
  return birth_year ? fmt::format("page_{}_{}.xml", page_id, *birth_year)
                    : fmt::format("page_{}_.xml", page_id);
}

std::optional<PersonFileName> parse_person_file_name(std::string_view name) {
  constexpr std::string_view kPrefix = "page_";
  constexpr std::string_view kSuffix = ".xml";
  if (name.size() < kPrefix.size() + kSuffix.size() ||
      name.substr(0, kPrefix.size()) != kPrefix ||
      name.substr(name.size() - kSuffix.size()) != kSuffix) {
    return std::nullopt;
  }
  name = name.substr(kPrefix.size(),
                     name.size() - kPrefix.size() - kSuffix.size());
  const auto sep = name.find('_');
  if (sep == std::string_view::npos) return std::nullopt;
  const std::string_view id_part = name.substr(0, sep);
  const std::string_view year_part = name.substr(sep + 1);
  PersonFileName out;
  auto [p1, e1] = std::from_chars(id_part.data(),
                                  id_part.data() + id_part.size(), out.page_id);
  if (id_part.empty() || e1 != std::errc() ||
      p1 != id_part.data() + id_part.size()) {
    return std::nullopt;
  }
  if (!year_part.empty()) {
    int year = 0;
    auto [p2, e2] = std::from_chars(year_part.data(),
                                    year_part.data() + year_part.size(), year);
    if (e2 != std::errc() || p2 != year_part.data() + year_part.size()) {
      return std::nullopt;
    }
    out.birth_year = year;
  }
  return out;
}

namespace {

void append_escaped(std::string& out, std::string_view s, bool attribute) {
  for (const char ch : s) {
    switch (ch) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        if (attribute) {
          out += "&quot;";
        } else {
          out.push_back(ch);
        }
        break;
      case '\r':
        out += "&#13;";
        break;
      default:
        out.push_back(ch);
    }
  }
}

}  // namespace

std::string page_element_xml(const WikiPage& page) {
  std::string out;
  out.reserve(page.wikitext.size() + page.title.size() + 256);
  out += "<page>\n    <title>";
  append_escaped(out, page.title, false);
  out += fmt::format("</title>\n    <ns>{}</ns>\n    <id>{}</id>\n", page.ns,
                     page.page_id);
  if (page.redirect_target) {
    out += "    <redirect title=\"";
    append_escaped(out, *page.redirect_target, true);
    out += "\" />\n";
  }
  out += "    <revision>\n      <text xml:space=\"preserve\">";
  append_escaped(out, page.wikitext, false);
  out += "</text>\n    </revision>\n  </page>\n";
  return out;
}

std::filesystem::path persist_person(const PersonPage& person,
                                     const std::filesystem::path& out_dir) {
  const auto path =
      out_dir / person_file_name(person.page.page_id, person.birth_year);
  try {
    write_file_atomic(path, "  " + page_element_xml(person.page));
  } catch (const IoError& e) {
    throw IoError(fmt::format("cannot persist person page {}: {}",
                              path.string(), e.what()));
  }
  return path;
}

PersonPage read_person_file(const std::filesystem::path& path,
                            std::string lang) {
  const auto name = parse_person_file_name(path.filename().string());
  if (!name) {
    throw DumpError(fmt::format("{}: not a person file name", path.string()));
  }
  auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*file) throw DumpError(fmt::format("cannot open {}", path.string()));
  PageStream stream(std::move(file), lang, path.string());
  auto page = stream.next();
  if (!page || stream.truncated()) {
    throw DumpError(fmt::format("{}: no complete page element{}", path.string(),
                                stream.truncated()
                                    ? " (" + stream.truncation_message() + ")"
                                    : std::string()));
  }
  if (page->page_id != name->page_id) {
    throw DumpError(fmt::format("{}: page id {} does not match file name",
                                path.string(), page->page_id));
  }
  PersonPage person;
  person.page = std::move(*page);
  person.birth_year = name->birth_year;
  return person;
}

}  // namespace wikialumni

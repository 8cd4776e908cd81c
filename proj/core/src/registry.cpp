#include "wikialumni/registry.hpp"

#include <fmt/format.h>

#include <charconv>

#include "wikialumni/errors.hpp"
#include "wikialumni/text.hpp"
#include "wikialumni/tsv.hpp"

namespace wikialumni {

std::vector<UniversityRow> read_university_rows(
    const std::filesystem::path& path) {
  const TsvTable table = TsvTable::read(path);
  const auto c_id = table.column("id");
  const auto c_name = table.column("canonical_name");
  const auto c_lang = table.column("lang");
  const auto c_title = table.column("title");
  std::vector<UniversityRow> rows;
  rows.reserve(table.rows().size());
  for (const auto& r : table.rows()) {
    UniversityRow row;
    const std::string_view id_text = trim(r[c_id]);
    auto [ptr, ec] = std::from_chars(id_text.data(),
                                     id_text.data() + id_text.size(), row.id);
    if (ec != std::errc() || ptr != id_text.data() + id_text.size() ||
        id_text.empty()) {
      throw RegistryError(
          fmt::format("{}: invalid university id '{}'", path.string(), r[c_id]));
    }
    row.canonical_name = std::string(trim(r[c_name]));
    row.lang = std::string(trim(r[c_lang]));
    row.title = std::string(trim(r[c_title]));
    rows.push_back(std::move(row));
  }
  return rows;
}

Registry Registry::build(const std::vector<UniversityRow>& rows,
                         const std::map<std::string, RedirectMap>& redirects) {
  Registry reg;
  std::map<std::int64_t, University> staged;
  for (const auto& row : rows) {
    if (row.canonical_name.empty() || row.lang.empty() || row.title.empty()) {
      throw RegistryError(
          fmt::format("university {}: empty name, lang or title", row.id));
    }
    auto [it, inserted] = staged.try_emplace(row.id);
    University& u = it->second;
    if (inserted) {
      u.id = row.id;
      u.canonical_name = row.canonical_name;
    } else if (u.canonical_name != row.canonical_name) {
      throw RegistryError(fmt::format(
          "duplicate university id {}: '{}' and '{}'", row.id,
          u.canonical_name, row.canonical_name));
    }
    const std::string title = normalize_title(row.title);
    u.titles[row.lang].insert(title);
    u.primary_titles.try_emplace(row.lang, title);
  }

  auto claim = [&reg, &staged](const std::string& lang,
                               const std::string& title, std::int64_t id) {
    auto [it, inserted] = reg.index_.try_emplace({lang, title}, id);
    if (!inserted && it->second != id) {
      throw RegistryError(fmt::format(
          "title '{}' ({}) claimed by both '{}' (id {}) and '{}' (id {})", title,
          lang, staged.at(it->second).canonical_name, it->second,
          staged.at(id).canonical_name, id));
    }
  };

  for (const auto& [id, u] : staged) {
    for (const auto& [lang, titles] : u.titles) {
      for (const auto& t : titles) claim(lang, t, id);
    }
  }

  for (const auto& [lang, mapping] : redirects) {
    for (const auto& [alias, target] : mapping) {
      auto it = reg.index_.find(std::pair<std::string, std::string>{
          lang, normalize_title(target)});
      if (it == reg.index_.end()) continue;
      const std::int64_t id = it->second;
      const std::string alias_title = normalize_title(alias);
      claim(lang, alias_title, id);
      staged.at(id).titles[lang].insert(alias_title);
    }
  }

  reg.universities_.reserve(staged.size());
  for (auto& [id, u] : staged) {
    reg.by_id_.emplace(id, reg.universities_.size());
    reg.universities_.push_back(std::move(u));
  }
  return reg;
}

Registry Registry::load(const std::filesystem::path& universities_file,
                        const std::map<std::string, RedirectMap>& redirects) {
  return build(read_university_rows(universities_file), redirects);
}

std::optional<std::int64_t> Registry::resolve_link(
    std::string_view target_title, std::string_view lang) const {
  const std::string title = normalize_title(target_title);
  if (title.empty()) return std::nullopt;
  auto it = index_.find(
      std::pair<std::string, std::string>{std::string(lang), title});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const University* Registry::find(std::int64_t id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &universities_[it->second];
}

MarkerDictionary parse_dictionary(std::string_view text, std::string lang,
                                  std::string_view origin) {
  MarkerDictionary dict;
  dict.lang = std::move(lang);
  std::vector<std::string>* section = nullptr;
  bool saw_markers = false, saw_triggers = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (line == "[person_markers]") {
      section = &dict.person_markers;
      saw_markers = true;
    } else if (line == "[trigger_words]") {
      section = &dict.trigger_words;
      saw_triggers = true;
    } else if (line.front() == '[' && line.back() == ']') {
      throw RegistryError(
          fmt::format("{}:{}: unknown section {}", origin, line_no, line));
    } else if (section == nullptr) {
      throw RegistryError(fmt::format(
          "{}:{}: phrase outside of a section", origin, line_no));
    } else {
      section->push_back(collapse_whitespace(line));
    }
  }
  if (!saw_markers || dict.person_markers.empty()) {
    throw RegistryError(
        fmt::format("{}: no [person_markers] phrases", origin));
  }
  if (!saw_triggers || dict.trigger_words.empty()) {
    throw RegistryError(fmt::format("{}: no [trigger_words] phrases", origin));
  }
  return dict;
}

MarkerDictionary load_dictionary(const std::filesystem::path& path,
                                 std::string lang) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError&) {
    throw RegistryError(fmt::format("missing dictionary for language '{}': {}",
                                    lang, path.string()));
  }
  return parse_dictionary(text, std::move(lang), path.string());
}

std::filesystem::path dictionary_path(const std::filesystem::path& dir,
                                      std::string_view lang) {
  return dir / fmt::format("{}.dict", lang);
}

std::map<std::string, MarkerDictionary> load_dictionaries(
    const std::filesystem::path& dir, const std::vector<std::string>& langs) {
  std::map<std::string, MarkerDictionary> out;
  for (const auto& lang : langs) {
    out.emplace(lang, load_dictionary(dictionary_path(dir, lang), lang));
  }
  return out;
}

}  // namespace wikialumni

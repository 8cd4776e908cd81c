#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wikialumni/dump_ingest.hpp"

namespace wikialumni {

struct University {
  std::int64_t id = 0;
  std::string canonical_name;
  // lang -> normalized titles, canonical titles plus redirect aliases.
  std::map<std::string, std::set<std::string>> titles;
  // lang -> the first title listed for that language in the universities
  // file. Pageviews are counted on these only.
  std::map<std::string, std::string> primary_titles;
};

// One row of the universities file.
struct UniversityRow {
  std::int64_t id = 0;
  std::string canonical_name;
  std::string lang;
  std::string title;
};

// Immutable after construction; safe for concurrent reads.
class Registry {
 public:
  Registry() = default;

  // Builds the registry and expands every title set with the redirect
  // aliases (per language) whose canonical target is one of its titles.
  // Throws RegistryError when an id carries two canonical names or a title
  // is claimed by two universities in the same language.
  static Registry build(const std::vector<UniversityRow>& rows,
                        const std::map<std::string, RedirectMap>& redirects);

  // Reads the tab-separated universities file (header: id, canonical_name,
  // lang, title) and calls build().
  static Registry load(const std::filesystem::path& universities_file,
                       const std::map<std::string, RedirectMap>& redirects);

  std::optional<std::int64_t> resolve_link(std::string_view target_title,
                                           std::string_view lang) const;

  const University* find(std::int64_t id) const;
  const std::vector<University>& universities() const { return universities_; }
  std::size_t size() const { return universities_.size(); }

 private:
  std::vector<University> universities_;  // sorted by id
  std::map<std::int64_t, std::size_t> by_id_;
  std::map<std::pair<std::string, std::string>, std::int64_t, std::less<>>
      index_;
};

std::vector<UniversityRow> read_university_rows(
    const std::filesystem::path& path);

// Per-language phrase lists. Matching is always case-insensitive.
struct MarkerDictionary {
  static constexpr bool kCaseInsensitive = true;

  std::string lang;
  std::vector<std::string> person_markers;
  std::vector<std::string> trigger_words;
};

// Dictionary file format:
//
//   # comment
//   [person_markers]
//   born
//   births]]
//   [trigger_words]
//   graduated
//
// One phrase per line; surrounding whitespace is ignored. Both sections must
// be present and non-empty.
MarkerDictionary parse_dictionary(std::string_view text, std::string lang,
                                  std::string_view origin = "<memory>");
MarkerDictionary load_dictionary(const std::filesystem::path& path,
                                 std::string lang);

// Loads `<dir>/<lang>.dict` for each language.
std::map<std::string, MarkerDictionary> load_dictionaries(
    const std::filesystem::path& dir, const std::vector<std::string>& langs);

std::filesystem::path dictionary_path(const std::filesystem::path& dir,
                                      std::string_view lang);

}  // namespace wikialumni

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "wikialumni/dump_ingest.hpp"
#include "wikialumni/registry.hpp"

namespace wikialumni {

struct PersonPage {
  WikiPage page;
  std::optional<int> birth_year;
  // The person marker that fired.
  std::string marker_hit;
};

inline constexpr std::size_t kBirthYearWordWindow = 1000;
inline constexpr int kMinBirthYear = 800;

int current_year();

// Inclusive plausibility range for birth years.
struct YearRange {
  int min = kMinBirthYear;
  int max = current_year();

  bool contains(int year) const { return year >= min && year <= max; }
};

// First person marker (dictionary order) contained in the raw wikitext,
// case-insensitively. Redirects and non-article namespaces never match.
std::optional<std::string> detect_person(const WikiPage& page,
                                         const MarkerDictionary& dict);

// Scans the first kBirthYearWordWindow whitespace-delimited words for a
// standalone run of exactly four ASCII digits (not touching another ASCII
// letter or digit) whose value lies in `range`. Out-of-range tokens are
// skipped and the scan continues.
std::optional<int> extract_birth_year(std::string_view wikitext,
                                      const YearRange& range = {});

// detect_person + extract_birth_year.
std::optional<PersonPage> extract_person(const WikiPage& page,
                                         const MarkerDictionary& dict,
                                         const YearRange& range = {});

// "page_<id>_<year>.xml", with an empty year segment when the year is unknown.
std::string person_file_name(std::int64_t page_id,
                             std::optional<int> birth_year);

struct PersonFileName {
  std::int64_t page_id = 0;
  std::optional<int> birth_year;
};

std::optional<PersonFileName> parse_person_file_name(std::string_view name);

// Serializes the page element (title, ns, id, revision text) to
// out_dir/person_file_name(...). Rewriting the same page yields identical
// bytes. Throws IoError naming the path on failure.
std::filesystem::path persist_person(const PersonPage& person,
                                     const std::filesystem::path& out_dir);

std::string page_element_xml(const WikiPage& page);

// Reads a file written by persist_person. The birth year comes from the file
// name; marker_hit is left empty. Throws DumpError on a corrupted file.
PersonPage read_person_file(const std::filesystem::path& path,
                            std::string lang);

}  // namespace wikialumni

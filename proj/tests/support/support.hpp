#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wikialumni/alumni_link.hpp"
#include "wikialumni/dump_ingest.hpp"
#include "wikialumni/pipeline.hpp"

namespace testsupport {

namespace fs = std::filesystem;

fs::path data_dir();

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(std::string_view name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_text(const fs::path& path, std::string_view text);
std::string read_text(const fs::path& path);

struct DumpPage {
  std::string title;
  int ns = 0;
  std::int64_t id = 0;
  std::optional<std::string> redirect;
  std::string text;
};

std::string xml_escape(std::string_view s);
std::string dump_header();
std::string dump_footer();
std::string page_xml(const DumpPage& page);
std::string dump_xml(const std::vector<DumpPage>& pages);

// Counts "<page>" and "<page " occurrences by plain text search.
std::size_t count_page_tags(std::string_view xml);

std::vector<wikialumni::WikiPage> parse_dump_string(std::string xml,
                                                    std::string lang = "en");

// Brute-force birth year reading: split into whitespace words, keep the
// first 1000, look for four digits with no ASCII letter or digit on either
// side, return the first one within [lo, hi].
std::optional<int> oracle_birth_year(std::string_view text, int lo, int hi);

// Sentence texts produced by a bracket-depth scanner.
std::vector<std::string> oracle_sentences(std::string_view text);

// Table rows as published: university, person, birth year, views.
struct PublishedAlumnus {
  std::string university;
  std::string person;
  int birth_year;
  std::uint64_t views;
};

// Top-10 graduates overall.
const std::vector<PublishedAlumnus>& top_graduates();
// Top-10 graduates born after 1947. The Putin row uses 11,426,497 (the
// overall table's value; the second table misprints it).
const std::vector<PublishedAlumnus>& top_graduates_after_1947();

// Golden mini-corpus: config, committed expected outputs, and the list of
// artifacts (relative to the output dir) compared byte for byte.
fs::path golden_config();
fs::path golden_expected_dir();
const std::vector<std::string>& golden_artifacts();

struct PipelineRun {
  std::vector<int> exit_codes;  // ingest, extract, views, report, audit
  std::string log;
};

// Loads the golden config with its output redirected to `out` and runs every
// subcommand in order.
PipelineRun run_golden_pipeline(const fs::path& out);
PipelineRun run_pipeline(const wikialumni::PipelineConfig& config);

// Empty when `a` and `b` hold identical golden artifacts, otherwise the
// first differing artifact name.
std::string first_golden_difference(const fs::path& a, const fs::path& b);

}  // namespace testsupport

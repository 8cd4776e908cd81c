#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wikialumni/analytics.hpp"
#include "wikialumni/pageviews.hpp"

namespace wikialumni {

struct LanguageConfig {
  std::string code;
  std::filesystem::path dump;
  std::string dump_date;
};

enum class PageviewMode { kLive, kFixture };

PageviewMode parse_pageview_mode(std::string_view name);

struct ExternalRankingConfig {
  std::string name;
  std::filesystem::path file;
  std::optional<std::filesystem::path> mapping;
};

struct AuditConfig {
  double rate = 0.05;
  std::uint64_t seed = 1;
};

// One declarative run description. Relative paths are resolved against the
// directory of the config file. See docs/config.md for the file format.
struct PipelineConfig {
  std::vector<LanguageConfig> languages;
  std::filesystem::path universities_file;
  std::filesystem::path dictionary_dir;
  int analysis_year = 2017;
  std::optional<int> max_birth_year;  // defaults to the current year
  std::filesystem::path output_dir;

  PageviewMode mode = PageviewMode::kFixture;
  std::optional<std::filesystem::path> views_fixture;
  std::optional<std::filesystem::path> links_fixture;
  std::filesystem::path cache_dir;
  double rate_limit = 1.0;
  unsigned parallelism = 1;
  LiveOptions live;
  std::string user_agent = "wikialumni/0.1 (research pipeline)";

  CorrelationMethod correlation_method = CorrelationMethod::kSpearman;
  std::vector<FilterSpec> filters;
  std::vector<ExternalRankingConfig> external_rankings;
  double max_unmapped_fraction = kDefaultMaxUnmappedFraction;
  std::size_t top_k = 10;
  int redirect_hop_cap = kDefaultRedirectHopCap;
  AuditConfig audit;

  // Hash of the config text plus any overrides that change results;
  // embedded in every report.
  std::string provenance_hash;

  static PipelineConfig load(const std::filesystem::path& file);
  static PipelineConfig parse(std::string_view json_text,
                              const std::filesystem::path& base_dir);

  // Throws ConfigError describing the first violated invariant, including a
  // missing dictionary file for a configured language.
  void validate() const;

  std::vector<std::string> language_codes() const;
  int effective_max_birth_year() const;
};

struct ConfigOverrides {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<int> analysis_year;
  std::optional<PageviewMode> mode;
  std::optional<double> rate_limit;
  std::optional<CorrelationMethod> correlation_method;
};

// WIKIALUMNI_CACHE_DIR and WIKIALUMNI_RATE_LIMIT; flags take precedence, so
// call this before apply_overrides.
void apply_env_overrides(PipelineConfig& config);
void apply_overrides(PipelineConfig& config, const ConfigOverrides& overrides);

enum ExitCode : int {
  kExitOk = 0,
  kExitPartial = 1,
  kExitConfigError = 2,
};

struct RunContext {
  std::ostream* log = nullptr;
  // Live mode only. Defaults to make_https_transport().
  std::function<std::unique_ptr<HttpTransport>()> transport_factory;
  // Live mode only. Defaults to a SteadyClock.
  Clock* clock = nullptr;
  std::optional<double> audit_rate;
  std::optional<std::uint64_t> audit_seed;
};

// Artifact locations under the output directory.
struct OutputLayout {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "ingest" / "manifest.json"; }
  std::filesystem::path redirects(std::string_view lang) const;
  std::filesystem::path unresolved_redirects(std::string_view lang) const;
  std::filesystem::path persons(std::string_view lang) const;
  std::filesystem::path dataset() const { return root / "dataset" / "alumni.tsv"; }
  std::filesystem::path evidence() const { return root / "dataset" / "evidence.tsv"; }
  std::filesystem::path extract_report() const {
    return root / "dataset" / "extract_report.tsv";
  }
  std::filesystem::path views_dataset() const { return root / "views" / "alumni_views.tsv"; }
  std::filesystem::path university_views() const {
    return root / "views" / "university_views.tsv";
  }
  std::filesystem::path view_flags() const { return root / "views" / "flags.tsv"; }
  std::filesystem::path report_dir() const { return root / "report"; }
  std::filesystem::path audit_sample() const { return root / "audit" / "audit_sample.tsv"; }
  std::filesystem::path lock() const { return root / ".wikialumni.lock"; }
};

// Exclusive lock on an output directory; released on destruction. A lock
// left behind by a dead process is taken over.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& output_dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

// Dump -> person files, redirect maps and a resumable manifest. Languages
// already complete for the same dump are skipped.
int cmd_ingest(const PipelineConfig& config, RunContext& ctx);
// Person files -> alumni dataset and evidence sidecar.
int cmd_extract(const PipelineConfig& config, RunContext& ctx);
// Dataset -> views-enriched dataset and per-university page views.
int cmd_views(const PipelineConfig& config, RunContext& ctx);
// Enriched dataset -> statistics, rankings, correlation matrices.
int cmd_report(const PipelineConfig& config, RunContext& ctx);
// Dataset -> seeded audit sample for manual review.
int cmd_audit(const PipelineConfig& config, RunContext& ctx);

enum class Command { kIngest, kExtract, kViews, kReport, kAudit };

// Runs a command and maps exceptions to exit codes: ConfigError (and
// dictionary or registry problems found before any work) -> 2, other
// failures -> 1. Messages go to ctx.log.
int run_command(Command command, const PipelineConfig& config, RunContext& ctx);

}  // namespace wikialumni

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wikialumni/alumni_link.hpp"
#include "wikialumni/registry.hpp"

namespace wikialumni {

// Cohort filter. "born after 1947" is min_birth_year = 1948 and ">999 views"
// is min_views_exclusive = 999.
struct FilterSpec {
  std::string name;
  std::optional<int> min_birth_year;
  std::optional<int> max_birth_year;
  std::optional<std::uint64_t> min_views_exclusive;
  bool require_birth_year = false;

  // Throws ConfigError when min > max.
  void validate() const;
  bool admits(const AlumniRecord& record) const;
  // True when every record admitted by *this is admitted by `looser`.
  bool is_tighter_than(const FilterSpec& looser) const;
};

// Records lacking a birth year are dropped whenever a year bound is set (or
// require_birth_year); the view bound is strict and drops records without
// views.
std::vector<AlumniRecord> apply_filter(std::span<const AlumniRecord> records,
                                       const FilterSpec& filter);

struct DescriptiveStats {
  std::size_t n_alumni = 0;
  std::size_t n_universities = 0;
  // False for an empty sample; the moments are then zero and meaningless.
  bool moments_defined = false;
  double mean_views = 0;
  double median_views = 0;  // mean of the two middle values for even n
  double stddev_views = 0;  // population form (divisor n)
};

// Every record must carry views_total; throws std::invalid_argument otherwise.
DescriptiveStats describe(std::span<const AlumniRecord> records);

enum class ScoreKind { kAlumniViewSum, kUniversityPageViews, kExternal };

const char* score_kind_name(ScoreKind kind);

struct RankEntry {
  std::int64_t id = 0;
  std::string name;
  double score = 0;
};

// Entries sorted by score descending, ties by name ascending, then id.
struct Ranking {
  std::string label;
  ScoreKind kind = ScoreKind::kAlumniViewSum;
  FilterSpec filter;
  std::vector<RankEntry> entries;
};

void sort_ranking(std::vector<RankEntry>& entries);

// Integer view sums per university. Totals above 2^53 are rejected so the
// double scores in a Ranking stay exact.
Ranking ranking_from_totals(const std::map<std::int64_t, std::uint64_t>& totals,
                            const std::map<std::int64_t, std::string>& names,
                            ScoreKind kind, std::string label);

// score(u) = sum of views_total over the records of u that pass `filter`.
Ranking rank_universities(std::span<const AlumniRecord> records,
                          const FilterSpec& filter);

enum class CorrelationMethod { kSpearman, kPearsonOnScores };

const char* correlation_method_name(CorrelationMethod m);
CorrelationMethod parse_correlation_method(std::string_view name);

struct Correlation {
  double coefficient = 0;
  std::size_t n = 0;  // size of the entity intersection
  CorrelationMethod method = CorrelationMethod::kSpearman;
};

inline constexpr std::size_t kMinCorrelationEntities = 3;

// Correlation over the entities present in both rankings. Spearman is the
// Pearson correlation of average-tie ranks. Throws CorrelationError when the
// intersection has fewer than kMinCorrelationEntities entities or one side
// is constant.
Correlation correlate(const Ranking& a, const Ranking& b,
                      CorrelationMethod method);

// 1-based ranks, highest value first, ties share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  std::vector<std::string> labels;
  CorrelationMethod method = CorrelationMethod::kSpearman;
  // Symmetric; unavailable cells carry std::nullopt.
  std::vector<std::vector<std::optional<double>>> cells;
  std::vector<std::vector<std::size_t>> overlap;

  // Lower-triangular text table with two decimals, one row per ranking.
  std::string render_lower_triangular() const;
  // Full matrix, tab-separated, "NA" for unavailable cells.
  std::string to_tsv() const;
};

// Requires at least two rankings. Diagonal cells are exactly 1.
CorrelationMatrix correlation_matrix(std::span<const Ranking> rankings,
                                     CorrelationMethod method);

struct ExternalRankingLoad {
  Ranking ranking;
  std::vector<std::string> unmapped;
};

inline constexpr double kDefaultMaxUnmappedFraction = 0.2;

// External file: tab-separated with a `name` column and either a `rank`
// column (1 = best) or a `score` column (higher = better). The mapping file
// (external_name, university_id) aligns names to registry ids; names equal
// to a registry canonical name map without an entry. Unmapped names are
// reported; more than `max_unmapped_fraction` of them is an error.
ExternalRankingLoad load_external_ranking(
    const std::filesystem::path& file,
    const std::optional<std::filesystem::path>& mapping_file,
    std::string name, const Registry& registry,
    double max_unmapped_fraction = kDefaultMaxUnmappedFraction);

// Top-k records by views_total (descending, ties by person_link) among the
// records passing `filter`.
std::vector<AlumniRecord> top_alumni(std::span<const AlumniRecord> records,
                                     const FilterSpec& filter, std::size_t k);

// Bernoulli(rate) sample in input order, driven by a seeded mt19937_64 whose
// output sequence is fixed by the standard, so samples match across
// platforms. Requires 0 < rate <= 1.
std::vector<AlumniRecord> audit_sample(std::span<const AlumniRecord> records,
                                       double rate, std::uint64_t seed);

// Reviewer sheet: person_link, lang, birth_year, university_id,
// university_name, trigger, sentence, verdict (left blank).
std::string audit_tsv(std::span<const AlumniRecord> sample);
void write_audit_file(std::span<const AlumniRecord> sample,
                      const std::filesystem::path& path);

}  // namespace wikialumni

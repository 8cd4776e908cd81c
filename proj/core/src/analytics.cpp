#include "wikialumni/analytics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "wikialumni/errors.hpp"
#include "wikialumni/text.hpp"
#include "wikialumni/tsv.hpp"

namespace wikialumni {

// ---------------------------------------------------------------------------
// Filters

void FilterSpec::validate() const {
  if (min_birth_year && max_birth_year && *min_birth_year > *max_birth_year) {
    throw ConfigError(fmt::format(
        "filter '{}': min_birth_year {} exceeds max_birth_year {}", name,
        *min_birth_year, *max_birth_year));
  }
}

namespace {

bool drops_yearless(const FilterSpec& f) {
  return f.require_birth_year || f.min_birth_year || f.max_birth_year;
}

}  // namespace

bool FilterSpec::admits(const AlumniRecord& r) const {
  if (drops_yearless(*this) && !r.birth_year) return false;
  if (min_birth_year && *r.birth_year < *min_birth_year) return false;
  if (max_birth_year && *r.birth_year > *max_birth_year) return false;
  if (min_views_exclusive) {
    if (!r.views_total || *r.views_total <= *min_views_exclusive) return false;
  }
  return true;
}

bool FilterSpec::is_tighter_than(const FilterSpec& looser) const {
  if (drops_yearless(looser) && !drops_yearless(*this)) return false;
  if (looser.min_birth_year &&
      (!min_birth_year || *min_birth_year < *looser.min_birth_year)) {
    return false;
  }
  if (looser.max_birth_year &&
      (!max_birth_year || *max_birth_year > *looser.max_birth_year)) {
    return false;
  }
  if (looser.min_views_exclusive &&
      (!min_views_exclusive ||
       *min_views_exclusive < *looser.min_views_exclusive)) {
    return false;
  }
  return true;
}

std::vector<AlumniRecord> apply_filter(std::span<const AlumniRecord> records,
                                       const FilterSpec& filter) {
  std::vector<AlumniRecord> out;
  for (const auto& r : records) {
    if (filter.admits(r)) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Descriptive statistics

DescriptiveStats describe(std::span<const AlumniRecord> records) {
  DescriptiveStats stats;
  stats.n_alumni = records.size();
  std::set<std::int64_t> universities;
  std::vector<std::uint64_t> views;
  views.reserve(records.size());
  for (const auto& r : records) {
    if (!r.views_total) {
      throw std::invalid_argument(fmt::format(
          "describe: record '{}' has no views_total", r.person_link));
    }
    universities.insert(r.university_id);
    views.push_back(*r.views_total);
  }
  stats.n_universities = universities.size();
  if (views.empty()) return stats;

  std::sort(views.begin(), views.end());
  const std::size_t n = views.size();
  const std::uint64_t sum =
      std::accumulate(views.begin(), views.end(), std::uint64_t{0});
  stats.mean_views = static_cast<double>(sum) / static_cast<double>(n);
  stats.median_views =
      n % 2 == 1 ? static_cast<double>(views[n / 2])
                 : (static_cast<double>(views[n / 2 - 1]) +
                    static_cast<double>(views[n / 2])) /
                       2.0;
  double ss = 0;
  for (const auto v : views) {
    const double d = static_cast<double>(v) - stats.mean_views;
    ss += d * d;
  }
  stats.stddev_views = std::sqrt(ss / static_cast<double>(n));
  stats.moments_defined = true;
  return stats;
}

// ---------------------------------------------------------------------------
// Rankings

const char* score_kind_name(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kAlumniViewSum:
      return "alumni_view_sum";
    case ScoreKind::kUniversityPageViews:
      return "university_page_views";
    case ScoreKind::kExternal:
      return "external";
  }
  return "unknown";
}

void sort_ranking(std::vector<RankEntry>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const RankEntry& a, const RankEntry& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.name != b.name) return a.name < b.name;
              return a.id < b.id;
            });
}

Ranking ranking_from_totals(const std::map<std::int64_t, std::uint64_t>& totals,
                            const std::map<std::int64_t, std::string>& names,
                            ScoreKind kind, std::string label) {
  constexpr std::uint64_t kExactLimit = std::uint64_t{1} << 53;
  Ranking ranking;
  ranking.label = std::move(label);
  ranking.kind = kind;
  ranking.entries.reserve(totals.size());
  for (const auto& [id, total] : totals) {
    if (total > kExactLimit) {
      throw std::overflow_error(
          fmt::format("view total {} for university {} exceeds 2^53", total, id));
    }
    auto it = names.find(id);
    ranking.entries.push_back(RankEntry{
        id, it == names.end() ? std::to_string(id) : it->second,
        static_cast<double>(total)});
  }
  sort_ranking(ranking.entries);
  return ranking;
}

Ranking rank_universities(std::span<const AlumniRecord> records,
                          const FilterSpec& filter) {
  std::map<std::int64_t, std::uint64_t> totals;
  std::map<std::int64_t, std::string> names;
  for (const auto& r : records) {
    if (!filter.admits(r) || !r.views_total) continue;
    totals[r.university_id] += *r.views_total;
    names.try_emplace(r.university_id, r.university_name);
  }
  Ranking ranking = ranking_from_totals(totals, names, ScoreKind::kAlumniViewSum,
                                        filter.name);
  ranking.filter = filter;
  return ranking;
}

// ---------------------------------------------------------------------------
// Correlation

const char* correlation_method_name(CorrelationMethod m) {
  return m == CorrelationMethod::kSpearman ? "spearman" : "pearson_on_scores";
}

CorrelationMethod parse_correlation_method(std::string_view name) {
  if (name == "spearman") return CorrelationMethod::kSpearman;
  if (name == "pearson_on_scores" || name == "pearson") {
    return CorrelationMethod::kPearsonOnScores;
  }
  throw ConfigError(fmt::format(
      "unknown correlation method '{}' (expected spearman or pearson_on_scores)",
      name));
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 (0-based) share the mean of ranks i+1..j.
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("pearson: vectors differ in length");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) {
    throw CorrelationError("correlation undefined: a ranking has constant scores");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Correlation correlate(const Ranking& a, const Ranking& b,
                      CorrelationMethod method) {
  std::map<std::int64_t, double> a_scores, b_scores;
  for (const auto& e : a.entries) a_scores.emplace(e.id, e.score);
  for (const auto& e : b.entries) b_scores.emplace(e.id, e.score);
  std::vector<double> x, y;
  for (const auto& [id, score] : a_scores) {
    auto it = b_scores.find(id);
    if (it == b_scores.end()) continue;
    x.push_back(score);
    y.push_back(it->second);
  }
  if (x.size() < kMinCorrelationEntities) {
    throw CorrelationError(fmt::format(
        "'{}' and '{}' share {} universities; at least {} are needed", a.label,
        b.label, x.size(), kMinCorrelationEntities));
  }
  Correlation result;
  result.n = x.size();
  result.method = method;
  if (method == CorrelationMethod::kSpearman) {
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    result.coefficient = pearson(rx, ry);
  } else {
    result.coefficient = pearson(x, y);
  }
  return result;
}

CorrelationMatrix correlation_matrix(std::span<const Ranking> rankings,
                                     CorrelationMethod method) {
  if (rankings.size() < 2) {
    throw std::invalid_argument("correlation_matrix needs at least two rankings");
  }
  const std::size_t n = rankings.size();
  CorrelationMatrix m;
  m.method = method;
  m.cells.assign(n, std::vector<std::optional<double>>(n));
  m.overlap.assign(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    m.labels.push_back(rankings[i].label);
    m.cells[i][i] = 1.0;
    m.overlap[i][i] = rankings[i].entries.size();
    for (std::size_t j = 0; j < i; ++j) {
      try {
        const Correlation c = correlate(rankings[i], rankings[j], method);
        m.cells[i][j] = m.cells[j][i] = c.coefficient;
        m.overlap[i][j] = m.overlap[j][i] = c.n;
      } catch (const CorrelationError&) {
        m.cells[i][j] = m.cells[j][i] = std::nullopt;
      }
    }
  }
  return m;
}

namespace {

std::string cell_text(const std::optional<double>& v) {
  if (!v) return "NA";
  const double rounded = std::round(*v * 100.0) / 100.0;
  // Avoid printing "-0.00" for tiny negative values.
  return fmt::format("{:.2f}", rounded == 0 ? 0.0 : rounded);
}

}  // namespace

std::string CorrelationMatrix::render_lower_triangular() const {
  std::string out;
  for (const auto& label : labels) out += "\t" + label;
  out += "\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += labels[i];
    for (std::size_t j = 0; j <= i; ++j) out += "\t" + cell_text(cells[i][j]);
    out += "\n";
  }
  return out;
}

std::string CorrelationMatrix::to_tsv() const {
  std::string out = "ranking";
  for (const auto& label : labels) out += "\t" + tsv_field(label);
  out += "\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += tsv_field(labels[i]);
    for (std::size_t j = 0; j < labels.size(); ++j) {
      out += cells[i][j] ? fmt::format("\t{:.12f}", *cells[i][j]) : "\tNA";
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// External rankings

ExternalRankingLoad load_external_ranking(
    const std::filesystem::path& file,
    const std::optional<std::filesystem::path>& mapping_file, std::string name,
    const Registry& registry, double max_unmapped_fraction) {
  std::map<std::string, std::int64_t> mapping;
  for (const auto& u : registry.universities()) {
    mapping.emplace(u.canonical_name, u.id);
  }
  if (mapping_file) {
    const TsvTable table = TsvTable::read(*mapping_file);
    const auto c_name = table.column("external_name");
    const auto c_id = table.column("university_id");
    for (const auto& row : table.rows()) {
      std::int64_t id = 0;
      const std::string_view id_text = trim(row[c_id]);
      auto [ptr, ec] =
          std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
      if (ec != std::errc() || ptr != id_text.data() + id_text.size() ||
          registry.find(id) == nullptr) {
        throw RegistryError(fmt::format("{}: '{}' maps to unknown university '{}'",
                                        table.origin(), row[c_name], row[c_id]));
      }
      mapping[std::string(trim(row[c_name]))] = id;
    }
  }

  const TsvTable table = TsvTable::read(file);
  const auto c_name = table.column("name");
  const bool by_rank = table.has_column("rank");
  if (!by_rank && !table.has_column("score")) {
    throw IoError(fmt::format("{}: needs a 'rank' or 'score' column", file.string()));
  }
  const auto c_value = table.column(by_rank ? "rank" : "score");

  struct Row {
    std::string name;
    double value;
  };
  std::vector<Row> rows;
  for (const auto& row : table.rows()) {
    const std::string value_text(trim(row[c_value]));
    char* end = nullptr;
    const double value = std::strtod(value_text.c_str(), &end);
    if (value_text.empty() || end != value_text.c_str() + value_text.size()) {
      throw IoError(fmt::format("{}: invalid {} '{}' for '{}'", file.string(),
                                by_rank ? "rank" : "score", value_text, row[c_name]));
    }
    rows.push_back({std::string(trim(row[c_name])), value});
  }
  double max_rank = 0;
  for (const auto& r : rows) max_rank = std::max(max_rank, r.value);

  ExternalRankingLoad load;
  load.ranking.label = std::move(name);
  load.ranking.kind = ScoreKind::kExternal;
  std::set<std::int64_t> seen;
  for (const auto& r : rows) {
    auto it = mapping.find(r.name);
    if (it == mapping.end()) {
      load.unmapped.push_back(r.name);
      continue;
    }
    if (!seen.insert(it->second).second) {
      load.unmapped.push_back(r.name + " (duplicate of an earlier row)");
      continue;
    }
    // Ranks become points so that higher is better for every ranking kind.
    const double score = by_rank ? max_rank + 1 - r.value : r.value;
    load.ranking.entries.push_back(
        RankEntry{it->second, registry.find(it->second)->canonical_name, score});
  }
  sort_ranking(load.ranking.entries);
  if (!rows.empty() &&
      static_cast<double>(load.unmapped.size()) >
          max_unmapped_fraction * static_cast<double>(rows.size())) {
    throw RegistryError(fmt::format(
        "{}: {} of {} names could not be mapped to universities (limit {:.0f}%)",
        file.string(), load.unmapped.size(), rows.size(),
        max_unmapped_fraction * 100));
  }
  return load;
}

// ---------------------------------------------------------------------------
// Listings and audit

std::vector<AlumniRecord> top_alumni(std::span<const AlumniRecord> records,
                                     const FilterSpec& filter, std::size_t k) {
  std::vector<AlumniRecord> kept;
  for (const auto& r : records) {
    if (filter.admits(r) && r.views_total) kept.push_back(r);
  }
  std::sort(kept.begin(), kept.end(),
            [](const AlumniRecord& a, const AlumniRecord& b) {
              if (*a.views_total != *b.views_total) {
                return *a.views_total > *b.views_total;
              }
              if (a.person_link != b.person_link) {
                return a.person_link < b.person_link;
              }
              return a.university_id < b.university_id;
            });
  if (kept.size() > k) kept.resize(k);
  return kept;
}

std::vector<AlumniRecord> audit_sample(std::span<const AlumniRecord> records,
                                       double rate, std::uint64_t seed) {
  if (!(rate > 0 && rate <= 1)) {
    throw std::invalid_argument(
        fmt::format("audit rate must lie in (0, 1], got {}", rate));
  }
  std::mt19937_64 gen(seed);
  std::vector<AlumniRecord> sample;
  for (const auto& r : records) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    if (u < rate) sample.push_back(r);
  }
  return sample;
}

std::string audit_tsv(std::span<const AlumniRecord> sample) {
  std::string out =
      "person_link\tlang\tbirth_year\tuniversity_id\tuniversity_name\ttrigger\t"
      "sentence\tverdict\n";
  for (const auto& r : sample) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t\n", tsv_field(r.person_link),
                       r.lang,
                       r.birth_year ? std::to_string(*r.birth_year) : "",
                       r.university_id, tsv_field(r.university_name),
                       tsv_field(r.evidence.trigger),
                       tsv_field(r.evidence.sentence));
  }
  return out;
}

void write_audit_file(std::span<const AlumniRecord> sample,
                      const std::filesystem::path& path) {
  write_file_atomic(path, audit_tsv(sample));
}

}  // namespace wikialumni

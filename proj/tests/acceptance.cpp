// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "support.hpp"
#include "wikialumni/analytics.hpp"
#include "wikialumni/errors.hpp"
#include "wikialumni/person_extract.hpp"
#include "wikialumni/pipeline.hpp"
#include "wikialumni/text.hpp"

using namespace wikialumni;
using namespace testsupport;

namespace {

using Clock_ = std::chrono::steady_clock;

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::printf("%s AC%d %s: %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void guarded(int id, const std::string& title, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, title, false, std::string("exception: ") + e.what());
  }
}

double seconds_since(Clock_::time_point t0) {
  return std::chrono::duration<double>(Clock_::now() - t0).count();
}

AlumniRecord record_of(const PublishedAlumnus& p, std::int64_t id) {
  AlumniRecord r;
  r.university_id = id;
  r.university_name = p.university;
  r.person_link = p.person;
  r.birth_year = p.birth_year;
  r.lang = "en";
  r.views_total = p.views;
  return r;
}

// Overall top-10 rows plus the born-after-1947 rows not already present.
std::vector<AlumniRecord> published_union(bool overall_only) {
  std::map<std::string, std::int64_t> ids;
  std::set<std::string> seen;
  std::vector<AlumniRecord> out;
  auto add = [&](const PublishedAlumnus& p) {
    if (!seen.insert(p.person).second) return;
    const auto id = ids.try_emplace(p.university, std::int64_t(ids.size() + 1)).first->second;
    out.push_back(record_of(p, id));
  };
  for (const auto& p : top_graduates()) add(p);
  if (!overall_only) {
    for (const auto& p : top_graduates_after_1947()) add(p);
  }
  return out;
}

void ac1_after_1947_order() {
  const auto t0 = Clock_::now();
  const auto records = published_union(false);
  FilterSpec f;
  f.name = "born after 1947";
  f.min_birth_year = 1948;
  const auto top = top_alumni(records, f, 100);
  const double secs = seconds_since(t0);
  const auto& want = top_graduates_after_1947();
  bool ok = records.size() == 14 && top.size() == want.size();
  for (std::size_t i = 0; ok && i < want.size(); ++i) {
    ok = top[i].person_link == want[i].person && top[i].views_total == want[i].views;
  }
  ok = ok && secs < 1.0;
  report(1, "Born-after-1947 top-10 reproduction", ok,
         fmt::format("{} of 14 survive, order {}, {:.4f} s", top.size(),
                     ok ? "exact" : "differs", secs));
}

void ac2_cambridge() {
  // Independent arithmetic: sum every published Cambridge row.
  std::uint64_t expected = 0;
  for (const auto& p : top_graduates()) {
    if (p.university == "University of Cambridge") expected += p.views;
  }
  const auto ranking = rank_universities(published_union(true), FilterSpec{});
  std::uint64_t got = 0;
  for (const auto& e : ranking.entries) {
    if (e.name == "University of Cambridge") got = static_cast<std::uint64_t>(e.score);
  }
  const bool ok = got == expected && got == 32127698u &&
                  ranking.entries.front().name == "University of Cambridge";
  report(2, "Cambridge aggregation", ok, fmt::format("score {} (oracle {})", got, expected));
}

Ranking positions(const std::vector<int>& ranks) {
  Ranking r;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    r.entries.push_back({std::int64_t(i + 1), "E" + std::to_string(i + 1), 100.0 - ranks[i]});
  }
  sort_ranking(r.entries);
  return r;
}

void ac3_spearman() {
  const auto a = positions({1, 2, 3, 4});
  const double d2 = 1 + 1 + 1 + 1;
  const double oracle = 1.0 - 6.0 * d2 / (4.0 * (16.0 - 1.0));
  const double c = correlate(a, positions({2, 1, 4, 3}), CorrelationMethod::kSpearman).coefficient;
  const double same = correlate(a, a, CorrelationMethod::kSpearman).coefficient;
  const double rev = correlate(a, positions({4, 3, 2, 1}), CorrelationMethod::kSpearman).coefficient;
  const bool ok = std::abs(c - oracle) <= 1e-9 && std::abs(c - 0.6) <= 1e-9 &&
                  std::abs(same - 1.0) <= 1e-12 && std::abs(rev + 1.0) <= 1e-12;
  report(3, "Spearman oracle", ok,
         fmt::format("rho={:.12f} (oracle {:.12f}), identical={:.12f}, reversed={:.12f}", c,
                     oracle, same, rev));
}

std::string words(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += "w ";
  return s;
}

void ac4_birth_years() {
  struct Case {
    std::string text;
    std::optional<int> expected;
  };
  const std::vector<Case> cases = {
      {"'''Stephen William Hawking''' (born 8 January 1942) was a physicist", 1942},
      {words(999) + "1955", 1955},
      {words(1000) + "1955", std::nullopt},
      {words(998) + "born 1955", 1955},
      {words(999) + "born 1955", std::nullopt},
      {words(1500) + "1955", std::nullopt},
      {words(10) + "\n\n1955", 1955},
      {"no years here at all", std::nullopt},
      {"", std::nullopt},
      {"3000 copies sold; born 1971", 1971},
      {"in 0799 then 0800", 800},
      {"in 0799 only", std::nullopt},
      {"2019 and 2500 and 9999", std::nullopt},
      {"born 2018", 2018},
      {"12345 then 1950", 1950},
      {"A1955 1955b x1955x", std::nullopt},
      {"(1809–1882) naturalist", 1809},
      {"[[1948]] in film", 1948},
      {"born:1948,", 1948},
      {"ISBN 978-0-553-38016-3", std::nullopt},
      {"phone 555-1234-5678", 1234},
      {"\t1066\t", 1066},
      {"year_1999 is a token", 1999},
      {"19 45 is two tokens", std::nullopt},
      {"born 19th century in 1850", 1850},
      {"1950s fashion 1961", 1961},
      {"{{birth date|1961|8|4}}", 1961},
      {"«1952»", 1952},
      {"р. 7 октября 1952 года", 1952},
      {words(999) + "(1952)", 1952},
  };
  std::size_t agree = 0;
  std::string first_bad;
  for (const auto& c : cases) {
    const auto got = extract_birth_year(c.text, YearRange{800, 2018});
    const auto oracle = oracle_birth_year(c.text, 800, 2018);
    if (got == oracle && got == c.expected) {
      ++agree;
    } else if (first_bad.empty()) {
      first_bad = c.text.substr(0, 40);
    }
  }
  const bool ok = cases.size() == 30 && agree == cases.size();
  report(4, "Birth-year heuristic suite", ok,
         fmt::format("{}/{} cases agree with the brute-force scanner{}", agree, cases.size(),
                     first_bad.empty() ? "" : " (first mismatch: '" + first_bad + "')"));
}

void ac5_golden() {
  TempDir dir;
  const auto t0 = Clock_::now();
  const auto a = run_golden_pipeline(dir / "a");
  const auto b = run_golden_pipeline(dir / "b");
  const double secs = seconds_since(t0);
  const std::vector<int> zeros(5, 0);
  const std::string runs = first_golden_difference(dir / "a", dir / "b");
  const std::string committed = first_golden_difference(dir / "a", golden_expected_dir());
  const bool ok = a.exit_codes == zeros && b.exit_codes == zeros && runs.empty() &&
                  committed.empty() && secs < 10.0;
  report(5, "End-to-end golden run", ok,
         fmt::format("{} artifacts, runs {}, committed files {}, {:.2f} s",
                     golden_artifacts().size(), runs.empty() ? "identical" : "differ at " + runs,
                     committed.empty() ? "identical" : "differ at " + committed, secs));
}

void ac6_filter_monotonicity() {
  std::mt19937_64 rng(20180901);
  std::vector<AlumniRecord> records;
  for (int i = 0; i < 5000; ++i) {
    AlumniRecord r;
    r.university_id = 1 + std::int64_t(rng() % 464);
    r.university_name = "U" + std::to_string(r.university_id);
    r.person_link = "P" + std::to_string(i);
    if (rng() % 8 != 0) r.birth_year = 900 + int(rng() % 1119);
    r.views_total = rng() % 3 == 0 ? rng() % 1000 : rng() % 1000000;
    records.push_back(r);
  }
  int violations = 0, checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    FilterSpec loose;
    if (rng() % 2) loose.min_birth_year = 900 + int(rng() % 900);
    if (rng() % 2) loose.max_birth_year = 1800 + int(rng() % 218);
    if (rng() % 2) loose.min_views_exclusive = rng() % 5000;
    FilterSpec tight = loose;
    switch (rng() % 3) {
      case 0:
        tight.min_birth_year = loose.min_birth_year.value_or(800) + int(rng() % 150);
        break;
      case 1:
        tight.max_birth_year = loose.max_birth_year.value_or(2018) - int(rng() % 150);
        break;
      default:
        tight.min_views_exclusive = loose.min_views_exclusive.value_or(0) + rng() % 10000;
    }
    if (!tight.is_tighter_than(loose)) {
      ++violations;
      continue;
    }
    const auto a = describe(apply_filter(records, loose));
    const auto b = describe(apply_filter(records, tight));
    if (b.n_alumni > a.n_alumni || b.n_universities > a.n_universities) ++violations;
    ++checked;
  }
  report(6, "Filter monotonicity", violations == 0 && checked == 200,
         fmt::format("{} pairs over 5000 records, {} violations", checked, violations));
}

// Answers every pageview request with a deterministic monthly series and
// every langlinks request with no counterpart.
class SyntheticTransport final : public HttpTransport {
 public:
  explicit SyntheticTransport(std::atomic<std::uint64_t>& counter) : counter_(counter) {}
  HttpResponse get(const std::string& url) override {
    ++counter_;
    if (url.find("/pageviews/") != std::string::npos) {
      return {200, fmt::format(R"({{"items":[{{"views":{}}}]}})", fnv1a64(url) % 100000)};
    }
    return {200, R"({"query":{"pages":[{"title":"x"}]}})"};
  }

 private:
  std::atomic<std::uint64_t>& counter_;
};

class InstantClock final : public Clock {
 public:
  std::chrono::nanoseconds now() override { return now_; }
  void sleep_for(std::chrono::nanoseconds d) override { now_ += d; }

 private:
  std::chrono::nanoseconds now_{0};
};

void ac7_hermetic() {
  TempDir dir;
  // Fixture mode: any attempt to build a transport is counted as a failure.
  const auto net_before = network_operation_count();
  std::atomic<std::uint64_t> fixture_transports{0};
  {
    auto config = PipelineConfig::load(golden_config());
    ConfigOverrides o;
    o.output_dir = dir / "fixture";
    apply_overrides(config, o);
    std::ostringstream log;
    RunContext ctx;
    ctx.log = &log;
    ctx.transport_factory = [&]() -> std::unique_ptr<HttpTransport> {
      ++fixture_transports;
      throw FetchError("network use in fixture mode");
    };
    for (auto c : {Command::kIngest, Command::kExtract, Command::kViews, Command::kReport,
                   Command::kAudit}) {
      if (run_command(c, config, ctx) != 0) throw std::runtime_error(log.str());
    }
  }
  const auto net_fixture = network_operation_count() - net_before;

  // Live mode against a synthetic transport, twice over one cache dir.
  std::atomic<std::uint64_t> requests{0};
  auto config = PipelineConfig::load(golden_config());
  ConfigOverrides o;
  o.output_dir = dir / "live";
  o.mode = PageviewMode::kLive;
  o.cache_dir = dir / "cache";
  apply_overrides(config, o);
  InstantClock clock;
  std::ostringstream log;
  RunContext ctx;
  ctx.log = &log;
  ctx.clock = &clock;
  ctx.transport_factory = [&] { return std::make_unique<SyntheticTransport>(requests); };
  for (auto c : {Command::kIngest, Command::kExtract, Command::kViews}) {
    if (run_command(c, config, ctx) != 0) throw std::runtime_error(log.str());
  }
  const auto cold = requests.load();
  const std::string first = read_text(OutputLayout{config.output_dir}.views_dataset());
  if (run_command(Command::kViews, config, ctx) != 0) throw std::runtime_error(log.str());
  const auto warm = requests.load() - cold;
  const std::string second = read_text(OutputLayout{config.output_dir}.views_dataset());

  const bool ok = net_fixture == 0 && fixture_transports == 0 && cold > 0 && warm == 0 &&
                  first == second && network_operation_count() == net_before;
  report(7, "Hermetic fixture mode", ok,
         fmt::format("fixture run: {} network operations; live cold run: {} requests, "
                     "warm re-run: {} requests",
                     net_fixture + fixture_transports, cold, warm));
}

void ac8_matrix_shape() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  double worst = 0;
  int bad = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng() % 6;
    const std::size_t n = 4 + rng() % 40;
    std::vector<Ranking> family;
    for (std::size_t i = 0; i < k; ++i) {
      Ranking r;
      r.label = "r" + std::to_string(i);
      for (std::size_t e = 0; e < n; ++e) {
        if (rng() % 10 == 0) continue;  // partial overlap
        r.entries.push_back({std::int64_t(e), "E" + std::to_string(e), std::round(u(rng))});
      }
      sort_ranking(r.entries);
      family.push_back(std::move(r));
    }
    const auto m = correlation_matrix(family, CorrelationMethod::kSpearman);
    for (std::size_t i = 0; i < k; ++i) {
      if (!m.cells[i][i]) {
        ++bad;
        continue;
      }
      worst = std::max(worst, std::abs(*m.cells[i][i] - 1.0));
      for (std::size_t j = 0; j < k; ++j) {
        if (m.cells[i][j].has_value() != m.cells[j][i].has_value()) {
          ++bad;
        } else if (m.cells[i][j]) {
          worst = std::max(worst, std::abs(*m.cells[i][j] - *m.cells[j][i]));
        }
      }
    }
  }
  report(8, "Correlation-matrix shape", bad == 0 && worst <= 1e-12,
         fmt::format("50 random families, max asymmetry/diagonal error {:.3g}", worst));
}

}  // namespace

int main() {
  guarded(1, "Born-after-1947 top-10 reproduction", ac1_after_1947_order);
  guarded(2, "Cambridge aggregation", ac2_cambridge);
  guarded(3, "Spearman oracle", ac3_spearman);
  guarded(4, "Birth-year heuristic suite", ac4_birth_years);
  guarded(5, "End-to-end golden run", ac5_golden);
  guarded(6, "Filter monotonicity", ac6_filter_monotonicity);
  guarded(7, "Hermetic fixture mode", ac7_hermetic);
  guarded(8, "Correlation-matrix shape", ac8_matrix_shape);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures;
}

#include "wikialumni/pageviews.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "wikialumni/errors.hpp"
#include "wikialumni/text.hpp"
#include "wikialumni/tsv.hpp"

namespace wikialumni {

const char* view_source_name(ViewSource s) {
  switch (s) {
    case ViewSource::kLiveApi:
      return "live_api";
    case ViewSource::kFixture:
      return "fixture";
    case ViewSource::kCache:
      return "cache";
  }
  return "unknown";
}

namespace {

template <typename T>
T parse_number(std::string_view s, std::string_view what,
               const std::string& origin) {
  s = trim(s);
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError(fmt::format("{}: invalid {} '{}'", origin, what, s));
  }
  return value;
}

std::string replace_all(std::string s, std::string_view from,
                        std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string underscored(std::string_view title) {
  std::string out(title);
  for (char& ch : out) {
    if (ch == ' ') ch = '_';
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// FixtureBackend

FixtureBackend FixtureBackend::load(
    const std::filesystem::path& views_file,
    const std::optional<std::filesystem::path>& links_file) {
  FixtureBackend fixture;
  const TsvTable views = TsvTable::read(views_file);
  const auto c_lang = views.column("lang");
  const auto c_title = views.column("title");
  const auto c_year = views.column("year");
  const auto c_views = views.column("views");
  for (const auto& row : views.rows()) {
    fixture.add_views(row[c_lang], row[c_title],
                      parse_number<int>(row[c_year], "year", views.origin()),
                      parse_number<std::uint64_t>(row[c_views], "views",
                                                  views.origin()));
  }
  if (links_file) {
    const TsvTable links = TsvTable::read(*links_file);
    const auto l_lang = links.column("lang");
    const auto l_title = links.column("title");
    const auto l_en = links.column("title_en");
    for (const auto& row : links.rows()) {
      if (trim(row[l_en]).empty()) continue;
      fixture.add_link(row[l_lang], row[l_title], row[l_en]);
    }
  }
  return fixture;
}

void FixtureBackend::add_views(std::string lang, std::string title, int year,
                               std::uint64_t views) {
  views_[{std::move(lang), normalize_title(title), year}] += views;
}

void FixtureBackend::add_link(std::string lang, std::string title,
                              std::string title_en) {
  links_[{std::move(lang), normalize_title(title)}] = normalize_title(title_en);
}

ViewsLookup FixtureBackend::views(std::string_view title,
                                  std::string_view lang, int year) {
  auto it = views_.find({std::string(lang), normalize_title(title), year});
  if (it == views_.end()) return {ViewStatus::kNotFound, 0};
  return {ViewStatus::kOk, it->second};
}

std::optional<std::string> FixtureBackend::english_title(
    std::string_view title, std::string_view lang) {
  auto it = links_.find({std::string(lang), normalize_title(title)});
  if (it == links_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Clock and RateLimiter

std::chrono::nanoseconds SteadyClock::now() {
  return std::chrono::steady_clock::now().time_since_epoch();
}

void SteadyClock::sleep_for(std::chrono::nanoseconds d) {
  if (d.count() > 0) std::this_thread::sleep_for(d);
}

RateLimiter::RateLimiter(double requests_per_second, Clock& clock)
    : rps_(requests_per_second), clock_(clock) {
  if (!(requests_per_second > 0)) {
    throw ConfigError(
        fmt::format("rate limit must be positive, got {}", requests_per_second));
  }
  interval_ = std::chrono::nanoseconds(
      static_cast<std::int64_t>(std::ceil(1e9 / requests_per_second)));
}

void RateLimiter::acquire() {
  std::chrono::nanoseconds wait{0};
  {
    std::lock_guard lock(mu_);
    const auto now = clock_.now();
    auto slot = next_free_ ? std::max(now, *next_free_) : now;
    wait = slot - now;
    next_free_ = slot + interval_;
  }
  clock_.sleep_for(wait);
}

// ---------------------------------------------------------------------------
// LiveBackend

std::string pageviews_url(const LiveOptions& options, std::string_view title,
                          std::string_view lang, int year) {
  std::string url = options.pageviews_url;
  url = replace_all(url, "{project}", fmt::format("{}.wikipedia", lang));
  url = replace_all(url, "{agent}", options.agent);
  url = replace_all(url, "{title}", url_encode(underscored(title)));
  url = replace_all(url, "{start}", fmt::format("{:04}0101", year));
  url = replace_all(url, "{end}", fmt::format("{:04}1231", year));
  return url;
}

std::string langlinks_url(const LiveOptions& options, std::string_view title,
                          std::string_view lang) {
  std::string url = options.langlinks_url;
  url = replace_all(url, "{lang}", lang);
  url = replace_all(url, "{title}", url_encode(underscored(title)));
  return url;
}

LiveBackend::LiveBackend(LiveOptions options, HttpTransport& transport,
                         RateLimiter& limiter, Clock& clock)
    : options_(std::move(options)),
      transport_(transport),
      limiter_(limiter),
      clock_(clock) {}

HttpResponse LiveBackend::get_with_retry(const std::string& url) {
  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) clock_.sleep_for(options_.backoff * (1 << (attempt - 1)));
    limiter_.acquire();
    ++requests_;
    try {
      HttpResponse response = transport_.get(url);
      if (response.status == 429 || response.status >= 500) {
        last_error = fmt::format("HTTP {}", response.status);
        continue;
      }
      return response;
    } catch (const FetchError& e) {
      last_error = e.what();
    }
  }
  throw FetchError(fmt::format("{} failed after {} attempts: {}", url,
                               options_.retries + 1, last_error));
}

ViewsLookup LiveBackend::views(std::string_view title, std::string_view lang,
                               int year) {
  const std::string url = pageviews_url(options_, title, lang, year);
  const HttpResponse response = get_with_retry(url);
  if (response.status == 404) return {ViewStatus::kNotFound, 0};
  if (response.status != 200) {
    throw FetchError(fmt::format("{}: HTTP {}", url, response.status));
  }
  try {
    const auto doc = nlohmann::json::parse(response.body);
    std::uint64_t total = 0;
    for (const auto& item : doc.at("items")) {
      total += item.at("views").get<std::uint64_t>();
    }
    return {ViewStatus::kOk, total};
  } catch (const nlohmann::json::exception& e) {
    throw FetchError(fmt::format("{}: unexpected response: {}", url, e.what()));
  }
}

std::optional<std::string> LiveBackend::english_title(std::string_view title,
                                                      std::string_view lang) {
  const std::string url = langlinks_url(options_, title, lang);
  const HttpResponse response = get_with_retry(url);
  if (response.status != 200) {
    throw FetchError(fmt::format("{}: HTTP {}", url, response.status));
  }
  try {
    const auto doc = nlohmann::json::parse(response.body);
    const auto& pages = doc.at("query").at("pages");
    for (const auto& page : pages) {
      if (!page.contains("langlinks")) continue;
      for (const auto& ll : page.at("langlinks")) {
        if (ll.value("lang", "") == "en") {
          return ll.at("title").get<std::string>();
        }
      }
    }
    return std::nullopt;
  } catch (const nlohmann::json::exception& e) {
    throw FetchError(fmt::format("{}: unexpected response: {}", url, e.what()));
  }
}

// ---------------------------------------------------------------------------
// DiskCache

DiskCache::DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path DiskCache::entry_path(std::string_view kind,
                                            std::string_view lang,
                                            std::string_view title,
                                            int year) const {
  auto p = dir_ / std::string(kind) / std::string(lang);
  if (year != 0) p /= std::to_string(year);
  return p / (hex64(fnv1a64(title)) + ".entry");
}

std::optional<std::string> DiskCache::get(std::string_view kind,
                                          std::string_view lang,
                                          std::string_view title,
                                          int year) const {
  std::ifstream in(entry_path(kind, lang, title, year), std::ios::binary);
  if (!in) return std::nullopt;
  std::string stored_title, value;
  if (!std::getline(in, stored_title) || stored_title != title) {
    return std::nullopt;
  }
  if (!std::getline(in, value)) return std::nullopt;
  return value;
}

void DiskCache::put(std::string_view kind, std::string_view lang,
                    std::string_view title, int year, std::string_view value) {
  std::lock_guard lock(write_mu_);
  write_file_atomic(entry_path(kind, lang, title, year),
                    fmt::format("{}\n{}\n", title, value));
}

// ---------------------------------------------------------------------------
// PageViewService

PageViewService::PageViewService(PageViewBackend& backend, DiskCache* cache)
    : backend_(backend), cache_(cache) {}

PageViewStat PageViewService::fetch_views(std::string_view title,
                                          std::string_view lang, int year) {
  const std::tuple<std::string, std::string, int> key{std::string(lang),
                                                      std::string(title), year};
  {
    std::lock_guard lock(mu_);
    if (auto it = views_memo_.find(key); it != views_memo_.end()) {
      PageViewStat hit = it->second;
      hit.source = ViewSource::kCache;
      return hit;
    }
  }
  PageViewStat stat;
  stat.title = std::string(title);
  stat.lang = std::string(lang);
  stat.year = year;

  bool from_disk = false;
  if (cache_ != nullptr) {
    if (auto cached = cache_->get("views", lang, title, year)) {
      const auto fields = split_tabs(*cached);
      if (fields.size() == 2 && fields[0] == "ok") {
        stat.total = parse_number<std::uint64_t>(fields[1], "cached views",
                                                 cache_->dir().string());
        stat.status = ViewStatus::kOk;
        from_disk = true;
      } else if (fields.size() == 2 && fields[0] == "not_found") {
        stat.status = ViewStatus::kNotFound;
        from_disk = true;
      }
      stat.source = ViewSource::kCache;
    }
  }
  if (!from_disk) {
    ++backend_requests_;
    stat.source = backend_.source();
    try {
      const ViewsLookup lookup = backend_.views(title, lang, year);
      stat.status = lookup.status;
      stat.total = lookup.total;
      if (cache_ != nullptr) {
        cache_->put("views", lang, title, year,
                    lookup.status == ViewStatus::kOk
                        ? fmt::format("ok\t{}", lookup.total)
                        : std::string("not_found\t0"));
      }
    } catch (const FetchError& e) {
      stat.status = ViewStatus::kUnresolved;
      stat.message = e.what();
    }
  }
  if (stat.status == ViewStatus::kNotFound) {
    stat.total = 0;
    stat.message = fmt::format("no pageview data for {}:{} in {}", lang, title,
                               year);
  }
  if (stat.status != ViewStatus::kUnresolved) {
    std::lock_guard lock(mu_);
    views_memo_.emplace(key, stat);
  }
  return stat;
}

CrossLangLink PageViewService::resolve_english(std::string_view title,
                                               std::string_view lang) {
  const std::pair<std::string, std::string> key{std::string(lang),
                                                std::string(title)};
  {
    std::lock_guard lock(mu_);
    if (auto it = links_memo_.find(key); it != links_memo_.end()) {
      return it->second;
    }
  }
  CrossLangLink link;
  link.title_national = std::string(title);
  link.lang_national = std::string(lang);
  bool from_disk = false;
  if (cache_ != nullptr) {
    if (auto cached = cache_->get("langlinks", lang, title, 0)) {
      const auto fields = split_tabs(*cached);
      if (fields.size() == 2 && fields[0] == "en") {
        link.title_en = std::string(fields[1]);
        from_disk = true;
      } else if (fields.size() == 1 && fields[0] == "none") {
        from_disk = true;
      }
    }
  }
  if (!from_disk) {
    ++backend_requests_;
    try {
      link.title_en = backend_.english_title(title, lang);
      if (cache_ != nullptr) {
        cache_->put("langlinks", lang, title, 0,
                    link.title_en ? "en\t" + *link.title_en
                                  : std::string("none"));
      }
    } catch (const FetchError& e) {
      link.resolved = false;
      link.message = e.what();
    }
  }
  if (link.resolved) {
    std::lock_guard lock(mu_);
    links_memo_.emplace(key, link);
  }
  return link;
}

// ---------------------------------------------------------------------------
// Enrichment

namespace {

std::optional<RecordFlag> enrich_one(AlumniRecord& r, PageViewService& service,
                                     int year) {
  auto flag_for = [&r](std::string reason, bool unresolved) {
    return RecordFlag{r.university_id, r.person_link, r.lang, std::move(reason),
                      unresolved};
  };
  r.views_total.reset();
  std::vector<PageViewStat> stats;
  if (r.lang == "en") {
    r.person_link_en = r.person_link;
  } else {
    const CrossLangLink link = service.resolve_english(r.person_link, r.lang);
    if (!link.resolved) {
      r.person_link_en.reset();
      return flag_for("english counterpart unresolved: " + link.message, true);
    }
    r.person_link_en = link.title_en;
  }
  stats.push_back(service.fetch_views(r.person_link, r.lang, year));
  if (r.lang != "en" && r.person_link_en) {
    stats.push_back(service.fetch_views(*r.person_link_en, "en", year));
  }
  std::uint64_t total = 0;
  std::vector<std::string> notes;
  for (const auto& s : stats) {
    if (s.status == ViewStatus::kUnresolved) {
      return flag_for("pageviews unresolved: " + s.message, true);
    }
    if (s.status == ViewStatus::kNotFound) notes.push_back(s.message);
    total += s.total;
  }
  r.views_total = total;
  if (!notes.empty()) {
    std::string reason = notes.front();
    for (std::size_t i = 1; i < notes.size(); ++i) reason += "; " + notes[i];
    return flag_for(std::move(reason), false);
  }
  return std::nullopt;
}

}  // namespace

EnrichReport enrich_records(std::vector<AlumniRecord>& records,
                            PageViewService& service, int year,
                            unsigned parallelism) {
  std::vector<std::optional<RecordFlag>> flags(records.size());
  if (parallelism <= 1 || records.size() < 2) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      flags[i] = enrich_one(records[i], service, year);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    const unsigned n =
        std::min<unsigned>(parallelism, static_cast<unsigned>(records.size()));
    for (unsigned w = 0; w < n; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
          flags[i] = enrich_one(records[i], service, year);
        }
      });
    }
  }
  EnrichReport report;
  for (auto& f : flags) {
    if (!f) continue;
    if (f->unresolved) ++report.unresolved;
    report.flags.push_back(std::move(*f));
  }
  return report;
}

std::vector<UniversityViews> university_views(const Registry& registry,
                                              PageViewService& service,
                                              int year) {
  std::vector<UniversityViews> out;
  out.reserve(registry.size());
  for (const auto& u : registry.universities()) {
    UniversityViews uv;
    uv.university_id = u.id;
    uv.name = u.canonical_name;
    std::uint64_t total = 0;
    bool unresolved = false;
    for (const auto& [lang, title] : u.primary_titles) {
      const PageViewStat stat = service.fetch_views(title, lang, year);
      if (stat.status == ViewStatus::kUnresolved) {
        unresolved = true;
        uv.notes.push_back(stat.message);
        continue;
      }
      if (stat.status == ViewStatus::kNotFound) uv.notes.push_back(stat.message);
      total += stat.total;
    }
    if (!unresolved) uv.total = total;
    out.push_back(std::move(uv));
  }
  return out;
}

}  // namespace wikialumni

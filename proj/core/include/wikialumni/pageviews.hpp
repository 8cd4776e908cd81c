#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wikialumni/alumni_link.hpp"
#include "wikialumni/registry.hpp"

namespace wikialumni {

enum class ViewSource { kLiveApi, kFixture, kCache };

const char* view_source_name(ViewSource s);

enum class ViewStatus {
  kOk,
  kNotFound,    // upstream has no data for the page; total is 0
  kUnresolved,  // lookup failed after retries; total is meaningless
};

struct PageViewStat {
  std::string title;
  std::string lang;
  int year = 0;
  std::uint64_t total = 0;
  ViewSource source = ViewSource::kFixture;
  ViewStatus status = ViewStatus::kOk;
  std::string message;
};

struct CrossLangLink {
  std::string title_national;
  std::string lang_national;
  std::optional<std::string> title_en;
  bool resolved = true;
  std::string message;
};

// ---------------------------------------------------------------------------
// Backends

struct ViewsLookup {
  ViewStatus status = ViewStatus::kOk;  // kOk or kNotFound
  std::uint64_t total = 0;
};

// A source of pageview totals and English counterparts. Implementations throw
// FetchError when a lookup cannot be completed.
class PageViewBackend {
 public:
  virtual ~PageViewBackend() = default;
  virtual ViewsLookup views(std::string_view title, std::string_view lang,
                            int year) = 0;
  virtual std::optional<std::string> english_title(std::string_view title,
                                                   std::string_view lang) = 0;
  virtual ViewSource source() const = 0;
};

// Offline lookups from tab-separated files:
//   views: lang, title, year, views   (rows with the same key are summed,
//                                      so monthly rows are allowed)
//   links: lang, title, title_en
// Unknown pages report kNotFound. Holds no network capability.
class FixtureBackend final : public PageViewBackend {
 public:
  static FixtureBackend load(const std::filesystem::path& views_file,
                             const std::optional<std::filesystem::path>& links_file);

  void add_views(std::string lang, std::string title, int year,
                 std::uint64_t views);
  void add_link(std::string lang, std::string title, std::string title_en);

  ViewsLookup views(std::string_view title, std::string_view lang,
                    int year) override;
  std::optional<std::string> english_title(std::string_view title,
                                           std::string_view lang) override;
  ViewSource source() const override { return ViewSource::kFixture; }

 private:
  std::map<std::tuple<std::string, std::string, int>, std::uint64_t> views_;
  std::map<std::pair<std::string, std::string>, std::string> links_;
};

// ---------------------------------------------------------------------------
// Live transport pieces

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Minimal GET transport. Throws FetchError on connection-level failures.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse get(const std::string& url) = 0;
};

// Process-wide count of HTTP requests issued by any real network transport.
// Fixture-mode runs are expected to leave it at zero.
std::uint64_t network_operation_count();

// cpp-httplib/OpenSSL backed transport. Every call increments
// network_operation_count().
std::unique_ptr<HttpTransport> make_https_transport(std::string user_agent);

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::chrono::nanoseconds now() = 0;
  virtual void sleep_for(std::chrono::nanoseconds d) = 0;
};

class SteadyClock final : public Clock {
 public:
  std::chrono::nanoseconds now() override;
  void sleep_for(std::chrono::nanoseconds d) override;
};

// Spaces acquisitions at least 1/rps apart. Thread-safe.
class RateLimiter {
 public:
  RateLimiter(double requests_per_second, Clock& clock);
  void acquire();
  double rate() const { return rps_; }

 private:
  double rps_;
  std::chrono::nanoseconds interval_;
  Clock& clock_;
  std::mutex mu_;
  std::optional<std::chrono::nanoseconds> next_free_;
};

struct LiveOptions {
  // {project} {agent} {title} {start} {end}
  std::string pageviews_url =
      "https://wikimedia.org/api/rest_v1/metrics/pageviews/per-article/"
      "{project}/all-access/{agent}/{title}/monthly/{start}/{end}";
  // {lang} {title}
  std::string langlinks_url =
      "https://{lang}.wikipedia.org/w/api.php?action=query&prop=langlinks"
      "&lllang=en&redirects=1&format=json&formatversion=2&titles={title}";
  std::string agent = "all-agents";
  int retries = 3;
  std::chrono::milliseconds backoff{500};
};

// Wikimedia REST pageviews + action API langlinks. Transient failures
// (transport errors, 429, 5xx) are retried with doubling backoff; every
// attempt passes through the rate limiter.
class LiveBackend final : public PageViewBackend {
 public:
  LiveBackend(LiveOptions options, HttpTransport& transport,
              RateLimiter& limiter, Clock& clock);

  ViewsLookup views(std::string_view title, std::string_view lang,
                    int year) override;
  std::optional<std::string> english_title(std::string_view title,
                                           std::string_view lang) override;
  ViewSource source() const override { return ViewSource::kLiveApi; }

  std::uint64_t requests() const { return requests_.load(); }

 private:
  HttpResponse get_with_retry(const std::string& url);

  LiveOptions options_;
  HttpTransport& transport_;
  RateLimiter& limiter_;
  Clock& clock_;
  std::atomic<std::uint64_t> requests_{0};
};

std::string pageviews_url(const LiveOptions& options, std::string_view title,
                          std::string_view lang, int year);
std::string langlinks_url(const LiveOptions& options, std::string_view title,
                          std::string_view lang);

// ---------------------------------------------------------------------------
// Cache and service

// On-disk key-value store: one file per (kind, lang, title[, year]). Reads
// may run concurrently; writes are serialized and atomic.
class DiskCache {
 public:
  explicit DiskCache(std::filesystem::path dir);

  std::optional<std::string> get(std::string_view kind, std::string_view lang,
                                 std::string_view title, int year) const;
  void put(std::string_view kind, std::string_view lang,
           std::string_view title, int year, std::string_view value);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path entry_path(std::string_view kind, std::string_view lang,
                                   std::string_view title, int year) const;

  std::filesystem::path dir_;
  std::mutex write_mu_;
};

// Memoizing front for a backend, with an optional disk cache. Lookups that
// are served without touching the backend report ViewSource::kCache.
class PageViewService {
 public:
  PageViewService(PageViewBackend& backend, DiskCache* cache = nullptr);

  CrossLangLink resolve_english(std::string_view title, std::string_view lang);
  PageViewStat fetch_views(std::string_view title, std::string_view lang,
                           int year);

  // Calls that reached the backend.
  std::uint64_t backend_requests() const { return backend_requests_.load(); }

 private:
  PageViewBackend& backend_;
  DiskCache* cache_;
  std::mutex mu_;
  std::map<std::tuple<std::string, std::string, int>, PageViewStat> views_memo_;
  std::map<std::pair<std::string, std::string>, CrossLangLink> links_memo_;
  std::atomic<std::uint64_t> backend_requests_{0};
};

struct RecordFlag {
  std::int64_t university_id = 0;
  std::string person_link;
  std::string lang;
  std::string reason;
  bool unresolved = false;  // views_total left empty
};

struct EnrichReport {
  std::vector<RecordFlag> flags;
  std::size_t unresolved = 0;
};

// views_total = national views + English counterpart views (when present
// and distinct); "en" records count their own page once. Records whose
// lookups fail keep an empty views_total and are flagged.
EnrichReport enrich_records(std::vector<AlumniRecord>& records,
                            PageViewService& service, int year,
                            unsigned parallelism = 1);

struct UniversityViews {
  std::int64_t university_id = 0;
  std::string name;
  std::optional<std::uint64_t> total;
  std::vector<std::string> notes;
};

// Per university: sum over one primary title per language (aliases are not
// counted). Sorted by university id.
std::vector<UniversityViews> university_views(const Registry& registry,
                                              PageViewService& service,
                                              int year);

}  // namespace wikialumni

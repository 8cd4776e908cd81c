#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wikialumni {

// One <page> element of a MediaWiki pages-articles dump.
struct WikiPage {
  std::string title;
  std::string lang;
  int ns = 0;
  std::optional<std::string> redirect_target;
  std::string wikitext;
  std::int64_t page_id = 0;

  bool is_redirect() const { return redirect_target.has_value(); }
  bool operator==(const WikiPage&) const = default;
};

struct DumpSource {
  std::filesystem::path path;
  std::string lang;
  // ISO date the dump is declared to represent, carried into provenance.
  std::string dump_date;
};

enum class Compression { kNone, kGzip, kBzip2, kXz, kZstd };

const char* compression_name(Compression c);

// Classifies the leading bytes of a dump. Throws DumpError with a format hint
// when the bytes are neither XML nor a supported compression container.
Compression detect_compression(std::string_view head,
                               const std::string& origin);

// Pull-style page reader. Memory use is bounded by one input chunk plus the
// pages completed within it, independent of the dump size.
//
// Malformed XML throws DumpError carrying the byte offset and the last title
// parsed. A stream that ends mid-document is not an error: next() returns the
// pages completed so far, then std::nullopt, and truncated() becomes true.
class PageStream {
 public:
  explicit PageStream(const DumpSource& source);
  // `origin` names the stream in error messages.
  PageStream(std::unique_ptr<std::istream> input, std::string lang,
             std::string origin);
  ~PageStream();
  PageStream(PageStream&&) noexcept;
  PageStream& operator=(PageStream&&) noexcept;

  std::optional<WikiPage> next();

  bool truncated() const;
  const std::string& truncation_message() const;
  Compression compression() const;
  // Decompressed bytes handed to the XML parser so far.
  std::uint64_t bytes_parsed() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct StreamSummary {
  std::size_t pages = 0;
  bool truncated = false;
  std::string truncation_message;
};

// Convenience driver over PageStream.
StreamSummary stream_pages(const DumpSource& source,
                           const std::function<void(WikiPage&&)>& sink);

// Normalized redirect title -> final canonical title.
using RedirectMap = std::map<std::string, std::string>;

struct RedirectResolution {
  RedirectMap canonical;
  // Titles caught in a cycle or in a chain longer than the hop cap.
  std::vector<std::string> unresolvable;
};

inline constexpr int kDefaultRedirectHopCap = 16;

// Accumulates redirect edges from a page stream so that pages do not need
// to be retained.
class RedirectCollector {
 public:
  void add(const WikiPage& page);
  RedirectResolution resolve(int hop_cap = kDefaultRedirectHopCap) const;
  std::size_t redirect_count() const { return edges_.size(); }

 private:
  std::map<std::string, std::string> edges_;
};

RedirectResolution collect_redirects(std::span<const WikiPage> pages,
                                     int hop_cap = kDefaultRedirectHopCap);

}  // namespace wikialumni

#include "wikialumni/dump_ingest.hpp"

#include <expat.h>
#include <fmt/format.h>

#include <boost/iostreams/categories.hpp>
#include <boost/iostreams/filter/bzip2.hpp>
#include <boost/iostreams/filter/gzip.hpp>
#include <boost/iostreams/filter/lzma.hpp>
#include <boost/iostreams/filter/zstd.hpp>
#include <boost/iostreams/filtering_stream.hpp>
#include <charconv>
#include <cstring>
#include <deque>
#include <fstream>
#include <set>

#include "wikialumni/errors.hpp"
#include "wikialumni/text.hpp"

namespace io = boost::iostreams;

namespace wikialumni {

const char* compression_name(Compression c) {
  switch (c) {
    case Compression::kNone:
      return "none";
    case Compression::kGzip:
      return "gzip";
    case Compression::kBzip2:
      return "bzip2";
    case Compression::kXz:
      return "xz";
    case Compression::kZstd:
      return "zstd";
  }
  return "unknown";
}

Compression detect_compression(std::string_view head,
                               const std::string& origin) {
  auto starts = [&](std::string_view magic) {
    return head.substr(0, magic.size()) == magic;
  };
  if (starts("\x1f\x8b")) return Compression::kGzip;
  if (starts("BZh")) return Compression::kBzip2;
  if (starts(std::string_view("\xfd" "7zXZ\x00", 6))) return Compression::kXz;
  if (starts("\x28\xb5\x2f\xfd")) return Compression::kZstd;

  std::string_view body = head;
  if (body.substr(0, 3) == "\xef\xbb\xbf") body.remove_prefix(3);
  while (!body.empty() && is_space(static_cast<unsigned char>(body.front()))) {
    body.remove_prefix(1);
  }
  // An empty or whitespace-only prefix is left for the XML parser to judge.
  if (body.empty() || body.front() == '<') return Compression::kNone;

  std::string hint = "expected plain XML or gzip/bzip2/xz/zstd compressed XML";
  if (starts("PK\x03\x04")) {
    hint = "zip archives are not supported; extract the XML first";
  } else if (starts("7z\xbc\xaf\x27\x1c")) {
    hint = "7z archives are not supported; extract the XML first";
  }
  std::string bytes;
  for (std::size_t i = 0; i < std::min<std::size_t>(head.size(), 6); ++i) {
    bytes += fmt::format("{}{:02x}", i ? " " : "",
                         static_cast<unsigned char>(head[i]));
  }
  throw DumpError(fmt::format("{}: unknown input format (leading bytes {}): {}",
                              origin, bytes, hint));
}

namespace {

constexpr std::size_t kChunkSize = 1 << 16;
constexpr std::size_t kMagicBytes = 8;

// Replays the bytes consumed for format detection, then the rest of `in`.
class PrefixedSource {
 public:
  using char_type = char;
  using category = io::source_tag;

  PrefixedSource(std::string prefix, std::istream* in)
      : prefix_(std::move(prefix)), in_(in) {}

  std::streamsize read(char* s, std::streamsize n) {
    std::streamsize copied = 0;
    if (pos_ < prefix_.size()) {
      const auto take = std::min<std::size_t>(prefix_.size() - pos_,
                                              static_cast<std::size_t>(n));
      std::memcpy(s, prefix_.data() + pos_, take);
      pos_ += take;
      copied = static_cast<std::streamsize>(take);
    }
    if (copied < n && in_->good()) {
      in_->read(s + copied, n - copied);
      copied += in_->gcount();
    }
    return copied == 0 ? -1 : copied;
  }

 private:
  std::string prefix_;
  std::size_t pos_ = 0;
  std::istream* in_;
};

enum class Field { kNone, kTitle, kNs, kId, kText };

bool is_truncation(XML_Error code) {
  return code == XML_ERROR_NO_ELEMENTS || code == XML_ERROR_UNCLOSED_TOKEN ||
         code == XML_ERROR_PARTIAL_CHAR ||
         code == XML_ERROR_UNCLOSED_CDATA_SECTION;
}

}  // namespace

struct PageStream::Impl {
  std::string lang;
  std::string origin;
  std::unique_ptr<std::istream> raw;
  io::filtering_istream in;
  Compression compression = Compression::kNone;
  XML_Parser parser = nullptr;
  std::vector<char> buffer = std::vector<char>(kChunkSize);

  std::deque<WikiPage> ready;
  std::vector<std::string> stack;
  bool in_page = false;
  std::size_t page_depth = 0;
  WikiPage current;
  bool saw_id = false;
  std::string ns_text, id_text;
  Field capture = Field::kNone;

  std::string last_title;
  std::string handler_error;
  std::optional<std::string> pending_error;
  bool finished = false;
  bool truncated = false;
  std::string truncation_message;
  std::uint64_t bytes = 0;

  ~Impl() {
    if (parser != nullptr) XML_ParserFree(parser);
  }

  void open(std::unique_ptr<std::istream> input) {
    raw = std::move(input);
    std::string head(kMagicBytes, '\0');
    raw->read(head.data(), static_cast<std::streamsize>(head.size()));
    head.resize(static_cast<std::size_t>(raw->gcount()));
    compression = detect_compression(head, origin);
    switch (compression) {
      case Compression::kGzip:
        in.push(io::gzip_decompressor());
        break;
      case Compression::kBzip2:
        in.push(io::bzip2_decompressor());
        break;
      case Compression::kXz:
        in.push(io::lzma_decompressor());
        break;
      case Compression::kZstd:
        in.push(io::zstd_decompressor());
        break;
      case Compression::kNone:
        break;
    }
    in.push(PrefixedSource(std::move(head), raw.get()));
    in.exceptions(std::ios::badbit);

    parser = XML_ParserCreate("UTF-8");
    if (parser == nullptr) throw DumpError("cannot allocate XML parser");
    XML_SetUserData(parser, this);
    XML_SetElementHandler(parser, &Impl::on_start, &Impl::on_end);
    XML_SetCharacterDataHandler(parser, &Impl::on_text);
  }

  std::string* capture_buffer() {
    switch (capture) {
      case Field::kTitle:
        return &current.title;
      case Field::kNs:
        return &ns_text;
      case Field::kId:
        return &id_text;
      case Field::kText:
        return &current.wikitext;
      case Field::kNone:
        break;
    }
    return nullptr;
  }

  void fail_in_handler(std::string message) {
    if (handler_error.empty()) handler_error = std::move(message);
    XML_StopParser(parser, XML_FALSE);
  }

  static void on_start(void* user, const XML_Char* name,
                       const XML_Char** attrs) {
    auto* self = static_cast<Impl*>(user);
    self->start(name, attrs);
  }

  static void on_end(void* user, const XML_Char* name) {
    static_cast<Impl*>(user)->end(name);
  }

  static void on_text(void* user, const XML_Char* text, int len) {
    auto* self = static_cast<Impl*>(user);
    if (std::string* target = self->capture_buffer()) {
      target->append(text, static_cast<std::size_t>(len));
    }
  }

  const std::string& parent() const {
    static const std::string kEmpty;
    return stack.size() >= 2 ? stack[stack.size() - 2] : kEmpty;
  }

  void start(std::string_view name, const XML_Char** attrs) {
    stack.emplace_back(name);
    if (!in_page) {
      if (name == "page") {
        in_page = true;
        page_depth = stack.size();
        current = WikiPage{};
        current.lang = lang;
        saw_id = false;
        ns_text.clear();
        id_text.clear();
      }
      return;
    }
    const std::size_t depth = stack.size();
    if (depth == page_depth + 1) {
      if (name == "title") {
        current.title.clear();
        capture = Field::kTitle;
      } else if (name == "ns") {
        ns_text.clear();
        capture = Field::kNs;
      } else if (name == "id" && !saw_id) {
        id_text.clear();
        capture = Field::kId;
      } else if (name == "redirect") {
        std::string target;
        for (int i = 0; attrs[i] != nullptr; i += 2) {
          if (std::strcmp(attrs[i], "title") == 0) target = attrs[i + 1];
        }
        current.redirect_target = std::move(target);
      }
    } else if (depth == page_depth + 2 && name == "text" &&
               parent() == "revision") {
      // Later revisions overwrite earlier ones.
      current.wikitext.clear();
      capture = Field::kText;
    }
  }

  static std::optional<std::int64_t> parse_int(std::string_view s) {
    s = trim(s);
    std::int64_t value = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (s.empty() || ec != std::errc() || ptr != end) return std::nullopt;
    return value;
  }

  void end(std::string_view name) {
    if (in_page) {
      const std::size_t depth = stack.size();
      if (depth == page_depth) {
        finish_page();
      } else if (capture != Field::kNone &&
                 (depth == page_depth + 1 || depth == page_depth + 2)) {
        if (capture == Field::kId) saw_id = true;
        capture = Field::kNone;
      }
    }
    (void)name;
    stack.pop_back();
  }

  void finish_page() {
    in_page = false;
    capture = Field::kNone;
    if (current.title.empty()) {
      fail_in_handler("page element without a title");
      return;
    }
    if (!ns_text.empty()) {
      auto ns = parse_int(ns_text);
      if (!ns) {
        fail_in_handler(fmt::format("page '{}': invalid <ns> value '{}'",
                                    current.title, ns_text));
        return;
      }
      current.ns = static_cast<int>(*ns);
    }
    if (!id_text.empty()) {
      auto id = parse_int(id_text);
      if (!id) {
        fail_in_handler(fmt::format("page '{}': invalid <id> value '{}'",
                                    current.title, id_text));
        return;
      }
      current.page_id = *id;
    }
    last_title = current.title;
    ready.push_back(std::move(current));
    current = WikiPage{};
  }

  std::string position() const {
    return fmt::format("byte {} (line {}, column {})",
                       XML_GetCurrentByteIndex(parser),
                       XML_GetCurrentLineNumber(parser),
                       XML_GetCurrentColumnNumber(parser));
  }

  std::string last_title_note() const {
    return last_title.empty()
               ? std::string("no page parsed yet")
               : fmt::format("last parsed title '{}'", last_title);
  }

  void feed() {
    std::streamsize got = 0;
    bool eof = false;
    try {
      in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      got = in.gcount();
      eof = in.eof();
    } catch (const std::exception& e) {
      truncated = true;
      finished = true;
      truncation_message = fmt::format(
          "{}: input ended abnormally after {} bytes ({}); {}", origin, bytes,
          e.what(), last_title_note());
      return;
    }
    bytes += static_cast<std::uint64_t>(got);
    const XML_Status status =
        XML_Parse(parser, buffer.data(), static_cast<int>(got), eof);
    if (status == XML_STATUS_ERROR) {
      finished = true;
      const XML_Error code = XML_GetErrorCode(parser);
      if (!handler_error.empty()) {
        pending_error = fmt::format("{}: malformed dump at {}: {}; {}", origin,
                                    position(), handler_error,
                                    last_title_note());
      } else if (eof && is_truncation(code)) {
        truncated = true;
        truncation_message = fmt::format(
            "{}: stream truncated at {} ({}); {}", origin, position(),
            XML_ErrorString(code), last_title_note());
      } else {
        pending_error =
            fmt::format("{}: malformed XML at {}: {}; {}", origin, position(),
                        XML_ErrorString(code), last_title_note());
      }
      return;
    }
    if (eof) finished = true;
  }
};

PageStream::PageStream(const DumpSource& source) : impl_(std::make_unique<Impl>()) {
  impl_->lang = source.lang;
  impl_->origin = source.path.string();
  auto file = std::make_unique<std::ifstream>(source.path, std::ios::binary);
  if (!*file) {
    throw DumpError(fmt::format("cannot open dump {}", source.path.string()));
  }
  impl_->open(std::move(file));
}

PageStream::PageStream(std::unique_ptr<std::istream> input, std::string lang,
                       std::string origin)
    : impl_(std::make_unique<Impl>()) {
  impl_->lang = std::move(lang);
  impl_->origin = std::move(origin);
  impl_->open(std::move(input));
}

PageStream::~PageStream() = default;
PageStream::PageStream(PageStream&&) noexcept = default;
PageStream& PageStream::operator=(PageStream&&) noexcept = default;

std::optional<WikiPage> PageStream::next() {
  while (impl_->ready.empty() && !impl_->finished) impl_->feed();
  if (!impl_->ready.empty()) {
    WikiPage page = std::move(impl_->ready.front());
    impl_->ready.pop_front();
    return page;
  }
  if (impl_->pending_error) {
    std::string message = std::move(*impl_->pending_error);
    impl_->pending_error.reset();
    throw DumpError(message);
  }
  return std::nullopt;
}

bool PageStream::truncated() const { return impl_->truncated; }

const std::string& PageStream::truncation_message() const {
  return impl_->truncation_message;
}

Compression PageStream::compression() const { return impl_->compression; }

std::uint64_t PageStream::bytes_parsed() const { return impl_->bytes; }

StreamSummary stream_pages(const DumpSource& source,
                           const std::function<void(WikiPage&&)>& sink) {
  PageStream stream(source);
  StreamSummary summary;
  while (auto page = stream.next()) {
    ++summary.pages;
    sink(std::move(*page));
  }
  summary.truncated = stream.truncated();
  summary.truncation_message = stream.truncation_message();
  return summary;
}

void RedirectCollector::add(const WikiPage& page) {
  if (!page.redirect_target) return;
  edges_[normalize_title(page.title)] = normalize_title(*page.redirect_target);
}

RedirectResolution RedirectCollector::resolve(int hop_cap) const {
  RedirectResolution result;
  for (const auto& [source, first_target] : edges_) {
    std::set<std::string_view> visited{source};
    std::string_view cur = first_target;
    int hops = 1;
    bool ok = !cur.empty();
    while (ok) {
      auto it = edges_.find(std::string(cur));
      if (it == edges_.end()) break;
      if (visited.contains(cur) || hops >= hop_cap) {
        ok = false;
        break;
      }
      visited.insert(cur);
      cur = it->second;
      ++hops;
      if (cur.empty()) ok = false;
    }
    if (ok) {
      result.canonical.emplace(source, std::string(cur));
    } else {
      result.unresolvable.push_back(source);
    }
  }
  return result;
}

RedirectResolution collect_redirects(std::span<const WikiPage> pages,
                                     int hop_cap) {
  RedirectCollector collector;
  for (const auto& page : pages) collector.add(page);
  return collector.resolve(hop_cap);
}

}  // namespace wikialumni

#include "wikialumni/text.hpp"

#include <fmt/format.h>

namespace wikialumni {
namespace {

// Decodes one code point at s[i]. On invalid input returns the raw byte and
// a length of 1 so callers can pass it through untouched.
struct Decoded {
  char32_t cp;
  std::size_t len;
  bool valid;
};

Decoded decode(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1, true};
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 < 0) return {b0, 1, false};
    const char32_t cp = ((b0 & 0x1F) << 6) | c1;
    if (cp < 0x80) return {b0, 1, false};
    return {cp, 2, true};
  }
  if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 < 0 || c2 < 0) return {b0, 1, false};
    return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3,
            true};
  }
  if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 < 0 || c2 < 0 || c3 < 0) return {b0, 1, false};
    return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) |
                                  (c2 << 6) | c3),
            4, true};
  }
  return {b0, 1, false};
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c < 0x80) return c;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  if (c >= 0x100 && c <= 0x137) return (c % 2 == 0) ? c + 1 : c;
  if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x14A && c <= 0x177) return (c % 2 == 0) ? c + 1 : c;
  if (c == 0x178) return 0xFF;
  if (c >= 0x179 && c <= 0x17E) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  return c;
}

char32_t to_upper(char32_t c) {
  if (c >= 'a' && c <= 'z') return c - 32;
  if (c < 0x80) return c;
  if (c >= 0xE0 && c <= 0xFE && c != 0xF7) return c - 32;
  if (c == 0xFF) return 0x178;
  if (c >= 0x100 && c <= 0x137) return (c % 2 == 1) ? c - 1 : c;
  if (c >= 0x139 && c <= 0x148) return (c % 2 == 0) ? c - 1 : c;
  if (c >= 0x14A && c <= 0x177) return (c % 2 == 1) ? c - 1 : c;
  if (c >= 0x179 && c <= 0x17E) return (c % 2 == 0) ? c - 1 : c;
  if (c >= 0x3B1 && c <= 0x3C9 && c != 0x3C2) return c - 32;
  if (c >= 0x430 && c <= 0x44F) return c - 32;
  if (c >= 0x450 && c <= 0x45F) return c - 80;
  return c;
}

}  // namespace

std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const Decoded d = decode(text, i);
    if (d.valid) {
      encode(to_lower(d.cp), out);
    } else {
      out.push_back(text[i]);
    }
    i += d.len;
  }
  return out;
}

std::string upper_first(std::string_view text) {
  if (text.empty()) return {};
  const Decoded d = decode(text, 0);
  std::string out;
  out.reserve(text.size() + 1);
  if (d.valid) {
    encode(to_upper(d.cp), out);
  } else {
    out.push_back(text[0]);
  }
  out.append(text.substr(d.len));
  return out;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (const char ch : s) {
    if (is_space(static_cast<unsigned char>(ch))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(ch);
  }
  return out;
}

std::string normalize_title(std::string_view raw) {
  std::string_view t = raw;
  if (const auto pipe = t.find('|'); pipe != std::string_view::npos) {
    t = t.substr(0, pipe);
  }
  if (const auto hash = t.find('#'); hash != std::string_view::npos) {
    t = t.substr(0, hash);
  }
  std::string spaced(t);
  for (char& ch : spaced) {
    if (ch == '_') ch = ' ';
  }
  std::string collapsed = collapse_whitespace(spaced);
  std::string_view body = collapsed;
  if (!body.empty() && body.front() == ':') body = trim(body.substr(1));
  return upper_first(body);
}

std::size_t find_word(std::string_view haystack, std::string_view needle,
                      std::size_t from) {
  if (needle.empty()) return std::string_view::npos;
  while (from <= haystack.size()) {
    const auto pos = haystack.find(needle, from);
    if (pos == std::string_view::npos) return pos;
    const auto end = pos + needle.size();
    // A boundary is only required where the needle itself starts or ends
    // with a word character; "births]]" may be followed by anything.
    const bool left_ok =
        pos == 0 || !is_word_byte(static_cast<unsigned char>(needle.front())) ||
        !is_word_byte(static_cast<unsigned char>(haystack[pos - 1]));
    const bool right_ok =
        end == haystack.size() ||
        !is_word_byte(static_cast<unsigned char>(needle.back())) ||
        !is_word_byte(static_cast<unsigned char>(haystack[end]));
    if (left_ok && right_ok) return pos;
    from = pos + 1;
  }
  return std::string_view::npos;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (const char ch : data) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

std::string url_encode(std::string_view s) {
  std::string out;
  out.reserve(s.size() * 3);
  for (const char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
        (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' ||
        c == '~') {
      out.push_back(ch);
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  return out;
}

}  // namespace wikialumni

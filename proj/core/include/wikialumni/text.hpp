#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace wikialumni {

// Lowercases ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic letters in
// a UTF-8 string. Other code points and invalid byte sequences pass through.
std::string fold_case(std::string_view text);

// Uppercases the first code point (same coverage as fold_case).
std::string upper_first(std::string_view text);

// MediaWiki-style title normalization: pipe text and section anchors are
// dropped, underscores become spaces, runs of whitespace collapse, a leading
// ':' is removed and the first character is uppercased.
std::string normalize_title(std::string_view raw);

// Word characters for boundary checks: ASCII alphanumerics, '_' and any byte
// of a multi-byte UTF-8 sequence (so letters in non-Latin scripts count).
inline bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

inline bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string_view trim(std::string_view s);

// Collapses every whitespace run to a single ' ' and trims the ends.
std::string collapse_whitespace(std::string_view s);

// Finds `needle` in `haystack` at word boundaries, starting at `from`.
// Returns std::string_view::npos when absent.
std::size_t find_word(std::string_view haystack, std::string_view needle,
                      std::size_t from = 0);

// 64-bit FNV-1a; stable across platforms, used for cache keys and
// provenance hashes.
std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

// Percent-encodes everything except RFC 3986 unreserved characters.
std::string url_encode(std::string_view s);

}  // namespace wikialumni

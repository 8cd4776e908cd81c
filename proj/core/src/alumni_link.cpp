#include "wikialumni/alumni_link.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <tuple>

#include "wikialumni/errors.hpp"
#include "wikialumni/text.hpp"
#include "wikialumni/tsv.hpp"

namespace wikialumni {

std::vector<Sentence> split_sentences(std::string_view wikitext) {
  std::vector<Sentence> out;
  std::vector<std::pair<std::size_t, std::string>> links;
  std::vector<std::size_t> open;  // content start of each unclosed "[["
  std::size_t sentence_start = 0;

  auto flush = [&](std::size_t end) {
    const std::string_view text =
        trim(wikitext.substr(sentence_start, end - sentence_start));
    if (!text.empty()) {
      std::stable_sort(links.begin(), links.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      Sentence s;
      s.text = std::string(text);
      for (auto& [pos, target] : links) s.links.push_back(std::move(target));
      out.push_back(std::move(s));
    }
    links.clear();
    sentence_start = end;
  };

  std::size_t i = 0;
  while (i < wikitext.size()) {
    if (wikitext.compare(i, 2, "[[") == 0) {
      open.push_back(i + 2);
      i += 2;
    } else if (wikitext.compare(i, 2, "]]") == 0 && !open.empty()) {
      const std::size_t start = open.back();
      open.pop_back();
      std::string_view inner = wikitext.substr(start, i - start);
      if (const auto pipe = inner.find('|'); pipe != std::string_view::npos) {
        inner = inner.substr(0, pipe);
      }
      inner = trim(inner);
      if (!inner.empty()) links.emplace_back(start, std::string(inner));
      i += 2;
    } else if (wikitext[i] == '.' && open.empty()) {
      ++i;
      flush(i);
    } else {
      ++i;
    }
  }
  flush(wikitext.size());
  return out;
}

std::vector<AlumniRecord> match_alumni(const PersonPage& person,
                                       const Registry& registry,
                                       const MarkerDictionary& dict) {
  std::vector<std::pair<std::string, std::string>> triggers;  // folded, original
  triggers.reserve(dict.trigger_words.size());
  for (const auto& t : dict.trigger_words) {
    triggers.emplace_back(collapse_whitespace(fold_case(t)), t);
  }

  const WikiPage& page = person.page;
  std::vector<AlumniRecord> records;
  std::set<std::int64_t> seen;
  for (const auto& sentence : split_sentences(page.wikitext)) {
    if (sentence.links.empty()) continue;
    const std::string folded = collapse_whitespace(fold_case(sentence.text));
    const std::string* fired = nullptr;
    for (const auto& [folded_trigger, original] : triggers) {
      if (find_word(folded, folded_trigger) != std::string_view::npos) {
        fired = &original;
        break;
      }
    }
    if (fired == nullptr) continue;
    for (const auto& link : sentence.links) {
      const auto id = registry.resolve_link(link, page.lang);
      if (!id || !seen.insert(*id).second) continue;
      AlumniRecord rec;
      rec.university_id = *id;
      rec.university_name = registry.find(*id)->canonical_name;
      rec.person_link = page.title;
      rec.birth_year = person.birth_year;
      rec.lang = page.lang;
      rec.evidence = Evidence{*fired, collapse_whitespace(sentence.text)};
      records.push_back(std::move(rec));
    }
  }
  return records;
}

namespace {

auto record_key(const AlumniRecord& r) {
  return std::tie(r.university_id, r.person_link, r.lang);
}

template <typename T>
std::string optional_field(const std::optional<T>& v) {
  return v ? fmt::format("{}", *v) : std::string();
}

template <typename T>
std::optional<T> parse_optional(const std::string& field, std::string_view what,
                                const std::string& origin) {
  const std::string_view s = trim(field);
  if (s.empty()) return std::nullopt;
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError(fmt::format("{}: invalid {} '{}'", origin, what, field));
  }
  return value;
}

}  // namespace

std::vector<AlumniRecord> merge_records(std::vector<AlumniRecord> records) {
  std::vector<AlumniRecord> out;
  out.reserve(records.size());
  std::set<std::tuple<std::int64_t, std::string, std::string>> seen;
  for (auto& r : records) {
    if (seen.emplace(r.university_id, r.person_link, r.lang).second) {
      out.push_back(std::move(r));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const AlumniRecord& a, const AlumniRecord& b) {
                     return record_key(a) < record_key(b);
                   });
  return out;
}

std::string dataset_tsv(std::span<const AlumniRecord> records,
                        DatasetColumns columns) {
  const bool enriched = columns == DatasetColumns::kEnriched;
  std::string out = "university_id\tuniversity_name\tperson_link\tbirth_year\tlang";
  out += enriched ? "\tperson_link_en\tviews_total\n" : "\n";
  for (const auto& r : records) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}", r.university_id,
                       tsv_field(r.university_name), tsv_field(r.person_link),
                       optional_field(r.birth_year), tsv_field(r.lang));
    if (enriched) {
      out += fmt::format("\t{}\t{}",
                         tsv_field(r.person_link_en.value_or("")),
                         optional_field(r.views_total));
    }
    out.push_back('\n');
  }
  return out;
}

void write_dataset(std::span<const AlumniRecord> records,
                   const std::filesystem::path& path, DatasetColumns columns) {
  std::vector<AlumniRecord> merged =
      merge_records(std::vector<AlumniRecord>(records.begin(), records.end()));
  write_file_atomic(path, dataset_tsv(merged, columns));
}

std::vector<AlumniRecord> read_dataset(const std::filesystem::path& path) {
  const TsvTable table = TsvTable::read(path);
  const auto c_id = table.column("university_id");
  const auto c_name = table.column("university_name");
  const auto c_person = table.column("person_link");
  const auto c_year = table.column("birth_year");
  const auto c_lang = table.column("lang");
  const bool enriched =
      table.has_column("person_link_en") && table.has_column("views_total");
  std::vector<AlumniRecord> records;
  records.reserve(table.rows().size());
  for (const auto& row : table.rows()) {
    AlumniRecord r;
    const auto id =
        parse_optional<std::int64_t>(row[c_id], "university_id", table.origin());
    if (!id) {
      throw IoError(fmt::format("{}: empty university_id", table.origin()));
    }
    r.university_id = *id;
    r.university_name = row[c_name];
    r.person_link = row[c_person];
    r.birth_year = parse_optional<int>(row[c_year], "birth_year", table.origin());
    r.lang = row[c_lang];
    if (enriched) {
      const std::string& en = row[table.column("person_link_en")];
      if (!en.empty()) r.person_link_en = en;
      r.views_total = parse_optional<std::uint64_t>(
          row[table.column("views_total")], "views_total", table.origin());
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_evidence(std::span<const AlumniRecord> records,
                    const std::filesystem::path& path) {
  std::string out = "university_id\tperson_link\tlang\ttrigger\tsentence\n";
  for (const auto& r : records) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", r.university_id,
                       tsv_field(r.person_link), tsv_field(r.lang),
                       tsv_field(r.evidence.trigger),
                       tsv_field(r.evidence.sentence));
  }
  write_file_atomic(path, out);
}

void attach_evidence(std::vector<AlumniRecord>& records,
                     const std::filesystem::path& path) {
  const TsvTable table = TsvTable::read(path);
  const auto c_id = table.column("university_id");
  const auto c_person = table.column("person_link");
  const auto c_lang = table.column("lang");
  const auto c_trigger = table.column("trigger");
  const auto c_sentence = table.column("sentence");
  std::map<std::tuple<std::int64_t, std::string, std::string>, Evidence> index;
  for (const auto& row : table.rows()) {
    const auto id = parse_optional<std::int64_t>(row[c_id], "university_id",
                                                 table.origin());
    if (!id) continue;
    index.try_emplace({*id, row[c_person], row[c_lang]},
                      Evidence{row[c_trigger], row[c_sentence]});
  }
  for (auto& r : records) {
    auto it = index.find({r.university_id, r.person_link, r.lang});
    if (it != index.end()) r.evidence = it->second;
  }
}

}  // namespace wikialumni

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wikialumni/person_extract.hpp"
#include "wikialumni/registry.hpp"

namespace wikialumni {

struct Sentence {
  std::string text;
  // Link targets ("[[target|label]]" -> "target") in order of appearance.
  std::vector<std::string> links;
};

// Splits at every '.' outside "[[...]]" brackets; the full stop stays with
// its sentence. Sentences are trimmed and whitespace-only tails dropped.
std::vector<Sentence> split_sentences(std::string_view wikitext);

// Why a record was emitted; kept for audit sampling, not part of the dataset
// row schema.
struct Evidence {
  std::string trigger;
  std::string sentence;
};

struct AlumniRecord {
  std::int64_t university_id = 0;
  std::string university_name;
  std::string person_link;
  std::optional<std::string> person_link_en;
  std::optional<int> birth_year;
  std::string lang;
  std::optional<std::uint64_t> views_total;
  Evidence evidence;
};

// Every registry link in a sentence that contains at least one trigger word
// (case-insensitive, word-boundary) yields a record; one record per
// person-university pair, first firing sentence kept as evidence.
std::vector<AlumniRecord> match_alumni(const PersonPage& person,
                                       const Registry& registry,
                                       const MarkerDictionary& dict);

// Collapses (university_id, person_link, lang) duplicates keeping the first
// occurrence, then sorts by (university_id, person_link, lang).
std::vector<AlumniRecord> merge_records(std::vector<AlumniRecord> records);

enum class DatasetColumns {
  kBase,      // university_id, university_name, person_link, birth_year, lang
  kEnriched,  // + person_link_en, views_total
};

std::string dataset_tsv(std::span<const AlumniRecord> records,
                        DatasetColumns columns);

// Writes the merged, sorted dataset. Throws IoError on failure.
void write_dataset(std::span<const AlumniRecord> records,
                   const std::filesystem::path& path,
                   DatasetColumns columns = DatasetColumns::kBase);

// Reads either dataset flavor; enriched columns are optional.
std::vector<AlumniRecord> read_dataset(const std::filesystem::path& path);

// Evidence sidecar: university_id, person_link, lang, trigger, sentence.
void write_evidence(std::span<const AlumniRecord> records,
                    const std::filesystem::path& path);

// Fills AlumniRecord::evidence from a sidecar written by write_evidence.
void attach_evidence(std::vector<AlumniRecord>& records,
                     const std::filesystem::path& path);

}  // namespace wikialumni

#include "wikialumni/pipeline.hpp"

#include <fcntl.h>
#include <fmt/format.h>
#include <signal.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <ostream>
#include <regex>
#include <set>

#include "json.hpp"
#include "wikialumni/errors.hpp"
#include "wikialumni/person_extract.hpp"
#include "wikialumni/text.hpp"
#include "wikialumni/tsv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wikialumni {

// ---------------------------------------------------------------------------
// Configuration

PageviewMode parse_pageview_mode(std::string_view name) {
  if (name == "live") return PageviewMode::kLive;
  if (name == "fixture") return PageviewMode::kFixture;
  throw ConfigError(
      fmt::format("unknown pageview mode '{}' (expected live or fixture)", name));
}

namespace {

const char* mode_name(PageviewMode m) {
  return m == PageviewMode::kLive ? "live" : "fixture";
}

void check_keys(const json& obj, std::string_view where,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) {
    throw ConfigError(fmt::format("{}: expected an object", where));
  }
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
  }
}

template <typename T>
T get_as(const json& obj, const char* key, std::string_view where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("{}: '{}' is missing or has the wrong type",
                                  where, key));
  }
}

template <typename T>
std::optional<T> get_opt(const json& obj, const char* key,
                         std::string_view where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get_as<T>(obj, key, where);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

FilterSpec parse_filter(const json& j, std::size_t index) {
  const std::string where = fmt::format("filters[{}]", index);
  check_keys(j, where,
             {"name", "min_birth_year", "max_birth_year", "min_views_exclusive",
              "require_birth_year"});
  FilterSpec f;
  f.name = get_as<std::string>(j, "name", where);
  f.min_birth_year = get_opt<int>(j, "min_birth_year", where);
  f.max_birth_year = get_opt<int>(j, "max_birth_year", where);
  if (auto v = get_opt<std::int64_t>(j, "min_views_exclusive", where)) {
    if (*v < 0) {
      throw ConfigError(fmt::format("{}: min_views_exclusive must be >= 0", where));
    }
    f.min_views_exclusive = static_cast<std::uint64_t>(*v);
  }
  f.require_birth_year =
      get_opt<bool>(j, "require_birth_year", where).value_or(false);
  return f;
}

}  // namespace

PipelineConfig PipelineConfig::parse(std::string_view json_text,
                                     const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  check_keys(root, "config",
             {"languages", "universities", "dictionary_dir", "analysis_year",
              "max_birth_year", "output_dir", "pageviews", "correlation_method",
              "filters", "external_rankings", "max_unmapped_fraction", "top_k",
              "redirect_hop_cap", "audit"});
  PipelineConfig c;
  if (!root.contains("languages") || !root.at("languages").is_array()) {
    throw ConfigError("config: 'languages' must be a list");
  }
  std::size_t i = 0;
  for (const auto& lj : root.at("languages")) {
    const std::string where = fmt::format("languages[{}]", i++);
    check_keys(lj, where, {"code", "dump", "dump_date"});
    LanguageConfig lang;
    lang.code = get_as<std::string>(lj, "code", where);
    lang.dump = resolve(base_dir, get_as<std::string>(lj, "dump", where));
    lang.dump_date = get_as<std::string>(lj, "dump_date", where);
    c.languages.push_back(std::move(lang));
  }
  c.universities_file =
      resolve(base_dir, get_as<std::string>(root, "universities", "config"));
  c.dictionary_dir =
      resolve(base_dir, get_as<std::string>(root, "dictionary_dir", "config"));
  c.analysis_year =
      get_opt<int>(root, "analysis_year", "config").value_or(2017);
  c.max_birth_year = get_opt<int>(root, "max_birth_year", "config");
  c.output_dir = resolve(
      base_dir, get_opt<std::string>(root, "output_dir", "config").value_or("out"));
  c.cache_dir = c.output_dir / "cache";

  if (root.contains("pageviews")) {
    const json& pv = root.at("pageviews");
    check_keys(pv, "pageviews",
               {"mode", "views_fixture", "links_fixture", "cache_dir",
                "rate_limit", "retries", "backoff_ms", "parallelism", "agent",
                "user_agent", "pageviews_url", "langlinks_url"});
    c.mode = parse_pageview_mode(
        get_opt<std::string>(pv, "mode", "pageviews").value_or("fixture"));
    if (auto p = get_opt<std::string>(pv, "views_fixture", "pageviews")) {
      c.views_fixture = resolve(base_dir, *p);
    }
    if (auto p = get_opt<std::string>(pv, "links_fixture", "pageviews")) {
      c.links_fixture = resolve(base_dir, *p);
    }
    if (auto p = get_opt<std::string>(pv, "cache_dir", "pageviews")) {
      c.cache_dir = resolve(base_dir, *p);
    }
    c.rate_limit = get_opt<double>(pv, "rate_limit", "pageviews").value_or(1.0);
    c.live.retries = get_opt<int>(pv, "retries", "pageviews").value_or(3);
    c.live.backoff = std::chrono::milliseconds(
        get_opt<int>(pv, "backoff_ms", "pageviews").value_or(500));
    const int par = get_opt<int>(pv, "parallelism", "pageviews").value_or(1);
    if (par < 1) throw ConfigError("pageviews: parallelism must be >= 1");
    c.parallelism = static_cast<unsigned>(par);
    if (auto v = get_opt<std::string>(pv, "agent", "pageviews")) c.live.agent = *v;
    if (auto v = get_opt<std::string>(pv, "user_agent", "pageviews")) {
      c.user_agent = *v;
    }
    if (auto v = get_opt<std::string>(pv, "pageviews_url", "pageviews")) {
      c.live.pageviews_url = *v;
    }
    if (auto v = get_opt<std::string>(pv, "langlinks_url", "pageviews")) {
      c.live.langlinks_url = *v;
    }
  }

  if (auto m = get_opt<std::string>(root, "correlation_method", "config")) {
    c.correlation_method = parse_correlation_method(*m);
  }
  if (root.contains("filters")) {
    std::size_t k = 0;
    for (const auto& fj : root.at("filters")) {
      c.filters.push_back(parse_filter(fj, k++));
    }
  }
  if (c.filters.empty()) {
    FilterSpec full;
    full.name = "full dataset";
    c.filters.push_back(full);
  }
  if (root.contains("external_rankings")) {
    std::size_t k = 0;
    for (const auto& ej : root.at("external_rankings")) {
      const std::string where = fmt::format("external_rankings[{}]", k++);
      check_keys(ej, where, {"name", "file", "mapping"});
      ExternalRankingConfig ext;
      ext.name = get_as<std::string>(ej, "name", where);
      ext.file = resolve(base_dir, get_as<std::string>(ej, "file", where));
      if (auto m = get_opt<std::string>(ej, "mapping", where)) {
        ext.mapping = resolve(base_dir, *m);
      }
      c.external_rankings.push_back(std::move(ext));
    }
  }
  c.max_unmapped_fraction =
      get_opt<double>(root, "max_unmapped_fraction", "config")
          .value_or(kDefaultMaxUnmappedFraction);
  if (auto k = get_opt<int>(root, "top_k", "config")) {
    if (*k < 1) throw ConfigError("config: top_k must be >= 1");
    c.top_k = static_cast<std::size_t>(*k);
  }
  c.redirect_hop_cap = get_opt<int>(root, "redirect_hop_cap", "config")
                           .value_or(kDefaultRedirectHopCap);
  if (root.contains("audit")) {
    const json& aj = root.at("audit");
    check_keys(aj, "audit", {"rate", "seed"});
    c.audit.rate = get_opt<double>(aj, "rate", "audit").value_or(c.audit.rate);
    c.audit.seed =
        get_opt<std::uint64_t>(aj, "seed", "audit").value_or(c.audit.seed);
  }
  c.provenance_hash = hex64(fnv1a64(json_text));
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& file) {
  std::string text;
  try {
    text = read_file(file);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse(text, fs::absolute(file).parent_path());
}

void PipelineConfig::validate() const {
  if (languages.empty()) throw ConfigError("config: no languages configured");
  static const std::regex kLangCode("[a-z][a-z0-9-]*");
  static const std::regex kIsoDate("[0-9]{4}-[0-9]{2}-[0-9]{2}");
  std::set<std::string> seen;
  for (const auto& l : languages) {
    if (!std::regex_match(l.code, kLangCode)) {
      throw ConfigError(fmt::format("invalid language code '{}'", l.code));
    }
    if (!seen.insert(l.code).second) {
      throw ConfigError(fmt::format("language '{}' configured twice", l.code));
    }
    if (l.dump.empty()) {
      throw ConfigError(fmt::format("language '{}' has no dump path", l.code));
    }
    if (!std::regex_match(l.dump_date, kIsoDate)) {
      throw ConfigError(fmt::format(
          "language '{}': dump_date '{}' is not an ISO date (YYYY-MM-DD)", l.code,
          l.dump_date));
    }
    const auto dict = dictionary_path(dictionary_dir, l.code);
    if (!fs::is_regular_file(dict)) {
      throw ConfigError(fmt::format("missing dictionary for language '{}': {}",
                                    l.code, dict.string()));
    }
  }
  if (mode == PageviewMode::kLive && analysis_year < 2015) {
    throw ConfigError(fmt::format(
        "analysis_year {} predates the pageview API (live mode needs >= 2015)",
        analysis_year));
  }
  if (mode == PageviewMode::kFixture && !views_fixture) {
    throw ConfigError("fixture mode needs pageviews.views_fixture");
  }
  if (!(rate_limit > 0)) throw ConfigError("pageviews.rate_limit must be > 0");
  if (live.retries < 0) throw ConfigError("pageviews.retries must be >= 0");
  if (max_birth_year && *max_birth_year < kMinBirthYear) {
    throw ConfigError("max_birth_year is below the minimum birth year");
  }
  std::set<std::string> names;
  for (const auto& f : filters) {
    f.validate();
    if (!names.insert(f.name).second) {
      throw ConfigError(fmt::format("filter name '{}' used twice", f.name));
    }
  }
  for (const auto& e : external_rankings) {
    if (!names.insert(e.name).second) {
      throw ConfigError(fmt::format("ranking name '{}' used twice", e.name));
    }
  }
  if (!(max_unmapped_fraction >= 0 && max_unmapped_fraction <= 1)) {
    throw ConfigError("max_unmapped_fraction must lie in [0, 1]");
  }
  if (!(audit.rate > 0 && audit.rate <= 1)) {
    throw ConfigError("audit.rate must lie in (0, 1]");
  }
  if (redirect_hop_cap < 1) throw ConfigError("redirect_hop_cap must be >= 1");
}

std::vector<std::string> PipelineConfig::language_codes() const {
  std::vector<std::string> out;
  for (const auto& l : languages) out.push_back(l.code);
  return out;
}

int PipelineConfig::effective_max_birth_year() const {
  return max_birth_year.value_or(current_year());
}

void apply_env_overrides(PipelineConfig& config) {
  if (const char* dir = std::getenv("WIKIALUMNI_CACHE_DIR"); dir && *dir) {
    config.cache_dir = dir;
  }
  if (const char* rate = std::getenv("WIKIALUMNI_RATE_LIMIT"); rate && *rate) {
    char* end = nullptr;
    const double value = std::strtod(rate, &end);
    if (end == rate || *end != '\0') {
      throw ConfigError(fmt::format("WIKIALUMNI_RATE_LIMIT='{}' is not a number", rate));
    }
    config.rate_limit = value;
  }
}

void apply_overrides(PipelineConfig& config, const ConfigOverrides& o) {
  std::string mixed;
  if (o.output_dir) {
    // A cache that followed the old output dir follows the new one.
    if (config.cache_dir.empty() || config.cache_dir == config.output_dir / "cache") {
      config.cache_dir = *o.output_dir / "cache";
    }
    config.output_dir = *o.output_dir;
  }
  if (o.cache_dir) config.cache_dir = *o.cache_dir;
  if (o.analysis_year) {
    config.analysis_year = *o.analysis_year;
    mixed += fmt::format("year={};", *o.analysis_year);
  }
  if (o.mode) {
    config.mode = *o.mode;
    mixed += fmt::format("mode={};", mode_name(*o.mode));
  }
  if (o.rate_limit) config.rate_limit = *o.rate_limit;
  if (o.correlation_method) {
    config.correlation_method = *o.correlation_method;
    mixed += fmt::format("method={};",
                         correlation_method_name(*o.correlation_method));
  }
  // Directory and rate overrides do not change results, so they stay out of
  // the provenance hash.
  if (!mixed.empty()) {
    config.provenance_hash =
        hex64(fnv1a64(mixed, fnv1a64(config.provenance_hash)));
  }
}

// ---------------------------------------------------------------------------
// Layout and locking

fs::path OutputLayout::redirects(std::string_view lang) const {
  return root / "ingest" / "redirects" / fmt::format("{}.tsv", lang);
}

fs::path OutputLayout::unresolved_redirects(std::string_view lang) const {
  return root / "ingest" / "redirects" / fmt::format("{}.unresolved.tsv", lang);
}

fs::path OutputLayout::persons(std::string_view lang) const {
  return root / "persons" / std::string(lang);
}

OutputLock::OutputLock(const fs::path& output_dir)
    : path_(output_dir / ".wikialumni.lock") {
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) {
    throw IoError(fmt::format("cannot create output directory {}: {}",
                              output_dir.string(), ec.message()));
  }
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd >= 0) {
      const std::string pid = std::to_string(::getpid());
      [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
      ::close(fd);
      return;
    }
    if (errno != EEXIST) {
      throw IoError(fmt::format("cannot create lock {}: {}", path_.string(),
                                std::strerror(errno)));
    }
    std::string holder;
    try {
      holder = std::string(trim(read_file(path_)));
    } catch (const IoError&) {
    }
    const long pid = holder.empty() ? 0 : std::strtol(holder.c_str(), nullptr, 10);
    const bool alive = pid > 0 && (::kill(static_cast<pid_t>(pid), 0) == 0 ||
                                   errno == EPERM);
    if (alive) {
      throw Error(fmt::format(
          "output directory {} is in use by process {} (lock file {})",
          output_dir.string(), pid, path_.string()));
    }
    fs::remove(path_, ec);
  }
  throw Error(fmt::format("cannot acquire lock {}", path_.string()));
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void log(RunContext& ctx, std::string_view message) {
  if (ctx.log != nullptr) *ctx.log << message << '\n';
}

std::string provenance(const PipelineConfig& c) {
  std::string dates;
  for (const auto& l : c.languages) {
    dates += fmt::format("{}{}={}", dates.empty() ? "" : ",", l.code, l.dump_date);
  }
  return fmt::format(
      "# config_hash\t{}\n# analysis_year\t{}\n# dump_dates\t{}\n"
      "# pageview_mode\t{}\n# correlation_method\t{}\n",
      c.provenance_hash, c.analysis_year, dates, mode_name(c.mode),
      correlation_method_name(c.correlation_method));
}

struct DumpFingerprint {
  std::string path;
  std::uintmax_t bytes = 0;
  std::int64_t mtime = 0;
};

DumpFingerprint fingerprint(const fs::path& dump) {
  DumpFingerprint fp;
  fp.path = dump.string();
  std::error_code ec;
  fp.bytes = fs::file_size(dump, ec);
  if (ec) fp.bytes = 0;
  const auto t = fs::last_write_time(dump, ec);
  if (!ec) {
    fp.mtime = std::chrono::duration_cast<std::chrono::nanoseconds>(
                   std::chrono::file_clock::to_sys(t).time_since_epoch())
                   .count();
  }
  return fp;
}

json read_manifest(const OutputLayout& layout) {
  if (!fs::exists(layout.manifest())) return json::object();
  try {
    return json::parse(read_file(layout.manifest()));
  } catch (const json::exception& e) {
    throw IoError(fmt::format("{}: unreadable manifest: {}",
                              layout.manifest().string(), e.what()));
  }
}

void write_manifest(const OutputLayout& layout, const json& manifest) {
  write_file_atomic(layout.manifest(), manifest.dump(2) + "\n");
}

bool manifest_current(const json& entry, const LanguageConfig& lang,
                      const DumpFingerprint& fp) {
  return entry.is_object() && entry.value("status", "") == "complete" &&
         entry.value("dump", "") == fp.path &&
         entry.value("dump_bytes", std::uintmax_t{0}) == fp.bytes &&
         entry.value("dump_mtime", std::int64_t{0}) == fp.mtime &&
         entry.value("dump_date", "") == lang.dump_date;
}

json ingest_language(const PipelineConfig& config, const LanguageConfig& lang,
                     const MarkerDictionary& dict, const OutputLayout& layout,
                     RunContext& ctx) {
  const fs::path person_dir = layout.persons(lang.code);
  std::error_code ec;
  fs::remove_all(person_dir, ec);
  fs::create_directories(person_dir, ec);
  if (ec) {
    throw IoError(fmt::format("cannot create {}: {}", person_dir.string(),
                              ec.message()));
  }
  const YearRange years{kMinBirthYear, config.effective_max_birth_year()};
  RedirectCollector redirects;
  std::size_t pages = 0, articles = 0, persons = 0, with_year = 0;
  PageStream stream(DumpSource{lang.dump, lang.code, lang.dump_date});
  while (auto page = stream.next()) {
    ++pages;
    redirects.add(*page);
    if (page->is_redirect() || page->ns != 0) continue;
    ++articles;
    if (auto person = extract_person(*page, dict, years)) {
      persist_person(*person, person_dir);
      ++persons;
      if (person->birth_year) ++with_year;
    }
  }
  const RedirectResolution resolved = redirects.resolve(config.redirect_hop_cap);
  std::string redirect_tsv = "alias\ttarget\n";
  for (const auto& [alias, target] : resolved.canonical) {
    redirect_tsv += fmt::format("{}\t{}\n", tsv_field(alias), tsv_field(target));
  }
  write_file_atomic(layout.redirects(lang.code), redirect_tsv);
  std::string unresolved_tsv = "title\n";
  for (const auto& t : resolved.unresolvable) unresolved_tsv += tsv_field(t) + "\n";
  write_file_atomic(layout.unresolved_redirects(lang.code), unresolved_tsv);

  const DumpFingerprint fp = fingerprint(lang.dump);
  json entry = {
      {"status", stream.truncated() ? "truncated" : "complete"},
      {"dump", fp.path},
      {"dump_bytes", fp.bytes},
      {"dump_mtime", fp.mtime},
      {"dump_date", lang.dump_date},
      {"compression", compression_name(stream.compression())},
      {"pages", pages},
      {"articles", articles},
      {"redirects", redirects.redirect_count()},
      {"unresolvable_redirects", resolved.unresolvable.size()},
      {"persons", persons},
      {"persons_with_birth_year", with_year},
  };
  if (stream.truncated()) {
    entry["error"] = stream.truncation_message();
    log(ctx, fmt::format("warning: {}", stream.truncation_message()));
  }
  log(ctx, fmt::format("ingest {}: {} pages, {} articles, {} persons ({} with "
                       "birth year), {} redirects",
                       lang.code, pages, articles, persons, with_year,
                       redirects.redirect_count()));
  return entry;
}

std::map<std::string, RedirectMap> load_redirect_maps(
    const PipelineConfig& config, const OutputLayout& layout) {
  std::map<std::string, RedirectMap> maps;
  for (const auto& code : config.language_codes()) {
    const fs::path p = layout.redirects(code);
    if (!fs::exists(p)) continue;
    const TsvTable table = TsvTable::read(p);
    const auto c_alias = table.column("alias");
    const auto c_target = table.column("target");
    RedirectMap& m = maps[code];
    for (const auto& row : table.rows()) m.emplace(row[c_alias], row[c_target]);
  }
  return maps;
}

Registry load_registry(const PipelineConfig& config, const OutputLayout& layout) {
  return Registry::load(config.universities_file,
                        load_redirect_maps(config, layout));
}

void require_file(const fs::path& p, std::string_view producer) {
  if (!fs::exists(p)) {
    throw ConfigError(fmt::format("{} not found; run `wikialumni {}` first",
                                  p.string(), producer));
  }
}

}  // namespace

int cmd_ingest(const PipelineConfig& config, RunContext& ctx) {
  config.validate();
  const auto dicts = load_dictionaries(config.dictionary_dir, config.language_codes());
  OutputLock lock(config.output_dir);
  const OutputLayout layout{config.output_dir};
  json manifest = read_manifest(layout);
  manifest["config_hash"] = config.provenance_hash;
  if (!manifest.contains("languages")) manifest["languages"] = json::object();

  int exit_code = kExitOk;
  std::size_t ingested = 0;
  for (const auto& lang : config.languages) {
    const DumpFingerprint fp = fingerprint(lang.dump);
    json& entry = manifest["languages"][lang.code];
    if (manifest_current(entry, lang, fp)) {
      log(ctx, fmt::format("ingest {}: up to date, skipping", lang.code));
      continue;
    }
    ++ingested;
    try {
      entry = ingest_language(config, lang, dicts.at(lang.code), layout, ctx);
      if (entry.value("status", "") != "complete") exit_code = kExitPartial;
    } catch (const Error& e) {
      log(ctx, fmt::format("error: ingest {} failed: {}", lang.code, e.what()));
      entry = {{"status", "failed"}, {"dump", fp.path}, {"error", e.what()}};
      exit_code = kExitPartial;
    }
    write_manifest(layout, manifest);
  }
  if (ingested == 0) {
    log(ctx, "ingest: manifest complete for every language, nothing to do");
  }
  write_manifest(layout, manifest);
  return exit_code;
}

int cmd_extract(const PipelineConfig& config, RunContext& ctx) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  require_file(layout.manifest(), "ingest");
  const auto dicts = load_dictionaries(config.dictionary_dir, config.language_codes());
  OutputLock lock(config.output_dir);
  const json manifest = read_manifest(layout);
  const Registry registry = load_registry(config, layout);

  int exit_code = kExitOk;
  std::vector<AlumniRecord> records;
  std::string report = provenance(config) + "lang\tperson_files\tskipped\trecords\n";
  for (const auto& lang : config.languages) {
    const json entry = manifest.contains("languages")
                           ? manifest["languages"].value(lang.code, json::object())
                           : json::object();
    const std::string status = entry.value("status", "missing");
    if (status != "complete" && status != "truncated") {
      log(ctx, fmt::format("warning: language {} has ingest status '{}'; skipped",
                           lang.code, status));
      exit_code = kExitPartial;
      continue;
    }
    const fs::path dir = layout.persons(lang.code);
    std::vector<fs::path> files;
    if (fs::exists(dir)) {
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".xml") {
          files.push_back(e.path());
        }
      }
    }
    std::sort(files.begin(), files.end());
    std::size_t skipped = 0, lang_records = 0;
    const MarkerDictionary& dict = dicts.at(lang.code);
    for (const auto& file : files) {
      try {
        PersonPage person = read_person_file(file, lang.code);
        person.marker_hit = detect_person(person.page, dict).value_or("");
        auto matched = match_alumni(person, registry, dict);
        lang_records += matched.size();
        for (auto& r : matched) records.push_back(std::move(r));
      } catch (const Error& e) {
        ++skipped;
        log(ctx, fmt::format("warning: skipping {}: {}", file.string(), e.what()));
      }
    }
    if (skipped > 0) exit_code = kExitPartial;
    report += fmt::format("{}\t{}\t{}\t{}\n", lang.code, files.size(), skipped,
                          lang_records);
    log(ctx, fmt::format("extract {}: {} person files, {} skipped, {} records",
                         lang.code, files.size(), skipped, lang_records));
  }
  records = merge_records(std::move(records));
  write_file_atomic(layout.dataset(), dataset_tsv(records, DatasetColumns::kBase));
  write_evidence(records, layout.evidence());
  write_file_atomic(layout.extract_report(), report);
  log(ctx, fmt::format("extract: {} alumni records -> {}", records.size(),
                       layout.dataset().string()));
  return exit_code;
}

int cmd_views(const PipelineConfig& config, RunContext& ctx) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  require_file(layout.dataset(), "extract");
  OutputLock lock(config.output_dir);
  const Registry registry = load_registry(config, layout);
  std::vector<AlumniRecord> records = read_dataset(layout.dataset());

  std::unique_ptr<PageViewBackend> backend;
  std::unique_ptr<HttpTransport> transport;
  std::unique_ptr<SteadyClock> steady;
  std::unique_ptr<RateLimiter> limiter;
  std::unique_ptr<DiskCache> cache;
  if (config.mode == PageviewMode::kFixture) {
    backend = std::make_unique<FixtureBackend>(
        FixtureBackend::load(*config.views_fixture, config.links_fixture));
  } else {
    Clock* clock = ctx.clock;
    if (clock == nullptr) {
      steady = std::make_unique<SteadyClock>();
      clock = steady.get();
    }
    transport = ctx.transport_factory ? ctx.transport_factory()
                                      : make_https_transport(config.user_agent);
    limiter = std::make_unique<RateLimiter>(config.rate_limit, *clock);
    backend = std::make_unique<LiveBackend>(config.live, *transport, *limiter,
                                            *clock);
    cache = std::make_unique<DiskCache>(config.cache_dir);
  }
  PageViewService service(*backend, cache.get());

  const EnrichReport enriched =
      enrich_records(records, service, config.analysis_year, config.parallelism);
  const auto universities =
      university_views(registry, service, config.analysis_year);

  write_file_atomic(layout.views_dataset(),
                    dataset_tsv(merge_records(records), DatasetColumns::kEnriched));
  std::string uv_tsv = "university_id\tuniversity_name\tviews_total\n";
  std::size_t unresolved_universities = 0;
  std::string flags = "kind\tuniversity_id\tperson_link\tlang\tunresolved\treason\n";
  for (const auto& f : enriched.flags) {
    flags += fmt::format("record\t{}\t{}\t{}\t{}\t{}\n", f.university_id,
                         tsv_field(f.person_link), f.lang, f.unresolved ? 1 : 0,
                         tsv_field(f.reason));
  }
  for (const auto& u : universities) {
    uv_tsv += fmt::format("{}\t{}\t{}\n", u.university_id, tsv_field(u.name),
                          u.total ? std::to_string(*u.total) : "");
    if (!u.total) ++unresolved_universities;
    for (const auto& note : u.notes) {
      flags += fmt::format("university\t{}\t\t\t{}\t{}\n", u.university_id,
                           u.total ? 0 : 1, tsv_field(note));
    }
  }
  write_file_atomic(layout.university_views(), uv_tsv);
  write_file_atomic(layout.view_flags(), flags);

  log(ctx, fmt::format("views {}: {} records enriched, {} flagged, {} unresolved; "
                       "{} universities ({} unresolved); {} backend requests",
                       mode_name(config.mode), records.size(), enriched.flags.size(),
                       enriched.unresolved, universities.size(),
                       unresolved_universities, service.backend_requests()));
  return enriched.unresolved + unresolved_universities > 0 ? kExitPartial : kExitOk;
}

namespace {

std::string fixed(double v, int digits) {
  return fmt::format("{:.{}f}", v, digits);
}

std::string opt_corr(const std::optional<Correlation>& c) {
  return c ? fmt::format("{:.12f}", c->coefficient) : "NA";
}

}  // namespace

int cmd_report(const PipelineConfig& config, RunContext& ctx) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  require_file(layout.views_dataset(), "views");
  require_file(layout.university_views(), "views");
  OutputLock lock(config.output_dir);

  const std::vector<AlumniRecord> all = read_dataset(layout.views_dataset());
  std::vector<AlumniRecord> usable;
  for (const auto& r : all) {
    if (r.views_total) usable.push_back(r);
  }
  const std::size_t excluded = all.size() - usable.size();
  const Registry registry = load_registry(config, layout);

  std::vector<Ranking> rankings;
  std::string stats_tsv =
      "filter\tn_alumni\tn_universities\tmean_views\tmedian_views\tstddev_views\n";
  std::string top_tsv =
      "filter\tposition\tuniversity_name\tperson_link\tbirth_year\tviews\n";
  for (const auto& f : config.filters) {
    const auto kept = apply_filter(usable, f);
    const DescriptiveStats s = describe(kept);
    stats_tsv += fmt::format(
        "{}\t{}\t{}\t{}\t{}\t{}\n", tsv_field(f.name), s.n_alumni,
        s.n_universities, s.moments_defined ? fixed(s.mean_views, 3) : "NA",
        s.moments_defined ? fixed(s.median_views, 3) : "NA",
        s.moments_defined ? fixed(s.stddev_views, 3) : "NA");
    rankings.push_back(rank_universities(usable, f));
    std::size_t pos = 0;
    for (const auto& r : top_alumni(usable, f, config.top_k)) {
      top_tsv += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", tsv_field(f.name), ++pos,
                             tsv_field(r.university_name), tsv_field(r.person_link),
                             r.birth_year ? std::to_string(*r.birth_year) : "",
                             *r.views_total);
    }
  }

  std::string unmapped_tsv = "ranking\tname\n";
  for (const auto& ext : config.external_rankings) {
    ExternalRankingLoad load = load_external_ranking(
        ext.file, ext.mapping, ext.name, registry, config.max_unmapped_fraction);
    for (const auto& name : load.unmapped) {
      unmapped_tsv += fmt::format("{}\t{}\n", tsv_field(ext.name), tsv_field(name));
      log(ctx, fmt::format("warning: {}: unmapped name '{}'", ext.name, name));
    }
    rankings.push_back(std::move(load.ranking));
  }

  // University page ranking from the views stage.
  std::map<std::int64_t, std::uint64_t> page_totals;
  std::map<std::int64_t, std::string> page_names;
  {
    const TsvTable uv = TsvTable::read(layout.university_views());
    const auto c_id = uv.column("university_id");
    const auto c_name = uv.column("university_name");
    const auto c_total = uv.column("views_total");
    for (const auto& row : uv.rows()) {
      if (row[c_total].empty()) continue;
      const std::int64_t id = std::stoll(row[c_id]);
      page_totals[id] = std::stoull(row[c_total]);
      page_names[id] = row[c_name];
    }
  }
  const Ranking page_ranking = ranking_from_totals(
      page_totals, page_names, ScoreKind::kUniversityPageViews, "university pages");

  std::string rankings_tsv = "ranking\tkind\tposition\tuniversity_id\tuniversity_name\tscore\n";
  auto add_ranking_rows = [&rankings_tsv](const Ranking& r) {
    std::size_t pos = 0;
    for (const auto& e : r.entries) {
      rankings_tsv += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", tsv_field(r.label),
                                  score_kind_name(r.kind), ++pos, e.id,
                                  tsv_field(e.name), e.score);
    }
  };
  for (const auto& r : rankings) add_ranking_rows(r);
  add_ranking_rows(page_ranking);

  std::optional<CorrelationMatrix> matrix;
  if (rankings.size() >= 2) {
    matrix = correlation_matrix(rankings, config.correlation_method);
  }

  // Alumni views (first filter) against the universities' own pages, both
  // on ranks and on raw sums.
  std::string comparison_tsv = "alumni_ranking\tmethod\tcoefficient\tn\n";
  std::string comparison_text;
  for (const auto method :
       {CorrelationMethod::kSpearman, CorrelationMethod::kPearsonOnScores}) {
    std::optional<Correlation> c;
    std::string note;
    try {
      c = correlate(rankings.front(), page_ranking, method);
    } catch (const CorrelationError& e) {
      note = e.what();
    }
    comparison_tsv += fmt::format("{}\t{}\t{}\t{}\n", tsv_field(rankings.front().label),
                                  correlation_method_name(method), opt_corr(c),
                                  c ? c->n : 0);
    comparison_text += fmt::format(
        "  {:<18} {}{}\n", correlation_method_name(method),
        c ? fmt::format("{:.2f} (n={})", c->coefficient, c->n) : "unavailable",
        note.empty() ? "" : " (" + note + ")");
  }

  const std::string header = provenance(config);
  const fs::path dir = layout.report_dir();
  write_file_atomic(dir / "stats.tsv", header + stats_tsv);
  write_file_atomic(dir / "top_alumni.tsv", header + top_tsv);
  write_file_atomic(dir / "rankings.tsv", header + rankings_tsv);
  write_file_atomic(dir / "external_unmapped.tsv", header + unmapped_tsv);
  write_file_atomic(dir / "university_comparison.tsv", header + comparison_tsv);
  if (matrix) {
    write_file_atomic(dir / "matrix.tsv", header + matrix->to_tsv());
  }

  std::string text = header;
  text += fmt::format("\nRecords: {} with views, {} excluded for missing views\n",
                      usable.size(), excluded);
  text += "\nDescriptive statistics\n";
  text += stats_tsv;
  for (std::size_t i = 0; i < config.filters.size(); ++i) {
    text += fmt::format("\nTop {} universities: {}\n", config.top_k,
                        rankings[i].label);
    for (std::size_t k = 0; k < std::min(config.top_k, rankings[i].entries.size()); ++k) {
      const auto& e = rankings[i].entries[k];
      text += fmt::format("{:>4}  {}  {}\n", k + 1, e.name, e.score);
    }
  }
  text += fmt::format("\nTop {} universities: {}\n", config.top_k, page_ranking.label);
  for (std::size_t k = 0; k < std::min(config.top_k, page_ranking.entries.size()); ++k) {
    const auto& e = page_ranking.entries[k];
    text += fmt::format("{:>4}  {}  {}\n", k + 1, e.name, e.score);
  }
  if (matrix) {
    text += fmt::format("\nCorrelation matrix ({})\n", correlation_method_name(matrix->method));
    text += matrix->render_lower_triangular();
    write_file_atomic(dir / "matrix.txt", header + matrix->render_lower_triangular());
  }
  text += fmt::format("\nAlumni views ({}) vs university page views\n",
                      rankings.front().label);
  text += comparison_text;
  write_file_atomic(dir / "report.txt", text);
  log(ctx, fmt::format("report: {} rankings, {} records -> {}", rankings.size() + 1,
                       usable.size(), dir.string()));
  return kExitOk;
}

int cmd_audit(const PipelineConfig& config, RunContext& ctx) {
  config.validate();
  const OutputLayout layout{config.output_dir};
  require_file(layout.dataset(), "extract");
  OutputLock lock(config.output_dir);
  const fs::path source =
      fs::exists(layout.views_dataset()) ? layout.views_dataset() : layout.dataset();
  std::vector<AlumniRecord> records = read_dataset(source);
  if (fs::exists(layout.evidence())) attach_evidence(records, layout.evidence());
  const double rate = ctx.audit_rate.value_or(config.audit.rate);
  const std::uint64_t seed = ctx.audit_seed.value_or(config.audit.seed);
  if (!(rate > 0 && rate <= 1)) throw ConfigError("audit rate must lie in (0, 1]");
  const auto sample = audit_sample(records, rate, seed);
  write_file_atomic(layout.audit_sample(),
                    provenance(config) +
                        fmt::format("# audit_rate\t{}\n# audit_seed\t{}\n", rate, seed) +
                        audit_tsv(sample));
  log(ctx, fmt::format("audit: sampled {} of {} records -> {}", sample.size(),
                       records.size(), layout.audit_sample().string()));
  return kExitOk;
}

int run_command(Command command, const PipelineConfig& config, RunContext& ctx) {
  try {
    switch (command) {
      case Command::kIngest:
        return cmd_ingest(config, ctx);
      case Command::kExtract:
        return cmd_extract(config, ctx);
      case Command::kViews:
        return cmd_views(config, ctx);
      case Command::kReport:
        return cmd_report(config, ctx);
      case Command::kAudit:
        return cmd_audit(config, ctx);
    }
  } catch (const ConfigError& e) {
    log(ctx, fmt::format("config error: {}", e.what()));
    return kExitConfigError;
  } catch (const RegistryError& e) {
    log(ctx, fmt::format("data error: {}", e.what()));
    return kExitConfigError;
  } catch (const std::exception& e) {
    log(ctx, fmt::format("error: {}", e.what()));
    return kExitPartial;
  }
  return kExitPartial;
}

}  // namespace wikialumni

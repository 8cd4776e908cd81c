#include "support.hpp"

#include <unistd.h>

#include <atomic>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace testsupport {

fs::path data_dir() { return WIKIALUMNI_TEST_DATA; }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("wikialumni-test-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string dump_header() {
  return "<mediawiki xmlns=\"http://www.mediawiki.org/xml/export-0.10/\" "
         "version=\"0.10\" xml:lang=\"en\">\n"
         "  <siteinfo>\n    <sitename>Wikipedia</sitename>\n"
         "    <namespaces>\n"
         "      <namespace key=\"0\" case=\"first-letter\" />\n"
         "      <namespace key=\"14\" case=\"first-letter\">Category</namespace>\n"
         "    </namespaces>\n  </siteinfo>\n";
}

std::string dump_footer() { return "</mediawiki>\n"; }

std::string page_xml(const DumpPage& p) {
  std::string out = "  <page>\n    <title>" + xml_escape(p.title) + "</title>\n";
  out += "    <ns>" + std::to_string(p.ns) + "</ns>\n";
  out += "    <id>" + std::to_string(p.id) + "</id>\n";
  if (p.redirect) out += "    <redirect title=\"" + xml_escape(*p.redirect) + "\" />\n";
  out += "    <revision>\n      <id>" + std::to_string(p.id * 10 + 1) +
         "</id>\n      <model>wikitext</model>\n"
         "      <text xml:space=\"preserve\">" +
         xml_escape(p.text) + "</text>\n    </revision>\n  </page>\n";
  return out;
}

std::string dump_xml(const std::vector<DumpPage>& pages) {
  std::string out = dump_header();
  for (const auto& p : pages) out += page_xml(p);
  return out + dump_footer();
}

std::size_t count_page_tags(std::string_view xml) {
  std::size_t n = 0;
  for (std::size_t pos = xml.find("<page"); pos != std::string_view::npos;
       pos = xml.find("<page", pos + 5)) {
    const char next = pos + 5 < xml.size() ? xml[pos + 5] : '\0';
    if (next == '>' || next == ' ') ++n;
  }
  return n;
}

std::vector<wikialumni::WikiPage> parse_dump_string(std::string xml,
                                                    std::string lang) {
  wikialumni::PageStream stream(std::make_unique<std::istringstream>(std::move(xml)),
                                std::move(lang), "<test>");
  std::vector<wikialumni::WikiPage> pages;
  while (auto p = stream.next()) pages.push_back(std::move(*p));
  return pages;
}

std::optional<int> oracle_birth_year(std::string_view text, int lo, int hi) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
                       c == '\f' || c == '\v';
    if (space) {
      if (!current.empty()) words.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) words.push_back(current);
  if (words.size() > 1000) words.resize(1000);

  auto alnum = [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  };
  for (const auto& w : words) {
    for (std::size_t i = 0; i + 4 <= w.size(); ++i) {
      bool digits = true;
      for (std::size_t k = i; k < i + 4; ++k) digits = digits && w[k] >= '0' && w[k] <= '9';
      if (!digits) continue;
      if (i > 0 && alnum(w[i - 1])) continue;
      if (i + 4 < w.size() && alnum(w[i + 4])) continue;
      const int y = std::stoi(w.substr(i, 4));
      if (y >= lo && y <= hi) return y;
    }
  }
  return std::nullopt;
}

std::vector<std::string> oracle_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  int depth = 0;
  auto emit = [&] {
    std::size_t b = current.find_first_not_of(" \t\n\r\f\v");
    if (b != std::string::npos) {
      std::size_t e = current.find_last_not_of(" \t\n\r\f\v");
      out.push_back(current.substr(b, e - b + 1));
    }
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i + 1 < text.size() && text[i] == '[' && text[i + 1] == '[') {
      ++depth;
      current += "[[";
      ++i;
    } else if (i + 1 < text.size() && text[i] == ']' && text[i + 1] == ']' &&
               depth > 0) {
      --depth;
      current += "]]";
      ++i;
    } else {
      current += text[i];
      if (text[i] == '.' && depth == 0) emit();
    }
  }
  emit();
  return out;
}

const std::vector<PublishedAlumnus>& top_graduates() {
  static const std::vector<PublishedAlumnus> rows = {
      {"Northwestern University", "Meghan Markle", 1981, 30430581},
      {"University of Cambridge", "Stephen Hawking", 1942, 19183278},
      {"University of Pennsylvania", "Elon Musk", 1971, 15791090},
      {"University of Cambridge", "Charles, Prince of Wales", 1948, 12944420},
      {"Saint Petersburg State University", "Vladimir Putin", 1952, 11426497},
      {"University of Edinburgh", "Charles Darwin", 1809, 10225649},
      {"ETH Zurich – Swiss Federal Institute of Technology Zurich", "Albert Einstein",
       1879, 9206148},
      {"University of Miami", "Sylvester Stallone", 1946, 8444153},
      {"Columbia University", "Barack Obama", 1961, 8418653},
      {"University of St Andrews", "Prince William, Duke of Cambridge", 1982, 8331379},
  };
  return rows;
}

const std::vector<PublishedAlumnus>& top_graduates_after_1947() {
  static const std::vector<PublishedAlumnus> rows = {
      {"Northwestern University", "Meghan Markle", 1981, 30430581},
      {"University of Pennsylvania", "Elon Musk", 1971, 15791090},
      {"University of Cambridge", "Charles, Prince of Wales", 1948, 12944420},
      {"Saint Petersburg State University", "Vladimir Putin", 1952, 11426497},
      {"Columbia University", "Barack Obama", 1961, 8418653},
      {"University of St Andrews", "Prince William, Duke of Cambridge", 1982, 8331379},
      {"Princeton University", "Jeff Bezos", 1964, 7661172},
      {"Reed College", "Steve Jobs", 1955, 6899464},
      {"University of St Andrews", "Catherine, Duchess of Cambridge", 1982, 6336213},
      {"Harvard University", "Bill Gates", 1955, 5880135},
  };
  return rows;
}

fs::path golden_config() { return data_dir() / "golden" / "config.json"; }

fs::path golden_expected_dir() { return data_dir() / "golden" / "expected"; }

const std::vector<std::string>& golden_artifacts() {
  static const std::vector<std::string> files = {
      "ingest/redirects/en.tsv",
      "ingest/redirects/en.unresolved.tsv",
      "ingest/redirects/ru.tsv",
      "ingest/redirects/ru.unresolved.tsv",
      "dataset/alumni.tsv",
      "dataset/evidence.tsv",
      "dataset/extract_report.tsv",
      "views/alumni_views.tsv",
      "views/university_views.tsv",
      "views/flags.tsv",
      "report/stats.tsv",
      "report/top_alumni.tsv",
      "report/rankings.tsv",
      "report/matrix.tsv",
      "report/matrix.txt",
      "report/university_comparison.tsv",
      "report/external_unmapped.tsv",
      "report/report.txt",
      "audit/audit_sample.tsv",
  };
  return files;
}

PipelineRun run_pipeline(const wikialumni::PipelineConfig& config) {
  using wikialumni::Command;
  PipelineRun run;
  std::ostringstream log;
  wikialumni::RunContext ctx;
  ctx.log = &log;
  for (auto c : {Command::kIngest, Command::kExtract, Command::kViews, Command::kReport,
                 Command::kAudit}) {
    run.exit_codes.push_back(wikialumni::run_command(c, config, ctx));
  }
  run.log = log.str();
  return run;
}

PipelineRun run_golden_pipeline(const fs::path& out) {
  auto config = wikialumni::PipelineConfig::load(golden_config());
  wikialumni::ConfigOverrides o;
  o.output_dir = out;
  wikialumni::apply_overrides(config, o);
  return run_pipeline(config);
}

std::string first_golden_difference(const fs::path& a, const fs::path& b) {
  for (const auto& name : golden_artifacts()) {
    if (!fs::exists(a / name) || !fs::exists(b / name)) return name + " (missing)";
    if (read_text(a / name) != read_text(b / name)) return name;
  }
  return {};
}

}  // namespace testsupport

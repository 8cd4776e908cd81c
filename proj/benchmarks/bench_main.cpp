#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <sstream>

#include "wikialumni/alumni_link.hpp"
#include "wikialumni/analytics.hpp"
#include "wikialumni/dump_ingest.hpp"
#include "wikialumni/person_extract.hpp"

using namespace wikialumni;

namespace {

std::string synthetic_dump(int pages) {
  std::string xml =
      "<mediawiki xmlns=\"http://www.mediawiki.org/xml/export-0.10/\">\n";
  for (int i = 0; i < pages; ++i) {
    xml += "<page><title>Page " + std::to_string(i) + "</title><ns>0</ns><id>" +
           std::to_string(i + 1) + "</id><revision><text>";
    for (int w = 0; w < 200; ++w) xml += "lorem ipsum [[Link]] ";
    xml += "(born 1955)</text></revision></page>\n";
  }
  return xml + "</mediawiki>\n";
}

std::string article_text(std::size_t sentences) {
  std::string s;
  for (std::size_t i = 0; i < sentences; ++i) {
    s += "He studied at the [[University of St. Andrews|St. Andrews]] and later "
         "graduated from [[Harvard University]]. ";
  }
  return s;
}

void BM_ParseDump(benchmark::State& state) {
  const std::string xml = synthetic_dump(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    PageStream stream(std::make_unique<std::istringstream>(xml), "en", "<bench>");
    std::size_t n = 0;
    while (auto p = stream.next()) n += p->wikitext.size();
    benchmark::DoNotOptimize(n);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * xml.size()));
}
BENCHMARK(BM_ParseDump)->Arg(100)->Arg(1000);

void BM_BirthYear(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < 900; ++i) text += "word ";
  text += "1955";
  for (auto _ : state) benchmark::DoNotOptimize(extract_birth_year(text));
}
BENCHMARK(BM_BirthYear);

void BM_SplitSentences(benchmark::State& state) {
  const std::string text = article_text(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(split_sentences(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_SplitSentences)->Arg(10)->Arg(1000);

Ranking random_ranking(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Ranking r;
  for (std::size_t i = 0; i < n; ++i) {
    r.entries.push_back({static_cast<std::int64_t>(i), "U" + std::to_string(i),
                         static_cast<double>(rng() % 100000)});
  }
  sort_ranking(r.entries);
  return r;
}

void BM_Spearman(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Ranking a = random_ranking(n, 1), b = random_ranking(n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(correlate(a, b, CorrelationMethod::kSpearman));
  }
}
BENCHMARK(BM_Spearman)->Arg(464)->Arg(10000);

}  // namespace
BENCHMARK_MAIN();

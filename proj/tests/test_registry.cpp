#include "wikialumni/registry.hpp"

#include <gtest/gtest.h>

#include "support.hpp"
#include "wikialumni/errors.hpp"

using namespace wikialumni;
using namespace testsupport;

namespace {

std::vector<UniversityRow> rows() {
  return {
      {1, "Harvard University", "en", "Harvard University"},
      {1, "Harvard University", "ru", "Гарвардский университет"},
      {2, "Massachusetts Institute of Technology", "en",
       "Massachusetts Institute of Technology"},
      {3, "Columbia University", "en", "Columbia University"},
  };
}

std::map<std::string, RedirectMap> redirects() {
  return {{"en",
           {{"Harvard", "Harvard University"},
            {"MIT", "Massachusetts Institute of Technology"},
            {"Harvard College", "Harvard University"},
            {"Unrelated", "Something Else"}}},
          {"ru", {{"Гарвард", "Гарвардский университет"}}}};
}

}  // namespace

TEST(Registry, AliasExpansionThroughRedirects) {
  const auto reg = Registry::build(rows(), redirects());
  EXPECT_EQ(reg.size(), 3u);
  EXPECT_EQ(reg.resolve_link("Harvard University", "en"), 1);
  EXPECT_EQ(reg.resolve_link("Harvard", "en"), 1);
  EXPECT_EQ(reg.resolve_link("MIT", "en"), 2);
  EXPECT_EQ(reg.resolve_link("Гарвард", "ru"), 1);
  EXPECT_EQ(reg.find(1)->titles.at("en").count("Harvard College"), 1u);
  EXPECT_EQ(reg.find(1)->primary_titles.at("en"), "Harvard University");
}

TEST(Registry, LinkNormalization) {
  const auto reg = Registry::build(rows(), redirects());
  EXPECT_EQ(reg.resolve_link("Harvard_University", "en"), 1);
  EXPECT_EQ(reg.resolve_link("harvard University", "en"), 1);
  EXPECT_EQ(reg.resolve_link("Harvard University#Campus", "en"), 1);
  EXPECT_EQ(reg.resolve_link("гарвардский университет", "ru"), 1);
  EXPECT_FALSE(reg.resolve_link("Hogwarts", "en"));
  // Only the first letter is case-insensitive.
  EXPECT_FALSE(reg.resolve_link("Harvard university", "en"));
  // Titles are per language.
  EXPECT_FALSE(reg.resolve_link("Harvard University", "ru"));
}

TEST(Registry, EveryAliasResolvesToItsUniversity) {
  const auto reg = Registry::build(rows(), redirects());
  std::size_t checked = 0;
  for (const auto& u : reg.universities()) {
    for (const auto& [lang, titles] : u.titles) {
      for (const auto& t : titles) {
        EXPECT_EQ(reg.resolve_link(t, lang), u.id) << t;
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 8u);
}

TEST(Registry, TitleCollisionNamesBothClaimants) {
  std::vector<UniversityRow> r = {{1, "Columbia University", "en", "Columbia"},
                                  {2, "Columbia College Chicago", "en", "Columbia"}};
  try {
    Registry::build(r, {});
    FAIL() << "expected RegistryError";
  } catch (const RegistryError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("Columbia University"), std::string::npos) << msg;
    EXPECT_NE(msg.find("Columbia College Chicago"), std::string::npos) << msg;
  }
}

TEST(Registry, DuplicateIdWithDifferentNamesFails) {
  std::vector<UniversityRow> r = {{1, "Yale University", "en", "Yale University"},
                                  {1, "Brown University", "en", "Brown University"}};
  EXPECT_THROW(Registry::build(r, {}), RegistryError);
}

TEST(Registry, FourHundredSixtyFourUniversities) {
  TempDir dir;
  std::string file = "id\tcanonical_name\tlang\ttitle\n";
  for (int i = 1; i <= 464; ++i) {
    file += std::to_string(i) + "\tUniversity " + std::to_string(i) + "\ten\tUniversity " +
            std::to_string(i) + "\n";
    if (i % 3 == 0) {
      file += std::to_string(i) + "\tUniversity " + std::to_string(i) +
              "\tru\tУниверситет " + std::to_string(i) + "\n";
    }
  }
  write_text(dir / "u.tsv", file);
  const auto reg = Registry::load(dir / "u.tsv", {});
  EXPECT_EQ(reg.size(), 464u);
  EXPECT_EQ(reg.resolve_link("University 464", "en"), 464);
  EXPECT_EQ(reg.resolve_link("Университет 3", "ru"), 3);
}

TEST(Registry, LoadRejectsBadIds) {
  TempDir dir;
  write_text(dir / "u.tsv", "id\tcanonical_name\tlang\ttitle\nx\tA\ten\tA\n");
  EXPECT_THROW(Registry::load(dir / "u.tsv", {}), RegistryError);
}

TEST(Dictionary, ParsesSections) {
  const auto d = parse_dictionary(
      "# comment\n[person_markers]\n  born \nbirths]]\n\n[trigger_words]\ngraduated\n"
      "received   degree\n",
      "en");
  EXPECT_EQ(d.lang, "en");
  EXPECT_EQ(d.person_markers, (std::vector<std::string>{"born", "births]]"}));
  EXPECT_EQ(d.trigger_words, (std::vector<std::string>{"graduated", "received degree"}));
  EXPECT_TRUE(MarkerDictionary::kCaseInsensitive);
}

TEST(Dictionary, RejectsMissingOrEmptySections) {
  EXPECT_THROW(parse_dictionary("[person_markers]\nborn\n", "en"), RegistryError);
  EXPECT_THROW(parse_dictionary("[person_markers]\n[trigger_words]\nx\n", "en"),
               RegistryError);
  EXPECT_THROW(parse_dictionary("born\n", "en"), RegistryError);
  EXPECT_THROW(parse_dictionary("[aliases]\nx\n", "en"), RegistryError);
}

TEST(Dictionary, LoadsPerLanguageFiles) {
  TempDir dir;
  write_text(dir / "en.dict", "[person_markers]\nborn\n[trigger_words]\ngraduated\n");
  const auto dicts = load_dictionaries(dir.path(), {"en"});
  EXPECT_EQ(dicts.at("en").trigger_words.size(), 1u);
  EXPECT_EQ(dictionary_path(dir.path(), "ru"), dir / "ru.dict");
  EXPECT_THROW(load_dictionaries(dir.path(), {"en", "ru"}), RegistryError);
}

TEST(Dictionary, ShippedStarterSetsParse) {
  const fs::path shipped = data_dir().parent_path().parent_path() / "data" / "dictionaries";
  const auto dicts = load_dictionaries(shipped, {"en", "ru"});
  EXPECT_FALSE(dicts.at("en").person_markers.empty());
  EXPECT_FALSE(dicts.at("ru").trigger_words.empty());
}

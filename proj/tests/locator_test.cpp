#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "ragpoison/error.hpp"
#include "ragpoison/locator.hpp"
#include "ragpoison/text.hpp"
#include "support/fixtures.hpp"

// After Eigen: <resolv.h> defines a _res macro that clashes with it.
#include <httplib.h>

using namespace ragpoison;
using nlohmann::json;

namespace {

LabelSet labels(std::initializer_list<std::string_view> l) {
  LabelSet s;
  for (auto x : l) s.emplace(x);
  return s;
}

// The gazetteer fixture: files written to a temp dir, so the expectation does
// not lean on the built-in lists.
RuleBasedLocator fixture_locator(const fixtures::TempDir& dir) {
  fixtures::write_text(dir / "loc.txt", "Paris\nNew York\nRome\n");
  fixtures::write_text(dir / "per.txt", "Albert Einstein\nParis Hilton\n");
  return RuleBasedLocator::from_files(dir / "loc.txt", dir / "per.txt");
}

}  // namespace

TEST(LocateAnswer, GazetteerLocation) {
  fixtures::TempDir dir;
  EXPECT_EQ(locate_answer_entities(fixture_locator(dir), "Paris"), labels({kLabelLocation}));
}

TEST(LocateAnswer, YearIsDate) {
  EXPECT_EQ(locate_answer_entities(RuleBasedLocator::empty(), "1999"), labels({kLabelDate}));
  EXPECT_EQ(locate_answer_entities(RuleBasedLocator::empty(), "2100"), labels({kLabelNumber}));
  EXPECT_EQ(locate_answer_entities(RuleBasedLocator::empty(), "3,5"), labels({kLabelNumber}));
}

TEST(LocateAnswer, UnknownIsOther) {
  EXPECT_EQ(locate_answer_entities(RuleBasedLocator(), "xqzzt"), labels({kLabelOther}));
}

TEST(LocateAnswer, LongestPhraseWins) {
  fixtures::TempDir dir;
  const auto loc = fixture_locator(dir);
  EXPECT_EQ(locate_answer_entities(loc, "Paris Hilton"), labels({kLabelPerson}));
  const auto spans = loc.annotate("I saw New York.");
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0], (EntitySpan{6, 14, std::string(kLabelLocation)}));
}

TEST(LocateAnswer, BuiltinGazetteer) {
  RuleBasedLocator loc;
  EXPECT_EQ(locate_answer_entities(loc, "Paris"), labels({kLabelLocation}));
  EXPECT_TRUE(locate_answer_entities(loc, "Albert Einstein").count(kLabelPerson));
}

TEST(AttackPositions, WordListLocation) {
  fixtures::TempDir dir;
  const std::vector<std::string> tokens{"paris", "is", "old"};
  const auto out = find_attack_positions(fixture_locator(dir), tokens, labels({kLabelLocation}));
  EXPECT_EQ(out.positions, (std::vector<std::size_t>{0}));
}

TEST(AttackPositions, DateWithoutDigitsIsEmpty) {
  const std::vector<std::string> tokens{"the", " sky", " is", " blue"};
  EXPECT_TRUE(find_attack_positions(RuleBasedLocator(), tokens, labels({kLabelDate})).positions.empty());
}

TEST(AttackPositions, OtherTakesContentWords) {
  const std::vector<std::string> tokens{"the", "sky", "is", "blue"};
  EXPECT_EQ(find_attack_positions(RuleBasedLocator(), tokens, labels({kLabelOther})).positions,
            (std::vector<std::size_t>{1, 3}));
}

TEST(AttackPositions, SubwordTokensInheritWordLabel) {
  fixtures::TempDir dir;
  // "Par" + "is" form one word; both pieces overlap it.
  const std::vector<std::string> tokens{"Par", "is", " is", " old", " 1999", "."};
  const auto loc = fixture_locator(dir);
  EXPECT_EQ(find_attack_positions(loc, tokens, labels({kLabelLocation})).positions,
            (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(find_attack_positions(loc, tokens, labels({kLabelDate, kLabelLocation})).positions,
            (std::vector<std::size_t>{0, 1, 4}));
}

TEST(AttackPositionsProperty, ExhaustiveSortedAndTyped) {
  RuleBasedLocator loc;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto inst = fixtures::random_instance(seed, 1, 3);
    std::vector<std::string> tokens;
    for (const auto& w : text::split_whitespace(inst.kb[0].text)) tokens.push_back((tokens.empty() ? "" : " ") + w);
    const auto out = find_attack_positions(loc, tokens, labels({kLabelLocation}));
    // Independent check: a token is a position iff its normalized word is
    // tagged LOCATION on its own.
    std::vector<std::size_t> expect;
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      const auto s = locate_answer_entities(loc, tokens[j]);
      if (s.count(kLabelLocation)) expect.push_back(j);
    }
    EXPECT_EQ(out.positions, expect) << inst.kb[0].text;
    EXPECT_TRUE(std::is_sorted(out.positions.begin(), out.positions.end()));
    EXPECT_EQ(out.positions, find_attack_positions(loc, tokens, labels({kLabelLocation})).positions);
  }
}

TEST(SidecarNer, MapsLabelsAndSpans) {
  fixtures::FixtureServer server([](httplib::Server& s) {
    s.Post("/ner", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      EXPECT_EQ(body["text"], "Paris hosted Einstein in 1922");
      res.set_content(json{{"spans", {{{"start", 13}, {"end", 21}, {"label", "PER"}},
                                      {{"start", 0}, {"end", 5}, {"label", "GPE"}},
                                      {{"start", 25}, {"end", 29}, {"label", "DATE"}}}}}
                          .dump(),
                      "application/json");
    });
    s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
  });
  SidecarNerLocator ner(HttpEndpoint::parse(server.base_url(), {}, ""));
  EXPECT_NO_THROW(ner.check_ready());
  const auto spans = ner.annotate("Paris hosted Einstein in 1922");
  ASSERT_EQ(spans.size(), 3u);
  EXPECT_EQ(spans[0], (EntitySpan{0, 5, "LOCATION"}));
  EXPECT_EQ(spans[1], (EntitySpan{13, 21, "PERSON"}));
  EXPECT_EQ(spans[2], (EntitySpan{25, 29, "DATE"}));
  const std::vector<std::string> tokens{"Paris", " hosted", " Einstein", " in", " 1922"};
  EXPECT_EQ(find_attack_positions(ner, tokens, labels({kLabelPerson})).positions, (std::vector<std::size_t>{2}));
}

TEST(SidecarNer, BadSpansAreBackendErrors) {
  for (const json& spans : {json::array({{{"start", 0}, {"end", 99}, {"label", "PER"}}}),
                            json::array({{{"start", 0}, {"end", 4}, {"label", "PER"}},
                                         {{"start", 2}, {"end", 6}, {"label", "LOC"}}}),
                            json::array({{{"start", 3}, {"end", 3}, {"label", "PER"}}}),
                            json::array({{{"start", 0}, {"label", "PER"}}})}) {
    fixtures::FixtureServer server([spans](httplib::Server& s) {
      s.Post("/ner", [spans](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"spans", spans}}.dump(), "application/json");
      });
    });
    SidecarNerLocator ner(HttpEndpoint::parse(server.base_url(), {}, ""));
    EXPECT_THROW(ner.annotate("abcdefgh"), BackendError) << spans.dump();
  }
}

TEST(SidecarNer, UnreachableIsBackendError) {
  SidecarNerLocator ner(HttpEndpoint::parse("http://127.0.0.1:1", {}, ""));
  EXPECT_THROW(ner.annotate("Paris"), BackendError);
  EXPECT_THROW(ner.check_ready(), BackendError);
}

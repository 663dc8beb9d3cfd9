#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "ragpoison/hash.hpp"
#include "ragpoison/metrics.hpp"

using namespace ragpoison;

namespace {

PairScores pair(double sb, double sm, double pb, double pm) { return {sb, sm, pb, pm}; }

std::vector<std::string> golds(std::initializer_list<const char*> g) { return {g.begin(), g.end()}; }

}  // namespace

TEST(Asr, ThreeOfFiveRetrievalHits) {
  const std::vector<PairScores> ps{pair(0.5, 0.6, 0.9, 0.1), pair(0.5, 0.7, 0.9, 0.1), pair(0.5, 0.9, 0.9, 0.1),
                                   pair(0.5, 0.4, 0.9, 0.1), pair(0.5, 0.5, 0.9, 0.1)};
  const auto a = asr_components(ps);
  EXPECT_DOUBLE_EQ(a.asr_r, 60.0);
  EXPECT_DOUBLE_EQ(a.asr_l, 100.0);
  EXPECT_DOUBLE_EQ(a.asr_t, 60.0);
  EXPECT_EQ(a.retrieval_hits, 3u);
  EXPECT_EQ(a.pairs, 5u);
}

TEST(Asr, EqualScoresAreFailures) {
  const std::vector<PairScores> ps(4, pair(0.5, 0.5, 0.5, 0.5));
  const auto a = asr_components(ps);
  EXPECT_EQ(a.asr_r, 0.0);
  EXPECT_EQ(a.asr_l, 0.0);
  EXPECT_EQ(a.asr_t, 0.0);
}

TEST(Asr, FiveHundredPairTableRow) {
  // 386 joint successes, 112 likelihood-only, 2 neither: 77.2 / 99.6 / 77.2.
  std::vector<PairScores> ps;
  for (int i = 0; i < 386; ++i) ps.push_back(pair(0.5, 0.8, 0.9, 0.2));
  for (int i = 0; i < 112; ++i) ps.push_back(pair(0.5, 0.3, 0.9, 0.2));
  for (int i = 0; i < 2; ++i) ps.push_back(pair(0.5, 0.3, 0.2, 0.9));
  const auto a = asr_components(ps);
  EXPECT_NEAR(a.asr_r, 77.2, 1e-9);
  EXPECT_NEAR(a.asr_l, 99.6, 1e-9);
  EXPECT_NEAR(a.asr_t, 77.2, 1e-9);
  MetricsReport rep;
  rep.asr_r = a.asr_r;
  rep.asr_l = a.asr_l;
  rep.asr_t = a.asr_t;
  const std::vector<ReportRow> rows{{{{"run", "nq"}}, rep}};
  const std::string table = format_metrics_table(rows);
  EXPECT_NE(table.find("77.2"), std::string::npos);
  EXPECT_NE(table.find("99.6"), std::string::npos);
}

TEST(Asr, EmptyInputIsDomainError) { EXPECT_THROW(asr_components({}), std::domain_error); }

TEST(Asr, ZeroBenignLikelihoodUsesDifference) {
  EXPECT_FALSE(likelihood_success(pair(0.5, 0.5, 0.0, 0.0)));
  EXPECT_TRUE(likelihood_success(pair(0.5, 0.5, 0.3, 0.0)));
  EXPECT_FALSE(likelihood_success(pair(0.5, 0.5, 0.3, 0.3)));
}

TEST(Asr, NonPositiveBenignSimilarityUsesDifference) {
  EXPECT_TRUE(retrieval_success(pair(0.0, 0.1, 0, 0)));
  EXPECT_TRUE(retrieval_success(pair(-0.4, -0.2, 0, 0)));
  EXPECT_FALSE(retrieval_success(pair(-0.4, -0.4, 0, 0)));
}

TEST(AsrProperty, JointNeverExceedsEitherAndOrderInvariant) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    RandomStream rng(seed);
    std::vector<PairScores> ps(1 + rng.uniform_index(30));
    for (auto& p : ps) {
      // Coarse grid so equal scores occur often.
      p = pair(rng.uniform_index(5) / 4.0, rng.uniform_index(5) / 4.0, rng.uniform_index(5) / 4.0,
               rng.uniform_index(5) / 4.0);
    }
    const auto a = asr_components(ps);
    EXPECT_LE(a.asr_t, std::min(a.asr_r, a.asr_l));
    for (double v : {a.asr_r, a.asr_l, a.asr_t}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 100.0);
    }
    std::size_t r = 0;
    for (const auto& p : ps) r += p.s_malicious - p.s_benign > 0;
    EXPECT_EQ(a.retrieval_hits, r);
    std::reverse(ps.begin(), ps.end());
    const auto b = asr_components(ps);
    EXPECT_EQ(a.asr_r, b.asr_r);
    EXPECT_EQ(a.asr_t, b.asr_t);
  }
}

TEST(ExactMatch, Normalization) {
  EXPECT_EQ(exact_match("Paris.", golds({"paris"})), 1);
  EXPECT_EQ(exact_match("the Paris", golds({"Paris"})), 1);
  EXPECT_EQ(exact_match("London", golds({"Paris"})), 0);
  EXPECT_EQ(exact_match("  An   Apple ", golds({"x", "apple"})), 1);
  EXPECT_THROW(exact_match("x", {}), std::invalid_argument);
  EXPECT_EQ(normalize_answer("The  Eiffel-Tower, a landmark!"), "eiffeltower landmark");
}

TEST(F1, Examples) {
  EXPECT_DOUBLE_EQ(f1_score("Barack Obama", golds({"Obama"})), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(f1_score("new york city", golds({"new york city"})), 1.0);
  EXPECT_EQ(f1_score("london", golds({"paris"})), 0.0);
  EXPECT_EQ(f1_score("the", golds({"a"})), 1.0);
  EXPECT_EQ(f1_score("the", golds({"paris"})), 0.0);
  EXPECT_DOUBLE_EQ(f1_score("paris france", golds({"london", "paris"})), 2.0 / 3.0);
  EXPECT_THROW(f1_score("x", {}), std::invalid_argument);
}

TEST(F1Property, ExactMatchImpliesFullF1) {
  const std::vector<std::string> words{"the", "paris", "a", "rome", "city", "Paris.", "ROME"};
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    RandomStream rng(seed);
    auto phrase = [&] {
      std::string s;
      for (std::size_t i = 0, n = 1 + rng.uniform_index(3); i < n; ++i) s += words[rng.uniform_index(words.size())] + " ";
      return s;
    };
    const std::string pred = phrase();
    const std::vector<std::string> g{phrase(), phrase()};
    const double f = f1_score(pred, g);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    if (exact_match(pred, g)) EXPECT_EQ(f, 1.0);
  }
}

TEST(Aggregate, SingleQueryEqualsItsValues) {
  QueryResult q{"q", 1.0, 0.5, {pair(0.5, 0.6, 0.9, 0.1), pair(0.5, 0.4, 0.9, 0.95)}};
  const auto rep = aggregate(std::vector<QueryResult>{q});
  EXPECT_EQ(rep.em, 100.0);
  EXPECT_EQ(rep.f1, 50.0);
  EXPECT_EQ(rep.asr_r, 50.0);
  EXPECT_EQ(rep.asr_l, 50.0);
  EXPECT_EQ(rep.asr_t, 50.0);
  EXPECT_EQ(rep.success_queries, 1u);
  EXPECT_EQ(rep.em_success, 100.0);
}

TEST(Aggregate, TwoQueriesMean) {
  const std::vector<QueryResult> qs{{"a", 1.0, 1.0, {}}, {"b", 0.0, 0.0, {}}};
  const auto rep = aggregate(qs);
  EXPECT_EQ(rep.em, 50.0);
  EXPECT_EQ(rep.pairs, 0u);
  EXPECT_EQ(rep.asr_r, 0.0);
  EXPECT_FALSE(rep.em_success);
}

TEST(Aggregate, UnansweredQueriesExcludedFromEmOnly) {
  const std::vector<QueryResult> qs{{"a", std::nullopt, std::nullopt, {pair(0.1, 0.9, 0.9, 0.1)}},
                                    {"b", 0.0, 0.2, {pair(0.9, 0.1, 0.9, 0.1)}}};
  const auto rep = aggregate(qs);
  EXPECT_EQ(rep.answered, 1u);
  EXPECT_EQ(rep.queries, 2u);
  EXPECT_EQ(rep.em, 0.0);
  EXPECT_NEAR(rep.f1, 20.0, 1e-12);
  EXPECT_EQ(rep.asr_r, 50.0);
}

TEST(AggregateProperty, QueryOrderInvariant) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomStream rng(seed);
    std::vector<QueryResult> qs(1 + rng.uniform_index(8));
    for (auto& q : qs) {
      q.em = static_cast<double>(rng.uniform_index(2));
      q.f1 = rng.uniform01();
      for (std::size_t i = 0, n = rng.uniform_index(4); i < n; ++i)
        q.pairs.push_back(pair(rng.uniform01(), rng.uniform01(), rng.uniform01(), rng.uniform01()));
    }
    const auto a = aggregate(qs);
    std::reverse(qs.begin(), qs.end());
    const auto b = aggregate(qs);
    EXPECT_NEAR(a.em, b.em, 1e-9);
    EXPECT_NEAR(a.f1, b.f1, 1e-9);
    EXPECT_EQ(a.joint_hits, b.joint_hits);
    EXPECT_LE(a.asr_t, std::min(a.asr_r, a.asr_l));
  }
}

TEST(Report, CsvColumnOrder) {
  MetricsReport rep;
  rep.asr_r = 12.34567;
  std::ostringstream out;
  write_metrics_csv(out, std::vector<ReportRow>{{{{"run", "r"}, {"iteration", "1"}}, rep}});
  const std::string csv = out.str();
  const std::string header = csv.substr(0, csv.find('\n'));
  EXPECT_EQ(header.rfind("run,iteration,ASR_R,ASR_L,ASR_T,EM,F1,EM_success,F1_success", 0), 0u) << header;
  EXPECT_NE(csv.find("r,1,12.3457,"), std::string::npos) << csv;
}

TEST(Report, TableColumnOrder) {
  const std::string t = format_metrics_table(std::vector<ReportRow>{{{{"run", "r"}}, MetricsReport{}}});
  const auto pos = [&](const char* c) { return t.find(c); };
  EXPECT_LT(pos("ASR_R"), pos("ASR_L"));
  EXPECT_LT(pos("ASR_L"), pos("ASR_T"));
  EXPECT_LT(pos("ASR_T"), pos(" EM"));
  EXPECT_LT(pos(" EM"), pos(" F1"));
}

#include <gtest/gtest.h>

#include "citeforge/error.hpp"
#include "citeforge/metrics.hpp"
#include "support/planted.hpp"

using namespace citeforge;

namespace {

const LexicalConsistencyScorer kPhi;

QAInstance sky() {
  QAInstance q;
  q.question_id = "sky";
  q.question = "what color is the sky";
  q.passages = {{"p1", "", "the sky is blue"},
                {"p2", "", "clouds drift slowly"},
                {"p3", "", "grass is green"}};
  q.gold_answer_groups = {{"blue"}};
  return q;
}

double recall(const std::string& raw, const QAInstance& q) {
  return citation_recall(parse_cited_answer(raw, q.passage_count()), q, kPhi, 0.5);
}
double precision(const std::string& raw, const QAInstance& q) {
  return citation_precision(parse_cited_answer(raw, q.passage_count()), q, kPhi, 0.5);
}

}  // namespace

TEST(CitationRecall, AllEntailed) {
  EXPECT_DOUBLE_EQ(recall("The sky is blue [1]. Grass is green [3].", sky()), 1.0);
}

TEST(CitationRecall, HalfEntailed) {
  EXPECT_DOUBLE_EQ(recall("The sky is blue [1]. Grass is green [2].", sky()), 0.5);
}

TEST(CitationRecall, UncitedSentenceContributesZero) {
  EXPECT_DOUBLE_EQ(recall("The sky is blue [1]. Grass is green.", sky()), 0.5);
}

TEST(CitationRecall, UnionOfCitedPassages) {
  // Neither passage alone covers all tokens of the claim; together they do.
  EXPECT_DOUBLE_EQ(recall("Sky is blue, grass is green, clouds drift [1][2][3].", sky()), 1.0);
}

TEST(CitationPrecision, SingleEntailingCitation) {
  EXPECT_DOUBLE_EQ(precision("The sky is blue [1].", sky()), 1.0);
}

TEST(CitationPrecision, RedundantNoiseCitation) {
  EXPECT_DOUBLE_EQ(precision("The sky is blue [1][2].", sky()), 0.5);
}

TEST(CitationPrecision, UnionFailsEntailment) {
  EXPECT_DOUBLE_EQ(precision("Clouds are purple and heavy today [2][3].", sky()), 0.0);
  EXPECT_DOUBLE_EQ(precision("The sky is blue [1]. Clouds are purple and heavy today [2][3].", sky()),
                   1.0 / 3.0);
}

TEST(CitationPrecision, NoCitationsIsZero) {
  EXPECT_DOUBLE_EQ(precision("The sky is blue.", sky()), 0.0);
}

TEST(CitationF1, ClosedForms) {
  EXPECT_DOUBLE_EQ(citation_f1(0.8, 0.8), 0.8);
  EXPECT_DOUBLE_EQ(citation_f1(0.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(citation_f1(0.0, 0.0), 0.0);
  EXPECT_NEAR(citation_f1(0.5, 1.0), 2.0 / 3.0, 1e-9);
}

TEST(EmRecall, Examples) {
  EXPECT_DOUBLE_EQ(em_recall("The capital is Paris.", {{"Paris"}}), 1.0);
  EXPECT_DOUBLE_EQ(em_recall("The capital is Paris.", {{"Paris"}, {"Lyon"}}), 0.5);
  EXPECT_DOUBLE_EQ(em_recall("the capital is paris", {{"PARIS,"}}), 1.0);
  EXPECT_DOUBLE_EQ(em_recall("Parisian cafes", {{"Paris"}}), 0.0);
  EXPECT_DOUBLE_EQ(em_recall("It is in New York.", {{"NYC", "new york"}}), 1.0);
  EXPECT_THROW(em_recall("x", {}), Error);
}

TEST(CorrectInP, GroundedMatchesOnly) {
  const std::vector<Passage> ps = {{"a", "", "nothing here"}, {"b", "", "the city of Lyon"}};
  EXPECT_DOUBLE_EQ(correct_in_p("Lyon is big", {{"Lyon"}}, ps), 1.0);
  EXPECT_DOUBLE_EQ(correct_in_p("Paris is big", {{"Paris"}}, ps), 0.0);
  EXPECT_DOUBLE_EQ(correct_in_p("Nothing matches", {{"Paris"}, {"Lyon"}}, ps), 0.0);
  // Alias matched in the answer must itself be the one found in a passage.
  EXPECT_DOUBLE_EQ(correct_in_p("Lugdunum", {{"Lugdunum", "Lyon"}}, ps), 0.0);
}

TEST(RougeL, Examples) {
  EXPECT_DOUBLE_EQ(rouge_l("a b c", "a b c"), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l("x y", "a b"), 0.0);
  EXPECT_NEAR(rouge_l("a b c d", "a c d"), 2 * 0.75 / 1.75, 1e-12);
  EXPECT_NEAR(rouge_l("a b c d", "a c d"), 0.857, 1e-3);
  EXPECT_DOUBLE_EQ(rouge_l("", "a"), 0.0);
  EXPECT_THROW(rouge_l("a", "..."), Error);
}

TEST(QualityPair, FullyCorrectPlantedAnswer) {
  const auto q = citeforge::testing::planted_instance(0);
  const auto a = parse_cited_answer(citeforge::testing::planted_correction(0), 4);
  EXPECT_EQ(quality_pair(a, q, kPhi, {}), (QualityPair{1.0, 1.0}));
}

TEST(QualityPair, NoCitationsButCorrectContent) {
  const auto q = citeforge::testing::planted_instance(1);
  const auto a = parse_cited_answer("zorb1 is located in vel1.", 4);
  const auto qp = quality_pair(a, q, kPhi, {});
  EXPECT_DOUBLE_EQ(qp.q_cite, 0.0);
  EXPECT_GT(qp.q_ans, 0.0);
}

TEST(QualityPair, EntailedButIrrelevantCitation) {
  const auto q = citeforge::testing::planted_instance(2);
  const auto a = parse_cited_answer("the festival of quix2 features lantern parades [3].", 4);
  const auto qp = quality_pair(a, q, kPhi, {});
  EXPECT_DOUBLE_EQ(qp.q_cite, 1.0);
  EXPECT_DOUBLE_EQ(qp.q_ans, 0.0);
}

TEST(QualityPair, MatchesHandTableOnPlantedCorpus) {
  for (std::size_t k = 0; k < citeforge::testing::kPlantedQuestions; ++k) {
    const auto q = citeforge::testing::planted_instance(k);
    const auto att = quality_pair(parse_cited_answer(citeforge::testing::planted_attempt(k), 4), q, kPhi, {});
    const auto cor = quality_pair(parse_cited_answer(citeforge::testing::planted_correction(k), 4), q, kPhi, {});
    const auto want_a = citeforge::testing::planted_attempt_quality(k);
    const auto want_c = citeforge::testing::planted_correction_quality(k);
    EXPECT_NEAR(att.q_cite, want_a.q_cite, 1e-12) << k;
    EXPECT_NEAR(att.q_ans, want_a.q_ans, 1e-12) << k;
    EXPECT_NEAR(cor.q_cite, want_c.q_cite, 1e-12) << k;
    EXPECT_NEAR(cor.q_ans, want_c.q_ans, 1e-12) << k;
  }
}

TEST(Accept, Examples) {
  const AcceptThresholds t;
  EXPECT_DOUBLE_EQ(t.tau_cite, 0.8);
  EXPECT_DOUBLE_EQ(t.tau_ans, 0.45);
  EXPECT_TRUE(accept({0.9, 0.5}, {0.8, 0.4}, t));
  EXPECT_FALSE(accept({0.9, 0.5}, {0.9, 0.5}, t));
  EXPECT_FALSE(accept({0.9, 0.44}, {0.1, 0.1}, t));
  EXPECT_EQ(accept_outcome({0.9, 0.44}, {0.1, 0.1}, t), AcceptOutcome::RejectedThreshold);
  EXPECT_EQ(accept_outcome({0.9, 0.5}, {0.9, 0.4}, t), AcceptOutcome::RejectedNoGain);
  EXPECT_EQ(accept_outcome({0.8, 0.45}, {0.7, 0.4}, t), AcceptOutcome::Accepted);
  // Threshold failure wins over missing gain.
  EXPECT_EQ(accept_outcome({0.5, 0.5}, {0.9, 0.9}, t), AcceptOutcome::RejectedThreshold);
}

TEST(Accept, ThresholdValidation) {
  AcceptThresholds t{1.1, 0.4};
  EXPECT_THROW(t.validate(), Error);
  t = {0.0, 1.0};
  EXPECT_NO_THROW(t.validate());
}

TEST(EvaluateAnswer, ReportsAllFields) {
  auto q = sky();
  q.gold_long_answer = "the sky is blue";
  const auto a = parse_cited_answer("The sky is blue [1][9]. Grass is green.", 3);
  const auto m = evaluate_answer(a, q, kPhi, {});
  EXPECT_DOUBLE_EQ(m.citation_recall, 0.5);
  EXPECT_DOUBLE_EQ(m.citation_precision, 1.0);
  EXPECT_NEAR(m.citation_f1, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.em_recall, 1.0);
  EXPECT_DOUBLE_EQ(m.correct_in_p, 1.0);
  ASSERT_TRUE(m.rouge_l);
  EXPECT_NEAR(*m.rouge_l, 2 * (4.0 / 7.0) / (4.0 / 7.0 + 1.0), 1e-12);
  EXPECT_EQ(m.sentence_count, 2u);
  EXPECT_EQ(m.citation_count, 1u);
  EXPECT_EQ(m.dropped_citation_count, 1u);
}

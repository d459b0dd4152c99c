#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "citeforge/error.hpp"
#include "citeforge/scoring.hpp"
#include "support/planted.hpp"

using namespace citeforge;

namespace {

// Counts calls so tests can see which judge invocations were skipped.
class CountingJudge final : public RelevanceJudge {
 public:
  bool judge(std::string_view, std::string_view) const override {
    ++calls;
    return true;
  }
  mutable int calls = 0;
};

class FailingScorer final : public ConsistencyScorer {
 public:
  ConsistencyScore score(std::string_view, std::string_view) const override {
    throw Error(ErrorCode::RemoteScorerUnavailable, "down");
  }
};

QAInstance small_instance() {
  QAInstance q;
  q.question_id = "s1";
  q.question = "what color is the sky";
  q.passages = {{"p1", "", "the sky is blue and vast"},
                {"p2", "", "grass grows green in spring"},
                {"p3", "", "the sky over the desert is blue at noon"}};
  q.gold_answer_groups = {{"blue"}};
  return q;
}

}  // namespace

TEST(ConsistencyScore, RangeIsEnforced) {
  EXPECT_DOUBLE_EQ(ConsistencyScore(0.0).value(), 0.0);
  EXPECT_DOUBLE_EQ(ConsistencyScore(1.0).value(), 1.0);
  EXPECT_THROW(ConsistencyScore(1.0000001), Error);
  EXPECT_THROW(ConsistencyScore(-0.1), Error);
  EXPECT_THROW(ConsistencyScore(std::numeric_limits<double>::quiet_NaN()), Error);
}

TEST(Lexical, ConsistencyExamples) {
  EXPECT_DOUBLE_EQ(lexical_consistency_score("the sky is blue", "the sky is blue and vast").value(), 1.0);
  EXPECT_DOUBLE_EQ(lexical_consistency_score("cats fly", "dogs bark").value(), 0.0);
  EXPECT_DOUBLE_EQ(lexical_consistency_score("alpha beta", "alpha").value(), 0.5);
  // Repeated claim tokens count once.
  EXPECT_DOUBLE_EQ(lexical_consistency_score("alpha alpha beta", "alpha gamma").value(), 0.5);
  EXPECT_THROW(lexical_consistency_score("...", "alpha"), Error);
}

TEST(Lexical, RelevanceExamples) {
  EXPECT_TRUE(lexical_relevance_judge("capital of France", "Paris is the capital of France", 0.5));
  EXPECT_FALSE(lexical_relevance_judge("capital of France", "photosynthesis in algae", 0.5));
  EXPECT_FALSE(lexical_relevance_judge("capital of France", "the capital city", 1.0));
  EXPECT_TRUE(lexical_relevance_judge("capital of France", "the capital city", 0.5));
  // Only stopwords: the full token set is used.
  EXPECT_TRUE(lexical_relevance_judge("who is it", "who was it", 0.5));
  try {
    lexical_relevance_judge("?!", "text", 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyQuestion);
  }
}

TEST(Classify, ThresholdThenRelevance) {
  const ScorerConfig cfg;
  EXPECT_EQ(classify_citation(ConsistencyScore(0.4), true, cfg), ErrorType::Mismatch);
  EXPECT_EQ(classify_citation(ConsistencyScore(0.4), false, cfg), ErrorType::Mismatch);
  EXPECT_EQ(classify_citation(ConsistencyScore(0.9), false, cfg), ErrorType::Irrelevance);
  EXPECT_EQ(classify_citation(ConsistencyScore(0.9), true, cfg), ErrorType::Correct);
  EXPECT_EQ(classify_citation(ConsistencyScore(0.5), true, cfg), ErrorType::Correct);
}

TEST(Labels, TextRoundTrip) {
  for (auto t : {ErrorType::Mismatch, ErrorType::Irrelevance, ErrorType::Correct}) {
    EXPECT_EQ(parse_label(label_of(t)), t);
  }
  EXPECT_EQ(label_of(ErrorType::Irrelevance), "IRRELEVANT");
  EXPECT_FALSE(parse_label("correct"));
  EXPECT_EQ(index_of(ErrorType::Mismatch), 0u);
  EXPECT_EQ(index_of(ErrorType::Correct), 2u);
}

TEST(ScorerConfig, ValidatesOpenInterval) {
  ScorerConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.mismatch_threshold = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.relevance_threshold = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(LabelAnswer, SingleCorrectCitation) {
  const auto q = small_instance();
  const auto a = parse_cited_answer("The sky is blue [1].", 3);
  const auto ann = label_answer(a, q, LexicalConsistencyScorer{}, LexicalRelevanceJudge{}, {});
  ASSERT_EQ(ann.sentences.size(), 1u);
  EXPECT_EQ(ann.sentences[0].labels, (std::vector<CitationLabel>{{1, ErrorType::Correct}}));
}

TEST(LabelAnswer, MismatchAndIrrelevanceFromPlantedFixture) {
  const auto q = citeforge::testing::planted_instance(0);
  // Sentence copied from passage 2 but cited as [1]; then an off-topic passage verbatim.
  const auto a = parse_cited_answer(
      "ancient farmers grew barley0 along rivers in the valley [1]. "
      "the festival of quix0 features lantern parades every spring [3].",
      4);
  const auto ann = label_answer(a, q, LexicalConsistencyScorer{}, LexicalRelevanceJudge{}, {});
  ASSERT_EQ(ann.sentences.size(), 2u);
  EXPECT_EQ(ann.sentences[0].labels[0].type, ErrorType::Mismatch);
  EXPECT_EQ(ann.sentences[1].labels[0].type, ErrorType::Irrelevance);
}

TEST(LabelAnswer, UncitedSentencesKeepTheirSlot) {
  const auto q = small_instance();
  const auto a = parse_cited_answer("It is day. The sky is blue [1][2].", 3);
  const auto ann = label_answer(a, q, LexicalConsistencyScorer{}, LexicalRelevanceJudge{}, {});
  ASSERT_EQ(ann.sentences.size(), 2u);
  EXPECT_EQ(ann.sentences[0].sentence, 1u);
  EXPECT_TRUE(ann.sentences[0].labels.empty());
  EXPECT_EQ(ann.sentences[1].labels,
            (std::vector<CitationLabel>{{1, ErrorType::Correct}, {2, ErrorType::Mismatch}}));
  EXPECT_TRUE(covers(ann, a));
  EXPECT_EQ(ann.citation_count(), 2u);
}

TEST(LabelAnswer, JudgeSkippedForMismatch) {
  const auto q = small_instance();
  const auto a = parse_cited_answer("The sky is blue [1][2].", 3);
  CountingJudge judge;
  label_answer(a, q, LexicalConsistencyScorer{}, judge, {});
  EXPECT_EQ(judge.calls, 1);
}

TEST(LabelAnswer, ScorerErrorsCarryLocation) {
  const auto q = small_instance();
  const auto a = parse_cited_answer("Fine. The sky is blue [3].", 3);
  try {
    label_answer(a, q, FailingScorer{}, LexicalRelevanceJudge{}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RemoteScorerUnavailable);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("s1"), std::string::npos);
    EXPECT_NE(msg.find("sentence 2"), std::string::npos);
  }
}

TEST(LabelAnswer, RecoversEveryPlantedLabel) {
  const auto corpus = citeforge::testing::planted_corpus();
  for (std::size_t k = 0; k < citeforge::testing::kPlantedQuestions; ++k) {
    const auto& q = corpus.instances()[k];
    const auto a = parse_cited_answer(citeforge::testing::planted_attempt(k), 4);
    EXPECT_EQ(label_answer(a, q, LexicalConsistencyScorer{}, LexicalRelevanceJudge{}, {}),
              citeforge::testing::planted_labels(k))
        << "question " << k;
  }
}

TEST(Annotation, SamePositions) {
  ReflectionAnnotation a{{{1, {{1, ErrorType::Correct}}}, {2, {}}}};
  ReflectionAnnotation b{{{1, {{1, ErrorType::Mismatch}}}, {2, {}}}};
  ReflectionAnnotation c{{{1, {{2, ErrorType::Correct}}}, {2, {}}}};
  ReflectionAnnotation d{{{1, {{1, ErrorType::Correct}}}}};
  EXPECT_TRUE(same_positions(a, b));
  EXPECT_FALSE(same_positions(a, c));
  EXPECT_FALSE(same_positions(a, d));
}

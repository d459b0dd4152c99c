#include <gtest/gtest.h>

#include "citeforge/citext.hpp"
#include "citeforge/error.hpp"

using namespace citeforge;

namespace {

std::vector<std::string> pieces(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& s : segment_sentences(text)) out.emplace_back(text.substr(s.begin, s.size()));
  return out;
}

}  // namespace

TEST(Segment, TwoTerminatedClauses) {
  EXPECT_EQ(pieces("A. B."), (std::vector<std::string>{"A.", "B."}));
}

TEST(Segment, AbbreviationGuardKeepsTitleInsideSentence) {
  EXPECT_EQ(pieces("See Dr. Smith. Done."),
            (std::vector<std::string>{"See Dr. Smith.", "Done."}));
  EXPECT_EQ(pieces("It costs 5 dollars, e.g. lunch. Fine."),
            (std::vector<std::string>{"It costs 5 dollars, e.g. lunch.", "Fine."}));
}

TEST(Segment, UnterminatedTextIsOneSentence) {
  EXPECT_EQ(pieces("One sentence only"), (std::vector<std::string>{"One sentence only"}));
}

TEST(Segment, TerminatorRunsQuotesAndBrackets) {
  EXPECT_EQ(pieces("Really?! Yes."), (std::vector<std::string>{"Really?!", "Yes."}));
  EXPECT_EQ(pieces("He said \"stop.\" Then left."),
            (std::vector<std::string>{"He said \"stop.\"", "Then left."}));
  EXPECT_EQ(pieces("Values (see fig. 2. above) agree. Ok."),
            (std::vector<std::string>{"Values (see fig. 2. above) agree.", "Ok."}));
  EXPECT_EQ(pieces("Version 3.5 shipped."), (std::vector<std::string>{"Version 3.5 shipped."}));
}

TEST(Segment, SpansExcludeWhitespaceAndEmptyThrows) {
  const auto spans = segment_sentences("  A.   B.  ");
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0], (SentenceSpan{2, 4}));
  EXPECT_EQ(spans[1], (SentenceSpan{7, 9}));
  EXPECT_THROW(segment_sentences("   "), Error);
}

TEST(ParseCited, TwoSentencesWithCitationSets) {
  const auto a = parse_cited_answer("Sky is blue [1]. Grass is green [2][3].", 3);
  ASSERT_EQ(a.sentences.size(), 2u);
  EXPECT_EQ(a.sentences[0].text, "Sky is blue.");
  EXPECT_EQ(a.sentences[0].citations, (std::vector<int>{1}));
  EXPECT_EQ(a.sentences[1].text, "Grass is green.");
  EXPECT_EQ(a.sentences[1].citations, (std::vector<int>{2, 3}));
  EXPECT_EQ(a.dropped_citation_count, 0u);
  EXPECT_EQ(a.citation_count(), 3u);
}

TEST(ParseCited, OutOfRangeIndexIsDroppedAndCounted) {
  const auto a = parse_cited_answer("Fact [4].", 3);
  ASSERT_EQ(a.sentences.size(), 1u);
  EXPECT_TRUE(a.sentences[0].citations.empty());
  EXPECT_EQ(a.sentences[0].text, "Fact.");
  EXPECT_EQ(a.dropped_citation_count, 1u);
}

TEST(ParseCited, NoMarkers) {
  const auto a = parse_cited_answer("No citations here.", 3);
  ASSERT_EQ(a.sentences.size(), 1u);
  EXPECT_TRUE(a.sentences[0].citations.empty());
  EXPECT_EQ(a.dropped_citation_count, 0u);
}

TEST(ParseCited, LiberalMarkerForms) {
  const auto a = parse_cited_answer("Blue [3, 1] sky [1]. Next [0][2].", 3);
  ASSERT_EQ(a.sentences.size(), 2u);
  EXPECT_EQ(a.sentences[0].text, "Blue sky.");
  EXPECT_EQ(a.sentences[0].citations, (std::vector<int>{1, 3}));
  EXPECT_EQ(a.sentences[1].citations, (std::vector<int>{2}));
  EXPECT_EQ(a.dropped_citation_count, 1u);
}

TEST(ParseCited, MarkersAfterTerminatorStayWithSentence) {
  const auto a = parse_cited_answer("Sky is blue. [1] Grass is green. [2]", 2);
  ASSERT_EQ(a.sentences.size(), 2u);
  EXPECT_EQ(a.sentences[0].text, "Sky is blue.");
  EXPECT_EQ(a.sentences[0].citations, (std::vector<int>{1}));
  EXPECT_EQ(a.sentences[1].citations, (std::vector<int>{2}));
}

TEST(ParseCited, NonMarkerBracketsAreText) {
  const auto a = parse_cited_answer("See [note] and [1a] here [2].", 3);
  ASSERT_EQ(a.sentences.size(), 1u);
  EXPECT_EQ(a.sentences[0].text, "See [note] and [1a] here.");
  EXPECT_EQ(a.sentences[0].citations, (std::vector<int>{2}));
}

TEST(ParseCited, SpansCoverRawInOrder) {
  const std::string raw = "One [1]. Two [2]! Three?";
  const auto a = parse_cited_answer(raw, 2);
  ASSERT_EQ(a.sentences.size(), 3u);
  std::size_t prev = 0;
  for (const auto& s : a.sentences) {
    EXPECT_GE(s.char_span.begin, prev);
    EXPECT_LT(s.char_span.begin, s.char_span.end);
    prev = s.char_span.end;
  }
  EXPECT_EQ(raw.substr(a.sentences[0].char_span.begin, a.sentences[0].char_span.size()), "One [1].");
  EXPECT_THROW(parse_cited_answer("", 2), Error);
}

TEST(Render, CanonicalPlacementBeforeFinalPunctuation) {
  CitedAnswer a;
  a.sentences.push_back({"Sky is blue.", {1}, {}});
  EXPECT_EQ(render_cited_answer(a), "Sky is blue [1].");
  a.sentences.push_back({"Grass is green", {}, {}});
  EXPECT_EQ(render_cited_answer(a), "Sky is blue [1]. Grass is green");
}

TEST(Render, MarkersAscending) {
  EXPECT_EQ(render_markers({3, 1}), "[1][3]");
  EXPECT_EQ(render_markers({}), "");
}

TEST(Render, ParseRenderNormalizesMarkerSpacing) {
  const auto a = parse_cited_answer("Sky is blue[2,1] .  Grass[3].", 3);
  EXPECT_EQ(render_cited_answer(a), "Sky is blue [1][2]. Grass [3].");
  EXPECT_TRUE(structurally_equal(parse_cited_answer(render_cited_answer(a), 3), a));
}

TEST(Strip, RemovesMarkersAndRepairsWhitespace) {
  EXPECT_EQ(strip_citations("Paris is the capital [1]."), "Paris is the capital.");
  EXPECT_EQ(strip_citations("A [1][2] B"), "A B");
  EXPECT_EQ(strip_citations("Nothing to see (here) [x]."), "Nothing to see (here) [x].");
  EXPECT_EQ(strip_citations("[1] Leading, trailing [2]"), "Leading, trailing");
}

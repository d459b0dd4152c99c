#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "citeforge/chains.hpp"
#include "citeforge/citext.hpp"
#include "citeforge/metrics.hpp"
#include "citeforge/rl.hpp"
#include "citeforge/scoring.hpp"

namespace {

using namespace citeforge;

std::string make_answer(int sentences) {
  std::string s;
  for (int i = 0; i < sentences; ++i) {
    s += "The harbor tower near the old bridge was rebuilt in 1887 by engineers ["
         + std::to_string(i % 4 + 1) + "][" + std::to_string((i + 1) % 4 + 1) + "]. ";
  }
  return s;
}

QAInstance make_instance() {
  QAInstance q;
  q.question_id = "bench";
  q.question = "when was the harbor tower rebuilt";
  for (int i = 0; i < 4; ++i) {
    q.passages.push_back({"p" + std::to_string(i), "",
                          "the harbor tower near the old bridge was rebuilt in 1887 after a storm "
                          "damaged the lantern room and the stone base " + std::to_string(i)});
  }
  q.gold_answer_groups = {{"1887"}};
  return q;
}

void BM_ParseCitedAnswer(benchmark::State& state) {
  const auto raw = make_answer(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(parse_cited_answer(raw, 4));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(raw.size()));
}
BENCHMARK(BM_ParseCitedAnswer)->Arg(4)->Arg(32)->Arg(256);

void BM_LabelAnswer(benchmark::State& state) {
  const auto q = make_instance();
  const auto a = parse_cited_answer(make_answer(static_cast<int>(state.range(0))), 4);
  const LexicalConsistencyScorer phi;
  const LexicalRelevanceJudge gamma;
  for (auto _ : state) benchmark::DoNotOptimize(label_answer(a, q, phi, gamma, {}));
}
BENCHMARK(BM_LabelAnswer)->Arg(4)->Arg(32);

void BM_EvaluateAnswer(benchmark::State& state) {
  const auto q = make_instance();
  const auto a = parse_cited_answer(make_answer(static_cast<int>(state.range(0))), 4);
  const LexicalConsistencyScorer phi;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_answer(a, q, phi, {}));
}
BENCHMARK(BM_EvaluateAnswer)->Arg(4)->Arg(32);

void BM_ComputeAdvantages(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<rl::BehaviorSample> samples(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].chain_id = std::to_string(i);
    samples[i].group_id = std::to_string(i / 8);
    samples[i].kind = static_cast<rl::BehaviorKind>(i % 3);
    samples[i].reward = u(rng);
    samples[i].logprob_old = -std::abs(u(rng));
    samples[i].logprob_ref = -std::abs(u(rng));
  }
  const rl::RlConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(rl::compute_advantages(samples, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeAdvantages)->Arg(96)->Arg(6144);

void BM_ReflectionTextRoundTrip(benchmark::State& state) {
  ReflectionAnnotation a;
  for (std::size_t i = 1; i <= 16; ++i) {
    a.sentences.push_back({i, {{1, ErrorType::Correct}, {3, ErrorType::Mismatch}}});
  }
  for (auto _ : state) benchmark::DoNotOptimize(parse_reflection_text(build_reflection_text(a)));
}
BENCHMARK(BM_ReflectionTextRoundTrip);

}  // namespace
BENCHMARK_MAIN();

#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "citeforge/chains.hpp"
#include "support/confusion_fixture.hpp"
#include "support/files.hpp"
#include "support/planted.hpp"

using namespace citeforge;
namespace ct = citeforge::testing;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<json> read_jsonl(const std::filesystem::path& p) {
  std::vector<json> v;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) v.push_back(json::parse(line));
  return v;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::ofstream c(corpus());
    write_corpus(ct::planted_corpus(), c);
    std::ofstream a(answers());
    for (std::size_t k = 0; k < ct::kPlantedQuestions; ++k) {
      a << json{{"question_id", ct::planted_id(k)}, {"answer", ct::planted_attempt(k)}}.dump() << '\n';
    }
    std::ofstream s(script());
    ct::planted_generator().write(s);
  }

  std::string corpus() const { return (dir / "corpus.jsonl").string(); }
  std::string answers() const { return (dir / "answers.jsonl").string(); }
  std::string script() const { return (dir / "script.jsonl").string(); }
  std::string path(const std::string& name) const { return (dir / name).string(); }

  ct::TempDir dir;
};

}  // namespace

TEST_F(CliTest, MetricsHappyPath) {
  const auto r = run({"metrics", "--corpus", corpus(), "--answers", answers(), "--out", path("m.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = read_jsonl(path("m.jsonl"));
  ASSERT_EQ(lines.size(), 21u);
  EXPECT_EQ(lines[0]["kind"], "instance");
  EXPECT_EQ(lines[0]["question_id"], "q0");
  EXPECT_DOUBLE_EQ(lines[0]["citation_f1"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(lines[3]["em_recall"].get<double>(), 0.0);
  EXPECT_EQ(lines[20]["kind"], "summary");
  EXPECT_EQ(lines[20]["instances"], 20);
  EXPECT_TRUE(lines[20]["rouge_l"].is_null());
  EXPECT_DOUBLE_EQ(lines[20]["em_recall"].get<double>(), 0.375);
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
  const auto r = run({"metrics", "--frobnicate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"nonsense"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, UnreachableRemoteScorer) {
  const auto r = run({"--scorer", "remote", "--scorer-url", "http://down", "label", "--corpus", corpus(),
                      "--answers", answers(), "--out", path("l.jsonl")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("RemoteScorerUnavailable"), std::string::npos) << r.err;
  EXPECT_FALSE(std::filesystem::exists(path("l.jsonl")));
}

TEST_F(CliTest, SubcommandFlagsAfterGlobalsAndViceVersa) {
  const auto r = run({"label", "--corpus", corpus(), "--answers", answers(), "--out", path("l.jsonl"),
                      "--summary", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["MISMATCH"], 25);
}

TEST_F(CliTest, LabelWritesPlantedLabels) {
  ASSERT_EQ(run({"label", "--corpus", corpus(), "--answers", answers(), "--out", path("l.jsonl")}).code, 0);
  const auto lines = read_jsonl(path("l.jsonl"));
  ASSERT_EQ(lines.size(), 20u);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    EXPECT_EQ(lines[k]["reflection"], build_reflection_text(ct::planted_labels(k)));
    EXPECT_EQ(lines[k]["dropped_citations"], 0);
  }
  EXPECT_EQ(lines[2]["annotation"][0]["citations"][1]["label"], "MISMATCH");
}

TEST_F(CliTest, MissingInputsAreRuntimeErrors) {
  auto r = run({"metrics", "--corpus", path("nope.jsonl"), "--answers", answers(), "--out", path("m.jsonl")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(json::parse(r.err)["error"], "MissingFile");
  EXPECT_FALSE(std::filesystem::exists(path("m.jsonl")));

  ct::write_file(path("bad.jsonl"), "{\"question_id\":\"q0\",\"answer\":\"x [1].\"}\n{\"question_id\":\"zz\",\"answer\":\"y\"}\n");
  r = run({"metrics", "--corpus", corpus(), "--answers", path("bad.jsonl"), "--out", path("m.jsonl")});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(json::parse(r.err)["error"], "UnknownQuestionId");
  EXPECT_FALSE(std::filesystem::exists(path("m.jsonl")));

  r = run({"metrics", "--corpus", corpus(), "--answers", answers()});
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, ConfigPrecedence) {
  ct::write_file(path("cfg.json"), R"({"tau_cite": 0.95, "scorer": "remote", "scorer_url": "http://down"})");
  // The --scorer flag beats the file's remote scorer.
  auto r = run({"--config", path("cfg.json"), "--scorer", "builtin", "--script", script(), "build-chains",
           "--corpus", corpus(), "--out", path("c.jsonl"), "--summary"});
  ASSERT_EQ(r.code, 0) << r.err;
  // tau_cite 0.95 from the file still rejects nothing that was accepted (all accepted have F1 = 1).
  EXPECT_EQ(json::parse(r.out)["accepted"], 5);

  ct::write_file(path("cfg2.json"), R"({"tau_cite": 1.5})");
  r = run({"--config", path("cfg2.json"), "metrics", "--corpus", corpus(), "--answers", answers(), "--out",
           path("m.jsonl")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err.substr(0, r.err.find('\n')))["error"], "InvalidConfig");

  ct::write_file(path("cfg3.json"), R"({"tau_cite": "high"})");
  EXPECT_EQ(run({"--config", path("cfg3.json"), "metrics", "--corpus", corpus(), "--answers", answers(),
                 "--out", path("m.jsonl")})
                .code,
            2);
}

TEST_F(CliTest, EnvironmentSuppliesScorerUrl) {
  ::setenv("CITEFORGE_SCORER_URL", "http://down", 1);
  const auto r = run({"--scorer", "remote", "label", "--corpus", corpus(), "--answers", answers(), "--out",
                      path("l.jsonl")});
  ::unsetenv("CITEFORGE_SCORER_URL");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("RemoteScorerUnavailable"), std::string::npos);
  EXPECT_EQ(run({"--scorer", "remote", "label", "--corpus", corpus(), "--answers", answers(), "--out",
                 path("l.jsonl")})
                .code,
            2);
}

TEST_F(CliTest, BuildChainsAndBootstrap) {
  auto r = run({"--script", script(), "build-chains", "--corpus", corpus(), "--out", path("chains.jsonl"),
                "--sft-out", path("sft.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_jsonl(path("chains.jsonl")).size(), 20u);
  EXPECT_EQ(read_jsonl(path("sft.jsonl")).size(), 5u);

  r = run({"--script", script(), "--summary", "bootstrap", "--corpus", corpus(), "--rounds", "2", "--out",
           path("boot.jsonl"), "--chains-out", path("bootchains.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto sft = read_jsonl(path("boot.jsonl"));
  ASSERT_EQ(sft.size(), 10u);
  EXPECT_EQ(sft[5]["provenance"]["round"], 2);
  const auto sections = parse_chain_text(sft[0]["target"].get<std::string>());
  EXPECT_EQ(sections.reflection, build_reflection_text(ct::planted_labels(0)));

  r = run({"bootstrap", "--corpus", corpus(), "--out", path("boot2.jsonl")});
  EXPECT_EQ(r.code, 2);  // mock generator without a script
}

TEST_F(CliTest, OutputsAreByteDeterministic) {
  for (const char* name : {"a.jsonl", "b.jsonl"}) {
    ASSERT_EQ(run({"--script", script(), "--seed", "5", "bootstrap", "--corpus", corpus(), "--out", path(name)}).code, 0);
  }
  EXPECT_EQ(ct::read_file(path("a.jsonl")), ct::read_file(path("b.jsonl")));
  for (const char* name : {"n1.jsonl", "n2.jsonl"}) {
    ASSERT_EQ(run({"--seed", "9", "inject-noise", "--corpus", corpus(), "--out", path(name)}).code, 0);
  }
  EXPECT_EQ(ct::read_file(path("n1.jsonl")), ct::read_file(path("n2.jsonl")));
}

TEST_F(CliTest, InjectNoise) {
  ASSERT_EQ(run({"--seed", "1", "inject-noise", "--corpus", corpus(), "--question-id", "q3", "--out",
                 path("n.jsonl")})
                .code,
            0);
  const auto lines = read_jsonl(path("n.jsonl"));
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0]["question_id"], "q3");
  EXPECT_EQ(lines[0]["passages"].size(), 4u);
  EXPECT_EQ(run({"inject-noise", "--corpus", corpus(), "--question-id", "zz", "--out", path("n.jsonl")}).code, 1);
}

TEST_F(CliTest, RewardsAndAdvantages) {
  std::ofstream roll(path("roll.jsonl"));
  const auto gen = ct::planted_generator();
  for (std::size_t k = 0; k < 4; ++k) {
    GeneratorRequest req;
    req.question_id = ct::planted_id(k);
    req.mode = GenerationMode::FullChain;
    roll << json{{"chain_id", "c" + std::to_string(k)}, {"question_id", req.question_id}, {"group_id", "g"},
                 {"text", gen.generate(req).text}}
                .dump()
         << '\n';
  }
  roll << json{{"chain_id", "bad"}, {"question_id", "q0"}, {"group_id", "g"}, {"text", "garbled"}}.dump() << '\n';
  roll.close();

  auto r = run({"rewards", "--corpus", corpus(), "--rollouts", path("roll.jsonl"), "--out", path("rw.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rw = read_jsonl(path("rw.jsonl"));
  ASSERT_EQ(rw.size(), 15u);
  // c0: attempt (0.5, 0.5) misses the attempt thresholds; reflection all CORRECT vs C/M.
  EXPECT_EQ(rw[0]["kind"], "attempt");
  EXPECT_DOUBLE_EQ(rw[0]["reward"].get<double>(), -1.0);
  EXPECT_EQ(rw[1]["kind"], "reflection");
  EXPECT_DOUBLE_EQ(rw[1]["reward"].get<double>(), 0.0);
  EXPECT_EQ(rw[2]["kind"], "correction");
  EXPECT_DOUBLE_EQ(rw[2]["reward"].get<double>(), 2.0);
  EXPECT_EQ(rw[12]["chain_id"], "bad");
  EXPECT_DOUBLE_EQ(rw[14]["reward"].get<double>(), -2.0);

  std::ofstream lp(path("lp.jsonl"));
  for (const auto& rec : rw) {
    lp << json{{"chain_id", rec["chain_id"]}, {"kind", rec["kind"]}, {"policy", -1.0}, {"old", -1.0},
               {"ref", -1.0}}
              .dump()
       << '\n';
  }
  lp.close();
  r = run({"--summary", "advantages", "--rewards", path("rw.jsonl"), "--logprobs", path("lp.jsonl"), "--out",
           path("adv.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto adv = read_jsonl(path("adv.jsonl"));
  ASSERT_EQ(adv.size(), 15u);
  double sum = 0;
  for (const auto& a : adv)
    if (a["kind"] == "attempt") sum += a["advantage"].get<double>();
  EXPECT_NEAR(sum, 0.0, 1e-12);
  EXPECT_TRUE(json::parse(r.out).contains("clipped_objective"));

  std::ofstream partial(path("lp2.jsonl"));
  partial << json{{"chain_id", "c0"}, {"kind", "attempt"}, {"policy", -1.0}, {"old", -1.0}, {"ref", -1.0}}.dump();
  partial.close();
  r = run({"advantages", "--rewards", path("rw.jsonl"), "--logprobs", path("lp2.jsonl"), "--out", path("adv2.jsonl")});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(std::filesystem::exists(path("adv2.jsonl")));
}

TEST_F(CliTest, EvalReflection) {
  ct::write_file(path("gold.jsonl"),
                 json{{"question_id", "a"}, {"reflection", ct::kConfusionGold}}.dump() + "\n" +
                     json{{"question_id", "b"}, {"reflection", "Sentence 1: [1] CORRECT"}}.dump() + "\n" +
                     json{{"question_id", "c"}, {"reflection", "Sentence 1: [1] CORRECT"}}.dump() + "\n");
  ct::write_file(path("pred.jsonl"),
                 json{{"question_id", "a"},
                      {"text", render_chain_text({"x", ct::kConfusionPredicted, "y"})}}
                         .dump() +
                     "\n" + json{{"question_id", "b"}, {"reflection", "Sentence 1: [1] WRONG"}}.dump() + "\n" +
                     json{{"question_id", "c"}, {"reflection", "Sentence 1: [2] CORRECT"}}.dump() + "\n");
  const auto r = run({"eval-reflection", "--predicted", path("pred.jsonl"), "--gold", path("gold.jsonl"),
                      "--out", path("rep.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = read_jsonl(path("rep.jsonl"));
  ASSERT_EQ(rep.size(), 4u);
  EXPECT_EQ(rep[0]["status"], "ok");
  EXPECT_EQ(rep[1]["status"], "unparseable");
  EXPECT_EQ(rep[2]["status"], "shape_mismatch");
  const auto& s = rep[3];
  EXPECT_EQ(s["citations"], 12);
  EXPECT_EQ(s["matches"], 7);
  EXPECT_EQ(s["confusion"]["MISMATCH"]["CORRECT"], 1);
  EXPECT_EQ(s["confusion"]["CORRECT"]["CORRECT"], 3);
  EXPECT_EQ(s["unparseable"], 1);
}

#include <gtest/gtest.h>

#include <sstream>

#include "ivz/cli/cli.hpp"
#include "service_fixture.hpp"

using namespace ivz;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Cli, NoArgumentsPrintsUsage) {
  const auto r = run({});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) {
  const auto r = run({"eval", "--frobnicate", "3"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({"nosuch"}).code, 1);
}

TEST(Cli, EvalFixtureGivesThreeQuarters) {
  test::TempDir dir;
  const auto tags = test::fixture_tags();
  io::write_json(dir.path / "req.json", {{"pred", {0, 1}}, {"gt", {2, 3}}, {"tags", tags}});
  const auto r = run({"eval", "--input", (dir.path / "req.json").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "{\"precision\":0.750000,\"recall\":0.750000,\"f1\":0.750000}\n");
}

TEST(Cli, DataErrorsExitTwoWithJsonOnStderr) {
  test::TempDir dir;
  const auto r = run({"eval", "--input", (dir.path / "absent.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"]["code"], "io");
  io::write_json(dir.path / "bad.json", {{"pred", {9}}, {"gt", {0}}, {"tags", {{"a"}}}});
  EXPECT_EQ(run({"eval", "--input", (dir.path / "bad.json").string()}).code, 2);
}

TEST(Cli, GradcheckReportsWorstError) {
  const auto r = run({"gradcheck"});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_LT(j["worst_relative_error"].get<double>(), 1e-4);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_GE(j["entries"].size(), 9u);
}

TEST(Cli, SynthInferEvalQuerygenRoundTrip) {
  test::ServiceData data;
  const std::string dd = data.dir.path.string();
  const auto inf = run({"infer", "--data-dir", dd, "--checkpoint", "demo", "--video", "video_0", "--c1",
                        data.concept_a(), "--c2", data.concept_b()});
  ASSERT_EQ(inf.code, 0) << inf.err;
  EXPECT_EQ(nlohmann::json::parse(inf.out)["intent_probs"].size(), 20u);
  // Checkpoint by path gives the same body.
  const auto by_path = run({"infer", "--data-dir", dd, "--checkpoint", (data.dir.path / "checkpoints" / "demo.ivzr").string(),
                            "--video", "video_0", "--c1", data.concept_a(), "--c2", data.concept_b()});
  EXPECT_EQ(by_path.out, inf.out);
  EXPECT_EQ(run({"infer", "--data-dir", dd, "--checkpoint", "demo", "--video", "video_0", "--c1", "zebra", "--c2", "x"}).code, 2);
  EXPECT_EQ(run({"infer", "--data-dir", dd, "--checkpoint", "demo", "--video", "video_0"}).code, 2);

  const auto pred = run({"eval", "--data-dir", dd, "--video", "video_0", "--checkpoint", "demo", "--c1", data.concept_a(),
                         "--c2", data.concept_b(), "--budget", "4"});
  ASSERT_EQ(pred.code, 0) << pred.err;
  EXPECT_EQ(nlohmann::json::parse(pred.out)["summary"].size(), 4u);
  const auto thr = run({"eval", "--data-dir", dd, "--video", "video_0", "--checkpoint", "demo", "--c1", data.concept_a(),
                        "--c2", data.concept_b(), "--threshold", "2.0"});
  EXPECT_EQ(nlohmann::json::parse(thr.out)["summary"].size(), 0u);

  const auto qg = run({"querygen", "--data-dir", dd, "--video", "video_0"});
  ASSERT_EQ(qg.code, 0) << qg.err;
  const auto shots = nlohmann::json::parse(qg.out)["shots"].get<std::vector<std::size_t>>();
  EXPECT_EQ(shots, querygen::generate_visual_query(data.dataset.videos[0].annotations[0].summary,
                                                   data.dataset.videos[0].tags));
}

TEST(Cli, SynthIsDeterministic) {
  test::TempDir a, b;
  const std::vector<std::string> flags{"--shot-count", "32", "--dim", "8", "--vocab", "6", "--rules", "2", "--videos", "2"};
  auto args = [&](const test::TempDir& d) {
    std::vector<std::string> v{"synth", "--data-dir", d.path.string()};
    v.insert(v.end(), flags.begin(), flags.end());
    return v;
  };
  const auto ra = run(args(a)), rb = run(args(b));
  ASSERT_EQ(ra.code, 0) << ra.err;
  EXPECT_EQ(test::snapshot(a.path), test::snapshot(b.path));
  EXPECT_EQ(run({"synth", "--data-dir", a.path.string(), "--vocab", "1"}).code, 2);
}

TEST(Cli, TrainWritesLoadableCheckpoint) {
  test::TempDir dir;
  ASSERT_EQ(run({"synth", "--data-dir", dir.path.string(), "--shot-count", "64", "--dim", "8", "--vocab", "6", "--rules",
                 "2", "--videos", "2"})
                .code,
            0);
  io::write_json(dir.path / "cfg.json", {{"model", {{"preset", "tiny"}}}, {"train", {{"epochs", 2}}}});
  const auto r = run({"train", "--data-dir", dir.path.string(), "--config", (dir.path / "cfg.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["record"]["epochs"].size(), 2u);
  const auto ck = io::load_checkpoint(j["checkpoint"].get<std::string>());
  EXPECT_EQ(ck.config.word_dim, io::kWordDim);
  EXPECT_EQ(ck.meta["train"]["epochs"], 2);
  // Transfer: visual queries, summary frozen, starting from the text checkpoint.
  const auto t = run({"train", "--data-dir", dir.path.string(), "--init-from", "model", "--query", "visual",
                      "--freeze-summary", "--epochs", "1", "--checkpoint", (dir.path / "visual.ivzr").string()});
  EXPECT_EQ(t.code, 0) << t.err;
}

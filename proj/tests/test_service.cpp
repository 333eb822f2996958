#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <thread>

#include "ivz/cli/cli.hpp"
#include "ivz/service/service.hpp"
#include "schema_util.hpp"
#include "service_fixture.hpp"

using namespace ivz;
using namespace ivz::service;

namespace {

Request get(const std::string& path, std::map<std::string, std::string> params = {}) {
  return {"GET", path, std::move(params), ""};
}

Request post(const std::string& path, const nlohmann::json& body) { return {"POST", path, {}, body.dump()}; }

ServiceConfig config_for(const test::ServiceData& data) {
  ServiceConfig c;
  c.data_dir = data.dir.path;
  return c;
}

std::string cli_stdout(const std::vector<std::string>& args, int* code = nullptr) {
  std::ostringstream out, err;
  const int rc = cli::run(args, out, err);
  if (code) *code = rc;
  std::string s = out.str();
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data_ = new test::ServiceData();
    svc_ = new Service(config_for(*data_));
  }
  static void TearDownTestSuite() {
    delete svc_;
    delete data_;
  }
  static test::ServiceData* data_;
  static Service* svc_;
};

test::ServiceData* ServiceTest::data_ = nullptr;
Service* ServiceTest::svc_ = nullptr;

}  // namespace

TEST_F(ServiceTest, PrepareListsArtifacts) {
  const auto r = svc_->handle(get("/api/prepare"));
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = nlohmann::json::parse(r.body);
  EXPECT_EQ(j["videos"], (nlohmann::json{"bare", "video_0", "video_1", "video_2"}));
  EXPECT_EQ(j["checkpoints"], nlohmann::json{"demo"});
  EXPECT_EQ(j["concepts"].size(), 8u);
}

TEST(Service, PrepareOnEmptyAndMissingDirectories) {
  test::TempDir empty;
  ServiceConfig c;
  c.data_dir = empty.path;
  const auto r = Service(c).handle(get("/api/prepare"));
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, R"({"checkpoints":[],"concepts":[],"videos":[]})");
  c.data_dir = empty.path / "absent";
  const auto missing = Service(c).handle(get("/api/prepare"));
  EXPECT_EQ(missing.status, 500);
  EXPECT_NE(missing.body.find("not readable"), std::string::npos);
}

TEST_F(ServiceTest, InferTextShapesAndProbabilities) {
  const auto r = svc_->handle(
      get("/api/infer", {{"c1", data_->concept_a()}, {"c2", data_->concept_b()}, {"video", "video_1"}, {"ckpt", "demo"}}));
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(r.content_type, "application/json");
  const auto j = nlohmann::json::parse(r.body);
  ASSERT_EQ(j["intent_probs"].size(), 20u);
  double sum = 0;
  for (double p : j["intent_probs"]) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-6);
  ASSERT_EQ(j["intent_shot_scores"].size(), 20u);
  for (const auto& row : j["intent_shot_scores"]) {
    ASSERT_EQ(row.size(), 64u);
    for (double s : row) {
      EXPECT_GT(s, 0.0);
      EXPECT_LT(s, 1.0);
    }
  }
  EXPECT_EQ(j["video"], "video_1");
  EXPECT_EQ(j["checkpoint"], "demo");
  EXPECT_EQ(j["delta"], 0.05);
}

TEST_F(ServiceTest, InferErrors) {
  const auto a = data_->concept_a(), b = data_->concept_b();
  EXPECT_EQ(svc_->handle(get("/api/infer", {{"c1", a}, {"c2", b}, {"video", "nope"}, {"ckpt", "demo"}})).status, 404);
  EXPECT_EQ(svc_->handle(get("/api/infer", {{"c1", a}, {"c2", b}, {"video", "video_0"}, {"ckpt", "nope"}})).status, 404);
  const auto vocab = svc_->handle(get("/api/infer", {{"c1", "zebra"}, {"c2", b}, {"video", "video_0"}, {"ckpt", "demo"}}));
  EXPECT_EQ(vocab.status, 400);
  EXPECT_NE(vocab.body.find("vocabulary has 8 concepts"), std::string::npos) << vocab.body;
  EXPECT_EQ(nlohmann::json::parse(vocab.body)["error"]["code"], "vocabulary");
  EXPECT_EQ(svc_->handle(get("/api/infer", {{"c1", a}, {"video", "video_0"}, {"ckpt", "demo"}})).status, 400);
  EXPECT_EQ(svc_->handle(get("/api/nothing")).status, 404);
}

TEST_F(ServiceTest, RepeatedRequestIsCachedAndIdentical) {
  const auto req = get("/api/infer", {{"c1", data_->concept_b()}, {"c2", data_->concept_a()}, {"video", "video_2"}, {"ckpt", "demo"}});
  const auto first = svc_->handle(req);
  const auto second = svc_->handle(req);
  ASSERT_EQ(first.status, 200);
  EXPECT_STREQ(first.cache, "miss");
  EXPECT_STREQ(second.cache, "hit");
  EXPECT_EQ(first.body, second.body);
  // A fresh service (cold cache) produces the same bytes.
  Service cold(config_for(*data_));
  EXPECT_EQ(cold.handle(req).body, first.body);
}

TEST_F(ServiceTest, ConcurrentRequestsAgree) {
  const auto req = get("/api/infer", {{"c1", data_->concept_a()}, {"c2", data_->concept_b()}, {"video", "video_0"}, {"ckpt", "demo"}});
  Service svc(config_for(*data_));
  std::vector<std::string> bodies(6);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < bodies.size(); ++i) threads.emplace_back([&, i] { bodies[i] = svc.handle(req).body; });
  for (auto& t : threads) t.join();
  for (const auto& b : bodies) EXPECT_EQ(b, bodies[0]);
}

TEST_F(ServiceTest, InferVisual) {
  const auto ok = svc_->handle(post("/api/infer/visual", {{"video", "video_0"}, {"ckpt", "demo"}, {"shots", {3, 9, 40}}}));
  ASSERT_EQ(ok.status, 200) << ok.body;
  EXPECT_EQ(nlohmann::json::parse(ok.body)["intent_probs"].size(), 20u);
  EXPECT_EQ(svc_->handle(post("/api/infer/visual", {{"video", "video_0"}, {"ckpt", "demo"}, {"shots", {64}}})).status, 400);
  EXPECT_EQ(svc_->handle(post("/api/infer/visual", {{"video", "video_0"}, {"ckpt", "demo"}, {"shots", {2, 2}}})).status, 400);
  EXPECT_EQ(svc_->handle(post("/api/infer/visual", {{"video", "video_0"}, {"ckpt", "demo"}, {"shots", {-1}}})).status, 400);
  EXPECT_EQ(svc_->handle(post("/api/infer/visual", {{"video", "video_0"}, {"ckpt", "demo"}})).status, 400);
  EXPECT_EQ(svc_->handle({"POST", "/api/infer/visual", {}, "{not json"}).status, 400);
  EXPECT_EQ(svc_->handle(post("/api/infer/visual", {{"video", "zz"}, {"ckpt", "demo"}, {"shots", {1}}})).status, 404);
}

TEST_F(ServiceTest, FramesAndAnimations) {
  const auto png = svc_->handle(get("/api/shot/frame", {{"video", "video_0"}, {"shot", "7"}}));
  ASSERT_EQ(png.status, 200);
  EXPECT_EQ(png.content_type, "image/png");
  EXPECT_EQ(png.body.substr(1, 3), "PNG");
  EXPECT_EQ(png.body, svc_->handle(get("/api/shot/frame", {{"video", "video_0"}, {"shot", "7"}})).body);
  const auto gif = svc_->handle(get("/api/shot/gif", {{"video", "video_0"}, {"shot", "63"}}));
  ASSERT_EQ(gif.status, 200);
  EXPECT_EQ(gif.content_type, "image/gif");
  EXPECT_EQ(gif.body.substr(0, 6), "GIF89a");
  EXPECT_EQ(svc_->handle(get("/api/shot/frame", {{"video", "video_0"}, {"shot", "64"}})).status, 404);
  EXPECT_EQ(svc_->handle(get("/api/shot/gif", {{"video", "video_0"}, {"shot", "64"}})).status, 404);
  EXPECT_EQ(svc_->handle(get("/api/shot/frame", {{"video", "video_0"}, {"shot", "x1"}})).status, 400);
  EXPECT_EQ(svc_->handle(get("/api/shot/frame", {{"video", "nope"}, {"shot", "1"}})).status, 404);
}

TEST_F(ServiceTest, EvaluateExamples) {
  const auto& gt = data_->dataset.videos[0].annotations[0].summary;
  const auto perfect = svc_->handle(post("/api/evaluate", {{"video", "video_0"}, {"summary", gt}}));
  ASSERT_EQ(perfect.status, 200) << perfect.body;
  EXPECT_EQ(perfect.body, R"({"precision":1.000000,"recall":1.000000,"f1":1.000000})");
  const auto empty = svc_->handle(post("/api/evaluate", {{"video", "video_0"}, {"summary", nlohmann::json::array()}}));
  EXPECT_EQ(empty.body, R"({"precision":0.000000,"recall":0.000000,"f1":0.000000})");
  EXPECT_EQ(svc_->handle(post("/api/evaluate", {{"video", "bare"}, {"summary", {1}}})).status, 404);
  EXPECT_EQ(svc_->handle(post("/api/evaluate", {{"video", "video_0"}, {"summary", {64}}})).status, 400);
  EXPECT_EQ(svc_->handle(post("/api/evaluate", {{"video", "video_0"}, {"summary", {1, 1}}})).status, 400);
  EXPECT_EQ(svc_->handle(post("/api/evaluate", {{"video", "video_0"}, {"summary", {"a"}}})).status, 400);
  EXPECT_EQ(svc_->handle(post("/api/evaluate", {{"video", "video_0"}, {"summary", {1}}, {"c1", "x"}, {"c2", "y"}})).status, 404);
}

TEST_F(ServiceTest, EvaluateMatchesCliOnRandomSummaries) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 20; ++i) {
    const std::string vid = "video_" + std::to_string(rng() % 3);
    std::vector<std::size_t> all(64);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<std::size_t> summary(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(rng() % 10));
    std::vector<std::size_t> mask(all.begin() + 10, all.begin() + 10 + static_cast<std::ptrdiff_t>(rng() % 3));
    const auto svc = svc_->handle(post("/api/evaluate", {{"video", vid}, {"summary", summary}, {"mask", mask}}));
    ASSERT_EQ(svc.status, 200);
    std::vector<std::string> args{"eval", "--data-dir", data_->dir.path.string(), "--video", vid,
                                  "--summary", nlohmann::json(summary).dump(), "--mask", nlohmann::json(mask).dump()};
    int code = -1;
    EXPECT_EQ(cli_stdout(args, &code), svc.body) << "summary " << i;
    EXPECT_EQ(code, 0);
  }
}

TEST_F(ServiceTest, InferMatchesCli) {
  const auto a = data_->concept_a(), b = data_->concept_b();
  const auto text = svc_->handle(get("/api/infer", {{"c1", a}, {"c2", b}, {"video", "video_1"}, {"ckpt", "demo"}}));
  EXPECT_EQ(cli_stdout({"infer", "--data-dir", data_->dir.path.string(), "--checkpoint", "demo", "--video", "video_1",
                        "--c1", a, "--c2", b}),
            text.body);
  const auto visual = svc_->handle(post("/api/infer/visual", {{"video", "video_1"}, {"ckpt", "demo"}, {"shots", {5, 6, 30}}}));
  EXPECT_EQ(cli_stdout({"infer", "--data-dir", data_->dir.path.string(), "--checkpoint", "demo", "--video", "video_1",
                        "--shots", "5,6,30"}),
            visual.body);
}

TEST_F(ServiceTest, ResponsesValidateAgainstSchemas) {
  const auto a = data_->concept_a(), b = data_->concept_b();
  std::vector<std::pair<std::string, std::string>> docs;
  docs.emplace_back("prepare.json", svc_->handle(get("/api/prepare")).body);
  docs.emplace_back("inference.json",
                    svc_->handle(get("/api/infer", {{"c1", a}, {"c2", b}, {"video", "video_0"}, {"ckpt", "demo"}})).body);
  docs.emplace_back("inference.json",
                    svc_->handle(post("/api/infer/visual", {{"video", "video_0"}, {"ckpt", "demo"}, {"shots", {1, 2}}})).body);
  docs.emplace_back("evaluation.json", svc_->handle(post("/api/evaluate", {{"video", "video_0"}, {"summary", {1, 2}}})).body);
  for (const auto& bad : {get("/api/infer", {{"c1", "zebra"}, {"c2", b}, {"video", "video_0"}, {"ckpt", "demo"}}),
                          get("/api/shot/frame", {{"video", "video_0"}, {"shot", "99"}}),
                          post("/api/evaluate", {{"video", "bare"}, {"summary", {1}}})})
    docs.emplace_back("error.json", svc_->handle(bad).body);
  docs.emplace_back("infer_visual_request.json", R"({"video":"video_0","ckpt":"demo","shots":[1,2]})");
  docs.emplace_back("evaluate_request.json", R"({"video":"video_0","summary":[1,2],"mask":[3]})");
  const auto report = test::validate_schemas(docs);
  EXPECT_TRUE(report.ok) << report.output;
}

TEST_F(ServiceTest, ServerNeverWritesToDataDirectory) {
  const auto before = test::snapshot(data_->dir.path);
  Service svc(config_for(*data_));
  svc.handle(get("/api/infer", {{"c1", data_->concept_a()}, {"c2", data_->concept_b()}, {"video", "video_0"}, {"ckpt", "demo"}}));
  svc.handle(post("/api/evaluate", {{"video", "video_0"}, {"summary", {1}}}));
  svc.handle(get("/api/shot/gif", {{"video", "video_0"}, {"shot", "1"}}));
  EXPECT_EQ(test::snapshot(data_->dir.path), before);
}

TEST_F(ServiceTest, OverHttp) {
  httplib::Server server;
  std::ostringstream log;
  mount(server, *svc_, &log);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  const auto prep = client.Get("/api/prepare");
  ASSERT_TRUE(prep);
  EXPECT_EQ(prep->status, 200);
  EXPECT_EQ(prep->get_header_value("Content-Type"), "application/json");
  EXPECT_EQ(prep->body, svc_->handle(get("/api/prepare")).body);
  const auto png = client.Get("/api/shot/frame?video=video_0&shot=3");
  ASSERT_TRUE(png);
  EXPECT_EQ(png->get_header_value("Content-Type"), "image/png");
  const auto gif = client.Get("/api/shot/gif?video=video_0&shot=64");
  ASSERT_TRUE(gif);
  EXPECT_EQ(gif->status, 404);
  const auto ev = client.Post("/api/evaluate", R"({"video":"video_0","summary":[]})", "application/json");
  ASSERT_TRUE(ev);
  EXPECT_EQ(ev->body, R"({"precision":0.000000,"recall":0.000000,"f1":0.000000})");
  server.stop();
  loop.join();
  std::istringstream lines(log.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("status") && j.contains("path") && j.contains("ms"));
    ++n;
  }
  EXPECT_EQ(n, 4);
}

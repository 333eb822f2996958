#include <gtest/gtest.h>

#include "ivz/model/pathways.hpp"
#include "test_util.hpp"

using namespace ivz;
using ivz::test::random_tensor;

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

/// Independent composition of the per-layer ceil(T/stride) rule.
std::size_t composed_length(std::size_t t, const model::PathwaySpec& p) {
  for (const auto& l : {p.conv1, p.pool1, p.conv2, p.pool2}) t = ceil_div(t, l.stride);
  return t;
}

}  // namespace

TEST(PathwayConfig, StandardTable) {
  const auto cfg = model::PathwayConfig::standard(64);
  const auto& c = cfg.coarse;
  const auto& f = cfg.fine;
  EXPECT_EQ((std::vector<std::size_t>{c.conv1.kernel, c.conv1.stride, c.conv1.channels}),
            (std::vector<std::size_t>{5, 8, 1024}));
  EXPECT_EQ((std::vector<std::size_t>{c.pool1.kernel, c.pool1.stride}), (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ((std::vector<std::size_t>{c.conv2.kernel, c.conv2.stride, c.conv2.channels}),
            (std::vector<std::size_t>{5, 1, 1024}));
  EXPECT_EQ((std::vector<std::size_t>{c.pool2.kernel, c.pool2.stride}), (std::vector<std::size_t>{3, 2}));
  EXPECT_EQ((std::vector<std::size_t>{f.conv1.kernel, f.conv1.stride, f.conv1.channels}),
            (std::vector<std::size_t>{5, 1, 256}));
  EXPECT_EQ((std::vector<std::size_t>{f.pool1.kernel, f.pool1.stride}), (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ((std::vector<std::size_t>{f.conv2.kernel, f.conv2.stride, f.conv2.channels}),
            (std::vector<std::size_t>{5, 1, 256}));
  EXPECT_EQ((std::vector<std::size_t>{f.pool2.kernel, f.pool2.stride}), (std::vector<std::size_t>{2, 2}));
}

TEST(Pathways, StandardShapes) {
  model::GsPathways<float> pw(model::PathwayConfig::standard(8));
  nn::Init init(1);
  pw.init(init);
  const std::vector<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>> cases = {
      {256, {64, 16}}, {16, {4, 1}}, {100, {25, 7}}};
  for (const auto& [t, expect] : cases) {
    const auto out = pw.forward(random_tensor<float>({t, 8}, t));
    EXPECT_EQ(out.fine.shape(), (Shape{expect.first, 256})) << t;
    EXPECT_EQ(out.coarse.shape(), (Shape{expect.second, 1024})) << t;
    EXPECT_EQ(expect.first, composed_length(t, pw.config.fine));
    EXPECT_EQ(expect.second, composed_length(t, pw.config.coarse));
  }
}

TEST(Pathways, LengthsFollowCeilRuleForAllT) {
  model::GsPathways<float> pw(model::PathwayConfig::narrow(3, 2, 2));
  for (std::size_t t = 16; t <= 300; t += 7) {
    const auto out = pw.forward(Tensor<float>({t, 3}));
    EXPECT_EQ(out.fine.rows(), ceil_div(t, 4));
    EXPECT_EQ(out.coarse.rows(), ceil_div(t, 16));
    EXPECT_EQ(out.fine.rows(), composed_length(t, pw.config.fine));
    EXPECT_EQ(out.coarse.rows(), composed_length(t, pw.config.coarse));
  }
}

TEST(Pathways, SpansPartitionShots) {
  model::GsPathways<float> pw(model::PathwayConfig::narrow(3, 2, 2));
  const auto out = pw.forward(Tensor<float>({37, 3}));
  for (const auto* spans : {&out.fine_spans, &out.coarse_spans}) {
    std::size_t next = 0;
    for (const auto& [b, e] : *spans) {
      EXPECT_EQ(b, next);
      EXPECT_LT(b, e);
      next = e;
    }
    EXPECT_EQ(next, 37u);
  }
  EXPECT_EQ(out.fine_spans.front(), (model::Span{0, 4}));
  EXPECT_EQ(out.coarse_spans.back(), (model::Span{32, 37}));
}

TEST(Pathways, TooShortNamesMinimum) {
  model::GsPathways<float> pw(model::PathwayConfig::narrow(3, 2, 2));
  try {
    pw.forward(Tensor<float>({15, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InputTooShort);
    EXPECT_NE(std::string(e.what()).find("16"), std::string::npos);
  }
}

TEST(Pathways, ChannelPermutationEquivariance) {
  const std::size_t d = 5;
  model::GsPathways<double> a(model::PathwayConfig::narrow(d, 3, 4));
  nn::Init init(9);
  a.init(init);
  model::GsPathways<double> b = a;
  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  const auto x = random_tensor<double>({40, d}, 9);
  Tensor<double> xp({40, d});
  for (std::size_t t = 0; t < 40; ++t)
    for (std::size_t c = 0; c < d; ++c) xp(t, c) = x(t, perm[c]);
  // Input column c of xp is original channel perm[c]; move the first-layer weight rows to match.
  for (auto* pw : {&b.fine, &b.coarse}) {
    auto& w = pw->conv1.weight.value;
    const auto orig = w;
    for (std::size_t k = 0; k < pw->conv1.kernel; ++k)
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t o = 0; o < w.cols(); ++o) w(k * d + c, o) = orig(k * d + perm[c], o);
  }
  const auto ya = a.forward(x);
  const auto yb = b.forward(xp);
  EXPECT_LT(max_abs_diff(ya.fine, yb.fine), 1e-12);
  EXPECT_LT(max_abs_diff(ya.coarse, yb.coarse), 1e-12);
}

TEST(Pathways, GradCheck) {
  model::GsPathways<double> pw(model::PathwayConfig::narrow(3, 3, 4));
  nn::Init init(4);
  pw.init(init);
  auto x = random_tensor<double>({33, 3}, 4);
  nn::ParamList<double> params;
  pw.collect(params, "pw");
  const auto out = pw.forward(x);
  const auto rf = nn::random_projection<double>(out.fine.shape(), 1);
  const auto rc = nn::random_projection<double>(out.coarse.shape(), 2);
  auto loss = [&] {
    const auto o = pw.forward(x);
    return nn::projected(o.fine, rf) + nn::projected(o.coarse, rc);
  };
  typename model::GsPathways<double>::Cache cache;
  pw.forward(x, &cache);
  nn::zero_grads(params);
  const auto dx = pw.backward(cache, rf, rc);
  double worst = nn::grad_check<double>(loss, x.values(), dx.values(), 1e-6).max_relative_error;
  for (auto& p : params) {
    const auto g = p.param->grad;
    worst = std::max(worst, nn::grad_check<double>(loss, p.param->value.values(), g.values(), 1e-6).max_relative_error);
  }
  EXPECT_LT(worst, 1e-5);
}

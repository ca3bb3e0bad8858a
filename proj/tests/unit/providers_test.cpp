#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "roadkit/providers.hpp"

using namespace roadkit;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::IoFailure;
}

SegmentContext context(int id, double width_m) {
  SegmentContext ctx;
  ctx.segment_id = id;
  ctx.descriptors.segment_id = id;
  ctx.descriptors.width_m = width_m;
  ctx.descriptors.length_m = 300;
  ctx.descriptors.straightness = 0.95;
  ctx.categories = discretize(ctx.descriptors);
  ctx.prompts = build_prompt(ctx.categories);
  return ctx;
}

class LocalServer {
 public:
  LocalServer() {
    server_.Post("/ok", [this](const httplib::Request& req, httplib::Response& res) {
      last_body = req.body;
      res.set_content(R"({"scores": {"high": 2, "medium": 1, "low": 1}})", "application/json");
    });
    server_.Post("/text", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"text": "This is a Low Grade road."})", "application/json");
    });
    server_.Post("/busy", [this](const httplib::Request&, httplib::Response& res) {
      ++busy_calls;
      res.status = 503;
    });
    server_.Post("/missing", [this](const httplib::Request&, httplib::Response& res) {
      ++missing_calls;
      res.status = 404;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  std::string last_body;
  std::atomic<int> busy_calls{0};
  std::atomic<int> missing_calls{0};

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST(Providers, ParseScores) {
  const GradeScores s = parse_scores_response(R"({"scores": {"high": 1, "medium": 1, "low": 2}})");
  EXPECT_DOUBLE_EQ(s[Grade::Low], 0.5);
  EXPECT_EQ(code_of([] { parse_scores_response("{}"); }), ErrorCode::MalformedResponse);
  EXPECT_EQ(code_of([] { parse_scores_response("[1,2,3]"); }), ErrorCode::MalformedResponse);
  EXPECT_EQ(code_of([] { parse_scores_response(R"({"scores": {"high": "x", "medium": 1, "low": 1}})"); }),
            ErrorCode::MalformedResponse);
  EXPECT_EQ(code_of([] { parse_scores_response(R"({"scores": {"high": Infinity, "medium": 1, "low": 1}})"); }),
            ErrorCode::NonFiniteScore);
  EXPECT_EQ(code_of([] { parse_scores_response(R"({"scores": {"high": -1, "medium": 1, "low": 1}})"); }),
            ErrorCode::MalformedResponse);
}

TEST(Providers, NanInsideTextIsNotAScore) {
  EXPECT_EQ(code_of([] { parse_scores_response(R"({"note": "NaN, "scores": )"); }), ErrorCode::MalformedResponse);
}

TEST(Providers, ParseText) {
  EXPECT_EQ(parse_text_response(R"({"text": "hello"})"), "hello");
  EXPECT_EQ(code_of([] { parse_text_response(R"({"text": 3})"); }), ErrorCode::MalformedResponse);
}

TEST(Providers, Base64KnownVectors) {
  auto enc = [](std::string s) {
    return base64_encode(std::vector<std::uint8_t>(s.begin(), s.end()));
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("M"), "TQ==");
  EXPECT_EQ(enc("Ma"), "TWE=");
  EXPECT_EQ(enc("Man"), "TWFu");
}

TEST(Providers, StubKeysOnWidth) {
  StubProvider stub;
  EXPECT_EQ(argmax(stub.score(context(0, 20.0))), Grade::High);
  EXPECT_EQ(argmax(stub.score(context(0, 8.0))), Grade::Medium);
  EXPECT_EQ(argmax(stub.score(context(0, 3.0))), Grade::Low);
  StubProvider fixed(GradeScores{{0.1, 0.1, 0.8}});
  EXPECT_EQ(fixed.score(context(0, 20.0)), (GradeScores{{0.1, 0.1, 0.8}}));
  StubTextProvider text;
  EXPECT_EQ(text.describe(context(0, 20.0)), "This is a High Grade road.");
}

TEST(Providers, HttpSuccessSendsContext) {
  LocalServer server;
  HttpPriorProvider provider({server.url("/ok"), 2000, 0});
  SegmentContext ctx = context(7, 9.0);
  ctx.patch_png = {1, 2, 3};
  const GradeScores s = provider.score(ctx);
  EXPECT_DOUBLE_EQ(s[Grade::High], 0.5);
  const auto body = nlohmann::json::parse(server.last_body);
  EXPECT_EQ(body["segment_id"], 7);
  EXPECT_EQ(body["prompts"]["high"], ctx.prompts.query(Grade::High));
  EXPECT_FALSE(body["image_png_base64"].get<std::string>().empty());
  HttpTextProvider text({server.url("/text"), 2000, 0});
  EXPECT_EQ(text.describe(ctx), "This is a Low Grade road.");
}

TEST(Providers, ServerErrorsRetryClientErrorsDoNot) {
  LocalServer server;
  HttpPriorProvider busy({server.url("/busy"), 2000, 2});
  EXPECT_EQ(code_of([&] { busy.score(context(0, 5)); }), ErrorCode::ProviderUnavailable);
  EXPECT_EQ(server.busy_calls.load(), 3);
  HttpPriorProvider missing({server.url("/missing"), 2000, 2});
  EXPECT_EQ(code_of([&] { missing.score(context(0, 5)); }), ErrorCode::ProviderUnavailable);
  EXPECT_EQ(server.missing_calls.load(), 1);
}

TEST(Providers, RefusedConnectionIsUnavailable) {
  HttpPriorProvider provider({"http://127.0.0.1:1/none", 300, 0});
  const PriorResult r = prior_with_fallback(provider, context(0, 5));
  EXPECT_TRUE(r.fallback_used);
  EXPECT_EQ(r.fallback_reason, "ProviderUnavailable");
  EXPECT_EQ(r.scores, heuristic_prior(context(0, 5).descriptors));
}

TEST(Providers, BadUrlRejected) {
  EXPECT_EQ(code_of([] { HttpPriorProvider({"localhost:80", 100, 0}).score(context(0, 5)); }),
            ErrorCode::InvalidConfig);
}

namespace {

class CountingProvider final : public PriorProvider {
 public:
  std::string name() const override { return "counting"; }
  GradeScores score(const SegmentContext& ctx) override {
    const int now = ++active_;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active_;
    if (ctx.segment_id % 4 == 3) throw Error(ErrorCode::Timeout, "slow");
    return normalize_scores({{static_cast<double>(ctx.segment_id + 1), 1.0, 1.0}});
  }
  std::atomic<int> peak{0};

 private:
  std::atomic<int> active_{0};
};

}  // namespace

TEST(Providers, ScoreSegmentsKeepsOrderAndBound) {
  CountingProvider provider;
  std::vector<SegmentContext> ctxs;
  for (int i = 0; i < 24; ++i) ctxs.push_back(context(i, 5.0));
  const auto results = score_segments(provider, ctxs, 3);
  ASSERT_EQ(results.size(), 24u);
  EXPECT_LE(provider.peak.load(), 3);
  for (int i = 0; i < 24; ++i) {
    if (i % 4 == 3) {
      EXPECT_TRUE(results[static_cast<std::size_t>(i)].fallback_used);
      EXPECT_EQ(results[static_cast<std::size_t>(i)].fallback_reason, "Timeout");
    } else {
      EXPECT_DOUBLE_EQ(results[static_cast<std::size_t>(i)].scores[Grade::High], (i + 1.0) / (i + 3.0));
    }
  }
}

TEST(Providers, PatchIsClampedToImage) {
  RgbImage img(50, 40);
  Segment seg;
  seg.polyline = {{2, 2}, {3, 3}};
  const auto png = segment_patch(img, seg, 32);
  ASSERT_GT(png.size(), 24u);
  // IHDR width and height, big endian at bytes 16..23.
  const auto be32 = [&](std::size_t off) {
    return (png[off] << 24) | (png[off + 1] << 16) | (png[off + 2] << 8) | png[off + 3];
  };
  EXPECT_EQ(be32(16), 36);
  EXPECT_EQ(be32(20), 36);
}

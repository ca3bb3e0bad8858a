#include "roadkit/providers.hpp"

#include <httplib.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <json.hpp>
#include <regex>
#include <thread>

namespace roadkit {

GradeScores StubProvider::score(const SegmentContext& ctx) {
  if (fixed_) return normalize_scores(*fixed_);
  switch (ctx.categories.width) {
    case WidthWord::Wide: return GradeScores{{0.6, 0.3, 0.1}};
    case WidthWord::Medium: return GradeScores{{0.2, 0.6, 0.2}};
    case WidthWord::Narrow: return GradeScores{{0.1, 0.3, 0.6}};
  }
  return GradeScores{{1.0 / 3, 1.0 / 3, 1.0 / 3}};
}

std::string StubTextProvider::describe(const SegmentContext& ctx) {
  StubProvider prior;
  return render_grade_text(argmax(prior.score(ctx)));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  if (bytes.empty()) return out;
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

namespace {

nlohmann::json parse_body(const std::string& body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    // JSON has no NaN/Infinity literals; some servers emit them anyway.
    static const std::regex non_finite(R"([:\[,]\s*-?(NaN|nan|Infinity|inf)\s*[,}\]])");
    if (std::regex_search(body, non_finite)) {
      throw Error(ErrorCode::NonFiniteScore, "provider response contains a non-finite number");
    }
    throw Error(ErrorCode::MalformedResponse, std::string("provider response is not JSON: ") + e.what());
  }
}

struct UrlParts {
  std::string origin;
  std::string path;
};

UrlParts split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::InvalidConfig, "provider url needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::string post_json(const HttpSettings& settings, const nlohmann::json& request) {
  if (settings.url.empty()) throw Error(ErrorCode::ProviderUnavailable, "provider url is empty");
  const UrlParts ep = split_url(settings.url);
  const std::string payload = request.dump();
  const auto timeout = std::chrono::milliseconds(std::max(1, settings.timeout_ms));
  Error last(ErrorCode::ProviderUnavailable, "provider not contacted");
  for (int attempt = 0; attempt <= std::max(0, settings.retries); ++attempt) {
    httplib::Client client(ep.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(ep.path, payload, "application/json");
    const auto elapsed = std::chrono::steady_clock::now() - started;
    if (res) {
      if (res->status == 200) return res->body;
      last = Error(ErrorCode::ProviderUnavailable, "provider returned HTTP " + std::to_string(res->status));
      if (res->status < 500) break;
      continue;
    }
    const httplib::Error err = res.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           ((err == httplib::Error::Read || err == httplib::Error::Write) && elapsed >= timeout * 9 / 10);
    if (timed_out) {
      last = Error(ErrorCode::Timeout, "provider timed out after " + std::to_string(settings.timeout_ms) + " ms");
    } else {
      last = Error(ErrorCode::ProviderUnavailable, "provider request failed: " + httplib::to_string(err));
    }
  }
  throw last;
}

}  // namespace

GradeScores parse_scores_response(const std::string& body) {
  const nlohmann::json j = parse_body(body);
  if (!j.is_object() || !j.contains("scores") || !j["scores"].is_object()) {
    throw Error(ErrorCode::MalformedResponse, "provider response lacks a scores object");
  }
  GradeScores s;
  for (Grade g : kGrades) {
    const std::string key(grade_name(g));
    const auto it = j["scores"].find(key);
    if (it == j["scores"].end() || !it->is_number()) {
      throw Error(ErrorCode::MalformedResponse, "provider scores lack a numeric \"" + key + "\"");
    }
    s[g] = it->get<double>();
  }
  return normalize_scores(s);
}

std::string parse_text_response(const std::string& body) {
  const nlohmann::json j = parse_body(body);
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw Error(ErrorCode::MalformedResponse, "text provider response lacks a \"text\" string");
  }
  return j["text"].get<std::string>();
}

GradeScores HttpPriorProvider::score(const SegmentContext& ctx) {
  nlohmann::json request = {{"segment_id", ctx.segment_id},
                            {"image_png_base64", base64_encode(ctx.patch_png)},
                            {"prompts",
                             {{"high", ctx.prompts.query(Grade::High)},
                              {"medium", ctx.prompts.query(Grade::Medium)},
                              {"low", ctx.prompts.query(Grade::Low)}}}};
  return parse_scores_response(post_json(settings_, request));
}

std::string HttpTextProvider::describe(const SegmentContext& ctx) {
  nlohmann::json request = {{"image_png_base64", base64_encode(ctx.patch_png)},
                            {"prompt", ctx.prompts.description}};
  return parse_text_response(post_json(settings_, request));
}

PriorResult prior_with_fallback(PriorProvider& provider, const SegmentContext& ctx) {
  PriorResult result;
  result.provider = provider.name();
  try {
    result.scores = provider.score(ctx);
    return result;
  } catch (const Error& e) {
    result.fallback_reason = std::string(to_string(e.code()));
    spdlog::warn("segment {}: {} provider failed ({}), using heuristic prior", ctx.segment_id, provider.name(),
                 e.what());
  } catch (const std::exception& e) {
    result.fallback_reason = "ProviderUnavailable";
    spdlog::warn("segment {}: {} provider failed ({}), using heuristic prior", ctx.segment_id, provider.name(),
                 e.what());
  }
  result.fallback_used = true;
  result.scores = heuristic_prior(ctx.descriptors);
  return result;
}

std::vector<PriorResult> score_segments(PriorProvider& provider, std::span<const SegmentContext> contexts,
                                        int max_in_flight) {
  std::vector<PriorResult> results(contexts.size());
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, max_in_flight)),
                                                    std::max<std::size_t>(1, contexts.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < contexts.size(); i = next++) {
      results[i] = prior_with_fallback(provider, contexts[i]);
    }
  };
  if (workers == 1) {
    work();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  pool.clear();
  return results;
}

std::vector<std::uint8_t> segment_patch(const RgbImage& image, const Segment& seg, int margin) {
  if (seg.polyline.empty()) throw Error(ErrorCode::EmptySegment, "segment " + std::to_string(seg.id));
  int x0 = seg.polyline.front().x, x1 = x0, y0 = seg.polyline.front().y, y1 = y0;
  for (Pixel p : seg.polyline) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  x0 = std::max(0, x0 - margin);
  y0 = std::max(0, y0 - margin);
  x1 = std::min(image.width() - 1, x1 + margin);
  y1 = std::min(image.height() - 1, y1 + margin);
  RgbImage patch(x1 - x0 + 1, y1 - y0 + 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) patch(x - x0, y - y0) = image(x, y);
  }
  return encode_png(patch);
}

}  // namespace roadkit

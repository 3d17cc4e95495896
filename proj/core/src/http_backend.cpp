#include "simcurate/http_backend.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "simcurate/digest.hpp"
#include "simcurate/errors.hpp"
#include "simcurate/image_io.hpp"

namespace simcurate {
namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string prefix;
};

Endpoint parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.substr(0, scheme_end) != "http")
    throw ContractError("backend URL must start with http://: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.scheme_host_port = url.substr(0, path_start);
  if (path_start != std::string::npos) e.prefix = url.substr(path_start);
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  if (e.scheme_host_port.size() <= scheme_end + 3) throw ContractError("backend URL has no host: " + url);
  return e;
}

std::string b64_png(const cv::Mat& image) { return base64_encode(encode_png(image)); }

void set_timeouts(httplib::Client& cli, const HttpBackendOptions& o) {
  const auto to_us = [](double s) { return std::chrono::microseconds(static_cast<long long>(s * 1e6)); };
  cli.set_connection_timeout(to_us(o.connect_timeout_seconds));
  cli.set_read_timeout(to_us(o.timeout_seconds));
  cli.set_write_timeout(to_us(o.timeout_seconds));
}

httplib::Result post_json(const HttpBackendOptions& o, const std::string& path, const std::string& body) {
  const Endpoint e = parse_url(o.base_url);
  httplib::Client cli(e.scheme_host_port);
  set_timeouts(cli, o);
  auto res = cli.Post(e.prefix + path, body, "application/json");
  if (!res)
    throw BackendError(path + ": transport error (" + httplib::to_string(res.error()) + ")", true);
  if (res->status == 503) throw BackendError(path + ": service unavailable (503)", true);
  if (res->status != 200)
    throw BackendError(path + ": HTTP " + std::to_string(res->status) + " " + res->body, false);
  return res;
}

}  // namespace

std::string encode_generate_request(const GenerationRequest& r) {
  validate_request(r);
  nlohmann::ordered_json j;
  j["image_b64"] = b64_png(r.image);
  j["depth_b64"] = b64_png(r.depth);
  j["canny_b64"] = b64_png(r.canny.to_mat());
  j["prompt"] = r.prompt;
  j["negative_prompt"] = r.negative_prompt;
  j["control_scale"] = r.control_scale;
  j["guidance_scale"] = r.guidance_scale;
  j["steps"] = r.denoise_steps;
  j["seed"] = r.seed;
  return j.dump();
}

std::string encode_caption_request(const cv::Mat& image) {
  nlohmann::ordered_json j;
  j["image_b64"] = b64_png(image);
  return j.dump();
}

HttpGenerationBackend::HttpGenerationBackend(HttpBackendOptions options) : options_(std::move(options)) {
  parse_url(options_.base_url);
}

cv::Mat HttpGenerationBackend::generate(const GenerationRequest& request) {
  auto res = post_json(options_, "/generate", encode_generate_request(request));
  const auto& body = res->body;
  try {
    return decode_image(std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()),
                        ReadMode::color);
  } catch (const FormatError&) {
    throw BackendError("/generate: response body is not a decodable image", false);
  }
}

HttpCaptioner::HttpCaptioner(HttpBackendOptions options) : options_(std::move(options)) {
  parse_url(options_.base_url);
}

std::string HttpCaptioner::caption(const cv::Mat& image) {
  auto res = post_json(options_, "/caption", encode_caption_request(image));
  try {
    const auto j = nlohmann::json::parse(res->body);
    auto text = j.at("caption").get<std::string>();
    if (text.empty()) throw BackendError("/caption: empty caption", false);
    return text;
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("/caption: malformed response: ") + e.what(), false);
  }
}

}  // namespace simcurate

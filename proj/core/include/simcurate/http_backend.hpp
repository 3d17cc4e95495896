#pragma once

#include <string>

#include "simcurate/genai.hpp"

namespace simcurate {

// Client side of the generation/captioning wire protocol:
//   POST {base}/generate  JSON {image_b64, depth_b64, canny_b64, prompt, negative_prompt,
//                               control_scale, guidance_scale, steps, seed} -> 200 PNG body
//   POST {base}/caption   JSON {image_b64} -> 200 {"caption": string}
// 503 and transport failures (refused connection, timeout) are retryable.
struct HttpBackendOptions {
  std::string base_url = "http://127.0.0.1:8000";
  double timeout_seconds = 300.0;
  double connect_timeout_seconds = 10.0;
};

// JSON body for POST /generate; images are base64-encoded PNGs.
std::string encode_generate_request(const GenerationRequest& request);
std::string encode_caption_request(const cv::Mat& image);

class HttpGenerationBackend : public GenerationBackend {
 public:
  explicit HttpGenerationBackend(HttpBackendOptions options);
  cv::Mat generate(const GenerationRequest& request) override;

 private:
  HttpBackendOptions options_;
};

class HttpCaptioner : public CaptionBackend {
 public:
  explicit HttpCaptioner(HttpBackendOptions options);
  std::string caption(const cv::Mat& image) override;

 private:
  HttpBackendOptions options_;
};

}  // namespace simcurate

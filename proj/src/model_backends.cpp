#include "qrepair/model_backends.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "qrepair/errors.hpp"
#include "qrepair/retrieval_backends.hpp"
#include "qrepair/util.hpp"

namespace qrepair {

using nlohmann::json;

// ---------------------------------------------------------------------------
// MockModel

MockModel& MockModel::on(const std::string& prompt_substring,
                         const std::string& completion) {
  patterns_.push_back(Pattern{prompt_substring, completion, false});
  return *this;
}

MockModel& MockModel::fail_on(const std::string& prompt_substring) {
  patterns_.push_back(Pattern{prompt_substring, "", true});
  return *this;
}

MockModel& MockModel::set_default(const std::string& completion) {
  default_ = completion;
  return *this;
}

MockModel MockModel::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model mock script is not valid JSON: ") + e.what());
  }
  MockModel m;
  if (j.contains("patterns")) {
    for (const json& p : j["patterns"]) {
      if (!p.is_object() || !p.contains("contains")) {
        throw ConfigError("model mock pattern needs a \"contains\" key");
      }
      const std::string contains = p["contains"].get<std::string>();
      if (p.value("fail", false)) {
        m.fail_on(contains);
      } else {
        m.on(contains, p.value("response", std::string()));
      }
    }
  }
  if (j.contains("default")) m.set_default(j["default"].get<std::string>());
  return m;
}

MockModel MockModel::from_json_file(const std::string& path) {
  return from_json_text(read_file(path));
}

std::string MockModel::complete(const std::string& prompt) {
  for (const Pattern& p : patterns_) {
    if (prompt.find(p.contains) == std::string::npos) continue;
    if (p.fail) throw TransportError("mock model failure for pattern: " + p.contains);
    return p.response;
  }
  return default_;
}

// ---------------------------------------------------------------------------
// HttpModel

HttpModel::HttpModel(HttpModelConfig cfg) : cfg_(std::move(cfg)) {
  token_ = auth_token_from_env(cfg_.auth_env);
}

std::string HttpModel::complete(const std::string& prompt) {
  const json payload{
      {"model", cfg_.model_name},
      {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
      {"temperature", cfg_.temperature},
  };

  const UrlParts url = split_url(cfg_.endpoint);
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double delay = cfg_.backoff_base_s * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    httplib::Client client(url.origin);
    client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    auto res = client.Post(url.path, headers, payload.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "server status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw PayloadError("model endpoint returned status " + std::to_string(res->status));
    }
    json j;
    try {
      j = json::parse(res->body);
    } catch (const json::exception& e) {
      throw PayloadError(std::string("model response is not valid JSON: ") + e.what());
    }
    try {
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      throw PayloadError("model response has no choices[0].message.content");
    }
  }
  throw TransportError("model unavailable after retries: " + last_error);
}

}  // namespace qrepair

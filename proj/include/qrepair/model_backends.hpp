#pragma once

#include <string>
#include <vector>

#include "qrepair/model_io.hpp"

namespace qrepair {

// Scripted model keyed by prompt-substring match. Patterns are checked in
// insertion order and the first match wins; a pattern may instead simulate
// a transport failure. Unmatched prompts get the default completion
// (empty unless set). Read-only after construction.
class MockModel : public ModelBackend {
 public:
  MockModel() = default;

  MockModel& on(const std::string& prompt_substring, const std::string& completion);
  MockModel& fail_on(const std::string& prompt_substring);
  MockModel& set_default(const std::string& completion);

  // JSON file: {"patterns": [{"contains": "...", "response": "..."} |
  //                          {"contains": "...", "fail": true}],
  //             "default": "..."}
  static MockModel from_json_file(const std::string& path);
  static MockModel from_json_text(const std::string& text);

  std::string complete(const std::string& prompt) override;

 private:
  struct Pattern {
    std::string contains;
    std::string response;
    bool fail = false;
  };
  std::vector<Pattern> patterns_;
  std::string default_;
};

struct HttpModelConfig {
  std::string endpoint;    // chat-completion endpoint URL
  std::string model_name;
  std::string auth_env;    // env var holding the bearer token
  double timeout_s = 30.0;
  int max_retries = 3;
  double backoff_base_s = 0.25;
  double temperature = 0.0;  // low-randomness setting
};

// Chat-completion adapter. POSTs {"model", "messages", "temperature"} and
// reads choices[0].message.content from the response.
class HttpModel : public ModelBackend {
 public:
  explicit HttpModel(HttpModelConfig cfg);

  std::string complete(const std::string& prompt) override;

 private:
  HttpModelConfig cfg_;
  std::string token_;
};

}  // namespace qrepair

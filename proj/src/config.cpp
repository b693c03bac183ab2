#include "qrepair/config.hpp"

#include "json.hpp"

#include "qrepair/errors.hpp"
#include "qrepair/util.hpp"

namespace qrepair {

using nlohmann::json;
using nlohmann::ordered_json;

BackendSelection parse_selection(const std::string& text) {
  BackendSelection sel;
  const size_t colon = text.find(':');
  if (colon == std::string::npos) {
    sel.kind = trim(text);
  } else {
    sel.kind = trim(text.substr(0, colon));
    sel.arg = trim(text.substr(colon + 1));
  }
  if (sel.kind.empty()) throw ConfigError("empty backend selection");
  return sel;
}

namespace {

ordered_json selection_to_json(const BackendSelection& sel) {
  return ordered_json{{"kind", sel.kind}, {"arg", sel.arg}};
}

BackendSelection selection_from_json(const json& j, const char* what) {
  if (j.is_string()) return parse_selection(j.get<std::string>());
  if (!j.is_object() || !j.contains("kind")) {
    throw ConfigError(std::string(what) + ": backend selection needs a kind");
  }
  BackendSelection sel;
  sel.kind = j["kind"].get<std::string>();
  sel.arg = j.value("arg", std::string());
  return sel;
}

}  // namespace

std::string config_to_json(const RunConfig& c) {
  ordered_json j;
  j["corpus"] = c.corpus_path;
  j["output"] = c.output_path;
  j["mode"] = std::string(mode_name(c.mode));
  j["k_b"] = c.k_b;
  j["k_r"] = c.k_r;
  j["concurrency"] = c.concurrency;
  j["prompts"] = c.prompts_path;
  j["stopwords"] = c.stopwords_path;
  j["months"] = c.months_path;
  j["retrieval"] = selection_to_json(c.retrieval);
  j["model"] = selection_to_json(c.model);
  j["grader"] = selection_to_json(c.grader);
  j["resume"] = c.resume;
  j["record_timing"] = c.record_timing;
  return j.dump(2);
}

RunConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");

  RunConfig c;
  c.corpus_path = j.value("corpus", c.corpus_path);
  c.output_path = j.value("output", c.output_path);
  if (j.contains("mode")) c.mode = mode_from_name(j["mode"].get<std::string>());
  c.k_b = j.value("k_b", c.k_b);
  c.k_r = j.value("k_r", c.k_r);
  c.concurrency = j.value("concurrency", c.concurrency);
  c.prompts_path = j.value("prompts", c.prompts_path);
  c.stopwords_path = j.value("stopwords", c.stopwords_path);
  c.months_path = j.value("months", c.months_path);
  if (j.contains("retrieval")) c.retrieval = selection_from_json(j["retrieval"], "retrieval");
  if (j.contains("model")) c.model = selection_from_json(j["model"], "model");
  if (j.contains("grader")) c.grader = selection_from_json(j["grader"], "grader");
  c.resume = j.value("resume", c.resume);
  c.record_timing = j.value("record_timing", c.record_timing);
  if (c.k_b < 1 || c.k_r < 1) throw ConfigError("k_b and k_r must be >= 1");
  if (c.concurrency < 1) throw ConfigError("concurrency must be >= 1");
  return c;
}

RunConfig load_config_file(const std::string& path) {
  return config_from_json_text(read_file(path));
}

std::string config_hash(const RunConfig& c) { return fnv1a64_hex(config_to_json(c)); }

// ---------------------------------------------------------------------------
// Backend construction

namespace {

json load_settings(const std::string& path, const char* what) {
  if (path.empty()) {
    throw ConfigError(std::string(what) + ": http backend needs a settings file");
  }
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + " settings are not valid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("endpoint")) {
    throw ConfigError(std::string(what) + " settings need an endpoint");
  }
  return j;
}

}  // namespace

std::unique_ptr<RetrievalBackend> make_retrieval_backend(const BackendSelection& sel) {
  if (sel.kind == "mock") {
    if (sel.arg.empty()) throw ConfigError("retrieval mock needs a script path");
    return std::make_unique<MockRetrieval>(MockRetrieval::from_json_file(sel.arg));
  }
  if (sel.kind == "bm25") {
    if (sel.arg.empty()) throw ConfigError("bm25 retrieval needs a corpus path");
    return std::make_unique<Bm25Retrieval>(sel.arg);
  }
  if (sel.kind == "http") {
    const json j = load_settings(sel.arg, "retrieval");
    HttpRetrievalConfig cfg;
    cfg.endpoint = j["endpoint"].get<std::string>();
    cfg.auth_env = j.value("auth_env", std::string());
    cfg.timeout_s = j.value("timeout_s", cfg.timeout_s);
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.backoff_base_s = j.value("backoff_base_s", cfg.backoff_base_s);
    cfg.cache_dir = j.value("cache_dir", std::string());
    return std::make_unique<HttpRetrieval>(cfg);
  }
  throw ConfigError("unknown retrieval backend kind: " + sel.kind);
}

std::unique_ptr<ModelBackend> make_model_backend(const BackendSelection& sel) {
  if (sel.kind == "mock") {
    if (sel.arg.empty()) throw ConfigError("model mock needs a script path");
    return std::make_unique<MockModel>(MockModel::from_json_file(sel.arg));
  }
  if (sel.kind == "http") {
    const json j = load_settings(sel.arg, "model");
    HttpModelConfig cfg;
    cfg.endpoint = j["endpoint"].get<std::string>();
    cfg.model_name = j.value("model", std::string());
    cfg.auth_env = j.value("auth_env", std::string());
    cfg.timeout_s = j.value("timeout_s", cfg.timeout_s);
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.backoff_base_s = j.value("backoff_base_s", cfg.backoff_base_s);
    cfg.temperature = j.value("temperature", cfg.temperature);
    return std::make_unique<HttpModel>(cfg);
  }
  throw ConfigError("unknown model backend kind: " + sel.kind);
}

std::unique_ptr<Grader> make_grader(const BackendSelection& sel) {
  if (sel.kind == "default") return std::make_unique<DefaultGrader>();
  if (sel.kind == "external") {
    const json j = load_settings(sel.arg, "grader");
    ExternalGraderConfig cfg;
    cfg.endpoint = j["endpoint"].get<std::string>();
    cfg.model_name = j.value("model", std::string());
    cfg.auth_env = j.value("auth_env", std::string());
    cfg.timeout_s = j.value("timeout_s", cfg.timeout_s);
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.template_path = j.value("template", std::string());
    return std::make_unique<ExternalGrader>(cfg);
  }
  throw ConfigError("unknown grader kind: " + sel.kind);
}

}  // namespace qrepair

#include "qrepair/retrieval_backends.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "qrepair/errors.hpp"
#include "qrepair/util.hpp"

namespace qrepair {

namespace {

using nlohmann::json;

RawSnippet snippet_from_json(const json& j) {
  if (!j.is_object()) throw PayloadError("snippet entry is not an object");
  RawSnippet s;
  s.title = j.value("title", std::string());
  if (j.contains("url") && !j["url"].is_null()) {
    if (!j["url"].is_string()) throw PayloadError("snippet url is not a string");
    s.url = j["url"].get<std::string>();
  }
  if (j.contains("text") && j["text"].is_string()) {
    s.body = j["text"].get<std::string>();
  } else if (j.contains("body") && j["body"].is_string()) {
    s.body = j["body"].get<std::string>();
  } else {
    throw PayloadError("snippet entry has no text field");
  }
  return s;
}

std::vector<std::string> bm25_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// MockRetrieval

MockRetrieval& MockRetrieval::add(const std::string& query,
                                  std::vector<RawSnippet> results) {
  responses_[query] = std::move(results);
  return *this;
}

MockRetrieval& MockRetrieval::fail_on(const std::string& query) {
  fail_queries_.insert(query);
  return *this;
}

MockRetrieval MockRetrieval::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("retrieval mock script is not valid JSON: ") + e.what());
  }
  MockRetrieval m;
  if (j.contains("responses")) {
    for (auto& [query, arr] : j["responses"].items()) {
      std::vector<RawSnippet> snippets;
      for (const json& entry : arr) snippets.push_back(snippet_from_json(entry));
      m.add(query, std::move(snippets));
    }
  }
  if (j.contains("fail_queries")) {
    for (const json& q : j["fail_queries"]) m.fail_on(q.get<std::string>());
  }
  return m;
}

MockRetrieval MockRetrieval::from_json_file(const std::string& path) {
  return from_json_text(read_file(path));
}

std::vector<RawSnippet> MockRetrieval::search(const std::string& query, int k) {
  if (fail_queries_.count(query)) {
    throw RetrievalUnavailableError("mock retrieval failure for query: " + query);
  }
  auto it = responses_.find(query);
  if (it == responses_.end()) return {};
  std::vector<RawSnippet> out = it->second;
  if (out.size() > static_cast<size_t>(k)) out.resize(static_cast<size_t>(k));
  return out;
}

// ---------------------------------------------------------------------------
// Bm25Retrieval

Bm25Retrieval::Bm25Retrieval(const std::string& corpus_path) {
  std::ifstream in(corpus_path, std::ios::binary);
  if (!in.is_open()) throw ConfigError("cannot open corpus: " + corpus_path);

  std::string line;
  size_t line_no = 0;
  double total_len = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError("corpus line " + std::to_string(line_no) +
                        " is not valid JSON: " + e.what());
    }
    Doc d;
    d.title = j.value("title", std::string());
    if (j.contains("url") && !j["url"].is_null()) d.url = j["url"].get<std::string>();
    d.text = j.value("text", std::string());
    const auto doc_id = static_cast<uint32_t>(docs_.size());

    std::map<std::string, uint32_t> tf;
    for (const std::string& t : bm25_tokens(d.title + " " + d.text)) ++tf[t];
    d.length = 0;
    for (const auto& [term, count] : tf) {
      postings_[term].emplace_back(doc_id, count);
      d.length += count;
    }
    total_len += static_cast<double>(d.length);
    docs_.push_back(std::move(d));
  }
  avg_doc_len_ = docs_.empty() ? 0.0 : total_len / static_cast<double>(docs_.size());
}

std::vector<RawSnippet> Bm25Retrieval::search(const std::string& query, int k) {
  constexpr double kK1 = 1.5;
  constexpr double kB = 0.75;

  std::map<uint32_t, double> scores;
  const double n_docs = static_cast<double>(docs_.size());
  for (const std::string& term : bm25_tokens(query)) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double df = static_cast<double>(it->second.size());
    const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
    for (const auto& [doc_id, tf] : it->second) {
      const double dl = static_cast<double>(docs_[doc_id].length);
      const double denom = tf + kK1 * (1.0 - kB + kB * dl / std::max(avg_doc_len_, 1e-9));
      scores[doc_id] += idf * (tf * (kK1 + 1.0)) / denom;
    }
  }

  std::vector<std::pair<uint32_t, double>> ranked(scores.begin(), scores.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });

  std::vector<RawSnippet> out;
  for (const auto& [doc_id, score] : ranked) {
    if (score <= 0.0 || out.size() >= static_cast<size_t>(k)) break;
    const Doc& d = docs_[doc_id];
    out.push_back(RawSnippet{d.title, d.url, d.text});
  }
  return out;
}

// ---------------------------------------------------------------------------
// HttpRetrieval

UrlParts split_url(const std::string& url) {
  const size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint URL has no scheme: " + url);
  }
  const size_t path_start = url.find('/', scheme_end + 3);
  UrlParts parts;
  if (path_start == std::string::npos) {
    parts.origin = url;
    parts.path = "/";
  } else {
    parts.origin = url.substr(0, path_start);
    parts.path = url.substr(path_start);
  }
  return parts;
}

std::string auth_token_from_env(const std::string& env_name) {
  if (env_name.empty()) return {};
  const char* value = std::getenv(env_name.c_str());
  if (value == nullptr || std::string(value).empty()) {
    throw ConfigError("auth environment variable is not set: " + env_name);
  }
  return value;
}

std::vector<RawSnippet> parse_search_payload(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw PayloadError(std::string("search response is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("results") || !j["results"].is_array()) {
    throw PayloadError("search response has no results array");
  }
  std::vector<RawSnippet> out;
  for (const json& entry : j["results"]) out.push_back(snippet_from_json(entry));
  return out;
}

namespace {

// Runs `attempt` under the shared retry policy. Retries transport failures
// and 5xx/429 responses with exponential backoff.
std::string http_post_with_retries(const std::string& endpoint,
                                   const std::string& token,
                                   const std::string& payload,
                                   double timeout_s, int max_retries,
                                   double backoff_base_s,
                                   const char* unavailable_what) {
  const UrlParts url = split_url(endpoint);
  std::string last_error = "no attempt made";

  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    if (attempt > 0) {
      const double delay = backoff_base_s * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    httplib::Client client(url.origin);
    client.set_connection_timeout(std::chrono::duration<double>(timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(timeout_s));
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "server status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw PayloadError(std::string(unavailable_what) + ": unexpected status " +
                         std::to_string(res->status));
    }
    return res->body;
  }
  throw TransportError(std::string(unavailable_what) + " after retries: " + last_error);
}

}  // namespace

HttpRetrieval::HttpRetrieval(HttpRetrievalConfig cfg) : cfg_(std::move(cfg)) {
  token_ = auth_token_from_env(cfg_.auth_env);
  if (!cfg_.cache_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg_.cache_dir, ec);
    if (ec) throw ConfigError("cannot create cache dir: " + cfg_.cache_dir);
  }
}

std::string HttpRetrieval::cache_path(const std::string& query, int k) const {
  const std::string key = fnv1a64_hex(query + "\x1f" + std::to_string(k));
  return (std::filesystem::path(cfg_.cache_dir) / (key + ".json")).string();
}

std::vector<RawSnippet> HttpRetrieval::search(const std::string& query, int k) {
  if (!cfg_.cache_dir.empty()) {
    const std::string path = cache_path(query, k);
    if (file_exists(path)) return parse_search_payload(read_file(path));
  }

  json payload{{"query", query}, {"k", k}};
  std::string body;
  try {
    body = http_post_with_retries(cfg_.endpoint, token_, payload.dump(),
                                  cfg_.timeout_s, cfg_.max_retries,
                                  cfg_.backoff_base_s, "retrieval unavailable");
  } catch (const TransportError& e) {
    throw RetrievalUnavailableError(e.what());
  }

  std::vector<RawSnippet> out = parse_search_payload(body);
  if (!cfg_.cache_dir.empty()) {
    atomic_write_file(cache_path(query, k), body);
  }
  return out;
}

}  // namespace qrepair

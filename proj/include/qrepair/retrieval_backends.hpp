#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qrepair/evidence.hpp"

namespace qrepair {

// Scripted backend mapping exact query strings to snippet lists, with a
// default-empty fallback. Queries listed in fail_queries simulate a
// transport failure. Read-only after construction.
class MockRetrieval : public RetrievalBackend {
 public:
  MockRetrieval() = default;

  MockRetrieval& add(const std::string& query, std::vector<RawSnippet> results);
  MockRetrieval& fail_on(const std::string& query);

  // JSON file: {"responses": {"<query>": [{"title","url","text"}...]},
  //             "fail_queries": ["<query>"...]}
  static MockRetrieval from_json_file(const std::string& path);
  static MockRetrieval from_json_text(const std::string& text);

  std::vector<RawSnippet> search(const std::string& query, int k) override;

 private:
  std::map<std::string, std::vector<RawSnippet>> responses_;
  std::set<std::string> fail_queries_;
};

// Lexical retriever over a JSONL corpus, one {"title","url","text"} object
// per line. Standard BM25 scoring (k1=1.5, b=0.75); ties break on document
// order so results are stable.
class Bm25Retrieval : public RetrievalBackend {
 public:
  explicit Bm25Retrieval(const std::string& corpus_path);

  size_t doc_count() const { return docs_.size(); }

  std::vector<RawSnippet> search(const std::string& query, int k) override;

 private:
  struct Doc {
    std::string title;
    std::optional<std::string> url;
    std::string text;
    size_t length = 0;
  };

  std::vector<Doc> docs_;
  std::map<std::string, std::vector<std::pair<uint32_t, uint32_t>>> postings_;
  double avg_doc_len_ = 0.0;
};

struct HttpRetrievalConfig {
  std::string endpoint;        // e.g. https://host:port/search
  std::string auth_env;        // name of the env var holding the bearer token
  double timeout_s = 10.0;
  int max_retries = 3;
  double backoff_base_s = 0.25;
  std::string cache_dir;       // empty disables the on-disk response cache
};

// Web-search adapter. POSTs {"query": q, "k": k} and expects
// {"results": [{"title","url","text"}...]}. Responses are cached on disk
// keyed by (query, k) when cache_dir is set; cache writes are atomic.
class HttpRetrieval : public RetrievalBackend {
 public:
  explicit HttpRetrieval(HttpRetrievalConfig cfg);

  std::vector<RawSnippet> search(const std::string& query, int k) override;

 private:
  std::string cache_path(const std::string& query, int k) const;

  HttpRetrievalConfig cfg_;
  std::string token_;
};

// Shared helpers for the HTTP adapters.
struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;    // /path, defaulting to "/"
};
UrlParts split_url(const std::string& url);

// Reads the token from the named env var; throws ConfigError naming the
// variable when it is required but unset.
std::string auth_token_from_env(const std::string& env_name);

std::vector<RawSnippet> parse_search_payload(const std::string& body);

}  // namespace qrepair

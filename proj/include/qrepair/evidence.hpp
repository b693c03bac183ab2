#pragma once

#include <optional>
#include <string>
#include <vector>

namespace qrepair {

enum class RetrievalPass { first, second };

// One retrieved unit. `body` is non-empty after trimming; `pass` records
// whether the snippet came from the first-pass question query or from an
// expansion query.
struct EvidenceSnippet {
  std::string title;
  std::optional<std::string> url;
  std::string body;
  std::string source_query;
  RetrievalPass pass = RetrievalPass::first;
};

// Dedupe key: lowercased URL when present, else a hash of the lowercased,
// whitespace-collapsed body.
std::string dedupe_key(const EvidenceSnippet& s);

// Ordered snippet collection with no two entries sharing a dedupe key.
// First-pass snippets precede second-pass snippets; within a pass the
// retrieval order is preserved.
class EvidenceSet {
 public:
  EvidenceSet() = default;

  // Appends the snippets that are not already present by dedupe key.
  void extend(const std::vector<EvidenceSnippet>& extra);

  const std::vector<EvidenceSnippet>& snippets() const { return snippets_; }
  bool empty() const { return snippets_.empty(); }
  size_t size() const { return snippets_.size(); }

 private:
  std::vector<EvidenceSnippet> snippets_;
  std::vector<std::string> keys_;
};

EvidenceSet merge_dedupe(const EvidenceSet& base,
                         const std::vector<EvidenceSnippet>& extra);

// What a backend returns before the caller stamps source_query and pass.
struct RawSnippet {
  std::string title;
  std::optional<std::string> url;
  std::string body;
};

// Pluggable retrieval backend. Implementations must tolerate concurrent
// calls. `search` returns at most k results and may return fewer or none;
// it throws RetrievalUnavailableError on transport failure after retries
// and PayloadError on malformed payloads.
class RetrievalBackend {
 public:
  virtual ~RetrievalBackend() = default;
  virtual std::vector<RawSnippet> search(const std::string& query, int k) = 0;
};

// Runs one backend query and stamps the snippets. Drops results whose body
// is blank. Throws InvalidInputError on empty query or k < 1.
std::vector<EvidenceSnippet> retrieve(RetrievalBackend& backend,
                                      const std::string& query, int k,
                                      RetrievalPass pass);

}  // namespace qrepair

#include "qrepair/evidence.hpp"

#include <algorithm>

#include "qrepair/errors.hpp"
#include "qrepair/util.hpp"

namespace qrepair {

std::string dedupe_key(const EvidenceSnippet& s) {
  if (s.url && !is_blank(*s.url)) {
    return "u:" + to_lower(trim(*s.url));
  }
  return "b:" + fnv1a64_hex(lower_collapse(s.body));
}

void EvidenceSet::extend(const std::vector<EvidenceSnippet>& extra) {
  for (const EvidenceSnippet& s : extra) {
    std::string key = dedupe_key(s);
    if (std::find(keys_.begin(), keys_.end(), key) != keys_.end()) continue;
    keys_.push_back(std::move(key));
    snippets_.push_back(s);
  }
}

EvidenceSet merge_dedupe(const EvidenceSet& base,
                         const std::vector<EvidenceSnippet>& extra) {
  EvidenceSet out = base;
  out.extend(extra);
  return out;
}

std::vector<EvidenceSnippet> retrieve(RetrievalBackend& backend,
                                      const std::string& query, int k,
                                      RetrievalPass pass) {
  if (is_blank(query)) throw InvalidInputError("retrieve: empty query");
  if (k < 1) throw InvalidInputError("retrieve: k must be >= 1");

  std::vector<RawSnippet> raw = backend.search(query, k);
  std::vector<EvidenceSnippet> out;
  out.reserve(raw.size());
  for (RawSnippet& r : raw) {
    if (out.size() >= static_cast<size_t>(k)) break;
    if (is_blank(r.body)) continue;
    EvidenceSnippet s;
    s.title = std::move(r.title);
    s.url = std::move(r.url);
    s.body = std::move(r.body);
    s.source_query = query;
    s.pass = pass;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace qrepair

#include "c2rnet/ndp_corpus.hpp"

#include <set>

#include "c2rnet/error.hpp"

namespace c2rnet {

int NDPCorpus::n_sentences() const {
  int n = 0;
  for (const auto& d : documents) n += d.n_sentences();
  return n;
}

NDPCorpus ndp_corpus_from(std::vector<Document> docs) {
  for (const auto& d : docs) {
    if (!d.ndp_labels)
      throw ValidationError("doc '" + d.doc_id + "': ndp_labels missing");
    if (static_cast<int>(d.ndp_labels->size()) != d.n_sentences())
      throw ValidationError("doc '" + d.doc_id + "': " +
                            std::to_string(d.ndp_labels->size()) + " labels for " +
                            std::to_string(d.n_sentences()) + " sentences");
  }
  return NDPCorpus{std::move(docs)};
}

NDPCorpus load_ndp_corpus(const std::filesystem::path& path) {
  return ndp_corpus_from(load_corpus(path));
}

void check_disjoint_splits(const std::vector<const NDPCorpus*>& splits) {
  std::set<std::string> seen;
  for (const NDPCorpus* corpus : splits) {
    for (const auto& doc : corpus->documents) {
      if (!seen.insert(doc.doc_id).second)
        throw ValidationError("doc '" + doc.doc_id + "' appears in more than one split");
    }
  }
}

}  // namespace c2rnet

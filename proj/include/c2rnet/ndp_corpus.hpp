#pragma once

#include <filesystem>
#include <vector>

#include "c2rnet/content_type.hpp"
#include "c2rnet/treebank.hpp"

namespace c2rnet {

// Sentence-labeled corpus: every document carries one ContentType per
// sentence. Immutable after load.
struct NDPCorpus {
  std::vector<Document> documents;

  int n_documents() const { return static_cast<int>(documents.size()); }
  int n_sentences() const;
};

// Loads the native document format and requires ndp_labels on every record.
NDPCorpus load_ndp_corpus(const std::filesystem::path& path);

NDPCorpus ndp_corpus_from(std::vector<Document> docs);

// Train/dev/test splits must not share doc ids; throws naming the overlap.
void check_disjoint_splits(const std::vector<const NDPCorpus*>& splits);

}  // namespace c2rnet

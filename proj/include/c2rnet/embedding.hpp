#pragma once

// Pluggable token-embedding providers. The pipeline never fine-tunes
// embeddings: providers are read-only lookup tables, either a seeded hash
// (dependency-free fixtures) or vectors precomputed offline.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "c2rnet/nn.hpp"
#include "c2rnet/treebank.hpp"

namespace c2rnet {

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dim() const = 0;
  virtual std::string source() const = 0;
  virtual std::vector<double> vector(const std::string& doc_id, int token_index,
                                     const std::string& token) const = 0;
};

// Deterministic function of (token, dim, seed); entries in [-1, 1].
std::vector<double> hash_embed(const std::string& token, int dim, uint64_t seed);

class HashEmbedding final : public EmbeddingProvider {
 public:
  HashEmbedding(int dim, uint64_t seed);
  int dim() const override { return dim_; }
  std::string source() const override { return "hash"; }
  std::vector<double> vector(const std::string&, int,
                             const std::string& token) const override {
    return hash_embed(token, dim_, seed_);
  }

 private:
  int dim_;
  uint64_t seed_;
};

// Vectors keyed by (doc_id, token_index), loaded from a versioned JSONL
// table (header line, then one record per vector). Missing lookups throw.
class PrecomputedEmbedding final : public EmbeddingProvider {
 public:
  static PrecomputedEmbedding load(const std::filesystem::path& path);

  int dim() const override { return dim_; }
  std::string source() const override { return "precomputed-file"; }
  std::vector<double> vector(const std::string& doc_id, int token_index,
                             const std::string& token) const override;

 private:
  int dim_ = 0;
  std::map<std::pair<std::string, int>, std::vector<double>> table_;
};

void write_embedding_file(const std::filesystem::path& path, int dim,
                          const std::vector<std::tuple<std::string, int, std::vector<double>>>& records);

// Row t is the provider's vector for token t; the same matrix feeds both
// branches.
nn::Mat embed_document(const Document& doc, const EmbeddingProvider& provider);

std::unique_ptr<EmbeddingProvider> make_hash_provider(int dim, uint64_t seed);

}  // namespace c2rnet

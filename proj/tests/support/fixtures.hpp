#pragma once

// Shared test fixtures: random trees and documents, synthetic training
// corpora, a finite-difference gradient oracle, and a scratch-directory
// helper. Everything here is deterministic given the seed.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "c2rnet/nn.hpp"
#include "c2rnet/treebank.hpp"

namespace c2rnet::testing {

// uniform random binary tree over EDUs 1..n with labels drawn from the list
RSTTree random_tree(int n_edus, nn::Rng& rng, const std::vector<std::string>& relations);

std::vector<std::string> small_relation_set();  // subset of the default inventory

// default inventory plus the fine-grained "list" label used by the
// three-EDU example tree
const RelationInventory& example_inventory();

// minimal valid document: one token per EDU, one sentence, one paragraph
Document simple_doc(const std::string& id, int n_edus);

// memorizable parser corpus: distinct tokens per (doc, EDU), random gold
// trees, sentence groups of 1-3 EDUs, paragraph starts on some sentences
std::vector<Document> synthetic_rst_corpus(int n_docs, int min_edus, int max_edus,
                                           uint64_t seed);

// sentence-labeled corpus whose tokens carry class-correlated keywords;
// lowering keyword_tokens (or raising filler_tokens) buries the signal so
// that only a trained attention can recover it
std::vector<Document> synthetic_ndp_corpus(int n_docs, uint64_t seed,
                                           int keyword_tokens = 2,
                                           int filler_tokens = 1);

// Central finite differences over every scalar parameter.
// loss_forward  : pure function of the current tensor values
// analytic_grad : zeroes grads, runs one forward+backward, fills Tensor::grad
// Returns the maximum relative error, |a - fd| / max(|a|, |fd|, floor).
double gradient_max_rel_error(const std::vector<nn::Tensor*>& tensors,
                              const std::function<double()>& loss_forward,
                              const std::function<void()>& analytic_grad,
                              double step = 1e-4, double floor = 1e-4);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace c2rnet::testing

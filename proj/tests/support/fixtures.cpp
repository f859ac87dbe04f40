#include "support/fixtures.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

#include "c2rnet/content_type.hpp"

namespace c2rnet::testing {

namespace {

int build_random(RSTTree& tree, int lo, int hi, nn::Rng& rng,
                 const std::vector<std::string>& relations) {
  if (lo == hi) {
    tree.nodes.push_back({lo, lo, -1, -1, Nuclearity::NN, ""});
    return static_cast<int>(tree.nodes.size() - 1);
  }
  const int split = lo + rng.uniform_int(hi - lo);  // in [lo, hi)
  const int left = build_random(tree, lo, split, rng, relations);
  const int right = build_random(tree, split + 1, hi, rng, relations);
  static const Nuclearity kNucs[3] = {Nuclearity::NN, Nuclearity::NS, Nuclearity::SN};
  RSTTree::Node node;
  node.first = lo;
  node.last = hi;
  node.left = left;
  node.right = right;
  node.nuclearity = kNucs[rng.uniform_int(3)];
  node.relation = relations[static_cast<size_t>(rng.uniform_int(
      static_cast<int>(relations.size())))];
  tree.nodes.push_back(std::move(node));
  return static_cast<int>(tree.nodes.size() - 1);
}

}  // namespace

RSTTree random_tree(int n_edus, nn::Rng& rng, const std::vector<std::string>& relations) {
  RSTTree tree;
  tree.root = build_random(tree, 1, n_edus, rng, relations);
  return tree;
}

std::vector<std::string> small_relation_set() {
  return {"attribution", "contrast", "elaboration", "joint"};
}

const RelationInventory& example_inventory() {
  static const RelationInventory inv = [] {
    auto names = RelationInventory::default_inventory().names;
    names.push_back("list");
    return RelationInventory::from_names(std::move(names));
  }();
  return inv;
}

Document simple_doc(const std::string& id, int n_edus) {
  Document doc;
  doc.doc_id = id;
  for (int e = 0; e < n_edus; ++e) {
    doc.tokens.push_back("tok" + std::to_string(e));
    doc.edu_boundaries.push_back(e + 1);
  }
  doc.sentence_boundaries = {n_edus};
  doc.paragraph_starts = {0};
  doc.check();
  return doc;
}

std::vector<Document> synthetic_rst_corpus(int n_docs, int min_edus, int max_edus,
                                           uint64_t seed) {
  nn::Rng rng(seed);
  const auto relations = small_relation_set();
  std::vector<Document> docs;
  for (int d = 0; d < n_docs; ++d) {
    Document doc;
    {
      std::ostringstream id;
      id << "doc";
      if (d < 10) id << '0';
      id << d;
      doc.doc_id = id.str();
    }
    const int n_edus = min_edus + rng.uniform_int(max_edus - min_edus + 1);
    for (int e = 0; e < n_edus; ++e) {
      const int n_tokens = 3 + rng.uniform_int(3);
      for (int t = 0; t < n_tokens; ++t) {
        doc.tokens.push_back("d" + std::to_string(d) + "e" + std::to_string(e) + "t" +
                             std::to_string(t));
      }
      doc.edu_boundaries.push_back(static_cast<int>(doc.tokens.size()));
    }
    int e = 0;
    while (e < n_edus) {
      e = std::min(n_edus, e + 1 + rng.uniform_int(3));
      doc.sentence_boundaries.push_back(e);
    }
    doc.paragraph_starts.push_back(0);
    int sent_start = doc.sentence_boundaries.front();
    for (size_t s = 1; s < doc.sentence_boundaries.size(); ++s) {
      if (rng.uniform_int(3) == 0) doc.paragraph_starts.push_back(sent_start);
      sent_start = doc.sentence_boundaries[s];
    }
    doc.gold_tree = random_tree(n_edus, rng, relations);
    doc.check();
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> synthetic_ndp_corpus(int n_docs, uint64_t seed,
                                           int keyword_tokens, int filler_tokens) {
  nn::Rng rng(seed);
  std::vector<Document> docs;
  for (int d = 0; d < n_docs; ++d) {
    Document doc;
    {
      std::ostringstream id;
      id << "news";
      if (d < 10) id << '0';
      id << d;
      doc.doc_id = id.str();
    }
    const int n_sentences = 4 + rng.uniform_int(5);
    std::vector<ContentType> labels;
    for (int s = 0; s < n_sentences; ++s) {
      const int label = rng.uniform_int(kContentTypeCount);
      labels.push_back(static_cast<ContentType>(label));
      const int n_edus_in_sentence = 1 + rng.uniform_int(2);
      for (int e = 0; e < n_edus_in_sentence; ++e) {
        for (int k = 0; k < keyword_tokens; ++k)
          doc.tokens.push_back("kw" + std::to_string(label) + std::string(1, char('a' + k)));
        for (int f = 0; f < filler_tokens; ++f)
          doc.tokens.push_back("w" + std::to_string(rng.uniform_int(20)));
        doc.edu_boundaries.push_back(static_cast<int>(doc.tokens.size()));
      }
      doc.sentence_boundaries.push_back(static_cast<int>(doc.edu_boundaries.size()));
    }
    doc.paragraph_starts = {0};
    doc.ndp_labels = std::move(labels);
    doc.check();
    docs.push_back(std::move(doc));
  }
  return docs;
}

double gradient_max_rel_error(const std::vector<nn::Tensor*>& tensors,
                              const std::function<double()>& loss_forward,
                              const std::function<void()>& analytic_grad,
                              double step, double floor) {
  for (nn::Tensor* t : tensors) t->zero_grad();
  analytic_grad();
  std::vector<nn::Mat> grads;
  grads.reserve(tensors.size());
  for (nn::Tensor* t : tensors) grads.push_back(t->grad);

  double max_err = 0.0;
  for (size_t ti = 0; ti < tensors.size(); ++ti) {
    nn::Tensor* t = tensors[ti];
    for (size_t i = 0; i < t->value.a.size(); ++i) {
      const double original = t->value.a[i];
      t->value.a[i] = original + step;
      const double up = loss_forward();
      t->value.a[i] = original - step;
      const double down = loss_forward();
      t->value.a[i] = original;
      const double fd = (up - down) / (2.0 * step);
      const double analytic = grads[ti].a[i];
      const double err =
          std::fabs(analytic - fd) /
          std::max({std::fabs(analytic), std::fabs(fd), floor});
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

TempDir::TempDir() {
  static std::atomic<uint64_t> counter{0};
  const auto base = std::filesystem::temp_directory_path();
  path_ = base / ("c2rnet_test_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace c2rnet::testing

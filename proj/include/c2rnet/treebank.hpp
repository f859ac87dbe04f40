#pragma once

// Data model, text format, validation, and constituent extraction for
// binary RST constituency trees and annotated documents.

#include <compare>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "c2rnet/content_type.hpp"

namespace c2rnet {

enum class Nuclearity { NN, NS, SN };

std::string to_string(Nuclearity n);
std::optional<Nuclearity> nuclearity_from(std::string_view s);

// Pseudo-label used when extracting constituents under the all-nodes
// convention; rejected inside stored trees.
inline constexpr std::string_view kSpanLabel = "span";

struct RelationInventory {
  std::vector<std::string> names;  // lowercase, unique

  bool contains(std::string_view name) const;
  // the 18 coarse relation classes standard for this treebank family
  static const RelationInventory& default_inventory();
  static RelationInventory from_names(std::vector<std::string> names);
};

// Binary labeled tree over EDUs 1..n. Nodes live in an arena; leaves have
// child indices -1 and carry no label. Equality is structural.
struct RSTTree {
  struct Node {
    int first = 0;  // 1-based inclusive EDU span
    int last = 0;
    int left = -1;
    int right = -1;
    Nuclearity nuclearity = Nuclearity::NN;  // internal nodes only
    std::string relation;                    // internal nodes only
    bool is_leaf() const { return left < 0; }
  };

  std::vector<Node> nodes;
  int root = -1;

  bool empty() const { return root < 0; }
  const Node& node(int id) const { return nodes[static_cast<size_t>(id)]; }
  int leaf_count() const;
  int internal_count() const;

  friend bool operator==(const RSTTree& a, const RSTTree& b) {
    return a.structural_equal(b);
  }
  bool structural_equal(const RSTTree& other) const;
};

// N-ary source annotation (>=2 children per internal node); only an
// ingestion vehicle for binarize().
struct NaryTree {
  struct Node {
    int leaf_index = 0;  // leaves only
    Nuclearity nuclearity = Nuclearity::NN;
    std::string relation;
    std::vector<int> children;  // empty for leaves
    bool is_leaf() const { return children.empty(); }
  };
  std::vector<Node> nodes;
  int root = -1;
};

struct Document {
  std::string doc_id;
  std::vector<std::string> tokens;
  // end-exclusive token index per EDU; strictly increasing; last == |tokens|
  std::vector<int> edu_boundaries;
  // end-exclusive EDU index per sentence; strictly increasing; last == n_edus
  std::vector<int> sentence_boundaries;
  // 0-based EDU indices that begin a paragraph; sorted; contains 0;
  // every entry is a sentence-start EDU
  std::vector<int> paragraph_starts;
  std::optional<RSTTree> gold_tree;
  std::optional<std::vector<ContentType>> ndp_labels;  // one per sentence

  int n_tokens() const { return static_cast<int>(tokens.size()); }
  int n_edus() const { return static_cast<int>(edu_boundaries.size()); }
  int n_sentences() const { return static_cast<int>(sentence_boundaries.size()); }
  // [begin,end) token range of 0-based EDU e
  std::pair<int, int> edu_token_range(int e) const;
  // [begin,end) EDU range of 0-based sentence s
  std::pair<int, int> sentence_edu_range(int s) const;
  bool is_paragraph_start(int edu0) const;

  // Throws ValidationError naming the document and field on any
  // invariant violation.
  void check() const;
};

// Bracketed tree text, grammar:
//   node := "(" NUC REL node node ")" | "(leaf" INT ")"
//   NUC  := "NN" | "NS" | "SN"
RSTTree parse_tree_text(std::string_view text, int n_edus,
                        const RelationInventory& inventory =
                            RelationInventory::default_inventory());
std::string serialize_tree(const RSTTree& tree);

// Same grammar with >=2 children allowed per internal node.
NaryTree parse_nary_tree_text(std::string_view text,
                              const RelationInventory& inventory =
                                  RelationInventory::default_inventory());

// Right-branching binarization; multinuclear nodes expand to a right-leaning
// chain of (NN, same relation) nodes. Throws ValidationError on nodes with
// fewer than 2 children or non-NN nodes with more than 2.
RSTTree binarize(const NaryTree& nary);

enum class ViolationKind {
  LeafCountMismatch,
  NonAdjacentChildren,
  SpanUnionMismatch,
  InvalidLeafSpan,
  LeafNumbering,
  ReservedRelation,
  StructureBroken,
};

std::string to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::string detail;
};

// Violations are data, not exceptions; empty result means the tree holds
// every structural invariant and matches the document's EDU count.
std::vector<Violation> validate(const RSTTree& tree, const Document& doc);

enum class Convention { OriginalParseval, RSTParseval };

std::string to_string(Convention c);

struct LabeledConstituent {
  int first = 0;
  int last = 0;
  std::string nuclearity_tag;
  std::string relation_tag;

  auto operator<=>(const LabeledConstituent&) const = default;
};

// OriginalParseval: one constituent per internal node (root included when
// include_root). RSTParseval: one per non-root node, leaves included, with
// the node's role under its parent (N/S) and the parent's relation on
// satellite / multinuclear children, "span" otherwise. include_root only
// affects OriginalParseval.
std::set<LabeledConstituent> constituents(const RSTTree& tree, Convention convention,
                                          bool include_root = true);

// Native corpus format: one JSON object per line (fields doc_id, tokens,
// edu_boundaries, sentence_boundaries, paragraph_starts, optional tree,
// optional ndp_labels). A directory loads every *.jsonl file in it.
std::vector<Document> load_corpus(const std::filesystem::path& path,
                                  const RelationInventory& inventory =
                                      RelationInventory::default_inventory());

Document document_from_json(const std::string& line,
                            const RelationInventory& inventory =
                                RelationInventory::default_inventory());
std::string document_to_json(const Document& doc);
void save_corpus(const std::filesystem::path& path,
                 const std::vector<Document>& docs);

// Per-line lint used by the validate subcommand: returns one error message
// per bad record instead of throwing on the first.
std::vector<std::string> lint_corpus(const std::filesystem::path& path,
                                     const RelationInventory& inventory =
                                         RelationInventory::default_inventory());

}  // namespace c2rnet

#include "c2rnet/treebank.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "c2rnet/error.hpp"
#include "json.hpp"

namespace c2rnet {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string to_string(Nuclearity n) {
  switch (n) {
    case Nuclearity::NN: return "NN";
    case Nuclearity::NS: return "NS";
    case Nuclearity::SN: return "SN";
  }
  return "??";
}

std::optional<Nuclearity> nuclearity_from(std::string_view s) {
  if (s == "NN") return Nuclearity::NN;
  if (s == "NS") return Nuclearity::NS;
  if (s == "SN") return Nuclearity::SN;
  return std::nullopt;
}

bool RelationInventory::contains(std::string_view name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

const RelationInventory& RelationInventory::default_inventory() {
  static const RelationInventory inv = from_names({
      "attribution", "background", "cause", "comparison", "condition",
      "contrast", "elaboration", "enablement", "evaluation", "explanation",
      "joint", "manner-means", "same-unit", "summary", "temporal",
      "textual-organization", "topic-change", "topic-comment",
  });
  return inv;
}

RelationInventory RelationInventory::from_names(std::vector<std::string> names) {
  RelationInventory inv;
  inv.names = std::move(names);
  for (const auto& n : inv.names) {
    if (n.empty()) throw ValidationError("relation inventory: empty name");
    if (n == kSpanLabel)
      throw ValidationError("relation inventory: 'span' is reserved");
    if (std::count(inv.names.begin(), inv.names.end(), n) > 1)
      throw ValidationError("relation inventory: duplicate name '" + n + "'");
  }
  return inv;
}

int RSTTree::leaf_count() const {
  int n = 0;
  for (const auto& nd : nodes)
    if (nd.is_leaf()) ++n;
  return n;
}

int RSTTree::internal_count() const {
  int n = 0;
  for (const auto& nd : nodes)
    if (!nd.is_leaf()) ++n;
  return n;
}

bool RSTTree::structural_equal(const RSTTree& other) const {
  if (empty() != other.empty()) return false;
  if (empty()) return true;
  std::function<bool(int, int)> eq = [&](int a, int b) {
    const Node& x = nodes[a];
    const Node& y = other.nodes[b];
    if (x.is_leaf() != y.is_leaf()) return false;
    if (x.first != y.first || x.last != y.last) return false;
    if (x.is_leaf()) return true;
    if (x.nuclearity != y.nuclearity || x.relation != y.relation) return false;
    return eq(x.left, y.left) && eq(x.right, y.right);
  };
  return eq(root, other.root);
}

std::pair<int, int> Document::edu_token_range(int e) const {
  const int begin = e == 0 ? 0 : edu_boundaries[e - 1];
  return {begin, edu_boundaries[e]};
}

std::pair<int, int> Document::sentence_edu_range(int s) const {
  const int begin = s == 0 ? 0 : sentence_boundaries[s - 1];
  return {begin, sentence_boundaries[s]};
}

bool Document::is_paragraph_start(int edu0) const {
  return std::binary_search(paragraph_starts.begin(), paragraph_starts.end(), edu0);
}

void Document::check() const {
  auto fail = [&](const std::string& field, const std::string& msg) {
    throw ValidationError("doc '" + doc_id + "': " + field + ": " + msg);
  };
  if (doc_id.empty()) throw ValidationError("document with empty doc_id");
  if (tokens.empty()) fail("tokens", "document has no tokens");
  if (edu_boundaries.empty()) fail("edu_boundaries", "document has no EDUs");
  int prev = 0;
  for (int b : edu_boundaries) {
    if (b <= prev) fail("edu_boundaries", "not strictly increasing");
    prev = b;
  }
  if (edu_boundaries.back() != n_tokens())
    fail("edu_boundaries", "last entry (" + std::to_string(edu_boundaries.back()) +
                               ") != token count (" + std::to_string(n_tokens()) + ")");
  if (sentence_boundaries.empty()) fail("sentence_boundaries", "document has no sentences");
  prev = 0;
  for (int b : sentence_boundaries) {
    if (b <= prev) fail("sentence_boundaries", "not strictly increasing");
    prev = b;
  }
  if (sentence_boundaries.back() != n_edus())
    fail("sentence_boundaries", "last entry (" + std::to_string(sentence_boundaries.back()) +
                                    ") != EDU count (" + std::to_string(n_edus()) + ")");
  if (paragraph_starts.empty() || paragraph_starts.front() != 0)
    fail("paragraph_starts", "must contain EDU 0");
  for (size_t i = 1; i < paragraph_starts.size(); ++i)
    if (paragraph_starts[i] <= paragraph_starts[i - 1])
      fail("paragraph_starts", "not strictly increasing");
  for (int p : paragraph_starts) {
    const bool sentence_start =
        p == 0 || std::binary_search(sentence_boundaries.begin(),
                                     sentence_boundaries.end() - 1, p);
    if (p < 0 || p >= n_edus() || !sentence_start)
      fail("paragraph_starts", "EDU " + std::to_string(p) + " is not a sentence start");
  }
  if (ndp_labels && static_cast<int>(ndp_labels->size()) != n_sentences())
    fail("ndp_labels", std::to_string(ndp_labels->size()) + " labels for " +
                           std::to_string(n_sentences()) + " sentences");
  if (gold_tree) {
    auto violations = validate(*gold_tree, *this);
    if (!violations.empty())
      fail("tree", to_string(violations.front().kind) + ": " + violations.front().detail);
  }
}

// ---------------------------------------------------------------------------
// Bracketed tree text

namespace {

struct Lexeme {
  enum Kind { LParen, RParen, Word, End } kind;
  std::string text;
  size_t pos;
};

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) {}

  Lexeme next() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    if (i_ >= s_.size()) return {Lexeme::End, "", s_.size()};
    const size_t start = i_;
    if (s_[i_] == '(') {
      ++i_;
      return {Lexeme::LParen, "(", start};
    }
    if (s_[i_] == ')') {
      ++i_;
      return {Lexeme::RParen, ")", start};
    }
    while (i_ < s_.size() && s_[i_] != '(' && s_[i_] != ')' &&
           !std::isspace(static_cast<unsigned char>(s_[i_])))
      ++i_;
    return {Lexeme::Word, std::string(s_.substr(start, i_ - start)), start};
  }

  Lexeme peek() {
    const size_t save = i_;
    Lexeme l = next();
    i_ = save;
    return l;
  }

 private:
  std::string_view s_;
  size_t i_ = 0;
};

[[noreturn]] void syntax_error(size_t pos, const std::string& msg) {
  throw ValidationError("tree text: syntax error at position " +
                        std::to_string(pos) + ": " + msg);
}

// Shared recursive-descent core; max_children = 2 for strict binary trees.
struct TreeTextParser {
  Lexer lex;
  const RelationInventory& inventory;
  size_t max_children;

  // Appends into `nodes` (RSTTree arena shape is reused for the n-ary case
  // through a separate child list).
  struct Parsed {
    int leaf_index = 0;
    Nuclearity nuclearity = Nuclearity::NN;
    std::string relation;
    std::vector<int> children;
    bool leaf = false;
  };
  std::vector<Parsed> nodes;

  int parse_node() {
    Lexeme t = lex.next();
    if (t.kind == Lexeme::RParen) syntax_error(t.pos, "missing child");
    if (t.kind != Lexeme::LParen) syntax_error(t.pos, "expected '('");
    Lexeme head = lex.next();
    if (head.kind != Lexeme::Word) syntax_error(head.pos, "expected node head");

    if (head.text == "leaf") {
      Lexeme num = lex.next();
      if (num.kind != Lexeme::Word) syntax_error(num.pos, "expected leaf number");
      int value = 0;
      try {
        size_t used = 0;
        value = std::stoi(num.text, &used);
        if (used != num.text.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        syntax_error(num.pos, "bad leaf number '" + num.text + "'");
      }
      if (value < 1) syntax_error(num.pos, "leaf numbers start at 1");
      Lexeme close = lex.next();
      if (close.kind != Lexeme::RParen) syntax_error(close.pos, "expected ')'");
      nodes.push_back({value, Nuclearity::NN, "", {}, true});
      return static_cast<int>(nodes.size() - 1);
    }

    auto nuc = nuclearity_from(head.text);
    if (!nuc) syntax_error(head.pos, "unknown nuclearity '" + head.text + "'");
    Lexeme rel = lex.next();
    if (rel.kind != Lexeme::Word) syntax_error(rel.pos, "expected relation label");
    if (rel.text == kSpanLabel)
      syntax_error(rel.pos, "'span' is reserved and cannot label a stored tree");
    if (!inventory.contains(rel.text))
      syntax_error(rel.pos, "unknown relation label '" + rel.text + "'");

    std::vector<int> children;
    while (true) {
      Lexeme la = lex.peek();
      if (la.kind == Lexeme::RParen) break;
      if (la.kind == Lexeme::End) syntax_error(la.pos, "unexpected end of input");
      if (children.size() == max_children)
        syntax_error(la.pos, "too many children (expected " +
                                 std::to_string(max_children) + ")");
      children.push_back(parse_node());
    }
    Lexeme close = lex.next();
    if (close.kind != Lexeme::RParen) syntax_error(close.pos, "expected ')'");
    if (children.size() < 2) syntax_error(close.pos, "missing child");

    nodes.push_back({0, *nuc, rel.text, std::move(children), false});
    return static_cast<int>(nodes.size() - 1);
  }

  int parse_root() {
    int r = parse_node();
    Lexeme tail = lex.next();
    if (tail.kind != Lexeme::End) syntax_error(tail.pos, "trailing content after tree");
    return r;
  }
};

// Assigns spans bottom-up; enforces adjacency and returns leaves in order.
void finalize_spans(RSTTree& tree) {
  std::vector<int> leaf_order;
  std::function<void(int)> walk = [&](int id) {
    RSTTree::Node& n = tree.nodes[id];
    if (n.is_leaf()) {
      leaf_order.push_back(n.first);
      return;
    }
    walk(n.left);
    walk(n.right);
    const auto& l = tree.nodes[n.left];
    const auto& r = tree.nodes[n.right];
    if (r.first != l.last + 1)
      throw ValidationError("tree text: non-adjacent children (" +
                            std::to_string(l.first) + "," + std::to_string(l.last) +
                            ") and (" + std::to_string(r.first) + "," +
                            std::to_string(r.last) + ")");
    n.first = l.first;
    n.last = r.last;
  };
  walk(tree.root);
  for (size_t i = 0; i + 1 < leaf_order.size(); ++i) {
    // adjacency above already forces consecutive leaves; this guards direct
    // arena construction paths
    if (leaf_order[i + 1] != leaf_order[i] + 1)
      throw ValidationError("tree text: leaves out of order");
  }
}

}  // namespace

RSTTree parse_tree_text(std::string_view text, int n_edus,
                        const RelationInventory& inventory) {
  if (n_edus < 1) throw ValidationError("tree text: document must have at least 1 EDU");
  TreeTextParser p{Lexer(text), inventory, 2, {}};
  const int root = p.parse_root();

  RSTTree tree;
  tree.nodes.reserve(p.nodes.size());
  for (const auto& pn : p.nodes) {
    RSTTree::Node n;
    if (pn.leaf) {
      n.first = n.last = pn.leaf_index;
    } else {
      n.nuclearity = pn.nuclearity;
      n.relation = pn.relation;
      n.left = pn.children[0];
      n.right = pn.children[1];
    }
    tree.nodes.push_back(std::move(n));
  }
  tree.root = root;
  finalize_spans(tree);

  const int leaves = tree.leaf_count();
  if (leaves != n_edus)
    throw ValidationError("tree text: leaf count " + std::to_string(leaves) +
                          " != EDU count " + std::to_string(n_edus));
  const auto& r = tree.nodes[tree.root];
  if (r.first != 1 || r.last != n_edus)
    throw ValidationError("tree text: leaves must be numbered 1.." +
                          std::to_string(n_edus) + " left-to-right, got span (" +
                          std::to_string(r.first) + "," + std::to_string(r.last) + ")");
  return tree;
}

std::string serialize_tree(const RSTTree& tree) {
  if (tree.empty()) throw ValidationError("serialize_tree: empty tree");
  std::string out;
  std::function<void(int)> walk = [&](int id) {
    const auto& n = tree.nodes[id];
    if (n.is_leaf()) {
      out += "(leaf " + std::to_string(n.first) + ")";
      return;
    }
    out += "(" + to_string(n.nuclearity) + " " + n.relation + " ";
    walk(n.left);
    out += " ";
    walk(n.right);
    out += ")";
  };
  walk(tree.root);
  return out;
}

NaryTree parse_nary_tree_text(std::string_view text,
                              const RelationInventory& inventory) {
  TreeTextParser p{Lexer(text), inventory, SIZE_MAX, {}};
  const int root = p.parse_root();
  NaryTree tree;
  tree.nodes.reserve(p.nodes.size());
  for (auto& pn : p.nodes) {
    NaryTree::Node n;
    n.leaf_index = pn.leaf_index;
    n.nuclearity = pn.nuclearity;
    n.relation = std::move(pn.relation);
    n.children = std::move(pn.children);
    tree.nodes.push_back(std::move(n));
  }
  tree.root = root;
  return tree;
}

RSTTree binarize(const NaryTree& nary) {
  if (nary.root < 0) throw ValidationError("binarize: empty tree");
  RSTTree out;

  std::function<int(int)> convert = [&](int id) -> int {
    const NaryTree::Node& n = nary.nodes[id];
    if (n.is_leaf()) {
      out.nodes.push_back({n.leaf_index, n.leaf_index, -1, -1, Nuclearity::NN, ""});
      return static_cast<int>(out.nodes.size() - 1);
    }
    if (n.children.size() < 2)
      throw ValidationError("binarize: internal node with fewer than 2 children");
    if (n.children.size() > 2 && n.nuclearity != Nuclearity::NN)
      throw ValidationError(
          "binarize: node with more than 2 children must be multinuclear (NN)");

    // fold right: (c1 (c2 (... (c_{m-1} c_m))))
    int right = convert(n.children.back());
    for (int i = static_cast<int>(n.children.size()) - 2; i >= 0; --i) {
      const int left = convert(static_cast<int>(n.children[i]));
      RSTTree::Node b;
      b.left = left;
      b.right = right;
      // chain links below the original node are multinuclear expansions
      b.nuclearity = (i == 0) ? n.nuclearity : Nuclearity::NN;
      b.relation = n.relation;
      out.nodes.push_back(std::move(b));
      right = static_cast<int>(out.nodes.size() - 1);
    }
    return right;
  };

  out.root = convert(nary.root);
  finalize_spans(out);
  return out;
}

std::string to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::LeafCountMismatch: return "LeafCountMismatch";
    case ViolationKind::NonAdjacentChildren: return "NonAdjacentChildren";
    case ViolationKind::SpanUnionMismatch: return "SpanUnionMismatch";
    case ViolationKind::InvalidLeafSpan: return "InvalidLeafSpan";
    case ViolationKind::LeafNumbering: return "LeafNumbering";
    case ViolationKind::ReservedRelation: return "ReservedRelation";
    case ViolationKind::StructureBroken: return "StructureBroken";
  }
  return "Unknown";
}

std::vector<Violation> validate(const RSTTree& tree, const Document& doc) {
  std::vector<Violation> out;
  const int n_nodes = static_cast<int>(tree.nodes.size());
  if (tree.root < 0 || tree.root >= n_nodes) {
    out.push_back({ViolationKind::StructureBroken, "missing or out-of-range root"});
    return out;
  }

  bool structure_ok = true;
  std::vector<int> leaves;
  std::vector<char> visited(tree.nodes.size(), 0);

  std::function<void(int)> walk = [&](int id) {
    if (id < 0 || id >= n_nodes || visited[id]) {
      out.push_back({ViolationKind::StructureBroken,
                     "bad child index " + std::to_string(id)});
      structure_ok = false;
      return;
    }
    visited[id] = 1;
    const auto& n = tree.nodes[id];
    if (n.is_leaf()) {
      if (n.first != n.last) {
        out.push_back({ViolationKind::InvalidLeafSpan,
                       "leaf span (" + std::to_string(n.first) + "," +
                           std::to_string(n.last) + ")"});
        structure_ok = false;
      }
      leaves.push_back(n.first);
      return;
    }
    if (n.relation == kSpanLabel) {
      out.push_back({ViolationKind::ReservedRelation,
                     "relation 'span' inside stored tree"});
    }
    if (n.right < 0 || n.right >= n_nodes || n.left >= n_nodes) {
      out.push_back({ViolationKind::StructureBroken, "internal node missing a child"});
      structure_ok = false;
      return;
    }
    walk(n.left);
    walk(n.right);
    if (!structure_ok) return;
    const auto& l = tree.nodes[n.left];
    const auto& r = tree.nodes[n.right];
    if (r.first != l.last + 1) {
      out.push_back({ViolationKind::NonAdjacentChildren,
                     "children (" + std::to_string(l.first) + "," +
                         std::to_string(l.last) + ") and (" + std::to_string(r.first) +
                         "," + std::to_string(r.last) + ")"});
      structure_ok = false;
      return;
    }
    if (n.first != l.first || n.last != r.last) {
      out.push_back({ViolationKind::SpanUnionMismatch,
                     "node (" + std::to_string(n.first) + "," + std::to_string(n.last) +
                         ") != union of children"});
      structure_ok = false;
    }
  };
  walk(tree.root);

  if (structure_ok) {
    for (size_t i = 0; i < leaves.size(); ++i) {
      if (leaves[i] != static_cast<int>(i) + 1) {
        out.push_back({ViolationKind::LeafNumbering,
                       "leaves are not numbered 1..n left-to-right"});
        break;
      }
    }
    if (static_cast<int>(leaves.size()) != doc.n_edus()) {
      out.push_back({ViolationKind::LeafCountMismatch,
                     std::to_string(leaves.size()) + " leaves vs " +
                         std::to_string(doc.n_edus()) + " EDUs"});
    }
  }
  return out;
}

std::string to_string(Convention c) {
  return c == Convention::OriginalParseval ? "original-parseval" : "rst-parseval";
}

std::set<LabeledConstituent> constituents(const RSTTree& tree, Convention convention,
                                          bool include_root) {
  std::set<LabeledConstituent> out;
  if (tree.empty()) throw ValidationError("constituents: empty tree");

  if (convention == Convention::OriginalParseval) {
    std::function<void(int)> walk = [&](int id) {
      const auto& n = tree.nodes[id];
      if (n.is_leaf()) return;
      if (include_root || id != tree.root)
        out.insert({n.first, n.last, to_string(n.nuclearity), n.relation});
      walk(n.left);
      walk(n.right);
    };
    walk(tree.root);
    return out;
  }

  // RSTParseval: every non-root node, labeled by its role under its parent.
  std::function<void(int)> walk = [&](int id) {
    const auto& p = tree.nodes[id];
    if (p.is_leaf()) return;
    const auto emit = [&](int child, bool nucleus) {
      const auto& c = tree.nodes[child];
      const bool multinuclear = p.nuclearity == Nuclearity::NN;
      const std::string nuc_tag = nucleus ? "N" : "S";
      const std::string rel_tag =
          (!nucleus || multinuclear) ? p.relation : std::string(kSpanLabel);
      out.insert({c.first, c.last, nuc_tag, rel_tag});
    };
    const bool left_nucleus = p.nuclearity != Nuclearity::SN;
    const bool right_nucleus = p.nuclearity != Nuclearity::NS;
    emit(p.left, left_nucleus);
    emit(p.right, right_nucleus);
    walk(p.left);
    walk(p.right);
  };
  walk(tree.root);
  return out;
}

// ---------------------------------------------------------------------------
// Native corpus format (JSON lines)

namespace {

std::vector<int> int_array(const ordered_json& j, const std::string& doc_id,
                           const char* field) {
  if (!j.is_array())
    throw ValidationError("doc '" + doc_id + "': " + field + ": expected an array");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer())
      throw ValidationError("doc '" + doc_id + "': " + field + ": expected integers");
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

Document document_from_json(const std::string& line,
                            const RelationInventory& inventory) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad json record: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("bad json record: not an object");

  Document doc;
  if (!j.contains("doc_id") || !j["doc_id"].is_string())
    throw ValidationError("record missing string field 'doc_id'");
  doc.doc_id = j["doc_id"].get<std::string>();
  const std::string& id = doc.doc_id;

  auto require = [&](const char* field) -> const ordered_json& {
    if (!j.contains(field))
      throw ValidationError("doc '" + id + "': missing field '" + field + "'");
    return j[field];
  };

  const auto& toks = require("tokens");
  if (!toks.is_array())
    throw ValidationError("doc '" + id + "': tokens: expected an array");
  for (const auto& t : toks) {
    if (!t.is_string())
      throw ValidationError("doc '" + id + "': tokens: expected strings");
    doc.tokens.push_back(t.get<std::string>());
  }
  doc.edu_boundaries = int_array(require("edu_boundaries"), id, "edu_boundaries");
  doc.sentence_boundaries =
      int_array(require("sentence_boundaries"), id, "sentence_boundaries");
  doc.paragraph_starts = int_array(require("paragraph_starts"), id, "paragraph_starts");

  if (j.contains("ndp_labels")) {
    if (!j["ndp_labels"].is_array())
      throw ValidationError("doc '" + id + "': ndp_labels: expected an array");
    std::vector<ContentType> labels;
    int sentence = 0;
    for (const auto& l : j["ndp_labels"]) {
      if (!l.is_string())
        throw ValidationError("doc '" + id + "': ndp_labels: expected strings");
      const std::string name = l.get<std::string>();
      auto ct = content_type_from(name);
      if (!ct)
        throw ValidationError("doc '" + id + "': unknown content-type label '" + name +
                              "' (sentence " + std::to_string(sentence) + ")");
      labels.push_back(*ct);
      ++sentence;
    }
    doc.ndp_labels = std::move(labels);
  }

  // structural invariants first so tree validation sees a sane EDU count
  std::optional<std::string> tree_text;
  if (j.contains("tree")) {
    if (!j["tree"].is_string())
      throw ValidationError("doc '" + id + "': tree: expected a string");
    tree_text = j["tree"].get<std::string>();
  }
  {
    Document no_tree = doc;
    no_tree.gold_tree.reset();
    no_tree.check();
  }
  if (tree_text) {
    try {
      doc.gold_tree = parse_tree_text(*tree_text, doc.n_edus(), inventory);
    } catch (const ValidationError& e) {
      throw ValidationError("doc '" + id + "': tree: " + e.what());
    }
  }
  return doc;
}

std::string document_to_json(const Document& doc) {
  ordered_json j;
  j["doc_id"] = doc.doc_id;
  j["tokens"] = doc.tokens;
  j["edu_boundaries"] = doc.edu_boundaries;
  j["sentence_boundaries"] = doc.sentence_boundaries;
  j["paragraph_starts"] = doc.paragraph_starts;
  if (doc.gold_tree) j["tree"] = serialize_tree(*doc.gold_tree);
  if (doc.ndp_labels) {
    std::vector<std::string> labels;
    labels.reserve(doc.ndp_labels->size());
    for (ContentType t : *doc.ndp_labels) labels.push_back(to_string(t));
    j["ndp_labels"] = labels;
  }
  return j.dump();
}

namespace {

std::vector<fs::path> corpus_files(const fs::path& path) {
  if (!fs::exists(path))
    throw ValidationError("corpus path does not exist: " + path.string());
  if (fs::is_regular_file(path)) return {path};
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw ValidationError("no .jsonl files in directory: " + path.string());
  return files;
}

void for_each_record(const fs::path& path,
                     const std::function<void(const fs::path&, int, const std::string&)>& fn) {
  for (const auto& file : corpus_files(path)) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open file: " + file.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      fn(file, lineno, line);
    }
  }
}

}  // namespace

std::vector<Document> load_corpus(const fs::path& path,
                                  const RelationInventory& inventory) {
  std::vector<Document> docs;
  for_each_record(path, [&](const fs::path& file, int lineno, const std::string& line) {
    try {
      docs.push_back(document_from_json(line, inventory));
    } catch (const ValidationError& e) {
      throw ValidationError(file.filename().string() + ":" + std::to_string(lineno) +
                            ": " + e.what());
    }
  });
  std::sort(docs.begin(), docs.end(),
            [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
  for (size_t i = 1; i < docs.size(); ++i) {
    if (docs[i].doc_id == docs[i - 1].doc_id)
      throw ValidationError("duplicate doc_id '" + docs[i].doc_id + "'");
  }
  return docs;
}

std::vector<std::string> lint_corpus(const fs::path& path,
                                     const RelationInventory& inventory) {
  std::vector<std::string> errors;
  std::vector<std::string> seen_ids;
  for_each_record(path, [&](const fs::path& file, int lineno, const std::string& line) {
    try {
      Document d = document_from_json(line, inventory);
      seen_ids.push_back(d.doc_id);
    } catch (const ValidationError& e) {
      errors.push_back(file.filename().string() + ":" + std::to_string(lineno) + ": " +
                       e.what());
    }
  });
  std::sort(seen_ids.begin(), seen_ids.end());
  for (size_t i = 1; i < seen_ids.size(); ++i) {
    if (seen_ids[i] == seen_ids[i - 1])
      errors.push_back("duplicate doc_id '" + seen_ids[i] + "'");
  }
  return errors;
}

void save_corpus(const fs::path& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  for (const auto& d : docs) out << document_to_json(d) << "\n";
}

}  // namespace c2rnet

#include "c2rnet/rst_parser.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "c2rnet/error.hpp"

namespace c2rnet {

using nn::Graph;
using nn::Mat;
using nn::VarId;

std::string to_string(FusionMode m) {
  switch (m) {
    case FusionMode::None: return "none";
    case FusionMode::NdpEmbedding: return "ndp-embedding";
    case FusionMode::NdpOneHot: return "ndp-one-hot";
  }
  return "??";
}

std::optional<FusionMode> fusion_mode_from(std::string_view s) {
  if (s == "none") return FusionMode::None;
  if (s == "ndp-embedding") return FusionMode::NdpEmbedding;
  if (s == "ndp-one-hot") return FusionMode::NdpOneHot;
  return std::nullopt;
}

int PairInventory::index_of(Nuclearity nuc, const std::string& relation) const {
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].first == nuc && pairs[i].second == relation)
      return static_cast<int>(i);
  }
  return -1;
}

PairInventory PairInventory::from_pairs(
    std::vector<std::pair<Nuclearity, std::string>> pairs) {
  if (pairs.empty()) throw ValidationError("pair inventory: empty");
  auto key = [](const std::pair<Nuclearity, std::string>& p) {
    return std::make_pair(to_string(p.first), p.second);
  };
  std::sort(pairs.begin(), pairs.end(),
            [&](const auto& a, const auto& b) { return key(a) < key(b); });
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return PairInventory{std::move(pairs)};
}

PairInventory PairInventory::full_cross(const RelationInventory& relations) {
  std::vector<std::pair<Nuclearity, std::string>> pairs;
  for (Nuclearity nuc : {Nuclearity::NN, Nuclearity::NS, Nuclearity::SN})
    for (const auto& rel : relations.names) pairs.emplace_back(nuc, rel);
  return from_pairs(std::move(pairs));
}

PairInventory PairInventory::observed(const std::vector<Document>& corpus) {
  std::vector<std::pair<Nuclearity, std::string>> pairs;
  for (const auto& doc : corpus) {
    if (!doc.gold_tree) continue;
    for (const auto& n : doc.gold_tree->nodes) {
      if (!n.is_leaf()) pairs.emplace_back(n.nuclearity, n.relation);
    }
  }
  if (pairs.empty())
    throw ValidationError("pair inventory: no labeled internal nodes in corpus");
  return from_pairs(std::move(pairs));
}

int RSTConfig::fused_width() const {
  switch (mode) {
    case FusionMode::None: return 2 * h1;
    case FusionMode::NdpEmbedding: return 2 * h1 + dim;
    case FusionMode::NdpOneHot: return 2 * h1 + kContentTypeCount;
  }
  return 0;
}

namespace {

RSTParams::LstmDir add_lstm(nn::ParamSet& ps, const std::string& prefix, int in, int h,
                            nn::Rng& rng) {
  RSTParams::LstmDir d;
  d.input_weight = &ps.add_xavier(prefix + ".input", in, 4 * h, rng);
  d.recur_weight = &ps.add_xavier(prefix + ".recur", h, 4 * h, rng);
  d.bias = &ps.add(prefix + ".bias", 1, 4 * h);
  // forget-gate bias starts at 1
  for (int c = h; c < 2 * h; ++c) d.bias->value(0, c) = 1.0;
  return d;
}

}  // namespace

RSTParams RSTParams::init(const RSTConfig& cfg, PairInventory pairs, nn::Rng& rng) {
  if (cfg.dim < 1 || cfg.h1 < 1 || cfg.h2 < 1 || cfg.split_hidden < 1 || cfg.para_dim < 1)
    throw ValidationError("rst params: sizes must be >= 1");
  RSTParams p;
  p.cfg = cfg;
  p.pairs = std::move(pairs);
  p.token_fwd = add_lstm(p.params, "rst.token.fwd", cfg.dim, cfg.h1, rng);
  p.token_bwd = add_lstm(p.params, "rst.token.bwd", cfg.dim, cfg.h1, rng);
  const int fused = cfg.fused_width();
  p.edu_fwd = add_lstm(p.params, "rst.edu.fwd", fused, cfg.h2, rng);
  p.edu_bwd = add_lstm(p.params, "rst.edu.bwd", fused, cfg.h2, rng);
  p.boundary_table = &p.params.add_xavier("rst.split.boundary", 2, cfg.para_dim, rng);
  const int split_in = 3 * (2 * cfg.h2) + cfg.para_dim;
  p.split_hidden_w = &p.params.add_xavier("rst.split.hidden_w", split_in, cfg.split_hidden, rng);
  p.split_hidden_b = &p.params.add("rst.split.hidden_b", 1, cfg.split_hidden);
  p.split_out_w = &p.params.add_xavier("rst.split.out_w", cfg.split_hidden, 1, rng);
  p.split_out_b = &p.params.add("rst.split.out_b", 1, 1);
  p.label_weight = &p.params.add_xavier("rst.label.weight", 2 * (2 * cfg.h2),
                                        p.pairs.size(), rng);
  p.label_bias = &p.params.add("rst.label.bias", 1, p.pairs.size());
  return p;
}

namespace {

// one direction of a gated recurrent layer over the rows of X; output rows
// stay in original order
std::vector<VarId> lstm_run(Graph& g, VarId x, const RSTParams::LstmDir& d, bool reverse) {
  const int T = g.rows(x);
  const int h = d.recur_weight->value.rows;
  const VarId W = g.param(*d.input_weight);
  const VarId U = g.param(*d.recur_weight);
  const VarId b = g.param(*d.bias);
  VarId hidden = g.constant(Mat(1, h));
  VarId cell = g.constant(Mat(1, h));
  std::vector<VarId> out(static_cast<size_t>(T));
  for (int step = 0; step < T; ++step) {
    const int t = reverse ? T - 1 - step : step;
    const VarId xt = g.slice_rows(x, t, t + 1);
    const VarId gates = g.add(g.add(g.matmul(xt, W), g.matmul(hidden, U)), b);
    const VarId in_gate = g.sigmoid_of(g.slice_cols(gates, 0, h));
    const VarId forget_gate = g.sigmoid_of(g.slice_cols(gates, h, 2 * h));
    const VarId cand = g.tanh_of(g.slice_cols(gates, 2 * h, 3 * h));
    const VarId out_gate = g.sigmoid_of(g.slice_cols(gates, 3 * h, 4 * h));
    cell = g.add(g.cmul(forget_gate, cell), g.cmul(in_gate, cand));
    hidden = g.cmul(out_gate, g.tanh_of(cell));
    out[static_cast<size_t>(t)] = hidden;
  }
  return out;
}

VarId bilstm(Graph& g, VarId x, const RSTParams::LstmDir& fwd,
             const RSTParams::LstmDir& bwd) {
  const auto f = lstm_run(g, x, fwd, false);
  const auto b = lstm_run(g, x, bwd, true);
  std::vector<VarId> rows;
  rows.reserve(f.size());
  for (size_t t = 0; t < f.size(); ++t) rows.push_back(g.concat_cols({f[t], b[t]}));
  return g.concat_rows(rows);
}

VarId span_mean(Graph& g, VarId global_edus, int first, int last) {
  // 1-based inclusive EDU span -> 0-based row range
  return g.mean_rows(g.slice_rows(global_edus, first - 1, last));
}

}  // namespace

VarId build_encode_edus(Graph& g, VarId token_matrix, const Document& doc,
                        const RSTParams& p, bool training, nn::Rng* dropout_rng) {
  if (g.rows(token_matrix) != doc.n_tokens())
    throw ValidationError("encode_edus: token matrix rows != document tokens");
  if (g.cols(token_matrix) != p.cfg.dim)
    throw ValidationError("encode_edus: token matrix width != configured dim");
  VarId tokens = token_matrix;
  if (training && p.cfg.dropout > 0.0) {
    if (!dropout_rng) throw std::logic_error("encode_edus: training needs an rng");
    tokens = g.dropout(tokens, p.cfg.dropout, *dropout_rng);
  }
  std::vector<VarId> rows;
  rows.reserve(static_cast<size_t>(doc.n_edus()));
  for (int e = 0; e < doc.n_edus(); ++e) {
    const auto [begin, end] = doc.edu_token_range(e);
    const VarId edu_tokens = g.slice_rows(tokens, begin, end);
    rows.push_back(g.mean_rows(bilstm(g, edu_tokens, p.token_fwd, p.token_bwd)));
  }
  return g.concat_rows(rows);
}

VarId build_fuse(Graph& g, VarId local_rst, std::optional<VarId> ndp_input,
                 FusionMode mode) {
  if (mode == FusionMode::None) {
    if (ndp_input) throw ValidationError("fuse: mode none takes no ndp input");
    return local_rst;
  }
  if (!ndp_input) throw ValidationError("fuse: mode " + to_string(mode) +
                                        " requires ndp input");
  if (g.rows(*ndp_input) != g.rows(local_rst))
    throw ValidationError("fuse: ndp input rows != EDU rows");
  if (mode == FusionMode::NdpOneHot && g.cols(*ndp_input) != kContentTypeCount)
    throw ValidationError("fuse: one-hot input must have 8 columns");
  return g.concat_cols({local_rst, *ndp_input});
}

VarId build_contextualize(Graph& g, VarId fused, const RSTParams& p, bool training,
                          nn::Rng* dropout_rng) {
  if (g.cols(fused) != p.cfg.fused_width())
    throw ValidationError("contextualize: input width != fused width for mode " +
                          to_string(p.cfg.mode));
  VarId x = fused;
  if (training && p.cfg.dropout > 0.0) {
    if (!dropout_rng) throw std::logic_error("contextualize: training needs an rng");
    x = g.dropout(x, p.cfg.dropout, *dropout_rng);
  }
  return bilstm(g, x, p.edu_fwd, p.edu_bwd);
}

VarId build_split_logits(Graph& g, int first, int last, VarId global_edus,
                         const std::vector<int>& paragraph_starts,
                         const RSTParams& p) {
  const int n = g.rows(global_edus);
  if (first < 1 || first >= last || last > n)
    throw ValidationError("split: bad span (" + std::to_string(first) + "," +
                          std::to_string(last) + ")");
  const VarId whole = span_mean(g, global_edus, first, last);
  const VarId hidden_w = g.param(*p.split_hidden_w);
  const VarId hidden_b = g.param(*p.split_hidden_b);
  const VarId out_w = g.param(*p.split_out_w);
  const VarId out_b = g.param(*p.split_out_b);
  const VarId boundary = g.param(*p.boundary_table);

  std::vector<VarId> scores;
  scores.reserve(static_cast<size_t>(last - first));
  for (int k = first; k < last; ++k) {
    const VarId left_edge = g.slice_rows(global_edus, k - 1, k);
    const VarId right_edge = g.slice_rows(global_edus, k, k + 1);
    // the right half starts at 1-based EDU k+1 == 0-based index k
    const bool at_boundary =
        std::binary_search(paragraph_starts.begin(), paragraph_starts.end(), k);
    const int row = at_boundary ? 1 : 0;
    const VarId feature = g.concat_cols(
        {left_edge, right_edge, whole, g.slice_rows(boundary, row, row + 1)});
    const VarId hidden = g.tanh_of(g.add(g.matmul(feature, hidden_w), hidden_b));
    scores.push_back(g.add(g.matmul(hidden, out_w), out_b));
  }
  return g.concat_cols(scores);
}

VarId build_label_logits(Graph& g, int first, int split_at, int last, VarId global_edus,
                         const RSTParams& p) {
  const int n = g.rows(global_edus);
  if (first < 1 || first > split_at || split_at + 1 > last || last > n)
    throw ValidationError("label: bad spans (" + std::to_string(first) + "," +
                          std::to_string(split_at) + ")(" + std::to_string(split_at + 1) +
                          "," + std::to_string(last) + ")");
  const VarId left = span_mean(g, global_edus, first, split_at);
  const VarId right = span_mean(g, global_edus, split_at + 1, last);
  return g.add(g.matmul(g.concat_cols({left, right}), g.param(*p.label_weight)),
               g.param(*p.label_bias));
}

VarId build_rst_loss(Graph& g, const Document& doc, VarId token_matrix,
                     std::optional<VarId> ndp_input, const RSTTree& gold,
                     const RSTParams& p, bool training, nn::Rng* dropout_rng) {
  const VarId local = build_encode_edus(g, token_matrix, doc, p, training, dropout_rng);
  const VarId fused = build_fuse(g, local, ndp_input, p.cfg.mode);
  const VarId global_edus = build_contextualize(g, fused, p, training, dropout_rng);

  std::vector<VarId> terms;
  std::function<void(int)> walk = [&](int id) {
    const auto& node = gold.nodes[static_cast<size_t>(id)];
    if (node.is_leaf()) return;
    const int split_at = gold.nodes[static_cast<size_t>(node.left)].last;
    const VarId split_logits = build_split_logits(g, node.first, node.last,
                                                  global_edus, doc.paragraph_starts, p);
    terms.push_back(g.pick_nll(split_logits, split_at - node.first));
    const int pair = p.pairs.index_of(node.nuclearity, node.relation);
    if (pair < 0)
      throw ValidationError("gold pair (" + to_string(node.nuclearity) + ", " +
                            node.relation + ") not in the label inventory");
    const VarId label_logits =
        build_label_logits(g, node.first, split_at, node.last, global_edus, p);
    terms.push_back(g.pick_nll(label_logits, pair));
    walk(node.left);
    walk(node.right);
  };
  walk(gold.root);

  if (terms.empty()) return g.constant(Mat(1, 1));  // single-EDU document
  const int internal = gold.internal_count();
  return g.scale(g.sum_scalars(terms), 1.0 / double(internal));
}

Mat encode_edus(const Mat& token_matrix, const Document& doc, const RSTParams& p) {
  Graph g;
  return g.value(build_encode_edus(g, g.constant(token_matrix), doc, p, false, nullptr));
}

Mat fuse(const Mat& local_rst, const Mat* ndp_input, FusionMode mode) {
  Graph g;
  std::optional<VarId> ndp;
  if (ndp_input) ndp = g.constant(*ndp_input);
  return g.value(build_fuse(g, g.constant(local_rst), ndp, mode));
}

Mat contextualize(const Mat& fused, const RSTParams& p) {
  Graph g;
  return g.value(build_contextualize(g, g.constant(fused), p, false, nullptr));
}

std::vector<double> split_distribution(int first, int last, const Mat& global_edus,
                                       const std::vector<int>& paragraph_starts,
                                       const RSTParams& p) {
  Graph g;
  const VarId logits =
      build_split_logits(g, first, last, g.constant(global_edus), paragraph_starts, p);
  const Mat probs = g.value(g.softmax_rows(logits));
  return probs.a;
}

std::vector<double> label_distribution(std::pair<int, int> left, std::pair<int, int> right,
                                       const Mat& global_edus, const RSTParams& p) {
  if (right.first != left.second + 1)
    throw ValidationError("label_distribution: spans are not adjacent");
  Graph g;
  const VarId logits =
      build_label_logits(g, left.first, left.second, right.second,
                         g.constant(global_edus), p);
  const Mat probs = g.value(g.softmax_rows(logits));
  return probs.a;
}

namespace {

int argmax_first(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[static_cast<size_t>(i)] > v[static_cast<size_t>(best)]) best = i;
  return best;
}

}  // namespace

Mat one_hot_rows(const Mat& probs) {
  Mat out(probs.rows, probs.cols);
  for (int r = 0; r < probs.rows; ++r) {
    int best = 0;
    for (int c = 1; c < probs.cols; ++c)
      if (probs(r, c) > probs(r, best)) best = c;
    out(r, best) = 1.0;
  }
  return out;
}

RSTTree decode(const Document& doc, const Mat& token_matrix, const RSTParams& p,
               const Mat* ndp_input, std::vector<SplitDecision>* trace) {
  const int n = doc.n_edus();
  RSTTree tree;
  if (n == 1) {
    tree.nodes.push_back({1, 1, -1, -1, Nuclearity::NN, ""});
    tree.root = 0;
    return tree;
  }

  Graph g;
  std::optional<VarId> ndp;
  if (ndp_input) ndp = g.constant(*ndp_input);
  const VarId local = build_encode_edus(g, g.constant(token_matrix), doc, p, false, nullptr);
  const VarId fused = build_fuse(g, local, ndp, p.cfg.mode);
  const Mat global_edus = g.value(build_contextualize(g, fused, p, false, nullptr));

  std::function<int(int, int)> split_span = [&](int first, int last) -> int {
    if (first == last) {
      tree.nodes.push_back({first, first, -1, -1, Nuclearity::NN, ""});
      return static_cast<int>(tree.nodes.size() - 1);
    }
    const auto split_probs =
        split_distribution(first, last, global_edus, doc.paragraph_starts, p);
    const int split_at = first + argmax_first(split_probs);
    const auto label_probs =
        label_distribution({first, split_at}, {split_at + 1, last}, global_edus, p);
    const auto& [nuc, rel] = p.pairs.pairs[static_cast<size_t>(argmax_first(label_probs))];
    if (trace)
      trace->push_back({first, last, split_at, nuc, rel, split_probs, label_probs});
    const int left = split_span(first, split_at);
    const int right = split_span(split_at + 1, last);
    tree.nodes.push_back({first, last, left, right, nuc, rel});
    return static_cast<int>(tree.nodes.size() - 1);
  };
  tree.root = split_span(1, n);
  return tree;
}

double rst_loss(const Document& doc, const RSTTree& gold, const Mat& token_matrix,
                const RSTParams& p, const Mat* ndp_input) {
  Graph g;
  std::optional<VarId> ndp;
  if (ndp_input) ndp = g.constant(*ndp_input);
  const VarId loss = build_rst_loss(g, doc, g.constant(token_matrix), ndp, gold, p,
                                    false, nullptr);
  return g.value(loss)(0, 0);
}

}  // namespace c2rnet

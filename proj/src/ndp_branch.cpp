#include "c2rnet/ndp_branch.hpp"

#include <cmath>

#include "c2rnet/error.hpp"

namespace c2rnet {

using nn::Graph;
using nn::Mat;
using nn::VarId;

NDPParams NDPParams::init(int dim, double dropout_rate, nn::Rng& rng) {
  if (dim < 1) throw ValidationError("ndp params: dim must be >= 1");
  NDPParams p;
  p.dim = dim;
  p.dropout_rate = dropout_rate;
  p.local_proj = &p.params.add_xavier("ndp.local.proj", dim, dim, rng);
  p.local_bias = &p.params.add("ndp.local.bias", 1, dim);
  p.local_score = &p.params.add_xavier("ndp.local.score", dim, 1, rng);
  p.global_query = &p.params.add_xavier("ndp.global.query", dim, dim, rng);
  p.global_key = &p.params.add_xavier("ndp.global.key", dim, dim, rng);
  p.global_value = &p.params.add_xavier("ndp.global.value", dim, dim, rng);
  p.head_weight = &p.params.add_xavier("ndp.head.weight", dim, kContentTypeCount, rng);
  p.head_bias = &p.params.add("ndp.head.bias", 1, kContentTypeCount);
  return p;
}

std::vector<nn::Tensor*> NDPParams::body_tensors() const {
  return {local_proj, local_bias, local_score, global_query, global_key, global_value};
}

std::vector<nn::Tensor*> NDPParams::head_tensors() const {
  return {head_weight, head_bias};
}

namespace {

// weighted sum of the segment's token vectors under additive attention
VarId local_attention_node(Graph& g, VarId segment_tokens, const NDPParams& p) {
  const VarId proj = g.param(*p.local_proj);
  const VarId bias = g.param(*p.local_bias);
  const VarId score = g.param(*p.local_score);
  const VarId u = g.tanh_of(g.add_row(g.matmul(segment_tokens, proj), bias));  // m x dim
  const VarId s = g.transpose(g.matmul(u, score));                             // 1 x m
  const VarId weights = g.softmax_rows(s);                                     // 1 x m
  return g.matmul(weights, segment_tokens);                                    // 1 x dim
}

VarId global_attention_node(Graph& g, VarId local, const NDPParams& p) {
  const VarId q = g.matmul(local, g.param(*p.global_query));
  const VarId k = g.matmul(local, g.param(*p.global_key));
  const VarId v = g.matmul(local, g.param(*p.global_value));
  const VarId scores = g.scale(g.matmul_nt(q, k), 1.0 / std::sqrt(double(p.dim)));
  return g.matmul(g.softmax_rows(scores), v);
}

}  // namespace

NdpGraph ndp_graph_forward(Graph& g, VarId token_matrix, const SegmentRanges& segments,
                           const NDPParams& p, bool training, nn::Rng* dropout_rng) {
  if (segments.empty()) throw ValidationError("ndp forward: no segments");
  VarId tokens = token_matrix;
  if (training && p.dropout_rate > 0.0) {
    if (!dropout_rng) throw std::logic_error("ndp forward: training needs an rng");
    tokens = g.dropout(tokens, p.dropout_rate, *dropout_rng);
  }
  std::vector<VarId> rows;
  rows.reserve(segments.size());
  for (const auto& [begin, end] : segments) {
    if (begin >= end) throw ValidationError("ndp forward: empty segment");
    rows.push_back(local_attention_node(g, g.slice_rows(tokens, begin, end), p));
  }
  NdpGraph out;
  out.local = g.concat_rows(rows);
  out.global = global_attention_node(g, out.local, p);
  out.mixed = g.add(out.local, out.global);
  VarId head_in = out.mixed;
  if (training && p.dropout_rate > 0.0)
    head_in = g.dropout(head_in, p.dropout_rate, *dropout_rng);
  out.logits = g.add_row(g.matmul(head_in, g.param(*p.head_weight)), g.param(*p.head_bias));
  return out;
}

VarId ndp_graph_nll(Graph& g, VarId logits, const std::vector<int>& gold) {
  if (static_cast<int>(gold.size()) != g.rows(logits))
    throw ValidationError("ndp loss: gold size != segment count");
  std::vector<VarId> terms;
  terms.reserve(gold.size());
  for (size_t i = 0; i < gold.size(); ++i) {
    const int row = static_cast<int>(i);
    terms.push_back(g.pick_nll(g.slice_rows(logits, row, row + 1), gold[i]));
  }
  return g.scale(g.sum_scalars(terms), 1.0 / double(gold.size()));
}

Mat local_attention(const Mat& token_vectors, const NDPParams& p) {
  if (token_vectors.rows == 0) throw ValidationError("local_attention: empty segment");
  if (token_vectors.cols != p.dim)
    throw ValidationError("local_attention: input dim != params dim");
  Graph g;
  return g.value(local_attention_node(g, g.constant(token_vectors), p));
}

Mat global_attention(const Mat& local_segments, const NDPParams& p) {
  if (local_segments.rows == 0) throw ValidationError("global_attention: empty input");
  if (local_segments.cols != p.dim)
    throw ValidationError("global_attention: input dim != params dim");
  Graph g;
  return g.value(global_attention_node(g, g.constant(local_segments), p));
}

Mat mix(const Mat& local, const Mat& global) {
  if (!local.same_shape(global)) throw ValidationError("mix: shape mismatch");
  Mat out = local;
  for (size_t i = 0; i < out.a.size(); ++i) out.a[i] += global.a[i];
  return out;
}

Mat ndp_classify(const Mat& mixed, const NDPParams& p) {
  if (mixed.cols != p.dim) throw ValidationError("ndp_classify: input dim != params dim");
  Graph g;
  const VarId logits = g.add_row(g.matmul(g.constant(mixed), g.param(*p.head_weight)),
                                 g.param(*p.head_bias));
  return g.value(g.softmax_rows(logits));
}

SegmentEmbeddings segment_embeddings(const Mat& token_matrix,
                                     const SegmentRanges& segments,
                                     const NDPParams& p) {
  Graph g;
  const NdpGraph f =
      ndp_graph_forward(g, g.constant(token_matrix), segments, p, false, nullptr);
  return {g.value(f.local), g.value(f.global), g.value(f.mixed)};
}

double ndp_loss(const Mat& probs, const std::vector<int>& gold) {
  if (static_cast<int>(gold.size()) != probs.rows)
    throw ValidationError("ndp_loss: gold size != row count");
  double total = 0.0;
  for (int r = 0; r < probs.rows; ++r) {
    const int k = gold[static_cast<size_t>(r)];
    if (k < 0 || k >= probs.cols) throw ValidationError("ndp_loss: gold class out of range");
    total += -std::log(std::max(probs(r, k), 1e-12));
  }
  return total / probs.rows;
}

}  // namespace c2rnet

#pragma once

// Content-structure encoder and classifier: additive attention inside each
// segment, scaled dot-product attention across segments, mixed embeddings
// by addition, and a linear head over the 8 content types.

#include <utility>
#include <vector>

#include "c2rnet/content_type.hpp"
#include "c2rnet/nn.hpp"

namespace c2rnet {

struct NDPParams {
  int dim = 0;
  double dropout_rate = 0.0;
  nn::ParamSet params;

  // additive attention within a segment
  nn::Tensor* local_proj = nullptr;   // dim x dim
  nn::Tensor* local_bias = nullptr;   // 1 x dim
  nn::Tensor* local_score = nullptr;  // dim x 1
  // scaled dot-product attention across the discourse
  nn::Tensor* global_query = nullptr;  // dim x dim
  nn::Tensor* global_key = nullptr;    // dim x dim
  nn::Tensor* global_value = nullptr;  // dim x dim
  // content-type classifier head
  nn::Tensor* head_weight = nullptr;  // dim x 8
  nn::Tensor* head_bias = nullptr;    // 1 x 8

  NDPParams() = default;
  NDPParams(const NDPParams&) = delete;
  NDPParams& operator=(const NDPParams&) = delete;
  NDPParams(NDPParams&&) = default;
  NDPParams& operator=(NDPParams&&) = default;

  static NDPParams init(int dim, double dropout_rate, nn::Rng& rng);

  std::vector<nn::Tensor*> body_tensors() const;  // everything but the head
  std::vector<nn::Tensor*> head_tensors() const;
};

// Token index ranges ([begin,end) rows of the shared token matrix), one per
// segment: sentences for content-type training, EDUs for parser fusion.
using SegmentRanges = std::vector<std::pair<int, int>>;

struct SegmentEmbeddings {
  nn::Mat local;
  nn::Mat global;
  nn::Mat mixed;  // local + global, elementwise
};

// Graph-building forward pass shared by training and inference.
struct NdpGraph {
  nn::VarId local;   // n x dim
  nn::VarId global;  // n x dim
  nn::VarId mixed;   // n x dim
  nn::VarId logits;  // n x 8
};
NdpGraph ndp_graph_forward(nn::Graph& g, nn::VarId token_matrix,
                           const SegmentRanges& segments, const NDPParams& p,
                           bool training, nn::Rng* dropout_rng);
// mean negative log softmax of the gold class over rows
nn::VarId ndp_graph_nll(nn::Graph& g, nn::VarId logits, const std::vector<int>& gold);

// Plain (inference-mode) operations.
nn::Mat local_attention(const nn::Mat& token_vectors, const NDPParams& p);  // 1 x dim
nn::Mat global_attention(const nn::Mat& local_segments, const NDPParams& p);
nn::Mat mix(const nn::Mat& local, const nn::Mat& global);
nn::Mat ndp_classify(const nn::Mat& mixed, const NDPParams& p);  // n x 8 probabilities
SegmentEmbeddings segment_embeddings(const nn::Mat& token_matrix,
                                     const SegmentRanges& segments,
                                     const NDPParams& p);

// Mean negative log probability of the gold classes; probabilities clamped
// at 1e-12 before the log.
double ndp_loss(const nn::Mat& probs, const std::vector<int>& gold);

}  // namespace c2rnet

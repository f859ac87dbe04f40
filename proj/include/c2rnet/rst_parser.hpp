#pragma once

// RST branch: per-EDU token encoding through a bidirectional recurrent
// layer with average pooling, optional fusion with content-structure
// embeddings, a second bidirectional layer over the EDU sequence, and a
// greedy top-down decoder with a pointer-style split scorer and a joint
// nuclearity/relation head.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "c2rnet/ndp_branch.hpp"
#include "c2rnet/nn.hpp"
#include "c2rnet/treebank.hpp"

namespace c2rnet {

enum class FusionMode { None, NdpEmbedding, NdpOneHot };

std::string to_string(FusionMode m);
std::optional<FusionMode> fusion_mode_from(std::string_view s);

// Valid (nuclearity, relation) pairs for the label head, sorted so that
// argmax tie-breaking picks the lexicographically smallest pair.
struct PairInventory {
  std::vector<std::pair<Nuclearity, std::string>> pairs;

  int size() const { return static_cast<int>(pairs.size()); }
  int index_of(Nuclearity nuc, const std::string& relation) const;  // -1 if absent

  static PairInventory full_cross(const RelationInventory& relations);
  static PairInventory observed(const std::vector<Document>& corpus);
  static PairInventory from_pairs(std::vector<std::pair<Nuclearity, std::string>> pairs);
};

struct RSTConfig {
  int dim = 64;          // token embedding width
  int h1 = 128;          // token-layer hidden size per direction
  int h2 = 256;          // EDU-layer hidden size per direction
  int split_hidden = 64; // split scorer hidden width
  int para_dim = 8;      // paragraph-boundary embedding width
  FusionMode mode = FusionMode::None;
  double dropout = 0.0;

  int fused_width() const;
};

struct RSTParams {
  RSTConfig cfg;
  PairInventory pairs;
  nn::ParamSet params;

  struct LstmDir {
    nn::Tensor* input_weight = nullptr;  // in x 4h
    nn::Tensor* recur_weight = nullptr;  // h x 4h
    nn::Tensor* bias = nullptr;          // 1 x 4h
  };
  LstmDir token_fwd, token_bwd;  // layer 1, run per EDU
  LstmDir edu_fwd, edu_bwd;      // layer 2, run over the EDU sequence

  nn::Tensor* boundary_table = nullptr;  // 2 x para_dim
  nn::Tensor* split_hidden_w = nullptr;  // (3*2h2 + para_dim) x split_hidden
  nn::Tensor* split_hidden_b = nullptr;  // 1 x split_hidden
  nn::Tensor* split_out_w = nullptr;     // split_hidden x 1
  nn::Tensor* split_out_b = nullptr;     // 1 x 1
  nn::Tensor* label_weight = nullptr;    // 2*2h2 x |pairs|
  nn::Tensor* label_bias = nullptr;      // 1 x |pairs|

  RSTParams() = default;
  RSTParams(const RSTParams&) = delete;
  RSTParams& operator=(const RSTParams&) = delete;
  RSTParams(RSTParams&&) = default;
  RSTParams& operator=(RSTParams&&) = default;

  // Token-layer tensors are created first so their initialization draws do
  // not depend on the fusion mode.
  static RSTParams init(const RSTConfig& cfg, PairInventory pairs, nn::Rng& rng);
};

// One node of the greedy decode trace.
struct SplitDecision {
  int first = 0;  // 1-based inclusive span
  int last = 0;
  int split_at = 0;  // split between EDU split_at and split_at+1
  Nuclearity nuclearity = Nuclearity::NN;
  std::string relation;
  std::vector<double> split_probs;  // over candidates first..last-1
  std::vector<double> label_probs;  // over the pair inventory
};

// --- graph builders (shared by training and the plain operations) ---

nn::VarId build_encode_edus(nn::Graph& g, nn::VarId token_matrix, const Document& doc,
                            const RSTParams& p, bool training, nn::Rng* dropout_rng);
nn::VarId build_fuse(nn::Graph& g, nn::VarId local_rst, std::optional<nn::VarId> ndp_input,
                     FusionMode mode);
nn::VarId build_contextualize(nn::Graph& g, nn::VarId fused, const RSTParams& p,
                              bool training, nn::Rng* dropout_rng);
// logit row over split candidates first..last-1 of the 1-based span;
// paragraph_starts holds sorted 0-based EDU indices (Document convention)
nn::VarId build_split_logits(nn::Graph& g, int first, int last, nn::VarId global_edus,
                             const std::vector<int>& paragraph_starts,
                             const RSTParams& p);
nn::VarId build_label_logits(nn::Graph& g, int first, int split_at, int last,
                             nn::VarId global_edus, const RSTParams& p);
// teacher-forced loss over the gold tree's internal nodes, mean per node;
// requires every gold (nuclearity, relation) pair to be in the inventory
nn::VarId build_rst_loss(nn::Graph& g, const Document& doc, nn::VarId token_matrix,
                         std::optional<nn::VarId> ndp_input, const RSTTree& gold,
                         const RSTParams& p, bool training, nn::Rng* dropout_rng);

// --- plain (inference-mode) operations ---

nn::Mat encode_edus(const nn::Mat& token_matrix, const Document& doc, const RSTParams& p);
nn::Mat fuse(const nn::Mat& local_rst, const nn::Mat* ndp_input, FusionMode mode);
nn::Mat contextualize(const nn::Mat& fused, const RSTParams& p);
std::vector<double> split_distribution(int first, int last, const nn::Mat& global_edus,
                                       const std::vector<int>& paragraph_starts,
                                       const RSTParams& p);
std::vector<double> label_distribution(std::pair<int, int> left, std::pair<int, int> right,
                                       const nn::Mat& global_edus, const RSTParams& p);

// Greedy top-down decode; ties break to the smallest split index and the
// lexicographically smallest label pair. Always returns a tree that passes
// treebank validation. ndp_input must match the fusion mode.
RSTTree decode(const Document& doc, const nn::Mat& token_matrix, const RSTParams& p,
               const nn::Mat* ndp_input, std::vector<SplitDecision>* trace = nullptr);

double rst_loss(const Document& doc, const RSTTree& gold, const nn::Mat& token_matrix,
                const RSTParams& p, const nn::Mat* ndp_input);

// one-hot rows from argmax content-type predictions (ties to the smallest code)
nn::Mat one_hot_rows(const nn::Mat& probs);

}  // namespace c2rnet

#pragma once

// Optimization loops, the NDP weight-transfer/freeze schedule,
// checkpointing, the evaluation driver, and the classifier probing test.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "c2rnet/analysis.hpp"
#include "c2rnet/embedding.hpp"
#include "c2rnet/metrics.hpp"
#include "c2rnet/ndp_branch.hpp"
#include "c2rnet/ndp_corpus.hpp"
#include "c2rnet/rst_parser.hpp"

namespace c2rnet {

struct TrainingConfig {
  double learning_rate = 5e-4;
  double adam_epsilon = 1e-6;
  int epochs = 150;
  int ndp_freeze_epochs = 40;
  double dropout = 0.5;
  uint64_t seed = 1;
  int batch_size = 1;
  FusionMode fusion_mode = FusionMode::NdpEmbedding;
  std::string embedding = "hash";  // hash | file
  int embedding_dim = 64;
  uint64_t embedding_seed = 7;
  std::string embeddings_path;
  int h1 = 128;
  int h2 = 256;
  int split_hidden = 64;
  int para_dim = 8;
  std::string relations;                    // comma-separated; empty = default inventory
  std::string pair_inventory = "observed";  // observed | full
  std::string data_dir;                     // default from C2RNET_DATA_DIR

  static TrainingConfig from_file(const std::filesystem::path& path);
  static TrainingConfig from_text(const std::string& text);
  std::string to_text() const;  // canonical key=value form, round-trips exactly
  void check() const;

  RelationInventory relation_inventory() const;
  RSTConfig rst_config(int dim) const;
};

std::unique_ptr<EmbeddingProvider> make_provider(const TrainingConfig& config);

struct NamedTensor {
  std::string name;
  nn::Mat value;
};

// Versioned binary container; save -> load -> save is byte-identical.
struct Checkpoint {
  enum class Kind : uint8_t { Ndp = 0, Rst = 1 };

  Kind kind = Kind::Ndp;
  std::string config_text;
  uint32_t epoch = 0;
  uint64_t seed = 0;
  std::string rng_state;
  FusionMode fusion = FusionMode::None;                    // Rst only
  std::vector<std::string> relations;                      // Rst only
  std::vector<std::pair<Nuclearity, std::string>> pairs;   // Rst only
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// The assembled pipeline: the parser branch plus, in fusion modes, the
// content-structure branch feeding it.
struct C2RNetModel {
  FusionMode mode = FusionMode::None;
  RSTParams rst;
  std::optional<NDPParams> ndp;

  std::vector<nn::Tensor*> trainable_tensors() const;  // rst first, then ndp
  // inference-mode fusion input for one document (mixed embeddings or
  // one-hot predictions at EDU granularity); empty in mode none
  std::optional<nn::Mat> ndp_input_for(const Document& doc, const nn::Mat& tokens) const;
  RSTTree parse_document(const Document& doc, const nn::Mat& tokens,
                         std::vector<SplitDecision>* trace = nullptr) const;
};

NDPParams ndp_from_checkpoint(const Checkpoint& ckpt);
Checkpoint checkpoint_from_ndp(const NDPParams& params, const TrainingConfig& config,
                               uint32_t epoch, const std::string& rng_state);
C2RNetModel model_from_checkpoint(const Checkpoint& ckpt);
Checkpoint checkpoint_from_model(const C2RNetModel& model, const TrainingConfig& config,
                                 uint32_t epoch, const std::string& rng_state);

// raw little-endian bytes of the tensors' values, in order; used for
// freeze-schedule and determinism checks
std::string tensor_value_bytes(const std::vector<nn::Tensor*>& tensors);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  std::optional<double> accuracy;  // percent (NDP training only)
};

std::string epoch_log_to_json(const EpochLog& e);

struct NdpTrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

struct NdpHooks {
  std::function<void(int epoch, const NDPParams&)> on_epoch_end;
};

NdpTrainResult train_ndp(const TrainingConfig& config, const NDPCorpus& corpus,
                         const EmbeddingProvider& provider, const NdpHooks& hooks = {});

// sentence-level classification accuracy, percent
double ndp_accuracy(const NDPParams& params, const std::vector<Document>& docs,
                    const EmbeddingProvider& provider);

struct RstTrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

struct RstHooks {
  std::function<void(int epoch, const C2RNetModel&)> on_epoch_end;
};

// NDP weights come from ndp_checkpoint in fusion modes and stay frozen
// through the first ndp_freeze_epochs epochs; afterwards they train under
// the parser loss only.
RstTrainResult train_c2rnet(const TrainingConfig& config,
                            const std::vector<Document>& corpus,
                            const EmbeddingProvider& provider,
                            const Checkpoint* ndp_checkpoint,
                            const RstHooks& hooks = {});

struct EvalReport {
  ParsevalScore original;
  ParsevalScore rst;
  SpanGroupReport groups;
  ThresholdReport thresholds;
};

using DecodeFn = std::function<RSTTree(const Document&)>;

EvalReport evaluate_model(const C2RNetModel& model, const std::vector<Document>& corpus,
                          const EmbeddingProvider& provider,
                          const DecodeFn& decode_override = {});
EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const std::vector<Document>& corpus,
                               const EmbeddingProvider& provider,
                               const DecodeFn& decode_override = {});
std::string render_eval_report(const EvalReport& report);

// Multi-seed mode: one report per checkpoint plus column-averaged scores.
struct MultiEvalReport {
  std::vector<EvalReport> runs;
  ParsevalScore original_mean;
  ParsevalScore rst_mean;
};
MultiEvalReport evaluate_checkpoints(const std::vector<Checkpoint>& checkpoints,
                                     const std::vector<Document>& corpus,
                                     const EmbeddingProvider& provider);

// Runs the NDP branch body from a trained parser checkpoint under the
// original classifier head; returns sentence-level accuracy (percent).
double probe_ndp(const Checkpoint& c2rnet_checkpoint, const Checkpoint& ndp_checkpoint,
                 const NDPCorpus& test_corpus, const EmbeddingProvider& provider);

}  // namespace c2rnet

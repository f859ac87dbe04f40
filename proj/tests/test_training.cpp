#include <fstream>

#include "c2rnet/error.hpp"
#include "c2rnet/training.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"

using namespace c2rnet;
using c2rnet::testing::TempDir;

namespace {

TrainingConfig tiny_config(FusionMode mode = FusionMode::None) {
  TrainingConfig c;
  c.epochs = 2;
  c.ndp_freeze_epochs = 1;
  c.dropout = 0.0;
  c.seed = 7;
  c.embedding_dim = 6;
  c.embedding_seed = 3;
  c.h1 = 4;
  c.h2 = 4;
  c.split_hidden = 6;
  c.para_dim = 2;
  c.fusion_mode = mode;
  c.learning_rate = 1e-3;
  return c;
}

}  // namespace

TEST_CASE("the default configuration carries the documented hyperparameters") {
  const TrainingConfig c;
  CHECK(c.learning_rate == 5e-4);
  CHECK(c.adam_epsilon == 1e-6);
  CHECK(c.epochs == 150);
  CHECK(c.ndp_freeze_epochs == 40);
  CHECK(c.dropout == 0.5);
}

TEST_CASE("config text round-trips exactly") {
  TrainingConfig c = tiny_config(FusionMode::NdpOneHot);
  c.learning_rate = 0.000734;
  c.relations = "elaboration,contrast";
  c.embeddings_path = "/tmp/vecs.jsonl";
  const std::string text = c.to_text();
  const TrainingConfig back = TrainingConfig::from_text(text);
  CHECK(back.to_text() == text);
  CHECK(back.fusion_mode == FusionMode::NdpOneHot);
  CHECK(back.learning_rate == 0.000734);
  CHECK(back.relation_inventory().names ==
        std::vector<std::string>{"elaboration", "contrast"});
}

TEST_CASE("config parsing accepts comments and rejects bad input") {
  const TrainingConfig c = TrainingConfig::from_text("# comment\n\nseed=9\nh1=3\n");
  CHECK(c.seed == 9);
  CHECK(c.h1 == 3);
  CHECK_THROWS_WITH_AS(TrainingConfig::from_text("nonsense=1\n"),
                       doctest::Contains("unknown key"), ValidationError);
  CHECK_THROWS_AS(TrainingConfig::from_text("epochs=abc\n"), ValidationError);
  CHECK_THROWS_AS(TrainingConfig::from_text("epochs=5\nndp_freeze_epochs=9\n"),
                  ValidationError);
  CHECK_THROWS_AS(TrainingConfig::from_text("dropout=1.5\n"), ValidationError);
  CHECK_THROWS_AS(TrainingConfig::from_text("embedding=file\n"), ValidationError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  TempDir tmp;
  const TrainingConfig config = tiny_config();
  const auto provider = make_provider(config);
  const NDPCorpus corpus = ndp_corpus_from(testing::synthetic_ndp_corpus(4, 1));

  TrainingConfig zero_epochs = config;
  zero_epochs.epochs = 0;
  zero_epochs.ndp_freeze_epochs = 0;
  const NdpTrainResult r = train_ndp(zero_epochs, corpus, *provider);

  save_checkpoint(tmp.file("a.ckpt"), r.checkpoint);
  const Checkpoint loaded = load_checkpoint(tmp.file("a.ckpt"));
  save_checkpoint(tmp.file("b.ckpt"), loaded);
  CHECK(testing::read_file_bytes(tmp.file("a.ckpt")) ==
        testing::read_file_bytes(tmp.file("b.ckpt")));
  CHECK(loaded.kind == Checkpoint::Kind::Ndp);
  CHECK(loaded.config_text == zero_epochs.to_text());

  // an initialization checkpoint is loadable and evaluable
  const NDPParams params = ndp_from_checkpoint(loaded);
  const double acc = ndp_accuracy(params, corpus.documents, *provider);
  CHECK(acc >= 0.0);
  CHECK(acc <= 100.0);

  CHECK_THROWS_AS(load_checkpoint(tmp.file("missing.ckpt")), ValidationError);
  {
    std::ofstream junk(tmp.file("junk.ckpt"), std::ios::binary);
    junk << "not a checkpoint";
  }
  CHECK_THROWS_AS(load_checkpoint(tmp.file("junk.ckpt")), ValidationError);
}

TEST_CASE("identical seeds give bit-identical NDP training runs") {
  TempDir tmp;
  TrainingConfig config = tiny_config();
  config.epochs = 3;
  config.ndp_freeze_epochs = 0;
  const auto provider = make_provider(config);
  const NDPCorpus corpus = ndp_corpus_from(testing::synthetic_ndp_corpus(5, 2));

  const NdpTrainResult a = train_ndp(config, corpus, *provider);
  const NdpTrainResult b = train_ndp(config, corpus, *provider);
  save_checkpoint(tmp.file("a.ckpt"), a.checkpoint);
  save_checkpoint(tmp.file("b.ckpt"), b.checkpoint);
  CHECK(testing::read_file_bytes(tmp.file("a.ckpt")) ==
        testing::read_file_bytes(tmp.file("b.ckpt")));
  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);
}

TEST_CASE("ndp training loss falls on the synthetic fixture") {
  TrainingConfig config = tiny_config();
  config.epochs = 10;
  config.ndp_freeze_epochs = 0;
  config.learning_rate = 5e-3;
  const auto provider = make_provider(config);
  const NDPCorpus corpus = ndp_corpus_from(testing::synthetic_ndp_corpus(6, 4));
  const NdpTrainResult r = train_ndp(config, corpus, *provider);
  CHECK(r.log.back().loss < r.log.front().loss);
  CHECK(*r.log.back().accuracy >= *r.log.front().accuracy);
}

TEST_CASE("parser training runs in both fusion modes and logs losses") {
  TrainingConfig config = tiny_config(FusionMode::None);
  config.epochs = 2;
  const auto provider = make_provider(config);
  const auto corpus = testing::synthetic_rst_corpus(4, 2, 4, 11);

  const RstTrainResult base = train_c2rnet(config, corpus, *provider, nullptr);
  CHECK(base.log.size() == 2);
  CHECK(base.checkpoint.kind == Checkpoint::Kind::Rst);
  CHECK(base.checkpoint.fusion == FusionMode::None);

  // fusion modes need a transferred branch
  CHECK_THROWS_WITH_AS(
      train_c2rnet(tiny_config(FusionMode::NdpEmbedding), corpus, *provider, nullptr),
      doctest::Contains("requires an NDP checkpoint"), ValidationError);

  TrainingConfig ndp_config = tiny_config();
  ndp_config.epochs = 1;
  ndp_config.ndp_freeze_epochs = 0;
  const NDPCorpus ndp_corpus = ndp_corpus_from(testing::synthetic_ndp_corpus(3, 5));
  const Checkpoint ndp_ckpt = train_ndp(ndp_config, ndp_corpus, *provider).checkpoint;

  for (FusionMode mode : {FusionMode::NdpEmbedding, FusionMode::NdpOneHot}) {
    const RstTrainResult r =
        train_c2rnet(tiny_config(mode), corpus, *provider, &ndp_ckpt);
    CHECK(r.checkpoint.fusion == mode);
    const C2RNetModel model = model_from_checkpoint(r.checkpoint);
    REQUIRE(model.ndp.has_value());
    const Document& doc = corpus.front();
    const RSTTree tree =
        model.parse_document(doc, embed_document(doc, *provider));
    CHECK(validate(tree, doc).empty());
  }
}

TEST_CASE("the NDP branch is byte-frozen through the configured epochs") {
  TrainingConfig config = tiny_config(FusionMode::NdpEmbedding);
  config.epochs = 4;
  config.ndp_freeze_epochs = 2;
  const auto provider = make_provider(config);
  const auto corpus = testing::synthetic_rst_corpus(3, 2, 4, 12);

  TrainingConfig ndp_config = tiny_config();
  ndp_config.epochs = 1;
  ndp_config.ndp_freeze_epochs = 0;
  const Checkpoint ndp_ckpt =
      train_ndp(ndp_config, ndp_corpus_from(testing::synthetic_ndp_corpus(3, 6)),
                *provider)
          .checkpoint;

  std::vector<std::string> snapshots;
  RstHooks hooks;
  hooks.on_epoch_end = [&](int, const C2RNetModel& model) {
    snapshots.push_back(tensor_value_bytes(model.ndp->params.tensors()));
  };
  train_c2rnet(config, corpus, *provider, &ndp_ckpt, hooks);

  REQUIRE(snapshots.size() == 4);
  const std::string transferred =
      tensor_value_bytes(ndp_from_checkpoint(ndp_ckpt).params.tensors());
  CHECK(snapshots[0] == transferred);
  CHECK(snapshots[1] == transferred);
  CHECK(snapshots[2] != transferred);  // unfrozen from epoch 3 on
  CHECK(snapshots[3] != snapshots[2]);
}

TEST_CASE("one-hot fusion requires an 8-way classifier head") {
  TrainingConfig config = tiny_config(FusionMode::NdpOneHot);
  const auto provider = make_provider(config);
  const auto corpus = testing::synthetic_rst_corpus(2, 2, 3, 13);

  TrainingConfig ndp_config = tiny_config();
  ndp_config.epochs = 0;
  ndp_config.ndp_freeze_epochs = 0;
  Checkpoint ndp_ckpt =
      train_ndp(ndp_config, ndp_corpus_from(testing::synthetic_ndp_corpus(2, 7)),
                *provider)
          .checkpoint;
  for (auto& t : ndp_ckpt.tensors) {
    if (t.name == "ndp.head.weight") t.value = nn::Mat(6, 5);
    if (t.name == "ndp.head.bias") t.value = nn::Mat(1, 5);
  }
  CHECK_THROWS_AS(train_c2rnet(config, corpus, *provider, &ndp_ckpt), ValidationError);
}

TEST_CASE("training rejects corpora that fall outside the label inventory") {
  TrainingConfig config = tiny_config();
  config.relations = "elaboration";  // the fixture also uses other labels
  const auto provider = make_provider(config);
  const auto corpus = testing::synthetic_rst_corpus(3, 2, 4, 14);
  CHECK_THROWS_WITH_AS(train_c2rnet(config, corpus, *provider, nullptr),
                       doctest::Contains("inventory"), ValidationError);
}

TEST_CASE("evaluate on an oracle decoder scores a perfect run") {
  TrainingConfig config = tiny_config();
  config.epochs = 0;
  config.ndp_freeze_epochs = 0;
  const auto provider = make_provider(config);
  const auto corpus = testing::synthetic_rst_corpus(4, 2, 5, 15);
  const RstTrainResult r = train_c2rnet(config, corpus, *provider, nullptr);

  const DecodeFn oracle = [&](const Document& doc) { return *doc.gold_tree; };
  const EvalReport report = evaluate_checkpoint(r.checkpoint, corpus, *provider, oracle);
  CHECK(report.original.full == 100.0);
  CHECK(report.rst.full == 100.0);
  for (const auto& row : report.groups.rows) {
    if (row.nodes > 0) CHECK(*row.relation_accuracy == 100.0);
  }
  const std::string text = render_eval_report(report);
  CHECK(text.find("original-parseval") != std::string::npos);
  CHECK(text.find("threshold") != std::string::npos);
}

TEST_CASE("evaluating a single-EDU corpus is vacuous under the internal convention") {
  TrainingConfig config = tiny_config();
  config.epochs = 0;
  config.ndp_freeze_epochs = 0;
  const auto provider = make_provider(config);
  std::vector<Document> corpus{testing::simple_doc("solo", 1)};
  corpus[0].gold_tree = parse_tree_text("(leaf 1)", 1);
  // pair inventory cannot come from a leaf-only corpus
  config.pair_inventory = "full";
  const RstTrainResult r = train_c2rnet(config, corpus, *provider, nullptr);
  const EvalReport report = evaluate_checkpoint(r.checkpoint, corpus, *provider);
  CHECK(report.original.vacuous());
  CHECK(report.original.span == 100.0);
  CHECK(report.original.span_counts.gold == 0);
}

TEST_CASE("probing stitches the trained body to the original head") {
  TrainingConfig ndp_config = tiny_config();
  ndp_config.epochs = 2;
  ndp_config.ndp_freeze_epochs = 0;
  const auto provider = make_provider(ndp_config);
  const NDPCorpus train_set = ndp_corpus_from(testing::synthetic_ndp_corpus(4, 8));
  const NDPCorpus test_set = ndp_corpus_from(testing::synthetic_ndp_corpus(3, 9));
  const Checkpoint ndp_ckpt = train_ndp(ndp_config, train_set, *provider).checkpoint;

  TrainingConfig rst_config = tiny_config(FusionMode::NdpEmbedding);
  rst_config.epochs = 0;
  rst_config.ndp_freeze_epochs = 0;
  const auto corpus = testing::synthetic_rst_corpus(2, 2, 3, 16);
  const Checkpoint parser_ckpt =
      train_c2rnet(rst_config, corpus, *provider, &ndp_ckpt).checkpoint;

  // before any parser epochs the branch is untouched: identical accuracy
  const double original_acc =
      ndp_accuracy(ndp_from_checkpoint(ndp_ckpt), test_set.documents, *provider);
  CHECK(probe_ndp(parser_ckpt, ndp_ckpt, test_set, *provider) == original_acc);

  // a baseline checkpoint has no branch to probe
  TrainingConfig base_config = tiny_config(FusionMode::None);
  base_config.epochs = 0;
  base_config.ndp_freeze_epochs = 0;
  const Checkpoint base_ckpt =
      train_c2rnet(base_config, corpus, *provider, nullptr).checkpoint;
  CHECK_THROWS_WITH_AS(probe_ndp(base_ckpt, ndp_ckpt, test_set, *provider),
                       doctest::Contains("no NDP branch"), ValidationError);
}

TEST_CASE("probing rejects dimension mismatches") {
  TrainingConfig small = tiny_config();
  small.epochs = 0;
  small.ndp_freeze_epochs = 0;
  const auto small_provider = make_provider(small);
  const NDPCorpus corpus = ndp_corpus_from(testing::synthetic_ndp_corpus(2, 10));
  const Checkpoint small_ndp = train_ndp(small, corpus, *small_provider).checkpoint;

  TrainingConfig big = tiny_config(FusionMode::NdpEmbedding);
  big.epochs = 0;
  big.ndp_freeze_epochs = 0;
  big.embedding_dim = 9;
  const auto big_provider = make_provider(big);
  TrainingConfig big_ndp_config = tiny_config();
  big_ndp_config.epochs = 0;
  big_ndp_config.ndp_freeze_epochs = 0;
  big_ndp_config.embedding_dim = 9;
  const Checkpoint big_ndp =
      train_ndp(big_ndp_config, corpus, *big_provider).checkpoint;
  const auto rst_corpus = testing::synthetic_rst_corpus(2, 2, 3, 17);
  const Checkpoint parser_ckpt =
      train_c2rnet(big, rst_corpus, *big_provider, &big_ndp).checkpoint;

  CHECK_THROWS_WITH_AS(probe_ndp(parser_ckpt, small_ndp, corpus, *big_provider),
                       doctest::Contains("shape mismatch"), ValidationError);
}

TEST_CASE("multi-seed evaluation averages the score columns") {
  TrainingConfig config = tiny_config();
  config.epochs = 2;
  const auto provider = make_provider(config);
  const auto corpus = testing::synthetic_rst_corpus(3, 2, 4, 20);

  std::vector<Checkpoint> checkpoints;
  for (uint64_t seed : {1u, 2u, 3u}) {
    TrainingConfig c = config;
    c.seed = seed;
    checkpoints.push_back(train_c2rnet(c, corpus, *provider, nullptr).checkpoint);
  }
  const MultiEvalReport multi = evaluate_checkpoints(checkpoints, corpus, *provider);
  REQUIRE(multi.runs.size() == 3);
  double mean = 0.0;
  for (const auto& run : multi.runs) mean += run.original.full;
  mean /= 3.0;
  CHECK(multi.original_mean.full == doctest::Approx(mean).epsilon(1e-12));
  CHECK(multi.rst_mean.convention == Convention::RSTParseval);
  CHECK_THROWS_AS(evaluate_checkpoints({}, corpus, *provider), ValidationError);
}

TEST_CASE("batch accumulation changes the steps but stays deterministic") {
  TrainingConfig config = tiny_config();
  config.epochs = 3;
  const auto provider = make_provider(config);
  const auto corpus = testing::synthetic_rst_corpus(4, 2, 4, 18);

  config.batch_size = 2;
  const RstTrainResult a = train_c2rnet(config, corpus, *provider, nullptr);
  const RstTrainResult b = train_c2rnet(config, corpus, *provider, nullptr);
  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);

  config.batch_size = 1;
  const RstTrainResult c = train_c2rnet(config, corpus, *provider, nullptr);
  CHECK(a.checkpoint.tensors.front().value != c.checkpoint.tensors.front().value);
}

TEST_CASE("evaluation rejects a corpus embedded at the wrong width") {
  TrainingConfig config = tiny_config();
  config.epochs = 0;
  config.ndp_freeze_epochs = 0;
  const auto provider = make_provider(config);
  const auto corpus = testing::synthetic_rst_corpus(2, 2, 3, 19);
  const RstTrainResult r = train_c2rnet(config, corpus, *provider, nullptr);

  HashEmbedding wrong(config.embedding_dim + 3, config.embedding_seed);
  CHECK_THROWS_WITH_AS(evaluate_checkpoint(r.checkpoint, corpus, wrong),
                       doctest::Contains("width"), ValidationError);
}

TEST_CASE("epoch logs serialize as one json object per line") {
  EpochLog e;
  e.epoch = 3;
  e.loss = 0.5;
  e.accuracy = 87.5;
  CHECK(epoch_log_to_json(e) == R"({"epoch":3,"loss":0.5,"accuracy":87.5})");
}

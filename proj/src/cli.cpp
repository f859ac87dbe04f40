#include "c2rnet/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "c2rnet/error.hpp"
#include "c2rnet/training.hpp"

namespace c2rnet::cli {

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<uint64_t> seed;
};

TrainingConfig load_config(const CommonOpts& opts) {
  TrainingConfig config = opts.config_path.empty()
                              ? TrainingConfig::from_text("")
                              : TrainingConfig::from_file(opts.config_path);
  if (opts.seed) config.seed = *opts.seed;
  return config;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "config file (key=value lines)");
  cmd->add_option("--seed", opts.seed, "override the config seed");
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << content;
}

void write_run_log(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write run log: " + path);
  for (const auto& e : log) out << epoch_log_to_json(e) << "\n";
}

std::string resolve_data(const TrainingConfig& config, const std::string& flag_value,
                         const char* what) {
  if (!flag_value.empty()) return flag_value;
  if (!config.data_dir.empty()) return config.data_dir;
  throw ValidationError(std::string(what) +
                        ": pass --data or set data_dir / C2RNET_DATA_DIR");
}

TreeMap trees_of(const std::vector<Document>& docs, const char* what) {
  TreeMap out;
  for (const auto& d : docs) {
    if (!d.gold_tree)
      throw ValidationError(std::string(what) + ": doc '" + d.doc_id +
                            "' has no tree");
    out.emplace(d.doc_id, *d.gold_tree);
  }
  return out;
}

int run_train_ndp(const CommonOpts& common, const std::string& data,
                  const std::string& out, const std::string& log_path) {
  TrainingConfig config = load_config(common);
  const auto provider = make_provider(config);
  const NDPCorpus corpus = load_ndp_corpus(resolve_data(config, data, "train-ndp"));
  NdpTrainResult result = train_ndp(config, corpus, *provider);
  save_checkpoint(out, result.checkpoint);
  write_run_log(log_path.empty() ? out + ".log.jsonl" : log_path, result.log);
  if (!result.log.empty())
    std::cout << "final training accuracy: " << round1(*result.log.back().accuracy)
              << "\n";
  std::cout << "checkpoint written to " << out << "\n";
  return 0;
}

int run_train_rst(const CommonOpts& common, const std::string& data,
                  const std::string& ndp_ckpt_path, const std::string& mode_flag,
                  const std::string& out, const std::string& log_path) {
  TrainingConfig config = load_config(common);
  if (!mode_flag.empty()) {
    auto m = fusion_mode_from(mode_flag);
    if (!m) throw ValidationError("unknown fusion mode '" + mode_flag + "'");
    config.fusion_mode = *m;
  }
  const auto provider = make_provider(config);
  const auto corpus =
      load_corpus(resolve_data(config, data, "train-rst"), config.relation_inventory());
  std::optional<Checkpoint> ndp_ckpt;
  if (!ndp_ckpt_path.empty()) ndp_ckpt = load_checkpoint(ndp_ckpt_path);
  if (config.fusion_mode != FusionMode::None && !ndp_ckpt)
    throw ValidationError("fusion mode " + to_string(config.fusion_mode) +
                          " requires --ndp-checkpoint");
  RstTrainResult result =
      train_c2rnet(config, corpus, *provider, ndp_ckpt ? &*ndp_ckpt : nullptr);
  save_checkpoint(out, result.checkpoint);
  write_run_log(log_path.empty() ? out + ".log.jsonl" : log_path, result.log);
  if (!result.log.empty())
    std::cout << "final training loss: " << result.log.back().loss << "\n";
  std::cout << "checkpoint written to " << out << "\n";
  return 0;
}

int run_parse(const CommonOpts& common, const std::string& ckpt_path,
              const std::string& data, const std::string& out) {
  TrainingConfig config = load_config(common);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const C2RNetModel model = model_from_checkpoint(ckpt);
  // the checkpoint's config decides the embedding source unless the caller
  // gave an explicit config
  const TrainingConfig provider_config =
      common.config_path.empty() ? TrainingConfig::from_text(ckpt.config_text) : config;
  const auto provider = make_provider(provider_config);
  auto docs = load_corpus(resolve_data(config, data, "parse"),
                          RelationInventory::from_names(ckpt.relations.empty()
                                                            ? RelationInventory::default_inventory().names
                                                            : ckpt.relations));
  for (auto& doc : docs) {
    const nn::Mat tokens = embed_document(doc, *provider);
    doc.gold_tree = model.parse_document(doc, tokens);
  }
  save_corpus(out, docs);
  std::cout << "parsed " << docs.size() << " documents -> " << out << "\n";
  return 0;
}

int run_score(const CommonOpts& common, const std::string& pred_path,
              const std::string& gold_path, bool no_root, const std::string& out,
              const std::string& json_out) {
  const RelationInventory inventory = load_config(common).relation_inventory();
  const auto pred = trees_of(load_corpus(pred_path, inventory), "score --pred");
  const auto gold = trees_of(load_corpus(gold_path, inventory), "score --gold");
  const bool include_root = !no_root;
  const ParsevalScore orig =
      score(pred, gold, Convention::OriginalParseval, include_root);
  const ParsevalScore rstp = score(pred, gold, Convention::RSTParseval, include_root);
  const std::string table = render_score_table(orig, rstp);
  std::cout << table;
  if (!out.empty()) write_file(out, table);
  if (!json_out.empty())
    write_file(json_out, score_to_json(orig) + "\n" + score_to_json(rstp) + "\n");
  return 0;
}

int run_analyze(const CommonOpts& common, const std::string& pred_path,
                const std::string& gold_path, const std::string& pred2_path,
                const std::string& basis_flag, const std::string& out,
                const std::string& json_out) {
  AccuracyBasis basis = AccuracyBasis::GoldNodes;
  if (basis_flag == "predicted") basis = AccuracyBasis::PredictedNodes;
  else if (!basis_flag.empty() && basis_flag != "gold")
    throw ValidationError("--basis must be 'gold' or 'predicted'");

  const RelationInventory inventory = load_config(common).relation_inventory();
  const auto pred = trees_of(load_corpus(pred_path, inventory), "analyze --pred");
  const auto gold = trees_of(load_corpus(gold_path, inventory), "analyze --gold");
  const SpanGroupReport groups = span_group_accuracy(pred, gold, default_span_groups(), basis);
  const ThresholdReport thresholds = threshold_table(pred, gold, default_thresholds(), basis);

  std::string text;
  if (!pred2_path.empty()) {
    const auto pred2 = trees_of(load_corpus(pred2_path, inventory), "analyze --pred2");
    const SpanGroupReport groups2 =
        span_group_accuracy(pred2, gold, default_span_groups(), basis);
    const ThresholdReport thresholds2 =
        threshold_table(pred2, gold, default_thresholds(), basis);
    const auto diff = compare_span_groups(groups, groups2);
    text = render_span_groups(groups, &diff) + "\n" +
           render_thresholds(thresholds, &thresholds2);
  } else {
    text = render_span_groups(groups) + "\n" + render_thresholds(thresholds);
  }
  std::cout << text;
  if (!out.empty()) write_file(out, text);
  if (!json_out.empty()) write_file(json_out, analysis_to_json(groups, thresholds) + "\n");
  return 0;
}

int run_probe(const CommonOpts& common, const std::string& ckpt_path,
              const std::string& ndp_ckpt_path, const std::string& data,
              const std::string& out) {
  TrainingConfig config = load_config(common);
  const Checkpoint parser_ckpt = load_checkpoint(ckpt_path);
  const Checkpoint ndp_ckpt = load_checkpoint(ndp_ckpt_path);
  const TrainingConfig provider_config = common.config_path.empty()
                                             ? TrainingConfig::from_text(ndp_ckpt.config_text)
                                             : config;
  const auto provider = make_provider(provider_config);
  const NDPCorpus corpus = load_ndp_corpus(resolve_data(config, data, "probe"));
  const double acc = probe_ndp(parser_ckpt, ndp_ckpt, corpus, *provider);
  std::ostringstream os;
  os << "probe accuracy: " << round1(acc) << "\n";
  std::cout << os.str();
  if (!out.empty()) write_file(out, os.str());
  return 0;
}

int run_validate(const CommonOpts& common, const std::string& data) {
  const auto errors = lint_corpus(data, load_config(common).relation_inventory());
  if (errors.empty()) {
    std::cout << "ok\n";
    return 0;
  }
  for (const auto& e : errors) std::cerr << e << "\n";
  std::cerr << errors.size() << " invalid record(s)\n";
  return 1;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"c2rnet: discourse parsing toolkit (top-down RST parser with an "
               "optional news-content branch, scoring, and span analysis)"};
  app.require_subcommand(1);

  CommonOpts train_ndp_common, train_rst_common, parse_common, probe_common;
  CommonOpts score_common, analyze_common, validate_common;
  std::string data, out, log_path, ndp_ckpt, mode_flag, ckpt_path;
  std::string pred_path, gold_path, pred2_path, basis_flag, json_out;

  auto* cmd_train_ndp = app.add_subcommand("train-ndp", "train the content-type branch");
  add_common(cmd_train_ndp, train_ndp_common);
  cmd_train_ndp->add_option("--data", data, "labeled corpus (.jsonl file or directory)");
  cmd_train_ndp->add_option("--out", out, "checkpoint output path")->required();
  cmd_train_ndp->add_option("--log", log_path, "run-log path (default <out>.log.jsonl)");

  auto* cmd_train_rst = app.add_subcommand("train-rst", "train the parser");
  add_common(cmd_train_rst, train_rst_common);
  cmd_train_rst->add_option("--data", data, "treebank corpus (.jsonl file or directory)");
  cmd_train_rst->add_option("--ndp-checkpoint", ndp_ckpt, "NDP checkpoint to transfer");
  cmd_train_rst->add_option("--mode", mode_flag,
                            "fusion mode: none | ndp-embedding | ndp-one-hot");
  cmd_train_rst->add_option("--out", out, "checkpoint output path")->required();
  cmd_train_rst->add_option("--log", log_path, "run-log path (default <out>.log.jsonl)");

  auto* cmd_parse = app.add_subcommand("parse", "decode trees for documents");
  add_common(cmd_parse, parse_common);
  cmd_parse->add_option("--checkpoint", ckpt_path, "parser checkpoint")->required();
  cmd_parse->add_option("--data", data, "documents to parse (.jsonl)");
  cmd_parse->add_option("--out", out, "predictions output (.jsonl)")->required();

  auto* cmd_score = app.add_subcommand("score", "score predictions against gold trees");
  add_common(cmd_score, score_common);
  cmd_score->add_option("--pred", pred_path, "predictions (.jsonl)")->required();
  cmd_score->add_option("--gold", gold_path, "gold corpus (.jsonl)")->required();
  cmd_score->add_flag("--no-root", "exclude the root constituent from the "
                                   "internal-node convention");
  cmd_score->add_option("--out", out, "write the table here too");
  cmd_score->add_option("--json-out", json_out, "machine-readable scores (.jsonl)");

  auto* cmd_analyze = app.add_subcommand("analyze", "span-length accuracy analysis");
  add_common(cmd_analyze, analyze_common);
  cmd_analyze->add_option("--pred", pred_path, "predictions (.jsonl)")->required();
  cmd_analyze->add_option("--gold", gold_path, "gold corpus (.jsonl)")->required();
  cmd_analyze->add_option("--pred2", pred2_path, "second system for difference rows");
  cmd_analyze->add_option("--basis", basis_flag, "denominator nodes: gold | predicted");
  cmd_analyze->add_option("--out", out, "write the report here too");
  cmd_analyze->add_option("--json-out", json_out, "machine-readable report");

  auto* cmd_probe = app.add_subcommand("probe",
                                       "classify with a trained parser's NDP body "
                                       "under the original head");
  add_common(cmd_probe, probe_common);
  cmd_probe->add_option("--checkpoint", ckpt_path, "parser checkpoint")->required();
  cmd_probe->add_option("--ndp-checkpoint", ndp_ckpt, "original NDP checkpoint")->required();
  cmd_probe->add_option("--data", data, "labeled test corpus (.jsonl)");
  cmd_probe->add_option("--out", out, "write the result here too");

  auto* cmd_validate = app.add_subcommand("validate", "lint a corpus file or directory");
  add_common(cmd_validate, validate_common);
  cmd_validate->add_option("--data", data, "corpus (.jsonl file or directory)")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(cmd_train_ndp))
      return run_train_ndp(train_ndp_common, data, out, log_path);
    if (app.got_subcommand(cmd_train_rst))
      return run_train_rst(train_rst_common, data, ndp_ckpt, mode_flag, out, log_path);
    if (app.got_subcommand(cmd_parse))
      return run_parse(parse_common, ckpt_path, data, out);
    if (app.got_subcommand(cmd_score))
      return run_score(score_common, pred_path, gold_path,
                       cmd_score->count("--no-root") > 0, out, json_out);
    if (app.got_subcommand(cmd_analyze))
      return run_analyze(analyze_common, pred_path, gold_path, pred2_path, basis_flag,
                         out, json_out);
    if (app.got_subcommand(cmd_probe))
      return run_probe(probe_common, ckpt_path, ndp_ckpt, data, out);
    if (app.got_subcommand(cmd_validate)) return run_validate(validate_common, data);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace c2rnet::cli

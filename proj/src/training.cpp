#include "c2rnet/training.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "c2rnet/error.hpp"
#include "json.hpp"

namespace c2rnet {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// TrainingConfig

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ValidationError("config: bad number for " + key + ": '" + v + "'");
  return out;
}

int64_t parse_int(const std::string& key, const std::string& v) {
  int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ValidationError("config: bad integer for " + key + ": '" + v + "'");
  return out;
}

uint64_t parse_uint(const std::string& key, const std::string& v) {
  uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ValidationError("config: bad unsigned integer for " + key + ": '" + v + "'");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

TrainingConfig TrainingConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

TrainingConfig TrainingConfig::from_text(const std::string& text) {
  TrainingConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "learning_rate") c.learning_rate = parse_double(key, value);
    else if (key == "adam_epsilon") c.adam_epsilon = parse_double(key, value);
    else if (key == "epochs") c.epochs = static_cast<int>(parse_int(key, value));
    else if (key == "ndp_freeze_epochs") c.ndp_freeze_epochs = static_cast<int>(parse_int(key, value));
    else if (key == "dropout") c.dropout = parse_double(key, value);
    else if (key == "seed") c.seed = parse_uint(key, value);
    else if (key == "batch_size") c.batch_size = static_cast<int>(parse_int(key, value));
    else if (key == "fusion_mode") {
      auto m = fusion_mode_from(value);
      if (!m) throw ValidationError("config: unknown fusion_mode '" + value + "'");
      c.fusion_mode = *m;
    } else if (key == "embedding") {
      if (value != "hash" && value != "file")
        throw ValidationError("config: embedding must be 'hash' or 'file'");
      c.embedding = value;
    } else if (key == "embedding_dim") c.embedding_dim = static_cast<int>(parse_int(key, value));
    else if (key == "embedding_seed") c.embedding_seed = parse_uint(key, value);
    else if (key == "embeddings_path") c.embeddings_path = value;
    else if (key == "h1") c.h1 = static_cast<int>(parse_int(key, value));
    else if (key == "h2") c.h2 = static_cast<int>(parse_int(key, value));
    else if (key == "split_hidden") c.split_hidden = static_cast<int>(parse_int(key, value));
    else if (key == "para_dim") c.para_dim = static_cast<int>(parse_int(key, value));
    else if (key == "relations") c.relations = value;
    else if (key == "pair_inventory") {
      if (value != "observed" && value != "full")
        throw ValidationError("config: pair_inventory must be 'observed' or 'full'");
      c.pair_inventory = value;
    } else if (key == "data_dir") c.data_dir = value;
    else throw ValidationError("config: unknown key '" + key + "'");
  }
  if (c.data_dir.empty()) {
    if (const char* env = std::getenv("C2RNET_DATA_DIR")) c.data_dir = env;
  }
  c.check();
  return c;
}

std::string TrainingConfig::to_text() const {
  std::ostringstream os;
  os << "learning_rate=" << format_double(learning_rate) << "\n";
  os << "adam_epsilon=" << format_double(adam_epsilon) << "\n";
  os << "epochs=" << epochs << "\n";
  os << "ndp_freeze_epochs=" << ndp_freeze_epochs << "\n";
  os << "dropout=" << format_double(dropout) << "\n";
  os << "seed=" << seed << "\n";
  os << "batch_size=" << batch_size << "\n";
  os << "fusion_mode=" << to_string(fusion_mode) << "\n";
  os << "embedding=" << embedding << "\n";
  os << "embedding_dim=" << embedding_dim << "\n";
  os << "embedding_seed=" << embedding_seed << "\n";
  os << "embeddings_path=" << embeddings_path << "\n";
  os << "h1=" << h1 << "\n";
  os << "h2=" << h2 << "\n";
  os << "split_hidden=" << split_hidden << "\n";
  os << "para_dim=" << para_dim << "\n";
  os << "relations=" << relations << "\n";
  os << "pair_inventory=" << pair_inventory << "\n";
  os << "data_dir=" << data_dir << "\n";
  return os.str();
}

void TrainingConfig::check() const {
  if (learning_rate <= 0.0) throw ValidationError("config: learning_rate must be > 0");
  if (adam_epsilon <= 0.0) throw ValidationError("config: adam_epsilon must be > 0");
  if (epochs < 0) throw ValidationError("config: epochs must be >= 0");
  if (ndp_freeze_epochs < 0 || ndp_freeze_epochs > epochs)
    throw ValidationError("config: ndp_freeze_epochs must be in [0, epochs]");
  if (dropout < 0.0 || dropout >= 1.0)
    throw ValidationError("config: dropout must be in [0, 1)");
  if (batch_size < 1) throw ValidationError("config: batch_size must be >= 1");
  if (embedding_dim < 1) throw ValidationError("config: embedding_dim must be >= 1");
  if (h1 < 1 || h2 < 1 || split_hidden < 1 || para_dim < 1)
    throw ValidationError("config: hidden sizes must be >= 1");
  if (embedding == "file" && embeddings_path.empty())
    throw ValidationError("config: embedding=file requires embeddings_path");
}

RelationInventory TrainingConfig::relation_inventory() const {
  if (relations.empty()) return RelationInventory::default_inventory();
  std::vector<std::string> names;
  std::string current;
  for (char ch : relations + ",") {
    if (ch == ',') {
      const std::string t = trim(current);
      if (!t.empty()) names.push_back(t);
      current.clear();
    } else {
      current += ch;
    }
  }
  return RelationInventory::from_names(std::move(names));
}

RSTConfig TrainingConfig::rst_config(int dim) const {
  RSTConfig rc;
  rc.dim = dim;
  rc.h1 = h1;
  rc.h2 = h2;
  rc.split_hidden = split_hidden;
  rc.para_dim = para_dim;
  rc.mode = fusion_mode;
  rc.dropout = dropout;
  return rc;
}

std::unique_ptr<EmbeddingProvider> make_provider(const TrainingConfig& config) {
  if (config.embedding == "hash")
    return make_hash_provider(config.embedding_dim, config.embedding_seed);
  auto p = PrecomputedEmbedding::load(config.embeddings_path);
  return std::make_unique<PrecomputedEmbedding>(std::move(p));
}

// ---------------------------------------------------------------------------
// Checkpoint binary format

namespace {

constexpr char kMagic[8] = {'C', '2', 'R', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void write_u8(std::ostream& os, uint8_t v) { os.put(static_cast<char>(v)); }
void write_u32(std::ostream& os, uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void write_u64(std::ostream& os, uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void write_f64(std::ostream& os, double d) {
  uint64_t bits = 0;
  std::memcpy(&bits, &d, sizeof(bits));
  write_u64(os, bits);
}
void write_str(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint8_t read_u8(std::istream& is) {
  int c = is.get();
  if (c == EOF) throw ValidationError("checkpoint: truncated file");
  return static_cast<uint8_t>(c);
}
uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(read_u8(is)) << (8 * i);
  return v;
}
uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(read_u8(is)) << (8 * i);
  return v;
}
double read_f64(std::istream& is) {
  const uint64_t bits = read_u64(is);
  double d = 0.0;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}
std::string read_str(std::istream& is) {
  const uint64_t len = read_u64(is);
  std::string s(len, '\0');
  is.read(s.data(), static_cast<std::streamsize>(len));
  if (!is) throw ValidationError("checkpoint: truncated string");
  return s;
}

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path.string());
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, kVersion);
  write_u8(os, static_cast<uint8_t>(ckpt.kind));
  write_str(os, ckpt.config_text);
  write_u32(os, ckpt.epoch);
  write_u64(os, ckpt.seed);
  write_str(os, ckpt.rng_state);
  write_u8(os, static_cast<uint8_t>(ckpt.fusion));
  write_u32(os, static_cast<uint32_t>(ckpt.relations.size()));
  for (const auto& r : ckpt.relations) write_str(os, r);
  write_u32(os, static_cast<uint32_t>(ckpt.pairs.size()));
  for (const auto& [nuc, rel] : ckpt.pairs) {
    write_u8(os, static_cast<uint8_t>(nuc));
    write_str(os, rel);
  }
  write_u32(os, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    write_str(os, t.name);
    write_u32(os, static_cast<uint32_t>(t.value.rows));
    write_u32(os, static_cast<uint32_t>(t.value.cols));
    for (double d : t.value.a) write_f64(os, d);
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open checkpoint: " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ValidationError("not a checkpoint file: " + path.string());
  if (read_u32(is) != kVersion)
    throw ValidationError("unsupported checkpoint version: " + path.string());
  Checkpoint ckpt;
  const uint8_t kind = read_u8(is);
  if (kind > 1) throw ValidationError("checkpoint: bad kind byte");
  ckpt.kind = static_cast<Checkpoint::Kind>(kind);
  ckpt.config_text = read_str(is);
  ckpt.epoch = read_u32(is);
  ckpt.seed = read_u64(is);
  ckpt.rng_state = read_str(is);
  const uint8_t fusion = read_u8(is);
  if (fusion > 2) throw ValidationError("checkpoint: bad fusion byte");
  ckpt.fusion = static_cast<FusionMode>(fusion);
  const uint32_t n_rel = read_u32(is);
  for (uint32_t i = 0; i < n_rel; ++i) ckpt.relations.push_back(read_str(is));
  const uint32_t n_pairs = read_u32(is);
  for (uint32_t i = 0; i < n_pairs; ++i) {
    const uint8_t nuc = read_u8(is);
    if (nuc > 2) throw ValidationError("checkpoint: bad nuclearity byte");
    std::string rel = read_str(is);
    ckpt.pairs.emplace_back(static_cast<Nuclearity>(nuc), std::move(rel));
  }
  const uint32_t n_tensors = read_u32(is);
  for (uint32_t i = 0; i < n_tensors; ++i) {
    NamedTensor t;
    t.name = read_str(is);
    const uint32_t rows = read_u32(is);
    const uint32_t cols = read_u32(is);
    t.value = nn::Mat(static_cast<int>(rows), static_cast<int>(cols));
    for (double& d : t.value.a) d = read_f64(is);
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

// ---------------------------------------------------------------------------
// model <-> checkpoint

namespace {

void copy_into_params(const Checkpoint& ckpt, nn::ParamSet& params,
                      const std::string& what) {
  for (nn::Tensor* t : params.tensors()) {
    const NamedTensor* src = ckpt.find(t->name);
    if (!src)
      throw ValidationError(what + ": checkpoint missing tensor '" + t->name + "'");
    if (!src->value.same_shape(t->value))
      throw ValidationError(what + ": shape mismatch for tensor '" + t->name + "' (" +
                            std::to_string(src->value.rows) + "x" +
                            std::to_string(src->value.cols) + " vs " +
                            std::to_string(t->value.rows) + "x" +
                            std::to_string(t->value.cols) + ")");
    t->value = src->value;
  }
}

void append_tensors(std::vector<NamedTensor>& out, const nn::ParamSet& params) {
  for (nn::Tensor* t : params.tensors()) out.push_back({t->name, t->value});
}

}  // namespace

NDPParams ndp_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != Checkpoint::Kind::Ndp)
    throw ValidationError("expected an NDP checkpoint");
  const TrainingConfig config = TrainingConfig::from_text(ckpt.config_text);
  const NamedTensor* proj = ckpt.find("ndp.local.proj");
  if (!proj) throw ValidationError("ndp checkpoint: missing ndp.local.proj");
  nn::Rng scratch(0);
  NDPParams params = NDPParams::init(proj->value.rows, config.dropout, scratch);
  copy_into_params(ckpt, params.params, "ndp checkpoint");
  return params;
}

Checkpoint checkpoint_from_ndp(const NDPParams& params, const TrainingConfig& config,
                               uint32_t epoch, const std::string& rng_state) {
  Checkpoint ckpt;
  ckpt.kind = Checkpoint::Kind::Ndp;
  ckpt.config_text = config.to_text();
  ckpt.epoch = epoch;
  ckpt.seed = config.seed;
  ckpt.rng_state = rng_state;
  append_tensors(ckpt.tensors, params.params);
  return ckpt;
}

std::vector<nn::Tensor*> C2RNetModel::trainable_tensors() const {
  std::vector<nn::Tensor*> out = rst.params.tensors();
  if (ndp) {
    const auto& more = ndp->params.tensors();
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

std::optional<nn::Mat> C2RNetModel::ndp_input_for(const Document& doc,
                                                  const nn::Mat& tokens) const {
  if (mode == FusionMode::None) return std::nullopt;
  if (!ndp) throw std::logic_error("fusion mode without an NDP branch");
  SegmentRanges segments;
  for (int e = 0; e < doc.n_edus(); ++e) segments.push_back(doc.edu_token_range(e));
  const SegmentEmbeddings se = segment_embeddings(tokens, segments, *ndp);
  if (mode == FusionMode::NdpEmbedding) return se.mixed;
  return one_hot_rows(ndp_classify(se.mixed, *ndp));
}

RSTTree C2RNetModel::parse_document(const Document& doc, const nn::Mat& tokens,
                                    std::vector<SplitDecision>* trace) const {
  const auto ndp_in = ndp_input_for(doc, tokens);
  return decode(doc, tokens, rst, ndp_in ? &*ndp_in : nullptr, trace);
}

C2RNetModel model_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != Checkpoint::Kind::Rst)
    throw ValidationError("expected a parser checkpoint");
  const TrainingConfig config = TrainingConfig::from_text(ckpt.config_text);
  const NamedTensor* tok = ckpt.find("rst.token.fwd.input");
  if (!tok) throw ValidationError("parser checkpoint: missing rst.token.fwd.input");
  const int dim = tok->value.rows;

  C2RNetModel model;
  model.mode = ckpt.fusion;
  RSTConfig rc = config.rst_config(dim);
  rc.mode = ckpt.fusion;
  nn::Rng scratch(0);
  model.rst = RSTParams::init(rc, PairInventory::from_pairs(ckpt.pairs), scratch);
  copy_into_params(ckpt, model.rst.params, "parser checkpoint");
  if (ckpt.fusion != FusionMode::None) {
    model.ndp = NDPParams::init(dim, config.dropout, scratch);
    copy_into_params(ckpt, model.ndp->params, "parser checkpoint (ndp branch)");
  }
  return model;
}

Checkpoint checkpoint_from_model(const C2RNetModel& model, const TrainingConfig& config,
                                 uint32_t epoch, const std::string& rng_state) {
  Checkpoint ckpt;
  ckpt.kind = Checkpoint::Kind::Rst;
  ckpt.config_text = config.to_text();
  ckpt.epoch = epoch;
  ckpt.seed = config.seed;
  ckpt.rng_state = rng_state;
  ckpt.fusion = model.mode;
  ckpt.relations = config.relation_inventory().names;
  ckpt.pairs = model.rst.pairs.pairs;
  append_tensors(ckpt.tensors, model.rst.params);
  if (model.ndp) append_tensors(ckpt.tensors, model.ndp->params);
  return ckpt;
}

std::string tensor_value_bytes(const std::vector<nn::Tensor*>& tensors) {
  std::ostringstream os;
  for (const nn::Tensor* t : tensors) {
    write_str(os, t->name);
    for (double d : t->value.a) write_f64(os, d);
  }
  return os.str();
}

std::string epoch_log_to_json(const EpochLog& e) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["loss"] = e.loss;
  if (e.accuracy) j["accuracy"] = *e.accuracy;
  return j.dump();
}

// ---------------------------------------------------------------------------
// training loops

namespace {

SegmentRanges sentence_token_segments(const Document& doc) {
  SegmentRanges out;
  for (int s = 0; s < doc.n_sentences(); ++s) {
    const auto [e_begin, e_end] = doc.sentence_edu_range(s);
    out.emplace_back(doc.edu_token_range(e_begin).first,
                     doc.edu_token_range(e_end - 1).second);
  }
  return out;
}

SegmentRanges edu_token_segments(const Document& doc) {
  SegmentRanges out;
  for (int e = 0; e < doc.n_edus(); ++e) out.push_back(doc.edu_token_range(e));
  return out;
}

std::vector<int> gold_codes(const Document& doc) {
  std::vector<int> out;
  for (ContentType t : *doc.ndp_labels) out.push_back(code(t));
  return out;
}

}  // namespace

double ndp_accuracy(const NDPParams& params, const std::vector<Document>& docs,
                    const EmbeddingProvider& provider) {
  long long correct = 0, total = 0;
  for (const auto& doc : docs) {
    if (!doc.ndp_labels)
      throw ValidationError("doc '" + doc.doc_id + "': ndp_labels missing");
    const nn::Mat tokens = embed_document(doc, provider);
    const SegmentEmbeddings se =
        segment_embeddings(tokens, sentence_token_segments(doc), params);
    const nn::Mat probs = ndp_classify(se.mixed, params);
    for (int s = 0; s < probs.rows; ++s) {
      int best = 0;
      for (int c = 1; c < probs.cols; ++c)
        if (probs(s, c) > probs(s, best)) best = c;
      if (best == code((*doc.ndp_labels)[static_cast<size_t>(s)])) ++correct;
      ++total;
    }
  }
  if (total == 0) throw ValidationError("ndp_accuracy: empty corpus");
  return 100.0 * double(correct) / double(total);
}

NdpTrainResult train_ndp(const TrainingConfig& config, const NDPCorpus& corpus,
                         const EmbeddingProvider& provider, const NdpHooks& hooks) {
  config.check();
  if (corpus.documents.empty()) throw ValidationError("train_ndp: empty corpus");

  nn::Rng rng(config.seed);
  NDPParams params = NDPParams::init(provider.dim(), config.dropout, rng);
  nn::AdamOptimizer adam(config.learning_rate, config.adam_epsilon);
  const auto tensors = params.params.tensors();

  NdpTrainResult result;
  std::vector<int> order(corpus.documents.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    int pending = 0;
    for (int idx : order) {
      const Document& doc = corpus.documents[static_cast<size_t>(idx)];
      const nn::Mat token_mat = embed_document(doc, provider);
      nn::Graph g;
      const auto fwd = ndp_graph_forward(g, g.constant(token_mat),
                                         sentence_token_segments(doc), params,
                                         /*training=*/true, &rng);
      const nn::VarId loss = ndp_graph_nll(g, fwd.logits, gold_codes(doc));
      loss_sum += g.value(loss)(0, 0);
      g.backward(loss);
      if (++pending == config.batch_size) {
        adam.step(tensors);
        pending = 0;
      }
    }
    if (pending > 0) adam.step(tensors);
    EpochLog log;
    log.epoch = epoch;
    log.loss = loss_sum / double(order.size());
    log.accuracy = ndp_accuracy(params, corpus.documents, provider);
    result.log.push_back(log);
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, params);
  }

  result.checkpoint = checkpoint_from_ndp(params, config,
                                          static_cast<uint32_t>(config.epochs),
                                          rng.save_state());
  return result;
}

RstTrainResult train_c2rnet(const TrainingConfig& config,
                            const std::vector<Document>& corpus,
                            const EmbeddingProvider& provider,
                            const Checkpoint* ndp_checkpoint, const RstHooks& hooks) {
  config.check();
  if (corpus.empty()) throw ValidationError("train_c2rnet: empty corpus");
  for (const auto& doc : corpus) {
    if (!doc.gold_tree)
      throw ValidationError("train_c2rnet: doc '" + doc.doc_id + "' has no gold tree");
  }

  const RelationInventory relations = config.relation_inventory();
  PairInventory pairs = config.pair_inventory == "full"
                            ? PairInventory::full_cross(relations)
                            : PairInventory::observed(corpus);
  // every gold pair must be scorable before any training step runs
  for (const auto& doc : corpus) {
    for (const auto& n : doc.gold_tree->nodes) {
      if (n.is_leaf()) continue;
      if (!relations.contains(n.relation))
        throw ValidationError("doc '" + doc.doc_id + "': relation '" + n.relation +
                              "' not in the inventory");
      if (pairs.index_of(n.nuclearity, n.relation) < 0)
        throw ValidationError("doc '" + doc.doc_id + "': pair (" +
                              to_string(n.nuclearity) + ", " + n.relation +
                              ") not in the pair inventory");
    }
  }

  nn::Rng rng(config.seed);
  C2RNetModel model;
  model.mode = config.fusion_mode;
  model.rst = RSTParams::init(config.rst_config(provider.dim()), std::move(pairs), rng);

  if (config.fusion_mode != FusionMode::None) {
    if (!ndp_checkpoint)
      throw ValidationError("fusion mode " + to_string(config.fusion_mode) +
                            " requires an NDP checkpoint");
    model.ndp = ndp_from_checkpoint(*ndp_checkpoint);
    if (model.ndp->dim != provider.dim())
      throw ValidationError("NDP checkpoint dim " + std::to_string(model.ndp->dim) +
                            " != embedding dim " + std::to_string(provider.dim()));
    if (model.ndp->head_weight->value.cols != kContentTypeCount)
      throw ValidationError("NDP checkpoint head is not 8-way");
    model.ndp->dropout_rate = config.dropout;
  }

  nn::AdamOptimizer adam(config.learning_rate, config.adam_epsilon);
  const auto tensors = model.trainable_tensors();

  RstTrainResult result;
  std::vector<int> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const bool frozen = epoch <= config.ndp_freeze_epochs;
    if (model.ndp) {
      for (nn::Tensor* t : model.ndp->params.tensors()) t->frozen = frozen;
    }
    rng.shuffle(order);
    double loss_sum = 0.0;
    int stepped = 0;
    int pending = 0;
    for (int idx : order) {
      const Document& doc = corpus[static_cast<size_t>(idx)];
      if (doc.n_edus() < 2) continue;  // no decisions to learn from
      const nn::Mat token_mat = embed_document(doc, provider);
      nn::Graph g;
      const nn::VarId tokens = g.constant(token_mat);
      std::optional<nn::VarId> ndp_in;
      if (config.fusion_mode == FusionMode::NdpEmbedding) {
        const auto fwd = ndp_graph_forward(g, tokens, edu_token_segments(doc),
                                           *model.ndp, /*training=*/true, &rng);
        ndp_in = fwd.mixed;
      } else if (config.fusion_mode == FusionMode::NdpOneHot) {
        // argmax routing: content-type predictions enter as constants, so
        // the parser loss cannot reach the NDP branch
        const SegmentEmbeddings se =
            segment_embeddings(token_mat, edu_token_segments(doc), *model.ndp);
        ndp_in = g.constant(one_hot_rows(ndp_classify(se.mixed, *model.ndp)));
      }
      const nn::VarId loss =
          build_rst_loss(g, doc, tokens, ndp_in, *doc.gold_tree, model.rst,
                         /*training=*/true, &rng);
      loss_sum += g.value(loss)(0, 0);
      g.backward(loss);
      ++stepped;
      if (++pending == config.batch_size) {
        adam.step(tensors);
        pending = 0;
      }
    }
    if (pending > 0) adam.step(tensors);
    EpochLog log;
    log.epoch = epoch;
    log.loss = stepped > 0 ? loss_sum / double(stepped) : 0.0;
    result.log.push_back(log);
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, model);
  }

  if (model.ndp) {
    for (nn::Tensor* t : model.ndp->params.tensors()) t->frozen = false;
  }
  result.checkpoint = checkpoint_from_model(model, config,
                                            static_cast<uint32_t>(config.epochs),
                                            rng.save_state());
  return result;
}

// ---------------------------------------------------------------------------
// evaluation driver and probing

EvalReport evaluate_model(const C2RNetModel& model, const std::vector<Document>& corpus,
                          const EmbeddingProvider& provider,
                          const DecodeFn& decode_override) {
  if (corpus.empty()) throw ValidationError("evaluate: empty corpus");
  TreeMap pred, gold;
  for (const auto& doc : corpus) {
    if (!doc.gold_tree)
      throw ValidationError("evaluate: doc '" + doc.doc_id + "' has no gold tree");
    gold.emplace(doc.doc_id, *doc.gold_tree);
    if (decode_override) {
      pred.emplace(doc.doc_id, decode_override(doc));
    } else {
      const nn::Mat tokens = embed_document(doc, provider);
      pred.emplace(doc.doc_id, model.parse_document(doc, tokens));
    }
  }
  EvalReport report;
  report.original = score(pred, gold, Convention::OriginalParseval);
  report.rst = score(pred, gold, Convention::RSTParseval);
  report.groups = span_group_accuracy(pred, gold);
  report.thresholds = threshold_table(pred, gold);
  return report;
}

EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const std::vector<Document>& corpus,
                               const EmbeddingProvider& provider,
                               const DecodeFn& decode_override) {
  const C2RNetModel model = model_from_checkpoint(ckpt);
  for (const auto& doc : corpus) {
    if (!doc.gold_tree) continue;
    for (const auto& n : doc.gold_tree->nodes) {
      if (!n.is_leaf() && model.rst.pairs.index_of(n.nuclearity, n.relation) < 0)
        throw ValidationError("evaluate: gold pair (" + to_string(n.nuclearity) + ", " +
                              n.relation + ") absent from the checkpoint inventory");
    }
  }
  return evaluate_model(model, corpus, provider, decode_override);
}

std::string render_eval_report(const EvalReport& report) {
  std::ostringstream os;
  os << render_score_table(report.original, report.rst);
  os << "\n" << render_span_groups(report.groups);
  os << "\n" << render_thresholds(report.thresholds);
  return os.str();
}

MultiEvalReport evaluate_checkpoints(const std::vector<Checkpoint>& checkpoints,
                                     const std::vector<Document>& corpus,
                                     const EmbeddingProvider& provider) {
  if (checkpoints.empty()) throw ValidationError("evaluate: no checkpoints");
  MultiEvalReport out;
  std::vector<ParsevalScore> orig, rstp;
  for (const Checkpoint& ckpt : checkpoints) {
    out.runs.push_back(evaluate_checkpoint(ckpt, corpus, provider));
    orig.push_back(out.runs.back().original);
    rstp.push_back(out.runs.back().rst);
  }
  out.original_mean = average_scores(orig);
  out.rst_mean = average_scores(rstp);
  return out;
}

double probe_ndp(const Checkpoint& c2rnet_checkpoint, const Checkpoint& ndp_checkpoint,
                 const NDPCorpus& test_corpus, const EmbeddingProvider& provider) {
  if (c2rnet_checkpoint.kind != Checkpoint::Kind::Rst)
    throw ValidationError("probe: first checkpoint must be a parser checkpoint");
  if (c2rnet_checkpoint.fusion == FusionMode::None)
    throw ValidationError("probe: parser checkpoint has no NDP branch");
  const C2RNetModel model = model_from_checkpoint(c2rnet_checkpoint);
  const NDPParams original = ndp_from_checkpoint(ndp_checkpoint);

  if (original.dim != model.ndp->dim)
    throw ValidationError("probe: shape mismatch between branch body (dim " +
                          std::to_string(model.ndp->dim) + ") and original head (dim " +
                          std::to_string(original.dim) + ")");

  // branch body after parser training, original classifier head
  nn::Rng scratch(0);
  NDPParams stitched = NDPParams::init(model.ndp->dim, 0.0, scratch);
  const auto copy_values = [](const std::vector<nn::Tensor*>& from,
                              const std::vector<nn::Tensor*>& to) {
    for (size_t i = 0; i < from.size(); ++i) to[i]->value = from[i]->value;
  };
  copy_values(model.ndp->body_tensors(), stitched.body_tensors());
  copy_values(original.head_tensors(), stitched.head_tensors());

  return ndp_accuracy(stitched, test_corpus.documents, provider);
}

}  // namespace c2rnet

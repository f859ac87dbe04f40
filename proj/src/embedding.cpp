#include "c2rnet/embedding.hpp"

#include <cmath>
#include <fstream>

#include "c2rnet/error.hpp"
#include "json.hpp"

namespace c2rnet {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<double> hash_embed(const std::string& token, int dim, uint64_t seed) {
  if (dim < 1) throw ValidationError("hash_embed: dim must be >= 1");
  std::vector<double> out(static_cast<size_t>(dim));
  const uint64_t base = fnv1a64(token);
  for (int i = 0; i < dim; ++i) {
    const uint64_t h =
        splitmix64(base ^ splitmix64(seed * 0x9e3779b97f4a7c15ULL + static_cast<uint64_t>(i)));
    const double u = (h >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
    out[static_cast<size_t>(i)] = 2.0 * u - 1.0;
  }
  return out;
}

HashEmbedding::HashEmbedding(int dim, uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 1) throw ValidationError("embedding dim must be >= 1");
}

PrecomputedEmbedding PrecomputedEmbedding::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embedding file: " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("embedding file is empty: " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("embedding file: bad header: ") + e.what());
  }
  if (header.value("format", "") != "c2rnet-embeddings")
    throw ValidationError("embedding file: unrecognized format");
  if (header.value("version", 0) != 1)
    throw ValidationError("embedding file: unsupported version");
  if (!header.contains("dim") || !header["dim"].is_number_integer() ||
      header["dim"].get<int>() < 1)
    throw ValidationError("embedding file: bad dim in header");
  if (!header.contains("count") || !header["count"].is_number_integer() ||
      header["count"].get<long long>() < 0)
    throw ValidationError("embedding file: bad count in header");

  PrecomputedEmbedding p;
  p.dim_ = header["dim"].get<int>();
  const long long declared = header["count"].get<long long>();

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("embedding file line " + std::to_string(lineno) + ": " +
                            e.what());
    }
    if (!rec.contains("doc_id") || !rec.contains("token_index") || !rec.contains("vector"))
      throw ValidationError("embedding file line " + std::to_string(lineno) +
                            ": record needs doc_id, token_index, vector");
    const auto key = std::make_pair(rec["doc_id"].get<std::string>(),
                                    rec["token_index"].get<int>());
    std::vector<double> vec = rec["vector"].get<std::vector<double>>();
    if (static_cast<int>(vec.size()) != p.dim_)
      throw ValidationError("embedding file line " + std::to_string(lineno) +
                            ": vector dim " + std::to_string(vec.size()) +
                            " != header dim " + std::to_string(p.dim_));
    for (double v : vec) {
      if (!std::isfinite(v))
        throw ValidationError("embedding file line " + std::to_string(lineno) +
                              ": non-finite entry");
    }
    if (!p.table_.emplace(key, std::move(vec)).second)
      throw ValidationError("embedding file line " + std::to_string(lineno) +
                            ": duplicate (doc_id, token_index)");
  }
  if (static_cast<long long>(p.table_.size()) != declared)
    throw ValidationError("embedding file: header count " + std::to_string(declared) +
                          " != " + std::to_string(p.table_.size()) + " records");
  return p;
}

std::vector<double> PrecomputedEmbedding::vector(const std::string& doc_id,
                                                 int token_index,
                                                 const std::string&) const {
  auto it = table_.find({doc_id, token_index});
  if (it == table_.end())
    throw ValidationError("missing embedding for (doc '" + doc_id + "', token " +
                          std::to_string(token_index) + ")");
  return it->second;
}

void write_embedding_file(
    const std::filesystem::path& path, int dim,
    const std::vector<std::tuple<std::string, int, std::vector<double>>>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write embedding file: " + path.string());
  nlohmann::ordered_json header;
  header["format"] = "c2rnet-embeddings";
  header["version"] = 1;
  header["dim"] = dim;
  header["count"] = records.size();
  out << header.dump() << "\n";
  for (const auto& [doc_id, index, vec] : records) {
    nlohmann::ordered_json rec;
    rec["doc_id"] = doc_id;
    rec["token_index"] = index;
    rec["vector"] = vec;
    out << rec.dump() << "\n";
  }
}

nn::Mat embed_document(const Document& doc, const EmbeddingProvider& provider) {
  if (doc.tokens.empty())
    throw ValidationError("doc '" + doc.doc_id + "': cannot embed an empty document");
  nn::Mat m(doc.n_tokens(), provider.dim());
  for (int t = 0; t < doc.n_tokens(); ++t) {
    const auto vec = provider.vector(doc.doc_id, t, doc.tokens[static_cast<size_t>(t)]);
    if (static_cast<int>(vec.size()) != provider.dim())
      throw std::runtime_error("embedding provider returned wrong dim");
    for (int c = 0; c < m.cols; ++c) m(t, c) = vec[static_cast<size_t>(c)];
  }
  return m;
}

std::unique_ptr<EmbeddingProvider> make_hash_provider(int dim, uint64_t seed) {
  return std::make_unique<HashEmbedding>(dim, seed);
}

}  // namespace c2rnet

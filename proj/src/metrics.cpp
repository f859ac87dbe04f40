#include "c2rnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "c2rnet/error.hpp"
#include "json.hpp"

namespace c2rnet {

double micro_f1(long long matched, long long predicted, long long gold) {
  if (matched > predicted || matched > gold)
    throw ValidationError("micro_f1: matched exceeds predicted or gold count");
  if (matched < 0 || predicted < 0 || gold < 0)
    throw ValidationError("micro_f1: negative count");
  if (predicted == 0 && gold == 0) return 100.0;  // vacuous perfection
  return 100.0 * 2.0 * double(matched) / double(predicted + gold);
}

double round1(double percent) {
  const double scaled = percent * 10.0;
  const double r = (scaled >= 0.0) ? std::floor(scaled + 0.5) : std::ceil(scaled - 0.5);
  return r / 10.0;
}

namespace {

void check_inputs(const TreeMap& pred, const TreeMap& gold) {
  for (const auto& [id, tree] : gold) {
    auto it = pred.find(id);
    if (it == pred.end())
      throw ValidationError("score: prediction missing doc_id '" + id + "'");
    if (it->second.leaf_count() != tree.leaf_count())
      throw ValidationError("score: doc '" + id + "': leaf count " +
                            std::to_string(it->second.leaf_count()) + " vs gold " +
                            std::to_string(tree.leaf_count()));
  }
  for (const auto& [id, tree] : pred) {
    if (!gold.count(id))
      throw ValidationError("score: gold missing doc_id '" + id + "'");
  }
}

ParsevalScore finalize(Convention convention, const ColumnCounts& s,
                       const ColumnCounts& n, const ColumnCounts& r,
                       const ColumnCounts& f) {
  ParsevalScore out;
  out.convention = convention;
  out.span_counts = s;
  out.nuclearity_counts = n;
  out.relation_counts = r;
  out.full_counts = f;
  out.span = micro_f1(s.matched, s.predicted, s.gold);
  out.nuclearity = micro_f1(n.matched, n.predicted, n.gold);
  out.relation = micro_f1(r.matched, r.predicted, r.gold);
  out.full = micro_f1(f.matched, f.predicted, f.gold);
  return out;
}

}  // namespace

ParsevalScore score(const TreeMap& pred, const TreeMap& gold, Convention convention,
                    bool include_root) {
  check_inputs(pred, gold);
  ColumnCounts s, n, r, f;

  struct TupleHash {
    size_t operator()(const std::tuple<int, int, std::string>& t) const {
      std::hash<std::string> hs;
      return hs(std::get<2>(t)) ^ (size_t(std::get<0>(t)) << 32) ^
             (size_t(std::get<1>(t)) << 16);
    }
  };

  for (const auto& [id, gold_tree] : gold) {
    const auto pred_set = constituents(pred.at(id), convention, include_root);
    const auto gold_set = constituents(gold_tree, convention, include_root);

    // pooled tallies per projection; spans are unique within one tree, so
    // plain sets suffice
    std::unordered_set<std::tuple<int, int, std::string>, TupleHash> span_p, nuc_p, rel_p;
    for (const auto& c : pred_set) {
      span_p.insert({c.first, c.last, ""});
      nuc_p.insert({c.first, c.last, c.nuclearity_tag});
      rel_p.insert({c.first, c.last, c.relation_tag});
    }
    s.predicted += static_cast<long long>(pred_set.size());
    n.predicted += static_cast<long long>(pred_set.size());
    r.predicted += static_cast<long long>(pred_set.size());
    f.predicted += static_cast<long long>(pred_set.size());
    s.gold += static_cast<long long>(gold_set.size());
    n.gold += static_cast<long long>(gold_set.size());
    r.gold += static_cast<long long>(gold_set.size());
    f.gold += static_cast<long long>(gold_set.size());

    for (const auto& c : gold_set) {
      if (span_p.count({c.first, c.last, ""})) ++s.matched;
      if (nuc_p.count({c.first, c.last, c.nuclearity_tag})) ++n.matched;
      if (rel_p.count({c.first, c.last, c.relation_tag})) ++r.matched;
      if (nuc_p.count({c.first, c.last, c.nuclearity_tag}) &&
          rel_p.count({c.first, c.last, c.relation_tag}))
        ++f.matched;
    }
  }
  return finalize(convention, s, n, r, f);
}

ParsevalScore oracle_score(const TreeMap& pred, const TreeMap& gold,
                           Convention convention, bool include_root) {
  check_inputs(pred, gold);

  // fully materialized global sets, intersected per projection
  using SpanKey = std::tuple<std::string, int, int>;
  using LabeledKey = std::tuple<std::string, int, int, std::string>;
  using FullKey = std::tuple<std::string, int, int, std::string, std::string>;
  std::set<SpanKey> span_pred, span_gold;
  std::set<LabeledKey> nuc_pred, nuc_gold, rel_pred, rel_gold;
  std::set<FullKey> full_pred, full_gold;

  auto collect = [&](const TreeMap& trees, std::set<SpanKey>& spans,
                     std::set<LabeledKey>& nucs, std::set<LabeledKey>& rels,
                     std::set<FullKey>& fulls) {
    for (const auto& [id, tree] : trees) {
      for (const auto& c : constituents(tree, convention, include_root)) {
        spans.insert({id, c.first, c.last});
        nucs.insert({id, c.first, c.last, c.nuclearity_tag});
        rels.insert({id, c.first, c.last, c.relation_tag});
        fulls.insert({id, c.first, c.last, c.nuclearity_tag, c.relation_tag});
      }
    }
  };
  collect(pred, span_pred, nuc_pred, rel_pred, full_pred);
  collect(gold, span_gold, nuc_gold, rel_gold, full_gold);

  auto intersection_size = [](const auto& a, const auto& b) {
    std::vector<typename std::decay_t<decltype(a)>::value_type> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::back_inserter(out));
    return static_cast<long long>(out.size());
  };

  ColumnCounts s{intersection_size(span_pred, span_gold),
                 static_cast<long long>(span_pred.size()),
                 static_cast<long long>(span_gold.size())};
  ColumnCounts n{intersection_size(nuc_pred, nuc_gold),
                 static_cast<long long>(nuc_pred.size()),
                 static_cast<long long>(nuc_gold.size())};
  ColumnCounts r{intersection_size(rel_pred, rel_gold),
                 static_cast<long long>(rel_pred.size()),
                 static_cast<long long>(rel_gold.size())};
  // full = exact (nuc, rel) agreement on the span
  ColumnCounts f{intersection_size(full_pred, full_gold),
                 static_cast<long long>(full_pred.size()),
                 static_cast<long long>(full_gold.size())};
  return finalize(convention, s, n, r, f);
}

ParsevalScore average_scores(const std::vector<ParsevalScore>& runs) {
  if (runs.empty()) throw ValidationError("average_scores: no runs");
  ParsevalScore out;
  out.convention = runs.front().convention;
  for (const auto& r : runs) {
    if (r.convention != out.convention)
      throw ValidationError("average_scores: mixed conventions");
    out.span += r.span;
    out.nuclearity += r.nuclearity;
    out.relation += r.relation;
    out.full += r.full;
  }
  const double k = double(runs.size());
  out.span /= k;
  out.nuclearity /= k;
  out.relation /= k;
  out.full /= k;
  return out;
}

namespace {

std::string fmt1(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << round1(v);
  return os.str();
}

void append_row(std::ostringstream& os, const std::string& name, const ParsevalScore& s) {
  os << name;
  for (size_t i = name.size(); i < 22; ++i) os << ' ';
  for (double v : {s.span, s.nuclearity, s.relation, s.full}) {
    std::string cell = fmt1(v);
    for (size_t i = cell.size(); i < 8; ++i) os << ' ';
    os << cell;
  }
  if (s.vacuous()) os << "   (no constituents)";
  os << "\n";
}

}  // namespace

std::string render_score_table(const ParsevalScore& orig, const ParsevalScore& rst) {
  std::ostringstream os;
  os << "convention                   S       N       R       F\n";
  append_row(os, to_string(orig.convention), orig);
  append_row(os, to_string(rst.convention), rst);
  return os.str();
}

std::string score_to_json(const ParsevalScore& s) {
  nlohmann::ordered_json j;
  j["convention"] = to_string(s.convention);
  j["S"] = round1(s.span);
  j["N"] = round1(s.nuclearity);
  j["R"] = round1(s.relation);
  j["F"] = round1(s.full);
  auto counts = [](const ColumnCounts& c) {
    nlohmann::ordered_json o;
    o["matched"] = c.matched;
    o["predicted"] = c.predicted;
    o["gold"] = c.gold;
    return o;
  };
  j["counts"]["span"] = counts(s.span_counts);
  j["counts"]["nuclearity"] = counts(s.nuclearity_counts);
  j["counts"]["relation"] = counts(s.relation_counts);
  j["counts"]["full"] = counts(s.full_counts);
  j["vacuous"] = s.vacuous();
  return j.dump();
}

}  // namespace c2rnet

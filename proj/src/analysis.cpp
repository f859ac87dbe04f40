#include "c2rnet/analysis.hpp"

#include <functional>
#include <set>
#include <sstream>
#include <tuple>

#include "c2rnet/error.hpp"
#include "json.hpp"

namespace c2rnet {

std::string to_string(AccuracyBasis b) {
  return b == AccuracyBasis::GoldNodes ? "gold-nodes" : "predicted-nodes";
}

std::string SpanGroup::label() const {
  if (max_len < 0) return "len > " + std::to_string(min_len - 1);
  if (min_len == max_len) return "len = " + std::to_string(min_len);
  return std::to_string(min_len) + " <= len <= " + std::to_string(max_len);
}

bool SpanGroup::contains(int len) const {
  return len >= min_len && (max_len < 0 || len <= max_len);
}

std::vector<SpanGroup> default_span_groups() {
  return {{2, 2}, {3, 5}, {6, -1}};
}

std::vector<int> default_thresholds() { return {3, 4, 5, 6, 7, 8, 9, 10, 11, 13, 15}; }

namespace {

struct NodeFacts {
  int length = 0;
  bool nuclearity_correct = false;
  bool relation_correct = false;
};

// Internal nodes of the basis tree, marked correct when the other tree
// contains the same span with the same nuclearity pattern / relation label.
std::vector<NodeFacts> collect_facts(const TreeMap& pred, const TreeMap& gold,
                                     AccuracyBasis basis) {
  for (const auto& [id, tree] : gold) {
    if (!pred.count(id))
      throw ValidationError("analysis: prediction missing doc_id '" + id + "'");
  }
  for (const auto& [id, tree] : pred) {
    if (!gold.count(id)) throw ValidationError("analysis: gold missing doc_id '" + id + "'");
  }

  std::vector<NodeFacts> facts;
  for (const auto& [id, gold_tree] : gold) {
    const RSTTree& basis_tree = basis == AccuracyBasis::GoldNodes ? gold_tree : pred.at(id);
    const RSTTree& other_tree = basis == AccuracyBasis::GoldNodes ? pred.at(id) : gold_tree;

    std::set<std::tuple<int, int, Nuclearity>> other_nuc;
    std::set<std::tuple<int, int, std::string>> other_rel;
    for (const auto& n : other_tree.nodes) {
      if (n.is_leaf()) continue;
      other_nuc.insert({n.first, n.last, n.nuclearity});
      other_rel.insert({n.first, n.last, n.relation});
    }
    for (const auto& n : basis_tree.nodes) {
      if (n.is_leaf()) continue;
      NodeFacts f;
      f.length = n.last - n.first + 1;
      f.nuclearity_correct = other_nuc.count({n.first, n.last, n.nuclearity}) > 0;
      f.relation_correct = other_rel.count({n.first, n.last, n.relation}) > 0;
      facts.push_back(f);
    }
  }
  return facts;
}

std::optional<double> accuracy(long long correct, long long total) {
  if (total == 0) return std::nullopt;
  return 100.0 * double(correct) / double(total);
}

}  // namespace

SpanGroupReport span_group_accuracy(const TreeMap& pred, const TreeMap& gold,
                                    const std::vector<SpanGroup>& groups,
                                    AccuracyBasis basis) {
  const auto facts = collect_facts(pred, gold, basis);
  SpanGroupReport report;
  report.basis = basis;
  for (const auto& g : groups) report.rows.push_back({g, 0, 0, 0, {}, {}});
  for (const auto& f : facts) {
    ++report.total_nodes;
    for (auto& row : report.rows) {
      if (!row.group.contains(f.length)) continue;
      ++row.nodes;
      if (f.nuclearity_correct) ++row.nuclearity_correct;
      if (f.relation_correct) ++row.relation_correct;
    }
  }
  for (auto& row : report.rows) {
    row.nuclearity_accuracy = accuracy(row.nuclearity_correct, row.nodes);
    row.relation_accuracy = accuracy(row.relation_correct, row.nodes);
  }
  return report;
}

ThresholdReport threshold_table(const TreeMap& pred, const TreeMap& gold,
                                const std::vector<int>& thresholds, AccuracyBasis basis) {
  const auto facts = collect_facts(pred, gold, basis);
  ThresholdReport report;
  report.basis = basis;
  for (const auto& f : facts) {
    ++report.total_nodes;
    if (f.nuclearity_correct) ++report.total_nuclearity_correct;
    if (f.relation_correct) ++report.total_relation_correct;
  }
  for (int t : thresholds) {
    ThresholdRow row;
    row.threshold = t;
    for (const auto& f : facts) {
      const bool above = f.length > t;
      (above ? row.nodes_above : row.nodes_below) += 1;
      if (f.nuclearity_correct)
        (above ? row.nuclearity_correct_above : row.nuclearity_correct_below) += 1;
      if (f.relation_correct)
        (above ? row.relation_correct_above : row.relation_correct_below) += 1;
    }
    row.nuclearity_above = accuracy(row.nuclearity_correct_above, row.nodes_above);
    row.nuclearity_below = accuracy(row.nuclearity_correct_below, row.nodes_below);
    row.relation_above = accuracy(row.relation_correct_above, row.nodes_above);
    row.relation_below = accuracy(row.relation_correct_below, row.nodes_below);
    report.rows.push_back(row);
  }
  return report;
}

namespace {

std::optional<double> gap(std::optional<double> a, std::optional<double> b) {
  if (!a || !b) return std::nullopt;
  return *a - *b;
}

}  // namespace

std::vector<GroupDiffRow> compare_span_groups(const SpanGroupReport& a,
                                              const SpanGroupReport& b) {
  if (a.rows.size() != b.rows.size())
    throw ValidationError("compare_span_groups: group layouts differ");
  std::vector<GroupDiffRow> out;
  for (size_t i = 0; i < a.rows.size(); ++i) {
    out.push_back({a.rows[i].group,
                   gap(a.rows[i].nuclearity_accuracy, b.rows[i].nuclearity_accuracy),
                   gap(a.rows[i].relation_accuracy, b.rows[i].relation_accuracy)});
  }
  return out;
}

std::vector<ThresholdDiffRow> compare_thresholds(const ThresholdReport& a,
                                                 const ThresholdReport& b) {
  if (a.rows.size() != b.rows.size())
    throw ValidationError("compare_thresholds: threshold layouts differ");
  std::vector<ThresholdDiffRow> out;
  for (size_t i = 0; i < a.rows.size(); ++i) {
    if (a.rows[i].threshold != b.rows[i].threshold)
      throw ValidationError("compare_thresholds: threshold layouts differ");
    ThresholdDiffRow row;
    row.threshold = a.rows[i].threshold;
    row.nuclearity_above_gap = gap(a.rows[i].nuclearity_above, b.rows[i].nuclearity_above);
    row.nuclearity_below_gap = gap(a.rows[i].nuclearity_below, b.rows[i].nuclearity_below);
    row.relation_above_gap = gap(a.rows[i].relation_above, b.rows[i].relation_above);
    row.relation_below_gap = gap(a.rows[i].relation_below, b.rows[i].relation_below);
    out.push_back(row);
  }
  return out;
}

namespace {

std::string cell(std::optional<double> v) {
  if (!v) return "-";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << round1(*v);
  return os.str();
}

void pad(std::ostringstream& os, const std::string& s, size_t width) {
  for (size_t i = s.size(); i < width; ++i) os << ' ';
  os << s;
}

}  // namespace

std::string render_span_groups(const SpanGroupReport& report,
                               const std::vector<GroupDiffRow>* diff) {
  std::ostringstream os;
  os << "span groups (basis: " << to_string(report.basis) << ")\n";
  os << "group                nodes   nuclearity   relation\n";
  for (const auto& row : report.rows) {
    std::string label = row.group.label();
    os << label;
    for (size_t i = label.size(); i < 18; ++i) os << ' ';
    pad(os, std::to_string(row.nodes), 7);
    pad(os, cell(row.nuclearity_accuracy), 13);
    pad(os, cell(row.relation_accuracy), 11);
    os << "\n";
  }
  if (diff) {
    os << "difference rows (system A - system B)\n";
    for (const auto& row : *diff) {
      std::string label = row.group.label();
      os << label;
      for (size_t i = label.size(); i < 18; ++i) os << ' ';
      pad(os, cell(row.nuclearity_gap), 20);
      pad(os, cell(row.relation_gap), 11);
      os << "\n";
    }
  }
  return os.str();
}

std::string render_thresholds(const ThresholdReport& report, const ThresholdReport* second) {
  std::ostringstream os;
  os << "threshold table (basis: " << to_string(report.basis) << ")\n";
  os << "threshold";
  for (const auto& row : report.rows) pad(os, std::to_string(row.threshold), 7);
  os << "\n";
  auto line = [&](const char* name, auto getter, const ThresholdReport& rep) {
    os << name;
    for (size_t i = std::string(name).size(); i < 9; ++i) os << ' ';
    for (const auto& row : rep.rows) pad(os, cell(getter(row)), 7);
    os << "\n";
  };
  line("nuc >t", [](const ThresholdRow& r) { return r.nuclearity_above; }, report);
  line("nuc <=t", [](const ThresholdRow& r) { return r.nuclearity_below; }, report);
  line("rel >t", [](const ThresholdRow& r) { return r.relation_above; }, report);
  line("rel <=t", [](const ThresholdRow& r) { return r.relation_below; }, report);
  if (second) {
    const auto diff = compare_thresholds(report, *second);
    os << "difference rows (system A - system B)\n";
    auto dline = [&](const char* name, auto getter) {
      os << name;
      for (size_t i = std::string(name).size(); i < 9; ++i) os << ' ';
      for (const auto& row : diff) pad(os, cell(getter(row)), 7);
      os << "\n";
    };
    dline("nuc >t", [](const ThresholdDiffRow& r) { return r.nuclearity_above_gap; });
    dline("nuc <=t", [](const ThresholdDiffRow& r) { return r.nuclearity_below_gap; });
    dline("rel >t", [](const ThresholdDiffRow& r) { return r.relation_above_gap; });
    dline("rel <=t", [](const ThresholdDiffRow& r) { return r.relation_below_gap; });
  }
  return os.str();
}

std::string analysis_to_json(const SpanGroupReport& groups,
                             const ThresholdReport& thresholds) {
  nlohmann::ordered_json j;
  j["basis"] = to_string(groups.basis);
  j["groups"] = nlohmann::ordered_json::array();
  for (const auto& row : groups.rows) {
    nlohmann::ordered_json g;
    g["label"] = row.group.label();
    g["nodes"] = row.nodes;
    g["nuclearity_correct"] = row.nuclearity_correct;
    g["relation_correct"] = row.relation_correct;
    if (row.nuclearity_accuracy) g["nuclearity_accuracy"] = round1(*row.nuclearity_accuracy);
    if (row.relation_accuracy) g["relation_accuracy"] = round1(*row.relation_accuracy);
    j["groups"].push_back(g);
  }
  j["thresholds"] = nlohmann::ordered_json::array();
  for (const auto& row : thresholds.rows) {
    nlohmann::ordered_json t;
    t["threshold"] = row.threshold;
    t["nodes_above"] = row.nodes_above;
    t["nodes_below"] = row.nodes_below;
    if (row.nuclearity_above) t["nuclearity_above"] = round1(*row.nuclearity_above);
    if (row.nuclearity_below) t["nuclearity_below"] = round1(*row.nuclearity_below);
    if (row.relation_above) t["relation_above"] = round1(*row.relation_above);
    if (row.relation_below) t["relation_below"] = round1(*row.relation_below);
    j["thresholds"].push_back(t);
  }
  return j.dump();
}

}  // namespace c2rnet

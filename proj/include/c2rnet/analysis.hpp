#pragma once

// Span-length-stratified accuracy analysis: how well a predicted tree
// recovers the nuclearity pattern and relation label of gold internal
// nodes, bucketed by the number of EDUs a node subsumes.

#include <optional>
#include <string>
#include <vector>

#include "c2rnet/metrics.hpp"
#include "c2rnet/treebank.hpp"

namespace c2rnet {

// Which side supplies the denominator nodes.
enum class AccuracyBasis { GoldNodes, PredictedNodes };
std::string to_string(AccuracyBasis b);

struct SpanGroup {
  int min_len = 2;
  int max_len = -1;  // -1 = unbounded
  std::string label() const;
  bool contains(int len) const;
};

std::vector<SpanGroup> default_span_groups();        // {2}, {3..5}, {6..}
std::vector<int> default_thresholds();               // 3,4,5,6,7,8,9,10,11,13,15

struct GroupRow {
  SpanGroup group;
  long long nodes = 0;
  long long nuclearity_correct = 0;
  long long relation_correct = 0;
  // empty groups report no accuracy rather than 0
  std::optional<double> nuclearity_accuracy;  // percent
  std::optional<double> relation_accuracy;
};

struct SpanGroupReport {
  AccuracyBasis basis = AccuracyBasis::GoldNodes;
  std::vector<GroupRow> rows;
  long long total_nodes = 0;
};

struct ThresholdRow {
  int threshold = 0;
  long long nodes_above = 0;  // span length > threshold
  long long nodes_below = 0;  // span length <= threshold
  long long nuclearity_correct_above = 0;
  long long nuclearity_correct_below = 0;
  long long relation_correct_above = 0;
  long long relation_correct_below = 0;
  std::optional<double> nuclearity_above, nuclearity_below;
  std::optional<double> relation_above, relation_below;
};

struct ThresholdReport {
  AccuracyBasis basis = AccuracyBasis::GoldNodes;
  std::vector<ThresholdRow> rows;
  long long total_nodes = 0;
  long long total_nuclearity_correct = 0;
  long long total_relation_correct = 0;
};

SpanGroupReport span_group_accuracy(const TreeMap& pred, const TreeMap& gold,
                                    const std::vector<SpanGroup>& groups = default_span_groups(),
                                    AccuracyBasis basis = AccuracyBasis::GoldNodes);

ThresholdReport threshold_table(const TreeMap& pred, const TreeMap& gold,
                                const std::vector<int>& thresholds = default_thresholds(),
                                AccuracyBasis basis = AccuracyBasis::GoldNodes);

// difference rows (a - b) for two systems scored against the same gold
struct GroupDiffRow {
  SpanGroup group;
  std::optional<double> nuclearity_gap;
  std::optional<double> relation_gap;
};
std::vector<GroupDiffRow> compare_span_groups(const SpanGroupReport& a,
                                              const SpanGroupReport& b);

struct ThresholdDiffRow {
  int threshold = 0;
  std::optional<double> nuclearity_above_gap, nuclearity_below_gap;
  std::optional<double> relation_above_gap, relation_below_gap;
};
std::vector<ThresholdDiffRow> compare_thresholds(const ThresholdReport& a,
                                                 const ThresholdReport& b);

std::string render_span_groups(const SpanGroupReport& report,
                               const std::vector<GroupDiffRow>* diff = nullptr);
std::string render_thresholds(const ThresholdReport& report,
                              const ThresholdReport* second = nullptr);
std::string analysis_to_json(const SpanGroupReport& groups, const ThresholdReport& thresholds);

}  // namespace c2rnet

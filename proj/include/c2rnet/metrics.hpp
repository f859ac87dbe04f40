#pragma once

// Micro-averaged labeled-constituent scoring under both conventions.
// score() keeps pooled tallies; oracle_score() materializes full constituent
// sets and intersects them — the two share nothing but constituents().

#include <map>
#include <string>
#include <vector>

#include "c2rnet/treebank.hpp"

namespace c2rnet {

struct ColumnCounts {
  long long matched = 0;
  long long predicted = 0;
  long long gold = 0;

  friend bool operator==(const ColumnCounts&, const ColumnCounts&) = default;
};

struct ParsevalScore {
  Convention convention = Convention::OriginalParseval;
  double span = 0.0;       // S
  double nuclearity = 0.0; // N
  double relation = 0.0;   // R
  double full = 0.0;       // F
  ColumnCounts span_counts, nuclearity_counts, relation_counts, full_counts;

  // true when there was nothing to score (no predicted and no gold
  // constituents), e.g. a single-EDU corpus under the internal-node
  // convention
  bool vacuous() const {
    return span_counts.predicted == 0 && span_counts.gold == 0;
  }

  friend bool operator==(const ParsevalScore&, const ParsevalScore&) = default;
};

// 100 * 2m / (p + g); both counts zero is vacuous perfection (100),
// exactly one zero gives 0.
double micro_f1(long long matched, long long predicted, long long gold);

// half away from zero, one decimal; used for all reported percentages
double round1(double percent);

using TreeMap = std::map<std::string, RSTTree>;

ParsevalScore score(const TreeMap& pred, const TreeMap& gold, Convention convention,
                    bool include_root = true);
ParsevalScore oracle_score(const TreeMap& pred, const TreeMap& gold,
                           Convention convention, bool include_root = true);

// column-wise mean of the percentages (counts are not averaged)
ParsevalScore average_scores(const std::vector<ParsevalScore>& runs);

// two-row table covering both conventions for one system
std::string render_score_table(const ParsevalScore& orig, const ParsevalScore& rst);
std::string score_to_json(const ParsevalScore& s);

}  // namespace c2rnet

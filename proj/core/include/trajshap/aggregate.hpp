#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trajshap/attribution.hpp"

namespace trajshap {

// Dataset-level summary. The history feature is permanent, so it is averaged
// over all queries. Neighbor and injected contributions are max-aggregated
// within a query first (the most influential agent), then averaged over the
// queries that have at least one such feature.
struct GlobalReport {
  double phi_history = 0.0;
  double phi_history_se = 0.0;
  double social_interaction_score = 0.0;
  double social_score_se = 0.0;
  std::optional<double> random_agent_score;  // absent when nothing was injected
  double random_score_se = 0.0;
  int num_queries = 0;
  int num_queries_with_neighbors = 0;
  int num_queries_with_injected = 0;

  // per-query reductions the scores are means of
  std::vector<double> history_values;
  std::vector<double> neighbor_maxima;
  std::vector<double> injected_maxima;
};

GlobalReport aggregate(const std::vector<LocalAttribution>& locals);

struct ComparisonRow {
  std::string metric;
  std::optional<double> a, b, diff;
};

std::vector<ComparisonRow> compare_reports(const GlobalReport& a, const GlobalReport& b);

// CSV "metric,a,b,diff"; absent values render as empty cells.
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

std::string report_to_json(const GlobalReport& report);
GlobalReport report_from_json(const std::string& text);

// Grouped bar chart (history / social score / random score per model).
std::string render_scores_svg(const std::vector<std::pair<std::string, GlobalReport>>& reports);

}  // namespace trajshap

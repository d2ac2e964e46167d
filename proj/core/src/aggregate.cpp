#include "trajshap/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "trajshap/errors.hpp"
#include "trajshap/stats.hpp"

namespace trajshap {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

GlobalReport aggregate(const std::vector<LocalAttribution>& locals) {
  if (locals.empty()) throw EmptyInputAggregateError("aggregate: no local attributions");

  GlobalReport report;
  report.num_queries = static_cast<int>(locals.size());
  for (const auto& local : locals) {
    double neighbor_max = -std::numeric_limits<double>::infinity();
    double injected_max = -std::numeric_limits<double>::infinity();
    bool has_neighbor = false, has_injected = false;
    for (size_t k = 0; k < local.features.size(); ++k) {
      switch (local.features[k].kind) {
        case FeatureKind::history:
          report.history_values.push_back(local.phi[k]);
          break;
        case FeatureKind::neighbor:
          neighbor_max = std::max(neighbor_max, local.phi[k]);
          has_neighbor = true;
          break;
        case FeatureKind::injected:
          injected_max = std::max(injected_max, local.phi[k]);
          has_injected = true;
          break;
      }
    }
    if (has_neighbor) report.neighbor_maxima.push_back(neighbor_max);
    if (has_injected) report.injected_maxima.push_back(injected_max);
  }
  report.num_queries_with_neighbors = static_cast<int>(report.neighbor_maxima.size());
  report.num_queries_with_injected = static_cast<int>(report.injected_maxima.size());

  report.phi_history = stats::mean(report.history_values);
  report.phi_history_se = stats::standard_error(report.history_values);
  report.social_interaction_score = stats::mean(report.neighbor_maxima);
  report.social_score_se = stats::standard_error(report.neighbor_maxima);
  if (!report.injected_maxima.empty()) {
    report.random_agent_score = stats::mean(report.injected_maxima);
    report.random_score_se = stats::standard_error(report.injected_maxima);
  }
  return report;
}

std::vector<ComparisonRow> compare_reports(const GlobalReport& a, const GlobalReport& b) {
  std::vector<ComparisonRow> rows;
  rows.push_back({"phi_history", a.phi_history, b.phi_history, b.phi_history - a.phi_history});
  rows.push_back({"social_interaction_score", a.social_interaction_score,
                  b.social_interaction_score,
                  b.social_interaction_score - a.social_interaction_score});
  ComparisonRow random{"random_agent_score", a.random_agent_score, b.random_agent_score, {}};
  if (a.random_agent_score && b.random_agent_score)
    random.diff = *b.random_agent_score - *a.random_agent_score;
  rows.push_back(std::move(random));
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "metric,a,b,diff\n";
  for (const auto& row : rows) {
    out += row.metric;
    out += ',';
    if (row.a) out += fmt(*row.a);
    out += ',';
    if (row.b) out += fmt(*row.b);
    out += ',';
    if (row.diff) out += fmt(*row.diff);
    out += '\n';
  }
  return out;
}

std::string report_to_json(const GlobalReport& report) {
  nlohmann::json j;
  j["phi_history"] = report.phi_history;
  j["phi_history_se"] = report.phi_history_se;
  j["social_interaction_score"] = report.social_interaction_score;
  j["social_score_se"] = report.social_score_se;
  if (report.random_agent_score) {
    j["random_agent_score"] = *report.random_agent_score;
    j["random_score_se"] = report.random_score_se;
  }
  j["num_queries"] = report.num_queries;
  j["num_queries_with_neighbors"] = report.num_queries_with_neighbors;
  j["num_queries_with_injected"] = report.num_queries_with_injected;
  j["per_query"] = {{"history", report.history_values},
                    {"neighbor_max", report.neighbor_maxima},
                    {"injected_max", report.injected_maxima}};
  return j.dump(2) + "\n";
}

GlobalReport report_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  GlobalReport report;
  report.phi_history = j.at("phi_history").get<double>();
  report.phi_history_se = j.at("phi_history_se").get<double>();
  report.social_interaction_score = j.at("social_interaction_score").get<double>();
  report.social_score_se = j.at("social_score_se").get<double>();
  if (j.contains("random_agent_score")) {
    report.random_agent_score = j.at("random_agent_score").get<double>();
    report.random_score_se = j.at("random_score_se").get<double>();
  }
  report.num_queries = j.at("num_queries").get<int>();
  report.num_queries_with_neighbors = j.at("num_queries_with_neighbors").get<int>();
  report.num_queries_with_injected = j.at("num_queries_with_injected").get<int>();
  report.history_values = j.at("per_query").at("history").get<std::vector<double>>();
  report.neighbor_maxima = j.at("per_query").at("neighbor_max").get<std::vector<double>>();
  report.injected_maxima = j.at("per_query").at("injected_max").get<std::vector<double>>();
  return report;
}

std::string render_scores_svg(const std::vector<std::pair<std::string, GlobalReport>>& reports) {
  struct Bar {
    std::string label;
    std::string color;
    double value;
  };
  std::vector<std::vector<Bar>> groups;
  double max_abs = 0.0;
  for (const auto& [name, report] : reports) {
    std::vector<Bar> bars;
    bars.push_back({"history", "#c0392b", report.phi_history});
    bars.push_back({"social", "#2980b9", report.social_interaction_score});
    if (report.random_agent_score) bars.push_back({"random", "#7f8c8d", *report.random_agent_score});
    for (const auto& bar : bars) max_abs = std::max(max_abs, std::abs(bar.value));
    groups.push_back(std::move(bars));
  }
  if (max_abs == 0.0) max_abs = 1.0;

  const double bar_w = 34.0, gap = 10.0, group_gap = 40.0, margin = 60.0;
  const double plot_h = 220.0, zero_y = margin + plot_h / 2.0;
  double x = margin;
  std::string body;
  char buf[256];
  for (size_t g = 0; g < groups.size(); ++g) {
    const double group_start = x;
    for (const auto& bar : groups[g]) {
      const double h = (plot_h / 2.0) * (bar.value / max_abs);
      const double top = h >= 0.0 ? zero_y - h : zero_y;
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"%s\"/>\n", x,
                    top, bar_w, std::abs(h), bar.color.c_str());
      body += buf;
      std::snprintf(buf, sizeof(buf),
                    "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" text-anchor=\"middle\">%s</text>\n",
                    x + bar_w / 2.0, margin + plot_h + 14.0, bar.label.c_str());
      body += buf;
      std::snprintf(buf, sizeof(buf),
                    "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" text-anchor=\"middle\">%.4g</text>\n",
                    x + bar_w / 2.0, top - 4.0, bar.value);
      body += buf;
      x += bar_w + gap;
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">%s</text>\n",
                  (group_start + x - gap) / 2.0, margin + plot_h + 32.0, reports[g].first.c_str());
    body += buf;
    x += group_gap;
  }
  const double width = x + margin - group_gap;
  std::string svg;
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.0f %.0f\">\n",
                width, margin * 2 + plot_h + 40.0, width, margin * 2 + plot_h + 40.0);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#333\"/>\n", margin / 2.0,
                zero_y, width - margin / 2.0, zero_y);
  svg += buf;
  svg += body;
  svg += "</svg>\n";
  return svg;
}

}  // namespace trajshap

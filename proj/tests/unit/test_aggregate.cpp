#include <doctest.h>

#include <algorithm>

#include "trajshap/aggregate.hpp"
#include "trajshap/errors.hpp"
#include "trajshap/rng.hpp"

using namespace trajshap;

TEST_SUITE_BEGIN("aggregate");

namespace {

LocalAttribution make_local(double history, std::vector<double> neighbors,
                            std::vector<double> injected = {}) {
  LocalAttribution local;
  local.features.push_back({FeatureKind::history, 0});
  local.phi.push_back(history);
  int64_t id = 1;
  for (double phi : neighbors) {
    local.features.push_back({FeatureKind::neighbor, id++});
    local.phi.push_back(phi);
  }
  for (double phi : injected) {
    local.features.push_back({FeatureKind::injected, 100 + id++});
    local.phi.push_back(phi);
  }
  local.nu_empty = -1.0;
  local.nu_full = 0.0;
  local.evaluations = 1 << local.features.size();
  return local;
}

}  // namespace

TEST_CASE("zero neighbors everywhere give a zero score") {
  const std::vector<LocalAttribution> locals{make_local(0.4, {0.0, 0.0}), make_local(0.6, {0.0})};
  const GlobalReport report = aggregate(locals);
  CHECK(report.social_interaction_score == 0.0);
  CHECK(report.phi_history == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_FALSE(report.random_agent_score.has_value());
}

TEST_CASE("max then mean aggregation") {
  const GlobalReport one = aggregate({make_local(0.0, {0.2, -0.1})});
  CHECK(one.social_interaction_score == doctest::Approx(0.2).epsilon(1e-12));

  const GlobalReport two = aggregate({make_local(0.0, {0.2, -0.1}), make_local(0.0, {0.4})});
  CHECK(two.social_interaction_score == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("neighborless queries do not dilute the score") {
  const std::vector<LocalAttribution> locals{make_local(1.0, {}), make_local(1.0, {0.5}),
                                             make_local(1.0, {})};
  const GlobalReport report = aggregate(locals);
  CHECK(report.num_queries == 3);
  CHECK(report.num_queries_with_neighbors == 1);
  CHECK(report.social_interaction_score == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("injected features aggregate like neighbors but separately") {
  const std::vector<LocalAttribution> locals{make_local(1.0, {0.5}, {-0.1, 0.05}),
                                             make_local(1.0, {0.3}, {0.15})};
  const GlobalReport report = aggregate(locals);
  REQUIRE(report.random_agent_score.has_value());
  CHECK(*report.random_agent_score == doctest::Approx((0.05 + 0.15) / 2).epsilon(1e-12));
  CHECK(report.num_queries_with_injected == 2);
}

TEST_CASE("aggregate rejects empty input") {
  CHECK_THROWS_AS(aggregate({}), EmptyInputAggregateError);
}

TEST_CASE("scores are invariant to query and neighbor order") {
  std::vector<LocalAttribution> locals;
  const RngStream s = RngStream::root(5);
  for (uint64_t q = 0; q < 12; ++q) {
    std::vector<double> neighbors;
    for (uint64_t k = 0; k < 1 + q % 4; ++k) neighbors.push_back(s.uniform(q * 10 + k) - 0.5);
    locals.push_back(make_local(s.uniform(q), neighbors));
  }
  const GlobalReport base = aggregate(locals);

  std::vector<LocalAttribution> shuffled = locals;
  seeded_shuffle(shuffled, RngStream::root(9));
  for (auto& local : shuffled) {
    // reverse the neighbor features in place
    std::reverse(local.features.begin() + 1, local.features.end());
    std::reverse(local.phi.begin() + 1, local.phi.end());
  }
  const GlobalReport twisted = aggregate(shuffled);
  CHECK(base.social_interaction_score == doctest::Approx(twisted.social_interaction_score).epsilon(1e-12));
  CHECK(base.phi_history == doctest::Approx(twisted.phi_history).epsilon(1e-12));
}

TEST_CASE("comparison table and csv") {
  const GlobalReport a = aggregate({make_local(0.5, {0.25})});
  const auto self_rows = compare_reports(a, a);
  for (const auto& row : self_rows)
    if (row.diff) CHECK(*row.diff == 0.0);

  const GlobalReport b = aggregate({make_local(0.75, {0.5}, {0.1})});
  const auto rows = compare_reports(a, b);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].metric == "phi_history");
  CHECK(*rows[0].diff == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_FALSE(rows[2].a.has_value());  // a has no injected features
  CHECK(rows[2].b.has_value());
  CHECK_FALSE(rows[2].diff.has_value());

  const std::string csv = comparison_csv(rows);
  CHECK(csv.find("metric,a,b,diff\n") == 0);
  CHECK(csv.find("random_agent_score,,0.1,\n") != std::string::npos);
}

TEST_CASE("report JSON round-trip") {
  const GlobalReport report = aggregate({make_local(0.5, {0.25}, {0.01}), make_local(0.1, {})});
  const GlobalReport parsed = report_from_json(report_to_json(report));
  CHECK(parsed.phi_history == report.phi_history);
  CHECK(parsed.social_interaction_score == report.social_interaction_score);
  REQUIRE(parsed.random_agent_score.has_value());
  CHECK(*parsed.random_agent_score == *report.random_agent_score);
  CHECK(parsed.num_queries == report.num_queries);
  CHECK(parsed.history_values == report.history_values);
  CHECK(parsed.neighbor_maxima == report.neighbor_maxima);
  CHECK(parsed.injected_maxima == report.injected_maxima);
}

TEST_CASE("svg rendering") {
  const GlobalReport a = aggregate({make_local(0.5, {0.25}, {0.05})});
  const GlobalReport b = aggregate({make_local(0.4, {0.1})});
  const std::string svg = render_scores_svg({{"model_a", a}, {"model_b", b}});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("model_a") != std::string::npos);
  CHECK(svg.find("model_b") != std::string::npos);
  // five bars total: history/social/random + history/social
  size_t rects = 0;
  for (size_t pos = svg.find("<rect"); pos != std::string::npos; pos = svg.find("<rect", pos + 1))
    ++rects;
  CHECK(rects == 5);
  CHECK(render_scores_svg({{"model_a", a}, {"model_b", b}}) == svg);
}

TEST_SUITE_END();

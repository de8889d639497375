#include "reebedit/deformations.hpp"

#include <random>

#include "catch2/catch_amalgamated.hpp"
#include "reebedit/errors.hpp"
#include "reebedit/reeb_graph.hpp"
#include "test_support.hpp"

using namespace reebedit;
using namespace testsupport;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

// Same undirected cycle with the same ids and labels; storage may start
// anywhere and run in either direction (a pass through a two-vertex graph
// can flip the stored orientation without changing the edge set).
void require_identical(const LabelledReebGraph& a, const LabelledReebGraph& b) {
  REQUIRE(a.size() == b.size());
  const std::size_t n = a.size();
  const std::size_t off = b.position_of(a.cycle()[0].id);
  for (int dir : {1, -1}) {
    bool all = true;
    for (std::size_t i = 0; i < n && all; ++i) {
      const ReebVertex& x = a.cycle()[i];
      const ReebVertex& y = b.at(dir > 0 ? off + i : off + n - i);
      if (x.id != y.id || x.label != y.label || x.index != y.index) all = false;
    }
    if (all) {
      SUCCEED();
      return;
    }
  }
  FAIL("cycles differ beyond rotation and reflection");
}

// Some deformation applicable to g, drawn with rough balance between kinds.
EditOp random_op(std::mt19937_64& rng, const LabelledReebGraph& g) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto deletable = find_deletable_pairs(g);
  const double roll = u01(rng);
  if (roll < 0.34 && !deletable.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, deletable.size() - 1);
    const auto [a, b] = deletable[pick(rng)];
    return DeathOp{a, b};
  }
  if (roll < 0.67) {
    // Affine maps preserve label order, so the relabel is always valid.
    const double scale = 0.5 + u01(rng);
    const double shift = u01(rng) - 0.5;
    RelabelOp r;
    for (const auto& v : g.cycle()) r.labels[v.id] = scale * v.label + shift;
    return r;
  }
  const std::size_t n = g.size();
  std::uniform_int_distribution<std::size_t> edge(0, n - 1);
  for (;;) {
    const std::size_t i = edge(rng);
    const ReebVertex& a = g.cycle()[i];
    const ReebVertex& b = g.at(i + 1);
    const ReebVertex& lo = a.label < b.label ? a : b;
    const ReebVertex& hi = a.label < b.label ? b : a;
    double x = lo.label + (hi.label - lo.label) * u01(rng);
    double y = lo.label + (hi.label - lo.label) * u01(rng);
    if (x == y) continue;
    if (x > y) std::swap(x, y);
    bool clash = false;
    for (const auto& v : g.cycle())
      if (v.label == x || v.label == y) clash = true;
    if (clash) continue;
    return BirthOp{lo.id, hi.id, y, x, std::nullopt};
  }
}

}  // namespace

TEST_CASE("birth inserts a nested pair next to the lower endpoint") {
  const LabelledReebGraph g = graph_from_labels({0.0, 1.0});
  const BirthOp b{0, 1, 0.6, 0.2, std::nullopt};
  CHECK(cost(g, EditOp{b}) == Approx(0.2));

  const LabelledReebGraph h = apply(g, b);
  REQUIRE(h.size() == 4);
  CHECK(h.cycle()[0].id == 0);
  CHECK(h.cycle()[0].label == 0.0);
  CHECK(h.cycle()[1].id == 2);
  CHECK(h.cycle()[1].label == 0.6);
  CHECK(h.cycle()[1].index == CriticalIndex::kMax);
  CHECK(h.cycle()[2].id == 3);
  CHECK(h.cycle()[2].label == 0.2);
  CHECK(h.cycle()[2].index == CriticalIndex::kMin);
  CHECK(h.cycle()[3].id == 1);
  CHECK(h.cycle()[3].label == 1.0);
}

TEST_CASE("birth keeps the new maximum adjacent to v1 on both edge orientations") {
  // Same cycle stored starting from the maximum.
  const LabelledReebGraph g = graph_from_labels({1.0, 0.0});
  const LabelledReebGraph h = apply(g, BirthOp{1, 0, 0.6, 0.2, std::nullopt});
  REQUIRE(h.size() == 4);
  // Traversal from the minimum must read min, new max, new min, old max.
  const std::size_t p = h.position_of(1);
  CHECK(h.at(p + 1).label == 0.6);
  CHECK(h.at(p + 2).label == 0.2);
  CHECK(h.at(p + 3).label == 1.0);
}

TEST_CASE("birth rejects bad edges, orientations, labels, and ids") {
  const LabelledReebGraph g = graph_from_labels({0.0, 10.0, 5.0, 6.0, 1.0, 2.0});
  CHECK_THROWS_AS(apply(g, BirthOp{0, 3, 2.0, 1.5, std::nullopt}), InvalidDeformation);
  CHECK_THROWS_WITH(apply(g, BirthOp{1, 0, 2.0, 1.5, std::nullopt}),
                    ContainsSubstring("label(v1) < label(v2)"));
  CHECK_THROWS_WITH(apply(g, BirthOp{0, 1, 11.0, 1.5, std::nullopt}),
                    ContainsSubstring("new_min_label < new_max_label"));
  CHECK_THROWS_AS(apply(g, BirthOp{0, 1, 1.5, -1.0, std::nullopt}), InvalidDeformation);
  CHECK_THROWS_AS(apply(g, BirthOp{0, 1, 1.5, 2.0, std::nullopt}), InvalidDeformation);
  CHECK_THROWS_WITH(apply(g, BirthOp{0, 1, 5.0, 3.0, std::nullopt}),
                    ContainsSubstring("duplicates the label of id=2"));
  CHECK_THROWS_AS(apply(g, BirthOp{0, 99, 2.0, 1.5, std::nullopt}), UnknownVertexId);
  CHECK_THROWS_WITH(apply(g, BirthOp{0, 1, 2.5, 1.5, {{3, 7}}}),
                    ContainsSubstring("ids must be fresh"));
  CHECK_THROWS_WITH(apply(g, BirthOp{0, 1, 2.5, 1.5, {{7, 7}}}),
                    ContainsSubstring("ids must be fresh"));
}

TEST_CASE("death removes exactly the nested pairs") {
  const LabelledReebGraph g = graph_from_labels({0.0, 0.6, 0.2, 1.0});
  const auto pairs = find_deletable_pairs(g);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0] == std::pair<VertexId, VertexId>{1, 2});

  CHECK(cost(g, EditOp{DeathOp{1, 2}}) == Approx(0.2));
  const LabelledReebGraph h = apply(g, DeathOp{1, 2});
  REQUIRE(h.size() == 2);
  CHECK(h.cycle()[0].id == 0);
  CHECK(h.cycle()[0].label == 0.0);
  CHECK(h.cycle()[1].id == 3);
  CHECK(h.cycle()[1].label == 1.0);

  // Pair order in the op does not matter.
  const LabelledReebGraph h2 = apply(g, DeathOp{2, 1});
  require_identical(h, h2);

  CHECK_THROWS_WITH(apply(g, DeathOp{0, 1}), ContainsSubstring("nest strictly inside"));
  CHECK_THROWS_AS(apply(g, DeathOp{0, 2}), InvalidDeformation);
  CHECK_THROWS_AS(apply(h, DeathOp{0, 3}), DeathOnTwoVertexGraph);
}

TEST_CASE("relabel costs the largest displacement and must cover every vertex") {
  const LabelledReebGraph g = graph_from_labels({0.0, 0.6, 0.2, 1.0});
  RelabelOp r;
  r.labels = {{0, 0.05}, {1, 0.7}, {2, 0.25}, {3, 0.9}};
  CHECK(cost(g, EditOp{r}) == Approx(0.1));
  const LabelledReebGraph h = apply(g, r);
  CHECK(h.vertex(1).label == 0.7);
  CHECK(h.size() == 4);

  RelabelOp missing;
  missing.labels = {{0, 0.05}, {1, 0.7}, {2, 0.25}};
  CHECK_THROWS_WITH(apply(g, missing), ContainsSubstring("missing vertex id=3"));

  RelabelOp unknown = r;
  unknown.labels[42] = 0.5;
  CHECK_THROWS_AS(apply(g, unknown), UnknownVertexId);

  RelabelOp invalid;
  invalid.labels = {{0, 0.0}, {1, 0.1}, {2, 0.2}, {3, 1.0}};
  CHECK_THROWS_WITH(apply(g, invalid), ContainsSubstring("relabel produces an invalid graph"));
}

TEST_CASE("every deformation has an exact inverse with exactly equal cost") {
  std::mt19937_64 rng(20240812);
  std::uniform_int_distribution<int> pairs(1, 6);
  for (int trial = 0; trial < 2000; ++trial) {
    const LabelledReebGraph g = random_graph(rng, pairs(rng));
    const EditOp op = random_op(rng, g);
    const LabelledReebGraph h = reebedit::apply(g, op);
    const EditOp inv = invert(op, g);
    const LabelledReebGraph back = reebedit::apply(h, inv);
    REQUIRE(back.size() == g.size());
    // Exact restoration: same ids, same labels, same storage rotation.
    require_identical(back, g);
    REQUIRE(cost(h, inv) == cost(g, op));
  }
}

TEST_CASE("apply_sequence accumulates costs and reports the failing step") {
  const LabelledReebGraph g = graph_from_labels({0.0, 0.6, 0.2, 1.0});

  SECTION("empty script is the identity") {
    const ApplyResult r = apply_sequence(g, {});
    require_identical(r.graph, g);
    CHECK(r.total_cost == 0.0);
    CHECK(r.step_costs.empty());
  }

  SECTION("total is the sum of the step costs") {
    RelabelOp r;
    r.labels = {{0, 0.0}, {1, 0.7}, {2, 0.2}, {3, 1.0}};
    const EditScript s{EditOp{r}, EditOp{DeathOp{1, 2}}};
    const ApplyResult res = apply_sequence(g, s);
    REQUIRE(res.step_costs.size() == 2);
    CHECK(res.step_costs[0] == Approx(0.1));
    CHECK(res.step_costs[1] == Approx(0.25));
    CHECK(res.total_cost == Approx(0.35));
    CHECK(res.graph.size() == 2);
  }

  SECTION("failing step is named with its index") {
    RelabelOp r;
    r.labels = {{0, 0.0}, {1, 0.7}, {2, 0.2}, {3, 1.0}};
    const EditScript s{EditOp{r}, EditOp{DeathOp{0, 1}}};
    CHECK_THROWS_WITH(apply_sequence(g, s), ContainsSubstring("step 1 (death)"));
  }
}

TEST_CASE("invert_sequence runs a script backwards") {
  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < 200; ++trial) {
    const LabelledReebGraph g = random_graph(rng, 3);
    EditScript s;
    LabelledReebGraph cur = g;
    for (int k = 0; k < 4; ++k) {
      const EditOp op = random_op(rng, cur);
      s.push_back(op);
      cur = reebedit::apply(cur, op);
    }
    const EditScript inv = invert_sequence(s, g);
    const ApplyResult fwd = apply_sequence(g, s);
    const ApplyResult back = apply_sequence(fwd.graph, inv);
    require_identical(back.graph, g);
    // Step costs invert exactly; only the accumulation order differs.
    REQUIRE(back.step_costs.size() == fwd.step_costs.size());
    for (std::size_t i = 0; i < fwd.step_costs.size(); ++i)
      REQUIRE(back.step_costs[i] == fwd.step_costs[fwd.step_costs.size() - 1 - i]);
    REQUIRE(back.total_cost == Approx(fwd.total_cost).margin(1e-12));
  }
}

TEST_CASE("graphs with at least four vertices always have a deletable pair") {
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> pairs(2, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const LabelledReebGraph g = random_graph(rng, pairs(rng));
    const auto del = find_deletable_pairs(g);
    REQUIRE_FALSE(del.empty());
    // The smallest-gap pair qualifies in particular.
    double best_gap = 1e300;
    std::pair<VertexId, VertexId> best{0, 0};
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double gap = std::abs(g.cycle()[i].label - g.at(i + 1).label);
      if (gap < best_gap) {
        best_gap = gap;
        best = {g.cycle()[i].id, g.at(i + 1).id};
      }
    }
    const bool found = std::any_of(del.begin(), del.end(), [&](const auto& p) {
      return (p.first == best.first && p.second == best.second) ||
             (p.first == best.second && p.second == best.first);
    });
    CHECK(found);
  }
}

TEST_CASE("connect_canonical joins arbitrary graph pairs") {
  std::mt19937_64 rng(271828);
  std::uniform_int_distribution<int> pairs(1, 5);
  for (int trial = 0; trial < 300; ++trial) {
    const LabelledReebGraph g1 = random_graph(rng, pairs(rng));
    const LabelledReebGraph g2 = random_graph(rng, pairs(rng));
    const EditScript s = connect_canonical(g1, g2);
    const ApplyResult r = apply_sequence(g1, s);
    const auto w = is_isomorphic(r.graph, g2, 0.0);
    REQUIRE(w.has_value());
    REQUIRE(r.total_cost >= 0.0);
    REQUIRE(std::isfinite(r.total_cost));
  }
}

TEST_CASE("connect_canonical is optimal on the nested-pair example") {
  const LabelledReebGraph g1 = graph_from_labels({0.0, 0.6, 0.2, 1.0});
  const LabelledReebGraph g2 = graph_from_labels({0.0, 1.0});
  const EditScript s = connect_canonical(g1, g2);
  const ApplyResult r = apply_sequence(g1, s);
  REQUIRE(is_isomorphic(r.graph, g2, 0.0).has_value());
  CHECK(r.total_cost == Approx(0.2));
}

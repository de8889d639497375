#include "reebedit/reeb_graph.hpp"

#include <random>
#include <unordered_map>

#include "catch2/catch_amalgamated.hpp"
#include "reebedit/circle_function.hpp"
#include "reebedit/errors.hpp"
#include "test_support.hpp"

using namespace reebedit;
using namespace testsupport;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

LabelledReebGraph rotate_copy(const LabelledReebGraph& g, std::size_t k, VertexId id_offset) {
  const std::size_t n = g.size();
  std::vector<ReebVertex> cyc;
  for (std::size_t i = 0; i < n; ++i) {
    const ReebVertex& v = g.cycle()[(i + k) % n];
    cyc.push_back({v.id + id_offset, v.label, v.index});
  }
  return LabelledReebGraph(std::move(cyc));
}

LabelledReebGraph reflect_copy(const LabelledReebGraph& g, VertexId id_offset) {
  const std::size_t n = g.size();
  std::vector<ReebVertex> cyc;
  for (std::size_t i = 0; i < n; ++i) {
    const ReebVertex& v = g.cycle()[n - 1 - i];
    cyc.push_back({v.id + id_offset, v.label, v.index});
  }
  return LabelledReebGraph(std::move(cyc));
}

void check_witness(const LabelledReebGraph& g1, const LabelledReebGraph& g2,
                   const VertexBijection& w, double tol) {
  REQUIRE(w.size() == g1.size());
  std::unordered_map<VertexId, int> hit1, hit2;
  for (const auto& [a, b] : w) {
    ++hit1[a];
    ++hit2[b];
    REQUIRE(g1.vertex(a).index == g2.vertex(b).index);
    REQUIRE(std::abs(g1.vertex(a).label - g2.vertex(b).label) <= tol);
  }
  for (const auto& [id, c] : hit1) CHECK(c == 1);
  for (const auto& [id, c] : hit2) CHECK(c == 1);
}

}  // namespace

TEST_CASE("extract builds the two-vertex graph of the sine function") {
  const LabelledReebGraph g = extract(sine());
  REQUIRE(g.size() == 2);
  // Position order: the maximum at pi/2 precedes the minimum at 3*pi/2.
  CHECK(g.cycle()[0].id == 0);
  CHECK(g.cycle()[0].index == CriticalIndex::kMax);
  CHECK(g.cycle()[0].label == Approx(1.0).margin(1e-9));
  CHECK(g.cycle()[1].id == 1);
  CHECK(g.cycle()[1].index == CriticalIndex::kMin);
  CHECK(g.cycle()[1].label == Approx(-1.0).margin(1e-9));
}

TEST_CASE("extract agrees with a derivative-free scan") {
  const CircleFunction f = make_trig(0.2, {0.1, -0.3}, {1.0, 0.7});
  const LabelledReebGraph g = extract(f);
  const auto scanned = scan_extrema(f);
  REQUIRE(g.size() == scanned.size());
  for (std::size_t i = 0; i < scanned.size(); ++i) {
    CHECK(g.cycle()[i].label == Approx(scanned[i].value).margin(1e-8));
    CHECK((g.cycle()[i].index == CriticalIndex::kMax) == scanned[i].is_max);
  }
}

TEST_CASE("realize places labels at evenly spaced breakpoints") {
  const LabelledReebGraph g = graph_from_labels({0.0, 0.6, 0.2, 1.0});
  const CircleFunction f = realize(g);
  REQUIRE(f.kind() == FunctionKind::kPiecewiseLinear);
  REQUIRE(f.pl().points.size() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(f.pl().points[k].position == Approx(kTwoPi * k / 4.0));
    CHECK(evaluate(f, kTwoPi * k / 4.0) == g.cycle()[k].label);
  }
}

TEST_CASE("extract after realize reproduces the graph") {
  std::mt19937_64 rng(20240811);
  std::uniform_int_distribution<int> pairs(1, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const LabelledReebGraph g = random_graph(rng, pairs(rng));
    const LabelledReebGraph h = extract(realize(g));
    const auto w = is_isomorphic(g, h, 0.0);
    REQUIRE(w.has_value());
    check_witness(g, h, *w, 0.0);
  }
}

TEST_CASE("isomorphism accepts rotations and reflections and respects tolerance") {
  const LabelledReebGraph g = graph_from_labels({0.0, 10.0, 5.0, 6.0, 1.0, 2.0});

  SECTION("rotations") {
    for (std::size_t k = 1; k < g.size(); ++k) {
      const LabelledReebGraph h = rotate_copy(g, k, 100);
      const auto w = is_isomorphic(g, h, 0.0);
      REQUIRE(w.has_value());
      check_witness(g, h, *w, 0.0);
    }
  }

  SECTION("reflection") {
    const LabelledReebGraph h = reflect_copy(g, 100);
    const auto w = is_isomorphic(g, h, 0.0);
    REQUIRE(w.has_value());
    check_witness(g, h, *w, 0.0);
  }

  SECTION("label perturbation against the tolerance") {
    LabelledReebGraph h = graph_from_labels({0.0, 10.0, 5.0, 6.05, 1.0, 2.0});
    CHECK(is_isomorphic(g, h, 0.051).has_value());
    CHECK_FALSE(is_isomorphic(g, h, 0.049).has_value());
  }

  SECTION("same label multiset, different cyclic arrangement") {
    const LabelledReebGraph h = graph_from_labels({0.0, 6.0, 5.0, 10.0, 1.0, 2.0});
    CHECK_FALSE(is_isomorphic(g, h, 0.0).has_value());
    CHECK_FALSE(is_isomorphic(g, h, 1e-6).has_value());
  }

  SECTION("size mismatch") {
    const LabelledReebGraph h = graph_from_labels({0.0, 10.0});
    CHECK_FALSE(is_isomorphic(g, h, 100.0).has_value());
  }
}

TEST_CASE("isomorphism behaves as an equivalence relation") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pairs(1, 5);
  std::uniform_int_distribution<int> rot(0, 11);
  for (int trial = 0; trial < 200; ++trial) {
    const LabelledReebGraph g = random_graph(rng, pairs(rng));
    REQUIRE(is_isomorphic(g, g, 0.0).has_value());
    const LabelledReebGraph h = rotate_copy(g, rot(rng) % g.size(), 50);
    const LabelledReebGraph k = reflect_copy(h, 50);
    REQUIRE(is_isomorphic(g, h, 0.0).has_value());
    REQUIRE(is_isomorphic(h, g, 0.0).has_value());
    REQUIRE(is_isomorphic(h, k, 0.0).has_value());
    REQUIRE(is_isomorphic(g, k, 0.0).has_value());
  }
}

TEST_CASE("canonical form is idempotent and constant on isomorphism classes") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> pairs(1, 5);
  std::uniform_int_distribution<int> rot(0, 11);
  for (int trial = 0; trial < 200; ++trial) {
    const LabelledReebGraph g = random_graph(rng, pairs(rng));
    const LabelledReebGraph c = canonical_form(g);
    REQUIRE(is_isomorphic(g, c, 0.0).has_value());
    CHECK(c.cycle().front().index == CriticalIndex::kMin);
    CHECK(c.cycle().front().label == c.min_label());
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c.cycle()[i].id == static_cast<VertexId>(i));

    const LabelledReebGraph cc = canonical_form(c);
    REQUIRE(cc.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(cc.cycle()[i].id == c.cycle()[i].id);
      CHECK(cc.cycle()[i].label == c.cycle()[i].label);
      CHECK(cc.cycle()[i].index == c.cycle()[i].index);
    }

    const LabelledReebGraph r = canonical_form(rotate_copy(g, rot(rng) % g.size(), 10));
    const LabelledReebGraph m = canonical_form(reflect_copy(g, 10));
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(r.cycle()[i].label == c.cycle()[i].label);
      CHECK(m.cycle()[i].label == c.cycle()[i].label);
    }
  }
}

TEST_CASE("graph validation names the violated requirement") {
  const auto v = [](VertexId id, double label, CriticalIndex idx) {
    return ReebVertex{id, label, idx};
  };

  CHECK_THROWS_WITH(LabelledReebGraph({v(0, 1.0, CriticalIndex::kMax)}),
                    ContainsSubstring("vertex count must be even"));
  CHECK_THROWS_WITH(
      LabelledReebGraph({v(0, 0.0, CriticalIndex::kMin), v(1, 1.0, CriticalIndex::kMax),
                         v(2, 0.5, CriticalIndex::kMin), v(1, 2.0, CriticalIndex::kMax)}),
      ContainsSubstring("duplicate vertex id=1"));
  CHECK_THROWS_WITH(
      LabelledReebGraph({v(0, 0.0, CriticalIndex::kMin), v(1, 1.0, CriticalIndex::kMax),
                         v(2, 0.0, CriticalIndex::kMin), v(3, 2.0, CriticalIndex::kMax)}),
      ContainsSubstring("labels not injective"));
  CHECK_THROWS_WITH(
      LabelledReebGraph({v(0, 0.0, CriticalIndex::kMin), v(1, 0.5, CriticalIndex::kMin),
                         v(2, 1.0, CriticalIndex::kMax), v(3, 2.0, CriticalIndex::kMax)}),
      ContainsSubstring("index alternation violated"));
  CHECK_THROWS_WITH(
      LabelledReebGraph({v(0, 0.0, CriticalIndex::kMin), v(1, 0.6, CriticalIndex::kMax),
                         v(2, 0.2, CriticalIndex::kMin), v(3, 0.1, CriticalIndex::kMax)}),
      ContainsSubstring("local extremality violated at id=2"));
  CHECK_THROWS_AS(
      LabelledReebGraph({v(0, 0.0, CriticalIndex::kMin), v(1, 0.6, CriticalIndex::kMax),
                         v(2, 0.2, CriticalIndex::kMin), v(3, 0.1, CriticalIndex::kMax)}),
      InvalidGraph);
}

TEST_CASE("vertex queries") {
  const LabelledReebGraph g = graph_from_labels({0.0, 0.6, 0.2, 1.0});
  CHECK(g.position_of(2) == 2);
  CHECK(g.vertex(3).label == 1.0);
  CHECK(g.contains(1));
  CHECK_FALSE(g.contains(9));
  CHECK_THROWS_AS(g.position_of(9), UnknownVertexId);
  CHECK(g.adjacent(0, 1));
  CHECK(g.adjacent(3, 0));
  CHECK_FALSE(g.adjacent(0, 2));
  CHECK(g.fresh_id() == 4);
  CHECK(g.min_label() == 0.0);
  CHECK(g.max_label() == 1.0);

  const LabelledReebGraph two = graph_from_labels({0.0, 1.0});
  CHECK(two.adjacent(0, 1));
  CHECK_FALSE(two.adjacent(0, 0));
}

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "reebedit/circle_function.hpp"

using namespace reebedit;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

TrigPoly make_trig(double a0, std::vector<double> cos_c, std::vector<double> sin_c) {
  TrigPoly p;
  p.a0 = a0;
  p.cos_coeffs = std::move(cos_c);
  p.sin_coeffs = std::move(sin_c);
  return p;
}

CircleFunction sine() { return CircleFunction(make_trig(0.0, {0.0}, {1.0})); }

CircleFunction random_trig(std::mt19937_64& rng, int degree, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  TrigPoly p;
  p.a0 = u(rng);
  for (int k = 0; k < degree; ++k) {
    p.cos_coeffs.push_back(u(rng));
    p.sin_coeffs.push_back(u(rng));
  }
  return CircleFunction(std::move(p));
}

// Extremum oracle that never touches derivatives: dense value scan followed
// by ternary search on f itself. Used to cross-check critical_points.
std::vector<CriticalPoint> scan_extrema(const CircleFunction& f, int grid = 200000) {
  const double h = kTwoPi / grid;
  std::vector<double> v(grid);
  for (int i = 0; i < grid; ++i) v[i] = evaluate(f, i * h);
  std::vector<CriticalPoint> out;
  for (int i = 0; i < grid; ++i) {
    const double prev = v[(i + grid - 1) % grid], next = v[(i + 1) % grid];
    const bool is_max = v[i] > prev && v[i] > next;
    const bool is_min = v[i] < prev && v[i] < next;
    if (!is_max && !is_min) continue;
    double lo = (i - 1) * h, hi = (i + 1) * h;
    for (int it = 0; it < 100; ++it) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      const bool move_lo = is_max ? evaluate(f, m1) < evaluate(f, m2)
                                  : evaluate(f, m1) > evaluate(f, m2);
      if (move_lo) lo = m1; else hi = m2;
    }
    const double t = wrap_angle(0.5 * (lo + hi));
    out.push_back({t, evaluate(f, t), is_max ? CriticalIndex::kMax : CriticalIndex::kMin});
  }
  std::sort(out.begin(), out.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) { return a.position < b.position; });
  return out;
}

}  // namespace

TEST_CASE("evaluate matches closed forms") {
  CircleFunction f = sine();
  CHECK(evaluate(f, pi / 2, 0) == Approx(1.0).margin(1e-15));
  CHECK(evaluate(f, pi / 2, 1) == Approx(0.0).margin(1e-12));
  CHECK(evaluate(f, pi / 2, 2) == Approx(-1.0).margin(1e-12));

  // Higher harmonics exercise the recurrence.
  CircleFunction g(make_trig(0.25, {0.0, 0.5, 0.0, -0.125}, {1.0, 0.0, 0.3, 0.0}));
  for (double t : {0.0, 0.7, 2.1, 4.9, 6.2}) {
    const double direct = 0.25 + 0.5 * std::cos(2 * t) - 0.125 * std::cos(4 * t) +
                          std::sin(t) + 0.3 * std::sin(3 * t);
    CHECK(evaluate(g, t) == Approx(direct).margin(1e-13));
  }
}

TEST_CASE("evaluate is 2pi periodic") {
  std::mt19937_64 rng(11);
  CircleFunction f = random_trig(rng, 5, 1.0);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    const double t = u(rng);
    CHECK(evaluate(f, t) == Approx(evaluate(f, t + kTwoPi)).margin(1e-10));
  }
}

TEST_CASE("piecewise-linear evaluation interpolates and wraps") {
  PiecewiseLinear p;
  p.points = {{0.0, 0.0}, {pi, 1.0}};
  CircleFunction f(std::move(p));
  CHECK(evaluate(f, pi / 2) == Approx(0.5));
  CHECK(evaluate(f, pi) == Approx(1.0));
  // Wrap segment from (pi, 1) back to (2pi, 0).
  CHECK(evaluate(f, 1.5 * pi) == Approx(0.5));
  CHECK(evaluate(f, -0.5 * pi) == Approx(0.5));
  CHECK(evaluate(f, pi / 2, 1) == Approx(1.0 / pi));
  CHECK(evaluate(f, 1.5 * pi, 1) == Approx(-1.0 / pi));
}

TEST_CASE("derivatives rejected where undefined") {
  PiecewiseLinear p;
  p.points = {{0.0, 0.0}, {pi, 1.0}};
  CircleFunction f(std::move(p));
  CHECK_THROWS_AS(evaluate(f, pi, 1), UnsupportedDerivative);
  CHECK_THROWS_AS(evaluate(f, 0.5, 2), UnsupportedDerivative);
  CHECK_THROWS_AS(evaluate(sine(), 0.5, 3), UnsupportedDerivative);
  CHECK_THROWS_AS(cr_norm(f, 2), UnsupportedDerivative);
}

TEST_CASE("trig derivatives agree with finite differences") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  for (int rep = 0; rep < 5; ++rep) {
    CircleFunction f = random_trig(rng, 4, 1.0);
    for (int i = 0; i < 2000; ++i) {
      const double t = angle(rng);
      const double h1 = 1e-5;
      const double fd1 = (evaluate(f, t + h1) - evaluate(f, t - h1)) / (2 * h1);
      const double d1 = evaluate(f, t, 1);
      CHECK(std::abs(fd1 - d1) <= 1e-6 * std::max(1.0, std::abs(d1)));
      const double h2 = 1e-4;
      const double fd2 =
          (evaluate(f, t + h2) - 2 * evaluate(f, t) + evaluate(f, t - h2)) / (h2 * h2);
      const double d2 = evaluate(f, t, 2);
      CHECK(std::abs(fd2 - d2) <= 1e-5 * std::max(1.0, std::abs(d2)));
    }
  }
}

TEST_CASE("critical points of perturbed sines match the value-scan oracle") {
  // sin t + c sin 2t keeps two critical points for c=0.3 and gains an inner
  // pair once c exceeds 0.5.
  for (double c : {0.3, 0.7}) {
    CircleFunction f(make_trig(0.0, {0.0, 0.0}, {1.0, c}));
    const auto got = critical_points(f);
    const auto expected = scan_extrema(f);
    REQUIRE(got.size() == expected.size());
    CHECK(got.size() == (c > 0.5 ? 4 : 2));
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].position == Approx(expected[i].position).margin(1e-7));
      CHECK(got[i].value == Approx(expected[i].value).margin(1e-10));
      CHECK(got[i].index == expected[i].index);
    }
  }
}

TEST_CASE("critical points alternate and land on the sine extrema") {
  const auto pts = critical_points(sine());
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].position == Approx(pi / 2).margin(1e-9));
  CHECK(pts[0].value == Approx(1.0).margin(1e-12));
  CHECK(pts[0].index == CriticalIndex::kMax);
  CHECK(pts[1].position == Approx(1.5 * pi).margin(1e-9));
  CHECK(pts[1].value == Approx(-1.0).margin(1e-12));
  CHECK(pts[1].index == CriticalIndex::kMin);
}

TEST_CASE("piecewise-linear critical points are the extremal breakpoints") {
  PiecewiseLinear p;
  p.points = {{0.0, 0.0}, {pi / 2, 0.6}, {pi, 0.2}, {1.5 * pi, 1.0}};
  CircleFunction f(std::move(p));
  const auto pts = critical_points(f);
  REQUIRE(pts.size() == 4);
  CHECK(pts[0].value == Approx(0.0));
  CHECK(pts[0].index == CriticalIndex::kMin);
  CHECK(pts[1].value == Approx(0.6));
  CHECK(pts[1].index == CriticalIndex::kMax);
  CHECK(pts[2].value == Approx(0.2));
  CHECK(pts[3].value == Approx(1.0));

  // A breakpoint with the same slope sign on both sides is regular.
  PiecewiseLinear q;
  q.points = {{0.0, 0.0}, {pi / 2, 0.5}, {pi, 1.0}, {1.5 * pi, 0.3}};
  const auto qpts = critical_points(CircleFunction(std::move(q)));
  REQUIRE(qpts.size() == 2);
  CHECK(qpts[0].value == Approx(0.0));
  CHECK(qpts[1].value == Approx(1.0));
}

TEST_CASE("genericity report distinguishes morse from simple morse") {
  SECTION("plain sine is simple") {
    const auto rep = genericity_report(sine());
    CHECK(rep.is_morse);
    CHECK(rep.is_simple);
    CHECK(rep.min_value_gap == Approx(2.0).margin(1e-9));
    CHECK(rep.violations.empty());
  }
  SECTION("cos 2t repeats critical values") {
    CircleFunction f(make_trig(0.0, {0.0, 1.0}, {0.0, 0.0}));
    const auto rep = genericity_report(f);
    CHECK(rep.is_morse);
    CHECK_FALSE(rep.is_simple);
    CHECK_THROWS_AS(critical_points(f), NotSimpleMorse);
  }
  SECTION("sin t + (1/9) sin 3t has degenerate critical points") {
    CircleFunction f(make_trig(0.0, {0.0, 0.0, 0.0}, {1.0, 0.0, 1.0 / 9.0}));
    const auto rep = genericity_report(f);
    CHECK_FALSE(rep.is_morse);
    CHECK_FALSE(rep.is_simple);
    CHECK_THROWS_AS(critical_points(f), NotSimpleMorse);
  }
  SECTION("constant function is flagged") {
    const auto rep = genericity_report(CircleFunction(make_trig(0.5, {0.0}, {0.0})));
    CHECK_FALSE(rep.is_morse);
    REQUIRE_FALSE(rep.violations.empty());
  }
  SECTION("zero-slope PL segment is flagged") {
    PiecewiseLinear p;
    p.points = {{0.0, 0.0}, {pi / 2, 0.4}, {pi, 0.4}, {1.5 * pi, 1.0}};
    const auto rep = genericity_report(CircleFunction(std::move(p)));
    CHECK_FALSE(rep.is_morse);
  }
}

TEST_CASE("cr_norm closed forms and properties") {
  CHECK(cr_norm(sine(), 0) == Approx(1.0).margin(1e-9));
  CHECK(cr_norm(sine(), 1) == Approx(1.0).margin(1e-9));
  CHECK(cr_norm(sine(), 2) == Approx(1.0).margin(1e-9));

  // 0.7 sin 2t: sups of the derivatives are 0.7, 1.4, 2.8.
  CircleFunction g(make_trig(0.0, {0.0, 0.0}, {0.0, 0.7}));
  CHECK(cr_norm(g, 0) == Approx(0.7).margin(1e-9));
  CHECK(cr_norm(g, 1) == Approx(1.4).margin(1e-9));
  CHECK(cr_norm(g, 2) == Approx(2.8).margin(1e-9));

  PiecewiseLinear p;
  p.points = {{0.0, -0.25}, {pi, 0.75}};
  CircleFunction h(std::move(p));
  CHECK(cr_norm(h, 0) == Approx(0.75));
  CHECK(sup_derivative(h, 1) == Approx(1.0 / pi));
  CHECK(cr_norm(h, 1) == Approx(0.75));  // the C0 part dominates the slope 1/pi

  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    CircleFunction f = random_trig(rng, 4, 1.0);
    const double c0 = cr_norm(f, 0), c1 = cr_norm(f, 1), c2 = cr_norm(f, 2);
    CHECK(c0 <= c1 + 1e-12);
    CHECK(c1 <= c2 + 1e-12);
    // Homogeneity under scaling.
    CircleFunction s = combine(f, f, -2.5, 0.0);
    CHECK(cr_norm(s, 2) == Approx(2.5 * c2).epsilon(1e-9));
  }
}

TEST_CASE("linear combinations") {
  std::mt19937_64 rng(14);
  CircleFunction f = random_trig(rng, 3, 1.0);
  CircleFunction g = random_trig(rng, 5, 1.0);
  CircleFunction mid = linear_combination(f, g, 0.25);
  for (double t : {0.1, 1.9, 3.3, 5.6}) {
    CHECK(evaluate(mid, t) ==
          Approx(0.75 * evaluate(f, t) + 0.25 * evaluate(g, t)).margin(1e-12));
  }
  CHECK(evaluate(linear_combination(f, g, 0.0), 2.0) == Approx(evaluate(f, 2.0)).margin(1e-12));
  CHECK(evaluate(linear_combination(f, g, 1.0), 2.0) == Approx(evaluate(g, 2.0)).margin(1e-12));

  PiecewiseLinear a, b;
  a.points = {{0.0, 0.0}, {pi, 1.0}};
  b.points = {{pi / 2, 2.0}, {1.5 * pi, 0.0}};
  CircleFunction fa(std::move(a)), fb(std::move(b));
  CircleFunction m = linear_combination(fa, fb, 0.5);
  REQUIRE(m.pl().points.size() == 4);  // union of breakpoint positions
  for (double t : {0.3, 2.0, 4.0, 6.0}) {
    CHECK(evaluate(m, t) == Approx(0.5 * evaluate(fa, t) + 0.5 * evaluate(fb, t)).margin(1e-12));
  }

  CHECK_THROWS_AS(linear_combination(f, fa, 0.5), MixedRepresentation);

  const CircleFunction d = difference(f, g);
  for (double t : {0.4, 2.2, 5.0}) {
    CHECK(evaluate(d, t) == Approx(evaluate(f, t) - evaluate(g, t)).margin(1e-12));
  }
}

TEST_CASE("construction validates representations") {
  PiecewiseLinear p;
  p.points = {{0.0, 0.0}};
  CHECK_THROWS_AS(CircleFunction(std::move(p)), PreconditionViolated);
  PiecewiseLinear q;
  q.points = {{1.0, 0.0}, {0.5, 1.0}};
  CHECK_THROWS_AS(CircleFunction(std::move(q)), PreconditionViolated);
  PiecewiseLinear r;
  r.points = {{0.0, 0.0}, {kTwoPi, 1.0}};
  CHECK_THROWS_AS(CircleFunction(std::move(r)), PreconditionViolated);
}

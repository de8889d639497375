#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "reebedit/errors.hpp"

namespace reebedit {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Numerical knobs shared by the function-analysis routines.
/// The defaults are tuned for trig polynomials of degree <= 16; functions
/// with more than root_grid/8 oscillations may lose critical points to the
/// bracketing grid, which the genericity checks then report as broken
/// alternation.
struct NumericsConfig {
  int root_grid = 4096;          // uniform samples used to bracket roots of f'
  double tol_root = 1e-12;       // bisection interval width target
  double tol_value = 1e-9;       // critical values closer than this count as equal
  double tol_degenerate = 1e-8;  // |f''| at a root of f' below this is degenerate
};

inline double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  // fmod can return exactly kTwoPi after the correction when theta is a
  // tiny negative number.
  if (t >= kTwoPi) t -= kTwoPi;
  return t;
}

/// f(theta) = a0 + sum_k cos_coeffs[k-1] cos(k theta) + sin_coeffs[k-1] sin(k theta).
/// Both coefficient lists always have the same length >= 1.
struct TrigPoly {
  double a0 = 0.0;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;
};

struct PlBreakpoint {
  double position = 0.0;  // angle in [0, 2pi)
  double value = 0.0;
};

/// Piecewise-linear function on the circle: linear between consecutive
/// breakpoints, wrapping from the last breakpoint back to the first.
struct PiecewiseLinear {
  std::vector<PlBreakpoint> points;
};

enum class FunctionKind { kTrig, kPiecewiseLinear };

/// Value type for a real function on the circle, either a trigonometric
/// polynomial or a piecewise-linear interpolant. Construction validates
/// the representation invariants.
class CircleFunction {
 public:
  CircleFunction(TrigPoly p) : repr_(normalize(std::move(p))) {}

  CircleFunction(PiecewiseLinear p) : repr_(std::move(p)) {
    const auto& pts = std::get<PiecewiseLinear>(repr_).points;
    if (pts.size() < 2)
      throw PreconditionViolated("piecewise-linear function needs at least 2 breakpoints");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!std::isfinite(pts[i].position) || !std::isfinite(pts[i].value))
        throw PreconditionViolated("piecewise-linear breakpoint is not finite");
      if (pts[i].position < 0.0 || pts[i].position >= kTwoPi)
        throw PreconditionViolated("breakpoint positions must lie in [0, 2pi)");
      if (i > 0 && !(pts[i - 1].position < pts[i].position))
        throw PreconditionViolated("breakpoint positions must be strictly increasing");
    }
  }

  FunctionKind kind() const {
    return std::holds_alternative<TrigPoly>(repr_) ? FunctionKind::kTrig
                                                   : FunctionKind::kPiecewiseLinear;
  }
  bool is_trig() const { return kind() == FunctionKind::kTrig; }

  const TrigPoly& trig() const { return std::get<TrigPoly>(repr_); }
  const PiecewiseLinear& pl() const { return std::get<PiecewiseLinear>(repr_); }

 private:
  static TrigPoly normalize(TrigPoly p) {
    if (!std::isfinite(p.a0))
      throw PreconditionViolated("trig coefficient is not finite");
    for (double c : p.cos_coeffs)
      if (!std::isfinite(c)) throw PreconditionViolated("trig coefficient is not finite");
    for (double c : p.sin_coeffs)
      if (!std::isfinite(c)) throw PreconditionViolated("trig coefficient is not finite");
    std::size_t n = std::max<std::size_t>({1, p.cos_coeffs.size(), p.sin_coeffs.size()});
    p.cos_coeffs.resize(n, 0.0);
    p.sin_coeffs.resize(n, 0.0);
    return p;
  }

  std::variant<TrigPoly, PiecewiseLinear> repr_;
};

namespace detail {

// Evaluates a trig polynomial or one of its first two derivatives using the
// cos/sin recurrence (no per-harmonic libm calls).
inline double eval_trig(const TrigPoly& p, double theta, int order) {
  const std::size_t n = p.cos_coeffs.size();
  double c1 = std::cos(theta), s1 = std::sin(theta);
  double ck = c1, sk = s1;     // cos(k theta), sin(k theta), k starting at 1
  double ckm1 = 1.0, skm1 = 0.0;
  double acc = order == 0 ? p.a0 : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double k = static_cast<double>(i + 1);
    const double a = p.cos_coeffs[i], b = p.sin_coeffs[i];
    switch (order) {
      case 0: acc += a * ck + b * sk; break;
      case 1: acc += k * (-a * sk + b * ck); break;
      case 2: acc += k * k * (-a * ck - b * sk); break;
    }
    const double cnext = 2.0 * c1 * ck - ckm1;
    const double snext = 2.0 * c1 * sk - skm1;
    ckm1 = ck; skm1 = sk; ck = cnext; sk = snext;
  }
  return acc;
}

// Index of the PL segment containing the wrapped angle t: segment i runs from
// points[i] to points[i+1], the last one wraps to points[0] + 2pi.
inline std::size_t pl_segment(const PiecewiseLinear& p, double t) {
  const auto& pts = p.points;
  if (t < pts.front().position) return pts.size() - 1;  // wrap segment before first point
  std::size_t lo = 0, hi = pts.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi + 1) / 2;
    if (pts[mid].position <= t) lo = mid; else hi = mid - 1;
  }
  return lo;
}

inline double pl_slope(const PiecewiseLinear& p, std::size_t seg) {
  const auto& pts = p.points;
  const std::size_t j = (seg + 1) % pts.size();
  double dx = pts[j].position - pts[seg].position;
  if (j == 0) dx += kTwoPi;
  return (pts[j].value - pts[seg].value) / dx;
}

inline double eval_pl(const PiecewiseLinear& p, double theta, int order) {
  const double t = wrap_angle(theta);
  const auto& pts = p.points;
  if (order >= 1) {
    for (const auto& bp : pts)
      if (std::abs(t - bp.position) < 1e-12 || std::abs(t - bp.position - kTwoPi) < 1e-12)
        throw UnsupportedDerivative("derivative of order >= 1 requested at a PL breakpoint");
  }
  const std::size_t seg = pl_segment(p, t);
  if (order == 1) return pl_slope(p, seg);
  double dx = t - pts[seg].position;
  if (dx < 0.0) dx += kTwoPi;  // wrap segment
  return pts[seg].value + pl_slope(p, seg) * dx;
}

}  // namespace detail

/// Evaluates f (order 0) or its derivative of the given order at theta.
/// Trig polynomials support orders 0..2. Piecewise-linear functions support
/// order 0 everywhere and order 1 away from breakpoints.
inline double evaluate(const CircleFunction& f, double theta, int order = 0) {
  if (order < 0 || order > 2)
    throw UnsupportedDerivative("derivative order must be 0, 1 or 2");
  if (f.is_trig()) return detail::eval_trig(f.trig(), theta, order);
  if (order == 2)
    throw UnsupportedDerivative("second derivative undefined for piecewise-linear functions");
  return detail::eval_pl(f.pl(), theta, order);
}

enum class CriticalIndex { kMin = 0, kMax = 1 };

inline const char* to_string(CriticalIndex ix) {
  return ix == CriticalIndex::kMin ? "min" : "max";
}

struct CriticalPoint {
  double position = 0.0;  // angle in [0, 2pi)
  double value = 0.0;
  CriticalIndex index = CriticalIndex::kMin;
};

/// Outcome of the genericity checks: is the function Morse (all critical
/// points nondegenerate) and simple (additionally all critical values
/// distinct)?
struct GenericityReport {
  bool is_morse = false;
  bool is_simple = false;
  double min_value_gap = 0.0;  // smallest gap between distinct critical values
  std::vector<std::string> violations;
};

namespace detail {

// Roots of fn on [0, 2pi) located by uniform sign-change bracketing plus
// bisection. Samples that are exactly zero count as roots directly.
template <typename Fn>
std::vector<double> bracket_roots(const Fn& fn, int grid, double tol) {
  std::vector<double> roots;
  const double h = kTwoPi / grid;
  double prev = fn(0.0);
  double prev_t = 0.0;
  for (int i = 1; i <= grid; ++i) {
    const double t = i == grid ? kTwoPi : i * h;
    const double cur = fn(t);
    if (prev == 0.0) {
      if (prev_t < kTwoPi) roots.push_back(prev_t);
    } else if (cur != 0.0 && std::signbit(prev) != std::signbit(cur)) {
      double a = prev_t, b = t, fa = prev;
      for (int it = 0; it < 200 && (b - a) > tol; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = fn(mid);
        if (fm == 0.0) { a = b = mid; break; }
        if (std::signbit(fm) == std::signbit(fa)) { a = mid; fa = fm; } else { b = mid; }
      }
      roots.push_back(wrap_angle(0.5 * (a + b)));
    }
    prev = cur;
    prev_t = t;
  }
  std::sort(roots.begin(), roots.end());
  // Merge near-duplicates, including across the 0/2pi seam.
  std::vector<double> out;
  for (double r : roots) {
    if (!out.empty() && r - out.back() < 64.0 * tol) continue;
    out.push_back(r);
  }
  if (out.size() > 1 && (out.front() + kTwoPi - out.back()) < 64.0 * tol) out.pop_back();
  return out;
}

struct Analysis {
  GenericityReport report;
  std::vector<CriticalPoint> points;  // extrema in increasing position order
};

inline double min_gap_of_values(std::vector<double> values) {
  if (values.size() < 2) return 0.0;
  std::sort(values.begin(), values.end());
  double gap = values[1] - values[0];
  for (std::size_t i = 2; i < values.size(); ++i)
    gap = std::min(gap, values[i] - values[i - 1]);
  return gap;
}

inline Analysis analyze_trig(const TrigPoly& p, const NumericsConfig& cfg) {
  Analysis an;
  auto& rep = an.report;

  double deriv_scale = 0.0;
  for (std::size_t i = 0; i < p.cos_coeffs.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    deriv_scale += k * (std::abs(p.cos_coeffs[i]) + std::abs(p.sin_coeffs[i]));
  }
  if (deriv_scale == 0.0) {
    rep.violations.push_back("constant function has no nondegenerate critical points");
    return an;
  }

  auto d1 = [&](double t) { return eval_trig(p, t, 1); };
  auto d2 = [&](double t) { return eval_trig(p, t, 2); };

  const std::vector<double> roots = bracket_roots(d1, cfg.root_grid, cfg.tol_root);
  bool morse = true;
  for (double r : roots) {
    const double curv = d2(r);
    if (std::abs(curv) <= cfg.tol_degenerate) {
      morse = false;
      rep.violations.push_back("degenerate critical point at theta=" + std::to_string(r));
      continue;
    }
    an.points.push_back({r, eval_trig(p, r, 0),
                         curv > 0.0 ? CriticalIndex::kMin : CriticalIndex::kMax});
  }

  // Roots of f' with even multiplicity produce no sign change; catch them by
  // checking |f'| at the roots of f''.
  for (double r : bracket_roots(d2, cfg.root_grid, cfg.tol_root)) {
    if (std::abs(d1(r)) > cfg.tol_degenerate) continue;
    bool known = false;
    for (double q : roots)
      if (std::abs(q - r) < 1e-6 || kTwoPi - std::abs(q - r) < 1e-6) known = true;
    if (!known) {
      morse = false;
      rep.violations.push_back("degenerate critical point at theta=" + std::to_string(r));
    }
  }

  if (an.points.empty() && morse) {
    morse = false;
    rep.violations.push_back("no critical points located");
  }
  for (std::size_t i = 0; morse && i < an.points.size(); ++i) {
    const auto& a = an.points[i];
    const auto& b = an.points[(i + 1) % an.points.size()];
    if (a.index == b.index) {
      morse = false;
      rep.violations.push_back(
          "critical points do not alternate between minima and maxima "
          "(grid resolution may be too low for this function)");
    }
  }
  rep.is_morse = morse;

  std::vector<double> values;
  for (const auto& cp : an.points) values.push_back(cp.value);
  rep.min_value_gap = min_gap_of_values(values);
  bool distinct = an.points.size() < 2 || rep.min_value_gap > cfg.tol_value;
  if (!distinct) rep.violations.push_back("repeated critical value");
  rep.is_simple = rep.is_morse && distinct && !an.points.empty();
  return an;
}

inline Analysis analyze_pl(const PiecewiseLinear& p, const NumericsConfig& cfg) {
  Analysis an;
  auto& rep = an.report;
  const auto& pts = p.points;
  const std::size_t n = pts.size();

  bool morse = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (pl_slope(p, i) == 0.0) {
      morse = false;
      rep.violations.push_back("zero-slope segment starting at position=" +
                               std::to_string(pts[i].position));
    }
  }
  if (morse) {
    for (std::size_t i = 0; i < n; ++i) {
      const double before = pl_slope(p, (i + n - 1) % n);
      const double after = pl_slope(p, i);
      if (before < 0.0 && after > 0.0)
        an.points.push_back({pts[i].position, pts[i].value, CriticalIndex::kMin});
      else if (before > 0.0 && after < 0.0)
        an.points.push_back({pts[i].position, pts[i].value, CriticalIndex::kMax});
      // Same sign on both sides: a regular breakpoint, not a critical point.
    }
  }
  if (morse && an.points.empty()) {
    morse = false;
    rep.violations.push_back("no critical points located");
  }
  rep.is_morse = morse;

  std::vector<double> values;
  for (const auto& cp : an.points) values.push_back(cp.value);
  rep.min_value_gap = min_gap_of_values(values);
  bool distinct = an.points.size() < 2 || rep.min_value_gap > cfg.tol_value;
  if (!distinct) rep.violations.push_back("repeated critical value");
  rep.is_simple = rep.is_morse && distinct && !an.points.empty();
  return an;
}

inline Analysis analyze(const CircleFunction& f, const NumericsConfig& cfg) {
  return f.is_trig() ? analyze_trig(f.trig(), cfg) : analyze_pl(f.pl(), cfg);
}

}  // namespace detail

/// Reports whether f is Morse / simple Morse together with the offending
/// configurations. Never throws on non-generic input; that is the point.
inline GenericityReport genericity_report(const CircleFunction& f,
                                          const NumericsConfig& cfg = {}) {
  return detail::analyze(f, cfg).report;
}

/// Critical points of a simple Morse function in increasing position order.
/// Throws NotSimpleMorse (with the genericity violations in the message)
/// when f fails the checks.
inline std::vector<CriticalPoint> critical_points(const CircleFunction& f,
                                                  const NumericsConfig& cfg = {}) {
  detail::Analysis an = detail::analyze(f, cfg);
  if (!an.report.is_simple) {
    std::string msg = "function is not simple Morse:";
    for (const auto& v : an.report.violations) msg += " " + v + ";";
    throw NotSimpleMorse(msg);
  }
  return an.points;
}

/// Sup norm of the r-th derivative, maximized over a dense grid with local
/// ternary-search refinement. For piecewise-linear functions the suprema are
/// exact (breakpoint values / segment slopes).
inline double sup_derivative(const CircleFunction& f, int r,
                             const NumericsConfig& cfg = {}) {
  if (!f.is_trig()) {
    if (r == 0) {
      double m = 0.0;
      for (const auto& bp : f.pl().points) m = std::max(m, std::abs(bp.value));
      return m;
    }
    if (r == 1) {
      double m = 0.0;
      for (std::size_t i = 0; i < f.pl().points.size(); ++i)
        m = std::max(m, std::abs(detail::pl_slope(f.pl(), i)));
      return m;
    }
    throw UnsupportedDerivative("order 2 norm undefined for piecewise-linear functions");
  }

  const int grid = std::max(cfg.root_grid, 4096);
  auto g = [&](double t) { return std::abs(detail::eval_trig(f.trig(), t, r)); };
  const double h = kTwoPi / grid;
  std::vector<double> samples(grid);
  for (int i = 0; i < grid; ++i) samples[i] = g(i * h);
  double best = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double prev = samples[(i + grid - 1) % grid];
    const double next = samples[(i + 1) % grid];
    best = std::max(best, samples[i]);
    if (samples[i] >= prev && samples[i] >= next) {
      double lo = (i - 1) * h, hi = (i + 1) * h;
      for (int it = 0; it < 80; ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (g(m1) < g(m2)) lo = m1; else hi = m2;
      }
      best = std::max(best, g(0.5 * (lo + hi)));
    }
  }
  return best;
}

/// C^r norm: max over k <= r of sup |f^(k)|.
/// r is limited to 2 for trig polynomials and 1 for piecewise-linear ones.
inline double cr_norm(const CircleFunction& f, int r, const NumericsConfig& cfg = {}) {
  if (r < 0 || r > 2) throw UnsupportedDerivative("cr_norm supports r in {0, 1, 2}");
  double m = 0.0;
  for (int k = 0; k <= r; ++k) m = std::max(m, sup_derivative(f, k, cfg));
  return m;
}

/// alpha*f + beta*g for functions of the same representation.
/// Piecewise-linear inputs are resampled to the union of their breakpoint
/// positions first.
inline CircleFunction combine(const CircleFunction& f, const CircleFunction& g,
                              double alpha, double beta) {
  if (f.kind() != g.kind())
    throw MixedRepresentation("cannot combine a trig polynomial with a piecewise-linear function");
  if (f.is_trig()) {
    const auto& a = f.trig();
    const auto& b = g.trig();
    TrigPoly out;
    out.a0 = alpha * a.a0 + beta * b.a0;
    const std::size_t n = std::max(a.cos_coeffs.size(), b.cos_coeffs.size());
    out.cos_coeffs.assign(n, 0.0);
    out.sin_coeffs.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (i < a.cos_coeffs.size()) {
        out.cos_coeffs[i] += alpha * a.cos_coeffs[i];
        out.sin_coeffs[i] += alpha * a.sin_coeffs[i];
      }
      if (i < b.cos_coeffs.size()) {
        out.cos_coeffs[i] += beta * b.cos_coeffs[i];
        out.sin_coeffs[i] += beta * b.sin_coeffs[i];
      }
    }
    return CircleFunction(std::move(out));
  }
  std::vector<double> positions;
  for (const auto& bp : f.pl().points) positions.push_back(bp.position);
  for (const auto& bp : g.pl().points) positions.push_back(bp.position);
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end(),
                              [](double x, double y) { return std::abs(x - y) < 1e-12; }),
                  positions.end());
  PiecewiseLinear out;
  for (double t : positions)
    out.points.push_back({t, alpha * detail::eval_pl(f.pl(), t, 0) +
                                 beta * detail::eval_pl(g.pl(), t, 0)});
  return CircleFunction(std::move(out));
}

/// (1 - lambda) * f + lambda * g; the straight-line homotopy between f and g.
inline CircleFunction linear_combination(const CircleFunction& f, const CircleFunction& g,
                                         double lambda) {
  return combine(f, g, 1.0 - lambda, lambda);
}

inline CircleFunction difference(const CircleFunction& f, const CircleFunction& g) {
  return combine(f, g, 1.0, -1.0);
}

}  // namespace reebedit

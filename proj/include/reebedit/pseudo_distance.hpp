#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "reebedit/circle_function.hpp"
#include "reebedit/errors.hpp"

namespace reebedit {

/// Monotone cyclic correspondence between the parameter circles of two
/// functions, with the supremum of |f - g∘τ| it achieves. Correspondence
/// angles are stored as monotone lifts: the first coordinate increases by
/// 2π over the list, the second changes by ±2π according to orientation.
/// Evaluation wraps angles back onto the circle.
struct Alignment {
  std::vector<std::pair<double, double>> correspondence;
  double cost = 0.0;
  int orientation = 1;
  int resolution_used = 0;
};

namespace detail {

inline std::pair<double, double> global_extrema(const CircleFunction& f) {
  if (f.kind() == FunctionKind::kPiecewiseLinear) {
    double lo = f.pl().points.front().value, hi = lo;
    for (const auto& p : f.pl().points) {
      lo = std::min(lo, p.value);
      hi = std::max(hi, p.value);
    }
    return {lo, hi};
  }
  const int grid = 8192;
  const double step = kTwoPi / grid;
  int arg_lo = 0, arg_hi = 0;
  double lo = evaluate(f, 0.0), hi = lo;
  for (int i = 1; i < grid; ++i) {
    const double v = evaluate(f, i * step);
    if (v < lo) {
      lo = v;
      arg_lo = i;
    }
    if (v > hi) {
      hi = v;
      arg_hi = i;
    }
  }
  const auto refine = [&](int cell, bool want_max) {
    double a = (cell - 1) * step, b = (cell + 1) * step;
    for (int it = 0; it < 200; ++it) {
      const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
      const double f1 = evaluate(f, m1), f2 = evaluate(f, m2);
      if ((f1 < f2) == want_max)
        a = m1;
      else
        b = m2;
    }
    return evaluate(f, 0.5 * (a + b));
  };
  return {std::min(lo, refine(arg_lo, false)), std::max(hi, refine(arg_hi, true))};
}

}  // namespace detail

/// max(|max f - max g|, |min f - min g|). Never exceeds inf over
/// reparameterizations of ‖f - g∘τ‖_C0, since any τ preserves the global
/// extreme values. The same quantity is also a valid lower bound for the
/// graph editing distance: every deformation moves extreme labels by at most
/// its cost.
inline double pseudo_lower(const CircleFunction& f, const CircleFunction& g) {
  const auto [flo, fhi] = detail::global_extrema(f);
  const auto [glo, ghi] = detail::global_extrema(g);
  return std::max(std::abs(fhi - ghi), std::abs(flo - glo));
}

namespace detail {

using LatticePath = std::vector<std::pair<int, int>>;

// Minimizes, over cyclic monotone lattice paths with winding (1,1), the
// maximum of |F[i] - G[j mod n]| along the path. Moves advance i, j, or both
// by one. Solved exactly by bisecting on the bottleneck value: feasibility of
// a threshold is decided by a reachability sweep, then the value is snapped
// to the smallest cell cost that is still feasible.
class CyclicBottleneck {
 public:
  CyclicBottleneck(std::vector<double> f_samples, std::vector<double> g_samples)
      : n_(static_cast<int>(f_samples.size())), F_(std::move(f_samples)) {
    G2_.resize(2 * n_ + 1);
    for (int j = 0; j <= 2 * n_; ++j) G2_[j] = g_samples[j % n_];
  }

  struct Result {
    double value = std::numeric_limits<double>::infinity();
    LatticePath path;  // nodes (i, j) from (0, s) to (n, s + n), j unwrapped
  };

  Result solve() const {
    // Every path meets every column, so the max over columns of the column
    // minimum bounds the value from below; the seed-0 diagonal path bounds it
    // from above.
    double lo = 0.0, hi = 0.0;
    for (int i = 0; i <= n_; ++i) {
      hi = std::max(hi, w(i, i));
      double m = std::numeric_limits<double>::infinity();
      for (int j = 0; j <= 2 * n_; ++j) m = std::min(m, w(i, j));
      lo = std::max(lo, m);
    }

    bool lo_infeasible = false;  // has lo itself been refuted?
    const double tol = std::max(1e-15, 1e-13 * std::max(1.0, hi));
    while (hi - lo > tol) {
      const double mid = lo + 0.5 * (hi - lo);
      if (mid <= lo || mid >= hi) break;
      if (feasible(mid)) {
        hi = mid;
      } else {
        lo = mid;
        lo_infeasible = true;
      }
    }

    // The optimum is a cell cost; walk candidate costs in (lo, hi] upward
    // until one passes. Termination: hi is known feasible.
    double value = hi;
    while (true) {
      double v = std::numeric_limits<double>::infinity();
      for (int i = 0; i <= n_; ++i)
        for (int j = 0; j <= 2 * n_; ++j) {
          const double c = w(i, j);
          if ((c > lo || (c == lo && !lo_infeasible)) && c < v) v = c;
        }
      if (!(v < value)) break;
      if (feasible(v)) {
        value = v;
        break;
      }
      lo = v;
      lo_infeasible = true;
    }

    // Rerun the certifying sweep with per-column tables kept for the walk
    // back along the witness path.
    for (int a = 0; a < n_;) {
      if (w(0, a) > value) {
        ++a;
        continue;
      }
      int b = a;
      while (b + 1 < n_ && w(0, b + 1) <= value) ++b;
      std::vector<std::vector<std::int16_t>> tab;
      if (const auto seed = run_dp(value, a, b, &tab)) return {value, backwalk(tab, *seed)};
      a = b + 1;
    }
    return {value, {}};  // unreachable: value is feasible by construction
  }

 private:
  double w(int i, int j) const { return std::abs(F_[i % n_] - G2_[j]); }

  // A threshold is feasible when some start row s admits a monotone path
  // (0, s) -> (n, s + n) through cells of cost <= lam. Starts are grouped
  // into maximal admissible runs of column 0; within a run, lower starts
  // reach everything higher starts reach (prepend a climb), so one sweep per
  // run answers all of its starts.
  bool feasible(double lam) const {
    for (int a = 0; a < n_;) {
      if (w(0, a) > lam) {
        ++a;
        continue;
      }
      int b = a;
      while (b + 1 < n_ && w(0, b + 1) <= lam) ++b;
      if (run_dp(lam, a, b, nullptr)) return true;
      a = b + 1;
    }
    return false;
  }

  // sig[j] after column i = the largest start s in [a, b] with a monotone
  // path (0, s) -> (i, j), or -1. Start sets reaching a fixed cell are
  // prefixes [a, sig] of the run, so the maximum carries full information.
  // Ascending j folds the in-column climb into the same pass.
  std::optional<int> run_dp(double lam, int a, int b,
                            std::vector<std::vector<std::int16_t>>* store) const {
    const int jlo = a, jhi = b + n_;  // rows reachable from starts in [a, b]
    std::vector<std::int16_t> cur(2 * n_ + 1, -1), nxt(2 * n_ + 1, -1);
    if (store) store->assign(n_ + 1, {});

    {
      const double f0 = F_[0];
      int below = -1;
      for (int j = jlo; j <= jhi; ++j) {
        int v = -1;
        if (std::abs(f0 - G2_[j]) <= lam) {
          if (j <= b) v = j;
          if (below > v) v = below;
          below = v;
        } else {
          below = -1;
        }
        cur[j] = static_cast<std::int16_t>(v);
      }
      if (store) (*store)[0] = cur;
    }

    for (int i = 1; i <= n_; ++i) {
      const double fi = F_[i % n_];
      bool alive = false;
      int below = -1;
      for (int j = jlo; j <= jhi; ++j) {
        int v = -1;
        if (std::abs(fi - G2_[j]) <= lam) {
          v = cur[j];
          if (j > jlo && cur[j - 1] > v) v = cur[j - 1];
          if (below > v) v = below;
          below = v;
          alive |= v >= 0;
        } else {
          below = -1;
        }
        nxt[j] = static_cast<std::int16_t>(v);
      }
      if (!alive) return std::nullopt;
      if (store) (*store)[i] = nxt;
      cur.swap(nxt);
    }

    for (int s = a; s <= b; ++s)
      if (cur[s + n_] >= s) return s;
    return std::nullopt;
  }

  // Retraces one witness path from (n, s + n) back to (0, s). Each visited
  // cell keeps tab >= s; a cell with no admissible predecessor in the prior
  // column was reached by an in-column climb, so the cell below qualifies.
  LatticePath backwalk(const std::vector<std::vector<std::int16_t>>& tab, int s) const {
    LatticePath rev;
    int i = n_, j = s + n_;
    rev.emplace_back(i, j);
    while (i > 0 || j > s) {
      if (i > 0 && tab[i - 1][j] >= s) {
        --i;
      } else if (i > 0 && j > 0 && tab[i - 1][j - 1] >= s) {
        --i;
        --j;
      } else {
        --j;
      }
      rev.emplace_back(i, j);
    }
    std::reverse(rev.begin(), rev.end());
    return rev;
  }

  int n_;
  std::vector<double> F_;
  std::vector<double> G2_;
};

// Deterministic total order on function representations, used to pick a
// canonical argument order so that estimates are exactly symmetric.
inline bool order_before(const CircleFunction& x, const CircleFunction& y) {
  const int kx = static_cast<int>(x.kind()), ky = static_cast<int>(y.kind());
  if (kx != ky) return kx < ky;
  if (x.kind() == FunctionKind::kPiecewiseLinear) {
    const auto& px = x.pl().points;
    const auto& py = y.pl().points;
    if (px.size() != py.size()) return px.size() < py.size();
    for (std::size_t k = 0; k < px.size(); ++k) {
      if (px[k].position != py[k].position) return px[k].position < py[k].position;
      if (px[k].value != py[k].value) return px[k].value < py[k].value;
    }
    return false;
  }
  const auto& tx = x.trig();
  const auto& ty = y.trig();
  if (tx.a0 != ty.a0) return tx.a0 < ty.a0;
  if (tx.cos_coeffs != ty.cos_coeffs) return tx.cos_coeffs < ty.cos_coeffs;
  return tx.sin_coeffs < ty.sin_coeffs;
}

// Upper bound on the slope of a function along the circle.
inline double lipschitz_bound(const CircleFunction& f) {
  if (f.kind() == FunctionKind::kPiecewiseLinear) {
    const auto& pts = f.pl().points;
    double lip = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const auto& a = pts[k];
      const auto& b = pts[(k + 1) % pts.size()];
      const double span = (k + 1 < pts.size() ? b.position : b.position + kTwoPi) - a.position;
      if (span > 0.0) lip = std::max(lip, std::abs(b.value - a.value) / span);
    }
    return lip;
  }
  const auto& t = f.trig();
  double lip = 0.0;
  for (std::size_t k = 0; k < t.cos_coeffs.size() || k < t.sin_coeffs.size(); ++k) {
    const double c = k < t.cos_coeffs.size() ? t.cos_coeffs[k] : 0.0;
    const double s = k < t.sin_coeffs.size() ? t.sin_coeffs[k] : 0.0;
    lip += static_cast<double>(k + 1) * std::hypot(c, s);
  }
  return lip;
}

// Certified upper bound for sup |f(θ(t)) - g(φ(t))| over one straight
// correspondence segment. Exact for a pair of piecewise-linear functions
// (the error is piecewise linear in t; its kinks are enumerated); otherwise
// a dense scan padded by the Lipschitz modulus between samples, so the
// result never dips below the true supremum.
inline double segment_sup(const CircleFunction& f, const CircleFunction& g, double ta, double tb,
                          double pa, double pb, double lip_f, double lip_g) {
  double m = std::max(std::abs(evaluate(f, wrap_angle(ta)) - evaluate(g, wrap_angle(pa))),
                      std::abs(evaluate(f, wrap_angle(tb)) - evaluate(g, wrap_angle(pb))));
  const auto eval_at = [&](double t) {
    const double th = ta + t * (tb - ta);
    const double ph = pa + t * (pb - pa);
    return std::abs(evaluate(f, wrap_angle(th)) - evaluate(g, wrap_angle(ph)));
  };
  const bool both_pl = f.kind() == FunctionKind::kPiecewiseLinear &&
                       g.kind() == FunctionKind::kPiecewiseLinear;
  if (both_pl) {
    const auto kinks = [&](const CircleFunction& h, double a, double b, std::vector<double>& ts) {
      if (a == b) return;
      const double span = b - a;
      for (const auto& bp : h.pl().points) {
        // Lift the breakpoint to every sheet meeting [min(a,b), max(a,b)].
        const double lo = std::min(a, b), hi = std::max(a, b);
        double p = bp.position + kTwoPi * std::floor((lo - bp.position) / kTwoPi);
        for (; p <= hi + 1e-15; p += kTwoPi) {
          if (p <= lo) continue;
          const double t = (p - a) / span;
          if (t > 0.0 && t < 1.0) ts.push_back(t);
        }
      }
    };
    std::vector<double> ts;
    kinks(f, ta, tb, ts);
    kinks(g, pa, pb, ts);
    for (const double t : ts) m = std::max(m, eval_at(t));
    return m;
  }
  // Identically aligned copies of one function differ by zero everywhere.
  if (ta == pa && tb == pb && !order_before(f, g) && !order_before(g, f)) return m;
  const int samples = 17;
  for (int k = 1; k < samples; ++k) m = std::max(m, eval_at(k / static_cast<double>(samples)));
  const double seg_lip = std::abs(tb - ta) * lip_f + std::abs(pb - pa) * lip_g;
  return m + seg_lip / (2.0 * samples);
}

}  // namespace detail

/// Estimates inf over reparameterizations τ (both orientations) of
/// ‖f - g∘τ‖_C0 from above. A bottleneck alignment between uniform samples is
/// optimized exactly over all cyclic offsets, the induced piecewise-linear
/// correspondence is certified by its continuum supremum, and the minimum is
/// taken over a dyadic chain of resolutions, which makes the value
/// non-increasing under resolution doubling.
inline Alignment pseudo_upper(const CircleFunction& f, const CircleFunction& g, int resolution,
                              const NumericsConfig& cfg = {}) {
  const std::size_t cp_total = critical_points(f, cfg).size() + critical_points(g, cfg).size();
  const int min_n = std::max<int>(8, 4 * static_cast<int>(cp_total));
  if (resolution < min_n)
    throw ResolutionTooLow("resolution " + std::to_string(resolution) +
                           " is below 4x the total critical point count (need at least " +
                           std::to_string(min_n) + ")");

  // Arguments are put into a canonical order so that both call orders run
  // the identical computation: the reported cost is exactly symmetric in
  // (f, g), not merely up to witness selection.
  const bool swap_args = detail::order_before(g, f);
  const CircleFunction& fa = swap_args ? g : f;
  const CircleFunction& fb = swap_args ? f : g;

  const double lip_a = detail::lipschitz_bound(fa);
  const double lip_b = detail::lipschitz_bound(fb);

  Alignment best;
  best.cost = std::numeric_limits<double>::infinity();

  for (int n = resolution; n >= min_n; n /= 2) {
    std::vector<double> as(n), bs(n);
    for (int i = 0; i < n; ++i) {
      as[i] = evaluate(fa, kTwoPi * i / n);
      bs[i] = evaluate(fb, kTwoPi * i / n);
    }
    for (int orient : {1, -1}) {
      std::vector<double> bo(n);
      for (int j = 0; j < n; ++j) bo[j] = bs[orient == 1 ? j : (n - j) % n];
      detail::CyclicBottleneck solver(as, bo);
      const auto res = solver.solve();
      if (!std::isfinite(res.value)) continue;

      // Unwrapped angles of the witness; second coordinate runs backwards
      // for the reflected orientation.
      std::vector<std::pair<double, double>> corr;
      corr.reserve(res.path.size());
      for (const auto& [i, j] : res.path)
        corr.emplace_back(kTwoPi * i / n, orient == 1 ? kTwoPi * j / n : -kTwoPi * j / n);
      double sup = 0.0;
      for (std::size_t k = 0; k + 1 < corr.size(); ++k)
        sup = std::max(sup, detail::segment_sup(fa, fb, corr[k].first, corr[k + 1].first,
                                                corr[k].second, corr[k + 1].second, lip_a, lip_b));
      if (sup < best.cost) {
        best.cost = sup;
        best.orientation = orient;
        best.resolution_used = n;
        best.correspondence = std::move(corr);
      }
    }
    if (n == min_n) break;
  }
  if (swap_args) {
    for (auto& pr : best.correspondence) std::swap(pr.first, pr.second);
    // Normalize so the first coordinate is non-decreasing.
    if (best.orientation == -1)
      std::reverse(best.correspondence.begin(), best.correspondence.end());
  }
  if (!best.correspondence.empty()) {
    // Re-anchor the lift so the first coordinate starts in [0, 2π).
    const double shift = -kTwoPi * std::floor(best.correspondence.front().first / kTwoPi);
    if (shift != 0.0)
      for (auto& pr : best.correspondence) pr.first += shift;
  }
  return best;
}

}  // namespace reebedit

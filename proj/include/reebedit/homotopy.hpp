#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reebedit/circle_function.hpp"
#include "reebedit/deformations.hpp"
#include "reebedit/errors.hpp"
#include "reebedit/reeb_graph.hpp"

namespace reebedit {

/// Kinds of wall the straight-line path between two functions can cross: a
/// min-max pair being created or annihilated (the critical point count
/// changes by two), or two critical values trading places (count unchanged).
enum class StratumKind { kBirthDeath, kValueSwap };

struct StratumEvent {
  double lambda = 0.0;  ///< crossing parameter, strictly inside (0, 1)
  StratumKind kind = StratumKind::kBirthDeath;
  int count_delta = 0;  ///< critical point count change across the event: -2, +2 or 0
  std::array<double, 2> angles{};  ///< positions of the two involved critical points
};

/// Certified walk along h(lambda) = (1-lambda) f + lambda g: the crossings it
/// met and a replayable script carrying extract(f) onto extract(g) whose
/// total cost respects the smooth-perturbation bound.
struct TraceResult {
  std::vector<StratumEvent> events;
  EditScript script;
  double script_cost = 0.0;
  double c2_bound = 0.0;  ///< cr_norm(f - g, 2); order 1 for piecewise-linear pairs
};

namespace detail {

// Rank pattern of a cyclic alternating label sequence, canonicalized over the
// rotations that start at a minimum. Labels are injective, so ranks are
// distinct, the lexicographically least rotation is unique, and equality of
// signatures is exactly orientation-preserving order-isomorphism.
struct OrderSig {
  std::size_t n = 0;
  std::size_t start = 0;           // offset of the canonical rotation in the source cycle
  std::vector<std::size_t> ranks;  // value ranks along the canonical rotation

  friend bool operator==(const OrderSig& a, const OrderSig& b) {
    return a.n == b.n && a.ranks == b.ranks;
  }
};

inline OrderSig order_signature(const std::vector<double>& labels,
                                const std::vector<bool>& is_min) {
  const std::size_t n = labels.size();
  std::vector<double> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i)
    rank[i] = static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), labels[i]) - sorted.begin());
  OrderSig sig;
  sig.n = n;
  std::vector<std::size_t> cur(n);
  bool first = true;
  for (std::size_t r = 0; r < n; ++r) {
    if (!is_min[r]) continue;
    for (std::size_t i = 0; i < n; ++i) cur[i] = rank[(r + i) % n];
    if (first || cur < sig.ranks) {
      sig.ranks = cur;
      sig.start = r;
      first = false;
    }
  }
  return sig;
}

inline OrderSig order_signature(const LabelledReebGraph& g) {
  std::vector<double> labels;
  std::vector<bool> is_min;
  for (const auto& v : g.cycle()) {
    labels.push_back(v.label);
    is_min.push_back(v.index == CriticalIndex::kMin);
  }
  return order_signature(labels, is_min);
}

inline OrderSig order_signature(const std::vector<CriticalPoint>& pts) {
  std::vector<double> labels;
  std::vector<bool> is_min;
  for (const auto& p : pts) {
    labels.push_back(p.value);
    is_min.push_back(p.index == CriticalIndex::kMin);
  }
  return order_signature(labels, is_min);
}

struct PathSample {
  double lambda = 0.0;
  std::vector<CriticalPoint> points;  // increasing position order
  OrderSig sig;
};

inline std::optional<PathSample> try_sample(const CircleFunction& f, const CircleFunction& g,
                                            double lambda, const NumericsConfig& cfg) {
  PathSample s;
  s.lambda = lambda;
  try {
    s.points = critical_points(linear_combination(f, g, lambda), cfg);
  } catch (const NotSimpleMorse&) {
    return std::nullopt;
  }
  s.sig = order_signature(s.points);
  return s;
}

inline LabelledReebGraph graph_of(const PathSample& s) {
  std::vector<ReebVertex> cyc;
  cyc.reserve(s.points.size());
  for (std::size_t i = 0; i < s.points.size(); ++i)
    cyc.push_back({static_cast<VertexId>(i), s.points[i].value, s.points[i].index});
  return LabelledReebGraph(std::move(cyc));
}

inline std::size_t closest_adjacent_pair(const std::vector<CriticalPoint>& pts) {
  const std::size_t n = pts.size();
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double gap = std::abs(pts[i].value - pts[(i + 1) % n].value);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return best;
}

inline std::pair<std::size_t, std::size_t> closest_value_pair(
    const std::vector<CriticalPoint>& pts) {
  std::pair<std::size_t, std::size_t> best{0, 1};
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double gap = std::abs(pts[i].value - pts[j].value);
      if (gap < best_gap) {
        best_gap = gap;
        best = {i, j};
      }
    }
  return best;
}

struct PathEvent {
  StratumEvent info;
  PathSample before, after;
};

// Checks the bracket holds exactly one wall crossing and names it. A
// cancellation must leave the pattern of the surviving points intact, a swap
// must transpose the two nearest values; anything else means several
// crossings got merged into the bracket.
inline std::optional<PathEvent> classify_event(const PathSample& a, const PathSample& b) {
  PathEvent ev;
  ev.info.lambda = 0.5 * (a.lambda + b.lambda);
  const std::size_t na = a.points.size(), nb = b.points.size();
  const auto reduced_sig = [](const std::vector<CriticalPoint>& pts, std::size_t skip) {
    const std::size_t n = pts.size();
    std::vector<double> labels;
    std::vector<bool> is_min;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == skip || k == (skip + 1) % n) continue;
      labels.push_back(pts[k].value);
      is_min.push_back(pts[k].index == CriticalIndex::kMin);
    }
    return order_signature(labels, is_min);
  };
  if (na == nb + 2) {
    const std::size_t i = closest_adjacent_pair(a.points);
    if (!(reduced_sig(a.points, i) == b.sig)) return std::nullopt;
    ev.info.kind = StratumKind::kBirthDeath;
    ev.info.count_delta = -2;
    ev.info.angles = {a.points[i].position, a.points[(i + 1) % na].position};
  } else if (nb == na + 2) {
    const std::size_t i = closest_adjacent_pair(b.points);
    if (!(reduced_sig(b.points, i) == a.sig)) return std::nullopt;
    ev.info.kind = StratumKind::kBirthDeath;
    ev.info.count_delta = 2;
    ev.info.angles = {b.points[i].position, b.points[(i + 1) % nb].position};
  } else if (na == nb) {
    const auto [i, j] = closest_value_pair(a.points);
    std::vector<double> labels;
    std::vector<bool> is_min;
    for (const auto& p : a.points) {
      labels.push_back(p.value);
      is_min.push_back(p.index == CriticalIndex::kMin);
    }
    std::swap(labels[i], labels[j]);
    if (!(order_signature(labels, is_min) == b.sig)) return std::nullopt;
    ev.info.kind = StratumKind::kValueSwap;
    ev.info.count_delta = 0;
    ev.info.angles = {a.points[i].position, a.points[j].position};
  } else {
    return std::nullopt;
  }
  ev.before = a;
  ev.after = b;
  return ev;
}

// Shrinks [a, b] around the first signature change. Stops early when the
// crossing sits inside a sliver of parameters where extraction keeps failing;
// the bracket ends still carry valid samples on both sides.
inline std::pair<PathSample, PathSample> bisect_event(const CircleFunction& f,
                                                      const CircleFunction& g, PathSample a,
                                                      PathSample b, double tol_lambda,
                                                      const NumericsConfig& cfg) {
  while (b.lambda - a.lambda > tol_lambda) {
    const double mid = 0.5 * (a.lambda + b.lambda);
    const double width = b.lambda - a.lambda;
    std::optional<PathSample> sm = try_sample(f, g, mid, cfg);
    for (int k = 1; k <= 4 && !sm; ++k)
      sm = try_sample(f, g, mid + (k % 2 ? 1.0 : -1.0) * width * 0.011 * k, cfg);
    if (!sm) break;
    if (sm->sig == a.sig)
      a = std::move(*sm);
    else
      b = std::move(*sm);  // also narrows onto the first of several crossings
  }
  return {std::move(a), std::move(b)};
}

inline void scan_interval(const CircleFunction& f, const CircleFunction& g, const PathSample& a,
                          const PathSample& b, double tol_lambda, const NumericsConfig& cfg,
                          std::vector<PathEvent>& out) {
  if (a.sig == b.sig) return;
  if (out.size() >= 512) throw NonGenericPath("path crosses too many walls to trace");
  auto [ea, eb] = bisect_event(f, g, a, b, tol_lambda, cfg);
  auto ev = classify_event(ea, eb);
  if (!ev)
    throw NonGenericPath("multiple wall crossings merged near lambda=" +
                         std::to_string(0.5 * (ea.lambda + eb.lambda)));
  const PathSample resume = ev->after;
  out.push_back(std::move(*ev));
  scan_interval(f, g, resume, b, tol_lambda, cfg, out);
}

struct PathScan {
  PathSample start, end;
  std::vector<PathEvent> events;
};

inline PathScan scan_path(const CircleFunction& f, const CircleFunction& g, int coarse_steps,
                          const NumericsConfig& cfg) {
  if (coarse_steps < 2) throw PreconditionViolated("coarse_steps must be at least 2");
  constexpr double kTolLambda = 1e-10;
  PathScan scan;
  auto s0 = try_sample(f, g, 0.0, cfg);
  auto s1 = try_sample(f, g, 1.0, cfg);
  if (!s0 || !s1) throw NonGenericPath("an endpoint of the path is not simple Morse");
  scan.start = *s0;
  scan.end = *s1;
  PathSample prev = std::move(*s0);
  const double h = 1.0 / coarse_steps;
  for (int i = 1; i <= coarse_steps; ++i) {
    std::optional<PathSample> cur;
    if (i == coarse_steps) {
      cur = scan.end;
    } else {
      const double lam = i * h;
      cur = try_sample(f, g, lam, cfg);
      for (int k = 1; k <= 6 && !cur; ++k)
        cur = try_sample(f, g, lam + (k % 2 ? 1.0 : -1.0) * h * 0.003 * k, cfg);
      if (!cur)
        throw NonGenericPath("path stays non-generic around lambda=" + std::to_string(lam));
    }
    scan_interval(f, g, prev, *cur, kTolLambda, cfg, scan.events);
    prev = std::move(*cur);
  }
  for (std::size_t k = 1; k < scan.events.size(); ++k)
    if (scan.events[k].info.lambda - scan.events[k - 1].info.lambda <= kTolLambda)
      throw NonGenericPath("two wall crossings closer than the bisection tolerance");
  return scan;
}

}  // namespace detail

/// Wall crossings of the straight-line path h(lambda) = (1-lambda) f +
/// lambda g, located by comparing the cyclic value-order pattern of the
/// critical points on a coarse grid and bisecting every change to a
/// 1e-10-wide bracket. Throws NonGenericPath when an endpoint fails the
/// genericity checks or crossings sit too close together to separate.
inline std::vector<StratumEvent> detect_events(const CircleFunction& f, const CircleFunction& g,
                                               int coarse_steps = 256,
                                               const NumericsConfig& cfg = {}) {
  const auto scan = detail::scan_path(f, g, coarse_steps, cfg);
  std::vector<StratumEvent> out;
  out.reserve(scan.events.size());
  for (const auto& ev : scan.events) out.push_back(ev.info);
  return out;
}

/// The relabel carrying `from` onto `to` through the unique correspondence
/// preserving the cyclic order and the critical indices. Empty when the
/// graphs already carry identical labels; PreconditionViolated when the
/// graphs are not order-isomorphic.
inline std::optional<RelabelOp> order_preserving_relabel(const LabelledReebGraph& from,
                                                         const LabelledReebGraph& to) {
  const auto sf = detail::order_signature(from);
  const auto st = detail::order_signature(to);
  if (!(sf == st)) throw PreconditionViolated("graphs are not order-isomorphic");
  const std::size_t n = from.size();
  RelabelOp op;
  bool identity = true;
  for (std::size_t k = 0; k < n; ++k) {
    const ReebVertex& v = from.at(sf.start + k);
    const double target = to.at(st.start + k).label;
    if (target != v.label) identity = false;
    op.labels[v.id] = target;
  }
  if (identity) return std::nullopt;
  return op;
}

namespace detail {

// W's vertex ids listed against the target pattern: ids[k] plays the role of
// the sample point at canonical offset k. With `mirrored` set the cycle is
// read in reverse; a pair born on a two-vertex cycle can land on either of
// the two edges between the same endpoints, and the deterministic choice made
// by `apply` may produce the reflection of the pattern the path follows.
inline std::optional<std::vector<VertexId>> align_ids(const LabelledReebGraph& W,
                                                      const OrderSig& target, bool mirrored) {
  const std::size_t n = W.size();
  std::vector<double> labels(n);
  std::vector<bool> is_min(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ReebVertex& v = W.at(mirrored ? n - 1 - i : i);
    labels[i] = v.label;
    is_min[i] = v.index == CriticalIndex::kMin;
  }
  const OrderSig sw = order_signature(labels, is_min);
  if (!(sw == target)) return std::nullopt;
  std::vector<VertexId> ids(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = (sw.start + k) % n;
    ids[k] = W.at(mirrored ? n - 1 - i : i).id;
  }
  return ids;
}

inline TraceResult trace_once(const CircleFunction& f, const CircleFunction& g, int coarse_steps,
                              const NumericsConfig& cfg) {
  const PathScan scan = scan_path(f, g, coarse_steps, cfg);
  int delta_sum = 0;
  for (const auto& ev : scan.events) delta_sum += ev.info.count_delta;
  if (static_cast<int>(scan.end.points.size()) - static_cast<int>(scan.start.points.size()) !=
      delta_sum)
    throw NonGenericPath("events do not account for the endpoint critical point counts");

  TraceResult out;
  for (const auto& ev : scan.events) out.events.push_back(ev.info);

  LabelledReebGraph W = extract(f, cfg);
  EditScript script;
  bool mirrored = false;

  const auto relabel_to = [&](const PathSample& s) {
    const auto ids = align_ids(W, s.sig, mirrored);
    if (!ids) throw NonGenericPath("running graph lost correspondence with the path");
    const std::size_t n = s.points.size();
    RelabelOp op;
    bool identity = true;
    for (std::size_t k = 0; k < n; ++k) {
      const double target = s.points[(s.sig.start + k) % n].value;
      if (W.vertex((*ids)[k]).label != target) identity = false;
      op.labels[(*ids)[k]] = target;
    }
    if (identity) return;
    script.push_back(op);
    W = apply(W, op);
  };

  const auto circ_gap = [](double x, double y) {
    const double d = std::abs(x - y);
    return std::min(d, kTwoPi - d);
  };

  // Count-preserving crossing: critical points barely move over the 1e-10
  // bracket, so vertices pair by position and one relabel walks the two
  // trading values past each other.
  const auto relabel_across_swap = [&](const PathEvent& ev) {
    const auto& A = ev.before.points;
    const auto& B = ev.after.points;
    const std::size_t n = A.size();
    std::size_t r = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      const double d = circ_gap(B[j].position, A[0].position);
      if (d < best) {
        best = d;
        r = j;
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      if (A[i].index != B[(i + r) % n].index)
        throw NonGenericPath("positions across a crossing fail to pair up");
    const auto ids = align_ids(W, ev.before.sig, mirrored);
    if (!ids) throw NonGenericPath("running graph lost correspondence with the path");
    RelabelOp op;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t ia = (ev.before.sig.start + k) % n;
      op.labels[(*ids)[k]] = B[(ia + r) % n].value;
    }
    script.push_back(op);
    W = apply(W, op);
  };

  const auto apply_death = [&](const PathEvent&) {
    const std::size_t n = W.size();
    std::size_t best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double gap = std::abs(W.at(i).label - W.at(i + 1).label);
      if (gap < best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    const DeathOp d{W.at(best).id, W.at(best + 1).id};
    try {
      W = apply(W, d);
    } catch (const InvalidDeformation&) {
      throw NonGenericPath("annihilating pair could not be removed cleanly");
    }
    script.push_back(d);
  };

  const auto apply_birth = [&](const PathEvent& ev) {
    const auto& pts = ev.after.points;
    const std::size_t N = pts.size();
    const std::size_t q = closest_adjacent_pair(pts);
    const std::size_t q2 = (q + 1) % N;
    std::vector<double> labels;
    std::vector<bool> is_min;
    std::vector<std::size_t> orig;
    for (std::size_t k = 0; k < N; ++k) {
      if (k == q || k == q2) continue;
      labels.push_back(pts[k].value);
      is_min.push_back(pts[k].index == CriticalIndex::kMin);
      orig.push_back(k);
    }
    const OrderSig sr = order_signature(labels, is_min);
    const auto ids = align_ids(W, sr, mirrored);
    if (!ids) throw NonGenericPath("created pair does not align with the running graph");
    const std::size_t m = labels.size();
    std::size_t jl = 0;
    const std::size_t left_orig = (q + N - 1) % N;
    for (std::size_t k = 0; k < m; ++k)
      if (orig[k] == left_orig) jl = k;
    const std::size_t kl = (jl + m - sr.start) % m;
    const VertexId u = (*ids)[kl];
    const VertexId v = (*ids)[(kl + 1) % m];
    const double lu = W.vertex(u).label, lv = W.vertex(v).label;
    const double lo = std::min(lu, lv), hi = std::max(lu, lv);
    double bmin = std::min(pts[q].value, pts[q2].value);
    double bmax = std::max(pts[q].value, pts[q2].value);
    if (!(lo < bmin && bmax < hi)) {
      // the freshly split values drifted outside the edge; park a sliver of
      // the same width near the middle and let the next relabel place it
      double w = 0.5 * (bmax - bmin);
      w = std::min(w, 0.125 * (hi - lo));
      if (!(w > 0.0)) w = 1e-9 * (hi - lo);
      const double c = std::clamp(0.5 * (bmin + bmax), lo + 2.0 * w, hi - 2.0 * w);
      bmin = c - w;
      bmax = c + w;
    }
    BirthOp op;
    op.v1 = lu < lv ? u : v;
    op.v2 = lu < lv ? v : u;
    op.new_max_label = bmax;
    op.new_min_label = bmin;
    for (int attempt = 0;; ++attempt) {
      try {
        W = apply(W, op);
        break;
      } catch (const InvalidDeformation&) {
        if (attempt >= 3) throw NonGenericPath("created pair could not be inserted cleanly");
        const double shift = (bmax - bmin) / 7.0;
        op.new_max_label += shift;
        op.new_min_label += shift;
      }
    }
    script.push_back(op);
  };

  for (const auto& ev : scan.events) {
    relabel_to(ev.before);
    if (ev.info.count_delta < 0)
      apply_death(ev);
    else if (ev.info.count_delta > 0)
      apply_birth(ev);
    else
      relabel_across_swap(ev);
    if (!align_ids(W, ev.after.sig, mirrored)) {
      // a pair born on a two-vertex cycle may have landed on the other of the
      // two edges, mirroring the cycle; follow the path in reverse from here
      if (ev.info.count_delta > 0 && W.size() == 4 && align_ids(W, ev.after.sig, !mirrored))
        mirrored = !mirrored;
      else
        throw NonGenericPath("graph after a crossing does not match the traced pattern");
    }
  }
  relabel_to(scan.end);

  const auto replay = apply_sequence(extract(f, cfg), script);
  if (!is_isomorphic(replay.graph, extract(g, cfg), 1e-6))
    throw ReplayMismatch("trace script does not reproduce the target graph");
  out.script = std::move(script);
  out.script_cost = replay.total_cost;
  out.c2_bound = cr_norm(difference(f, g), f.is_trig() && g.is_trig() ? 2 : 1, cfg);
  return out;
}

}  // namespace detail

/// Walks the straight-line path from f to g and emits a certifying script:
/// one relabel per event-free stretch (through the order-preserving
/// correspondence), a death or birth of a near-degenerate sliver at each
/// pair-cancellation crossing, and a value-trading relabel at each swap
/// crossing. Starts from a 256-point grid and refines it fourfold (up to
/// 4096) whenever crossings fail to separate; throws NonGenericPath when
/// they still do not, and ReplayMismatch only on internal failure.
inline TraceResult trace(const CircleFunction& f, const CircleFunction& g,
                         const NumericsConfig& cfg = {}) {
  if (!detail::try_sample(f, g, 0.0, cfg) || !detail::try_sample(f, g, 1.0, cfg))
    throw NonGenericPath("an endpoint of the path is not simple Morse");
  int steps = 256;
  for (;;) {
    try {
      return detail::trace_once(f, g, steps, cfg);
    } catch (const NonGenericPath&) {
      if (steps >= 4096) throw;
      steps *= 4;
    }
  }
}

/// Half the smallest gap between critical values: perturbations smaller than
/// this keep the intervals around distinct critical values disjoint, so each
/// one retains a same-index critical value nearby.
inline double stability_radius(const CircleFunction& f, const NumericsConfig& cfg = {}) {
  const auto pts = critical_points(f, cfg);  // throws NotSimpleMorse when unusable
  std::vector<double> values;
  values.reserve(pts.size());
  for (const auto& p : pts) values.push_back(p.value);
  std::sort(values.begin(), values.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    gap = std::min(gap, values[i + 1] - values[i]);
  return 0.5 * gap;
}

struct CriticalValueMatch {
  double value = 0.0;  ///< critical value of the reference function
  CriticalIndex index = CriticalIndex::kMin;
  bool matched = false;
  double witness_value = 0.0;  ///< nearest same-index critical value of the other function
  double distance = 0.0;
};

struct StabilityReport {
  double delta = 0.0;
  bool all_matched = false;
  std::vector<CriticalValueMatch> matches;
};

/// For every critical value c of f, asks whether g has a critical value of
/// the same index within [c - delta, c + delta]. Requires the perturbation to
/// be admissible: cr_norm(f - g, 0) <= delta <= stability_radius(f).
inline StabilityReport check_critical_value_stability(const CircleFunction& f,
                                                      const CircleFunction& g, double delta,
                                                      const NumericsConfig& cfg = {}) {
  const auto pf = critical_points(f, cfg);
  const auto pg = critical_points(g, cfg);
  if (!(cr_norm(difference(f, g), 0, cfg) <= delta))
    throw PreconditionViolated("delta must dominate the sup distance between f and g");
  if (!(delta <= stability_radius(f, cfg)))
    throw PreconditionViolated("delta exceeds the stability radius of f");
  StabilityReport report;
  report.delta = delta;
  report.all_matched = true;
  for (const auto& cp : pf) {
    CriticalValueMatch m;
    m.value = cp.value;
    m.index = cp.index;
    m.distance = std::numeric_limits<double>::infinity();
    for (const auto& cq : pg) {
      if (cq.index != cp.index) continue;
      const double d = std::abs(cq.value - cp.value);
      if (d < m.distance) {
        m.distance = d;
        m.witness_value = cq.value;
      }
    }
    // root refinement leaves ~1e-15 jitter on critical values; don't let it
    // flip a match that holds with equality
    m.matched = m.distance <= delta + 1e-12;
    report.all_matched = report.all_matched && m.matched;
    report.matches.push_back(m);
  }
  return report;
}

}  // namespace reebedit

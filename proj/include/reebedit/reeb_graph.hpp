#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "reebedit/circle_function.hpp"
#include "reebedit/errors.hpp"

namespace reebedit {

using VertexId = std::int64_t;

struct ReebVertex {
  VertexId id = 0;
  double label = 0.0;
  CriticalIndex index = CriticalIndex::kMin;
};

/// Labelled Reeb graph of a simple Morse function on the circle: a cycle
/// with an even number of vertices whose indices alternate between minima
/// and maxima and whose labels are injective and locally extremal (every
/// maximum is labelled above both neighbours, every minimum below).
///
/// Vertices are stored in cyclic order. Ids are arbitrary unique integers;
/// relabelling never changes the id set, only births and deaths do.
class LabelledReebGraph {
 public:
  explicit LabelledReebGraph(std::vector<ReebVertex> cycle) : cycle_(std::move(cycle)) {
    validate();
    for (std::size_t i = 0; i < cycle_.size(); ++i) index_of_[cycle_[i].id] = i;
  }

  const std::vector<ReebVertex>& cycle() const { return cycle_; }
  std::size_t size() const { return cycle_.size(); }

  bool contains(VertexId id) const { return index_of_.count(id) != 0; }

  /// Position of the vertex in the cyclic order.
  std::size_t position_of(VertexId id) const {
    auto it = index_of_.find(id);
    if (it == index_of_.end())
      throw UnknownVertexId("unknown vertex id=" + std::to_string(id));
    return it->second;
  }

  const ReebVertex& vertex(VertexId id) const { return cycle_[position_of(id)]; }

  const ReebVertex& at(std::size_t pos) const { return cycle_[pos % cycle_.size()]; }

  bool adjacent(VertexId a, VertexId b) const {
    const std::size_t pa = position_of(a), pb = position_of(b);
    const std::size_t n = cycle_.size();
    if (n == 2) return pa != pb;
    return (pa + 1) % n == pb || (pb + 1) % n == pa;
  }

  /// Smallest integer strictly above every id ever used in this graph.
  VertexId fresh_id() const {
    VertexId m = 0;
    for (const auto& v : cycle_) m = std::max(m, v.id + 1);
    return m;
  }

  std::vector<double> labels() const {
    std::vector<double> out;
    out.reserve(cycle_.size());
    for (const auto& v : cycle_) out.push_back(v.label);
    return out;
  }

  double min_label() const {
    double m = cycle_.front().label;
    for (const auto& v : cycle_) m = std::min(m, v.label);
    return m;
  }
  double max_label() const {
    double m = cycle_.front().label;
    for (const auto& v : cycle_) m = std::max(m, v.label);
    return m;
  }

 private:
  void validate() const {
    const std::size_t n = cycle_.size();
    if (n < 2 || n % 2 != 0)
      throw InvalidGraph("vertex count must be even and at least 2, got " + std::to_string(n));
    std::unordered_map<VertexId, int> seen;
    for (const auto& v : cycle_) {
      if (!std::isfinite(v.label))
        throw InvalidGraph("label is not finite at id=" + std::to_string(v.id));
      if (++seen[v.id] > 1)
        throw InvalidGraph("duplicate vertex id=" + std::to_string(v.id));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (cycle_[i].label == cycle_[j].label)
          throw InvalidGraph("labels not injective: id=" + std::to_string(cycle_[i].id) +
                             " and id=" + std::to_string(cycle_[j].id) + " share label " +
                             std::to_string(cycle_[i].label));
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (cycle_[i].index == cycle_[(i + 1) % n].index)
        throw InvalidGraph("index alternation violated between id=" +
                           std::to_string(cycle_[i].id) + " and id=" +
                           std::to_string(cycle_[(i + 1) % n].id));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double prev = cycle_[(i + n - 1) % n].label;
      const double next = cycle_[(i + 1) % n].label;
      const double cur = cycle_[i].label;
      const bool ok = cycle_[i].index == CriticalIndex::kMax ? (cur > prev && cur > next)
                                                             : (cur < prev && cur < next);
      if (!ok)
        throw InvalidGraph("local extremality violated at id=" + std::to_string(cycle_[i].id));
    }
  }

  std::vector<ReebVertex> cycle_;
  std::unordered_map<VertexId, std::size_t> index_of_;
};

/// Builds the labelled Reeb graph of a simple Morse function. Vertices are
/// the critical points in increasing position order, labelled with their
/// critical values and given fresh ids 0..2n-1.
inline LabelledReebGraph extract(const CircleFunction& f, const NumericsConfig& cfg = {}) {
  const auto pts = critical_points(f, cfg);
  std::vector<ReebVertex> cycle;
  cycle.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    cycle.push_back({static_cast<VertexId>(i), pts[i].value, pts[i].index});
  return LabelledReebGraph(std::move(cycle));
}

/// Piecewise-linear realization of a graph: breakpoints at the 2n-th roots
/// of unity carrying the labels in cyclic order. extract(realize(G)) is
/// isomorphic to G with identical labels.
inline CircleFunction realize(const LabelledReebGraph& g) {
  PiecewiseLinear p;
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i)
    p.points.push_back({kTwoPi * static_cast<double>(i) / static_cast<double>(n),
                        g.cycle()[i].label});
  return CircleFunction(std::move(p));
}

using VertexBijection = std::vector<std::pair<VertexId, VertexId>>;

/// Tests G1 ~ G2 under the dihedral symmetries of the cycle: some rotation,
/// possibly composed with a reflection, must carry every vertex to one of
/// equal index whose label differs by at most tol. Returns the witness
/// bijection (id in G1 -> id in G2) when one exists.
inline std::optional<VertexBijection> is_isomorphic(const LabelledReebGraph& g1,
                                                    const LabelledReebGraph& g2,
                                                    double tol = 0.0) {
  const std::size_t n = g1.size();
  if (n != g2.size()) return std::nullopt;
  const auto wrap = [n](long v) {
    v %= static_cast<long>(n);
    if (v < 0) v += static_cast<long>(n);
    return static_cast<std::size_t>(v);
  };
  for (int dir : {1, -1}) {
    for (std::size_t r = 0; r < n; ++r) {
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i) {
        const std::size_t j = wrap(static_cast<long>(r) + dir * static_cast<long>(i));
        const ReebVertex& a = g1.cycle()[i];
        const ReebVertex& b = g2.cycle()[j];
        if (a.index != b.index || std::abs(a.label - b.label) > tol) ok = false;
      }
      if (ok) {
        VertexBijection w;
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t j = wrap(static_cast<long>(r) + dir * static_cast<long>(i));
          w.emplace_back(g1.cycle()[i].id, g2.cycle()[j].id);
        }
        return w;
      }
    }
  }
  return std::nullopt;
}

/// Canonical representative of the isomorphism class: the rotation/reflection
/// starting at a minimum whose label sequence is lexicographically least,
/// with ids renumbered 0..2n-1. Idempotent.
inline LabelledReebGraph canonical_form(const LabelledReebGraph& g) {
  const std::size_t n = g.size();
  const auto wrap = [n](long v) {
    v %= static_cast<long>(n);
    if (v < 0) v += static_cast<long>(n);
    return static_cast<std::size_t>(v);
  };
  std::vector<double> best;
  std::vector<ReebVertex> best_cycle;
  for (int dir : {1, -1}) {
    for (std::size_t start = 0; start < n; ++start) {
      if (g.cycle()[start].index != CriticalIndex::kMin) continue;
      std::vector<double> cand;
      std::vector<ReebVertex> cyc;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = wrap(static_cast<long>(start) + dir * static_cast<long>(i));
        cand.push_back(g.cycle()[j].label);
        cyc.push_back({static_cast<VertexId>(i), g.cycle()[j].label, g.cycle()[j].index});
      }
      if (best.empty() || cand < best) {
        best = std::move(cand);
        best_cycle = std::move(cyc);
      }
    }
  }
  return LabelledReebGraph(std::move(best_cycle));
}

}  // namespace reebedit

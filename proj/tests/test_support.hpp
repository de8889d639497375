#pragma once

// Helpers shared by the test binaries: deterministic random inputs and a
// derivative-free extremum scanner used as an independent check.

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "reebedit/circle_function.hpp"
#include "reebedit/reeb_graph.hpp"

namespace testsupport {

using reebedit::CircleFunction;
using reebedit::CriticalIndex;
using reebedit::LabelledReebGraph;
using reebedit::ReebVertex;
using reebedit::TrigPoly;
using reebedit::VertexId;

inline CircleFunction make_trig(double a0, std::vector<double> cs, std::vector<double> sn) {
  TrigPoly p;
  p.a0 = a0;
  p.cos_coeffs = std::move(cs);
  p.sin_coeffs = std::move(sn);
  return CircleFunction(std::move(p));
}

inline CircleFunction sine() { return make_trig(0.0, {0.0}, {1.0}); }

inline CircleFunction random_trig(std::mt19937_64& rng, int degree, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  TrigPoly p;
  p.a0 = u(rng);
  for (int k = 0; k < degree; ++k) {
    p.cos_coeffs.push_back(u(rng));
    p.sin_coeffs.push_back(u(rng));
  }
  return CircleFunction(std::move(p));
}

struct ScannedExtremum {
  double position;
  double value;
  bool is_max;
};

// Locates extrema by value comparison on a dense grid plus ternary refinement.
// Uses no derivative information, so it is independent of the root-finding
// pipeline under test.
inline std::vector<ScannedExtremum> scan_extrema(const CircleFunction& f, int grid = 200000) {
  const double step = reebedit::kTwoPi / grid;
  std::vector<double> vals(grid);
  for (int i = 0; i < grid; ++i) vals[i] = reebedit::evaluate(f, i * step);
  std::vector<ScannedExtremum> out;
  for (int i = 0; i < grid; ++i) {
    const double prev = vals[(i + grid - 1) % grid];
    const double next = vals[(i + 1) % grid];
    const bool is_max = vals[i] > prev && vals[i] > next;
    const bool is_min = vals[i] < prev && vals[i] < next;
    if (!is_max && !is_min) continue;
    double lo = (i - 1) * step, hi = (i + 1) * step;
    for (int it = 0; it < 100; ++it) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      const double f1 = reebedit::evaluate(f, m1), f2 = reebedit::evaluate(f, m2);
      if ((f1 < f2) == is_max)
        lo = m1;
      else
        hi = m2;
    }
    const double pos = reebedit::wrap_angle(0.5 * (lo + hi));
    out.push_back({pos, reebedit::evaluate(f, pos), is_max});
  }
  std::sort(out.begin(), out.end(),
            [](const ScannedExtremum& a, const ScannedExtremum& b) { return a.position < b.position; });
  return out;
}

// Builds a graph from labels in cyclic order, inferring each index from the
// neighbouring labels. Throws if some label is neither a local min nor max.
inline LabelledReebGraph graph_from_labels(const std::vector<double>& labels) {
  const std::size_t n = labels.size();
  std::vector<ReebVertex> cyc;
  for (std::size_t i = 0; i < n; ++i) {
    const double prev = labels[(i + n - 1) % n];
    const double next = labels[(i + 1) % n];
    CriticalIndex idx;
    if (labels[i] > prev && labels[i] > next)
      idx = CriticalIndex::kMax;
    else if (labels[i] < prev && labels[i] < next)
      idx = CriticalIndex::kMin;
    else
      throw std::logic_error("graph_from_labels: label sequence is not alternating");
    cyc.push_back({static_cast<VertexId>(i), labels[i], idx});
  }
  return LabelledReebGraph(std::move(cyc));
}

// Cyclically alternating label sequence of 2*pairs distinct values in [0,1),
// drawn by rejection so every alternating arrangement is equally likely.
inline std::vector<double> random_alternating_labels(std::mt19937_64& rng, int pairs) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 2 * pairs;
  std::vector<double> labels(n);
  for (;;) {
    for (int i = 0; i < n; ++i) labels[i] = u(rng);
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) continue;
    for (int attempt = 0; attempt < 100000; ++attempt) {
      std::shuffle(labels.begin(), labels.end(), rng);
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        const double prev = labels[(i + n - 1) % n];
        const double next = labels[(i + 1) % n];
        const bool alt = (i % 2 == 0) ? (labels[i] < prev && labels[i] < next)
                                      : (labels[i] > prev && labels[i] > next);
        if (!alt) ok = false;
      }
      if (ok) return labels;
    }
  }
}

inline LabelledReebGraph random_graph(std::mt19937_64& rng, int pairs) {
  return graph_from_labels(random_alternating_labels(rng, pairs));
}

}  // namespace testsupport

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "reebedit/errors.hpp"
#include "reebedit/reeb_graph.hpp"

namespace reebedit {

/// Inserts a maximum/minimum pair on the edge between v1 and v2, where
/// label(v1) < label(v2). The new maximum u1 becomes the neighbour of v1 and
/// the new minimum u2 the neighbour of v2, with
///   label(v1) < new_min_label < new_max_label < label(v2).
/// Ids default to fresh_id() and fresh_id()+1 for (u1, u2).
struct BirthOp {
  VertexId v1 = 0;
  VertexId v2 = 0;
  double new_max_label = 0.0;
  double new_min_label = 0.0;
  std::optional<std::pair<VertexId, VertexId>> new_ids;
};

/// Removes the adjacent pair {u1, u2}. Requires at least four vertices and
/// the nesting pattern: with w1 the other neighbour of the pair's maximum and
/// w2 the other neighbour of its minimum,
///   label(w1) < label(pair minimum)  and  label(pair maximum) < label(w2).
struct DeathOp {
  VertexId u1 = 0;
  VertexId u2 = 0;
};

/// Reassigns every label at once. The map must cover the whole vertex set and
/// the result must again be a valid graph.
struct RelabelOp {
  std::unordered_map<VertexId, double> labels;
};

using EditOp = std::variant<BirthOp, DeathOp, RelabelOp>;
using EditScript = std::vector<EditOp>;

inline const char* op_name(const EditOp& op) {
  if (std::holds_alternative<BirthOp>(op)) return "birth";
  if (std::holds_alternative<DeathOp>(op)) return "death";
  return "relabel";
}

namespace detail {

inline std::pair<const ReebVertex*, const ReebVertex*> death_pair(const LabelledReebGraph& g,
                                                                  const DeathOp& op) {
  const ReebVertex& a = g.vertex(op.u1);
  const ReebVertex& b = g.vertex(op.u2);
  if (a.index == b.index)
    throw InvalidDeformation("death pair must consist of one maximum and one minimum");
  const ReebVertex* mx = a.index == CriticalIndex::kMax ? &a : &b;
  const ReebVertex* mn = a.index == CriticalIndex::kMax ? &b : &a;
  return {mx, mn};
}

inline const ReebVertex& other_neighbour(const LabelledReebGraph& g, VertexId of, VertexId not_id) {
  const std::size_t n = g.size();
  const std::size_t p = g.position_of(of);
  const ReebVertex& prev = g.at(p + n - 1);
  const ReebVertex& next = g.at(p + 1);
  return prev.id == not_id ? next : prev;
}

}  // namespace detail

inline LabelledReebGraph apply(const LabelledReebGraph& g, const BirthOp& op) {
  const ReebVertex& v1 = g.vertex(op.v1);
  const ReebVertex& v2 = g.vertex(op.v2);
  if (!g.adjacent(op.v1, op.v2))
    throw InvalidDeformation("birth edge endpoints are not adjacent: id=" +
                             std::to_string(op.v1) + ", id=" + std::to_string(op.v2));
  if (!(v1.label < v2.label))
    throw InvalidDeformation("birth requires label(v1) < label(v2), got " +
                             std::to_string(v1.label) + " and " + std::to_string(v2.label));
  if (!(v1.label < op.new_min_label && op.new_min_label < op.new_max_label &&
        op.new_max_label < v2.label))
    throw InvalidDeformation(
        "birth labels must satisfy label(v1) < new_min_label < new_max_label < label(v2)");
  for (const auto& w : g.cycle()) {
    if (w.label == op.new_min_label || w.label == op.new_max_label)
      throw InvalidDeformation("birth label duplicates the label of id=" + std::to_string(w.id));
  }
  VertexId id1, id2;
  if (op.new_ids) {
    id1 = op.new_ids->first;
    id2 = op.new_ids->second;
    if (id1 == id2 || g.contains(id1) || g.contains(id2))
      throw InvalidDeformation("birth ids must be fresh and distinct");
  } else {
    id1 = g.fresh_id();
    id2 = id1 + 1;
  }

  const std::size_t n = g.size();
  const std::size_t p1 = g.position_of(op.v1);
  std::vector<ReebVertex> cyc = g.cycle();
  const ReebVertex u1{id1, op.new_max_label, CriticalIndex::kMax};
  const ReebVertex u2{id2, op.new_min_label, CriticalIndex::kMin};
  if (g.at(p1 + 1).id == op.v2) {
    cyc.insert(cyc.begin() + static_cast<long>(p1) + 1, {u1, u2});
  } else {
    // v2 precedes v1 in storage order; keep u1 next to v1.
    const std::size_t p2 = (p1 + n - 1) % n;
    cyc.insert(cyc.begin() + static_cast<long>(p2) + 1, {u2, u1});
  }
  return LabelledReebGraph(std::move(cyc));
}

inline LabelledReebGraph apply(const LabelledReebGraph& g, const DeathOp& op) {
  if (g.size() == 2)
    throw DeathOnTwoVertexGraph("death requires at least four vertices");
  if (!g.adjacent(op.u1, op.u2))
    throw InvalidDeformation("death pair is not adjacent: id=" + std::to_string(op.u1) +
                             ", id=" + std::to_string(op.u2));
  const auto [mx, mn] = detail::death_pair(g, op);
  const ReebVertex& w1 = detail::other_neighbour(g, mx->id, mn->id);
  const ReebVertex& w2 = detail::other_neighbour(g, mn->id, mx->id);
  if (!(w1.label < mn->label && mx->label < w2.label))
    throw InvalidDeformation(
        "death requires the pair's labels to nest strictly inside its neighbours': " +
        std::to_string(w1.label) + " < " + std::to_string(mn->label) + " and " +
        std::to_string(mx->label) + " < " + std::to_string(w2.label) + " must hold");
  std::vector<ReebVertex> cyc;
  cyc.reserve(g.size() - 2);
  for (const auto& v : g.cycle())
    if (v.id != op.u1 && v.id != op.u2) cyc.push_back(v);
  return LabelledReebGraph(std::move(cyc));
}

inline LabelledReebGraph apply(const LabelledReebGraph& g, const RelabelOp& op) {
  for (const auto& [id, lb] : op.labels) {
    if (!g.contains(id)) throw UnknownVertexId("unknown vertex id=" + std::to_string(id));
  }
  std::vector<ReebVertex> cyc = g.cycle();
  for (auto& v : cyc) {
    auto it = op.labels.find(v.id);
    if (it == op.labels.end())
      throw InvalidDeformation("relabel map missing vertex id=" + std::to_string(v.id));
    v.label = it->second;
  }
  try {
    return LabelledReebGraph(std::move(cyc));
  } catch (const InvalidGraph& e) {
    throw InvalidDeformation(std::string("relabel produces an invalid graph: ") + e.what());
  }
}

inline LabelledReebGraph apply(const LabelledReebGraph& g, const EditOp& op) {
  return std::visit([&](const auto& o) { return apply(g, o); }, op);
}

/// Cost of one deformation on g: half the label gap for births and deaths,
/// the largest label displacement for relabellings.
inline double cost(const LabelledReebGraph& g, const EditOp& op) {
  if (const auto* b = std::get_if<BirthOp>(&op))
    return 0.5 * std::abs(b->new_max_label - b->new_min_label);
  if (const auto* d = std::get_if<DeathOp>(&op))
    return 0.5 * std::abs(g.vertex(d->u1).label - g.vertex(d->u2).label);
  const auto& r = std::get<RelabelOp>(op);
  double m = 0.0;
  for (const auto& [id, lb] : r.labels) m = std::max(m, std::abs(lb - g.vertex(id).label));
  return m;
}

/// Deformation undoing op, expressed against the graph op was applied to.
/// apply(apply(before, op), invert(op, before)) restores the original cycle
/// exactly — same ids, same labels, possibly rotated storage — and the two
/// costs agree exactly.
inline EditOp invert(const EditOp& op, const LabelledReebGraph& before) {
  if (const auto* b = std::get_if<BirthOp>(&op)) {
    VertexId id1, id2;
    if (b->new_ids) {
      id1 = b->new_ids->first;
      id2 = b->new_ids->second;
    } else {
      id1 = before.fresh_id();
      id2 = id1 + 1;
    }
    return DeathOp{id1, id2};
  }
  if (const auto* d = std::get_if<DeathOp>(&op)) {
    const auto [mx, mn] = detail::death_pair(before, *d);
    const ReebVertex& w1 = detail::other_neighbour(before, mx->id, mn->id);
    const ReebVertex& w2 = detail::other_neighbour(before, mn->id, mx->id);
    BirthOp inv;
    inv.v1 = w1.id;
    inv.v2 = w2.id;
    inv.new_max_label = mx->label;
    inv.new_min_label = mn->label;
    inv.new_ids = {{mx->id, mn->id}};
    return inv;
  }
  const auto& r = std::get<RelabelOp>(op);
  RelabelOp inv;
  for (const auto& [id, lb] : r.labels) inv.labels[id] = before.vertex(id).label;
  return inv;
}

struct ApplyResult {
  LabelledReebGraph graph;
  double total_cost = 0.0;
  std::vector<double> step_costs;
};

/// Applies the ops in order, accumulating per-step costs. A failing step is
/// reported with its position in the script.
inline ApplyResult apply_sequence(const LabelledReebGraph& g, const EditScript& script) {
  ApplyResult res{g, 0.0, {}};
  for (std::size_t i = 0; i < script.size(); ++i) {
    try {
      const double c = cost(res.graph, script[i]);
      res.graph = reebedit::apply(res.graph, script[i]);
      res.total_cost += c;
      res.step_costs.push_back(c);
    } catch (const Error& e) {
      throw InvalidDeformation("step " + std::to_string(i) + " (" + op_name(script[i]) +
                               "): " + e.what());
    }
  }
  return res;
}

/// Reverses a script: the inverse ops in opposite order, each expressed
/// against the graph state it has to undo.
inline EditScript invert_sequence(const EditScript& script, const LabelledReebGraph& start) {
  std::vector<LabelledReebGraph> states{start};
  for (const auto& op : script) states.push_back(reebedit::apply(states.back(), op));
  EditScript out;
  for (std::size_t i = script.size(); i-- > 0;) out.push_back(invert(script[i], states[i]));
  return out;
}

/// All adjacent pairs that a death may remove, keyed by storage position of
/// the pair's first vertex. Every valid graph with at least four vertices has
/// at least one: the pair with the smallest label gap always qualifies.
inline std::vector<std::pair<VertexId, VertexId>> find_deletable_pairs(
    const LabelledReebGraph& g) {
  std::vector<std::pair<VertexId, VertexId>> out;
  if (g.size() < 4) return out;
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) {
    const DeathOp d{g.cycle()[i].id, g.at(i + 1).id};
    try {
      apply(g, d);
      out.emplace_back(d.u1, d.u2);
    } catch (const InvalidDeformation&) {
    }
  }
  return out;
}

namespace detail {

// Strips the graph to two vertices, always removing the cheapest deletable
// pair (ties by lower pair label, then lower id). Appends the deaths taken.
inline LabelledReebGraph reduce_to_two(const LabelledReebGraph& g, std::vector<DeathOp>& deaths) {
  LabelledReebGraph cur = g;
  while (cur.size() > 2) {
    const auto pairs = find_deletable_pairs(cur);
    const DeathOp* best = nullptr;
    DeathOp best_op;
    double best_cost = 0.0, best_label = 0.0;
    VertexId best_id = 0;
    for (const auto& [a, b] : pairs) {
      const DeathOp d{a, b};
      const double c = cost(cur, EditOp{d});
      const double lb = std::min(cur.vertex(a).label, cur.vertex(b).label);
      const VertexId id = std::min(a, b);
      if (!best || c < best_cost || (c == best_cost && lb < best_label) ||
          (c == best_cost && lb == best_label && id < best_id)) {
        best_op = d;
        best = &best_op;
        best_cost = c;
        best_label = lb;
        best_id = id;
      }
    }
    deaths.push_back(best_op);
    cur = apply(cur, best_op);
  }
  return cur;
}

}  // namespace detail

/// A script carrying g1 onto a graph label-identical to g2 (up to rotation
/// and reflection), valid for every input pair: delete g1 down to two
/// vertices, relabel, then rebuild g2 by inverted deletions. Rarely optimal,
/// always applicable.
inline EditScript connect_canonical(const LabelledReebGraph& g1, const LabelledReebGraph& g2) {
  EditScript script;
  std::vector<DeathOp> g1_deaths;
  LabelledReebGraph cur = detail::reduce_to_two(g1, g1_deaths);
  for (const auto& d : g1_deaths) script.push_back(d);

  std::vector<DeathOp> g2_deaths;
  std::vector<LabelledReebGraph> g2_states{g2};
  LabelledReebGraph tgt = detail::reduce_to_two(g2, g2_deaths);
  for (const auto& d : g2_deaths) g2_states.push_back(apply(g2_states.back(), d));

  const auto two_ids = [](const LabelledReebGraph& g) {
    const bool first_min = g.cycle()[0].index == CriticalIndex::kMin;
    const VertexId mn = first_min ? g.cycle()[0].id : g.cycle()[1].id;
    const VertexId mx = first_min ? g.cycle()[1].id : g.cycle()[0].id;
    return std::pair<VertexId, VertexId>(mn, mx);
  };
  const auto [cur_min, cur_max] = two_ids(cur);
  const auto [tgt_min, tgt_max] = two_ids(tgt);

  if (cur.vertex(cur_min).label != tgt.vertex(tgt_min).label ||
      cur.vertex(cur_max).label != tgt.vertex(tgt_max).label) {
    RelabelOp r;
    r.labels[cur_min] = tgt.vertex(tgt_min).label;
    r.labels[cur_max] = tgt.vertex(tgt_max).label;
    script.push_back(r);
    cur = apply(cur, r);
  }

  // Replay g2's reduction backwards, translating its ids into fresh ids on
  // our side as the births reintroduce them.
  std::unordered_map<VertexId, VertexId> to_cur;
  to_cur[tgt_min] = cur_min;
  to_cur[tgt_max] = cur_max;
  for (std::size_t k = g2_deaths.size(); k-- > 0;) {
    const EditOp inv = invert(EditOp{g2_deaths[k]}, g2_states[k]);
    BirthOp b = std::get<BirthOp>(inv);
    const auto [orig_max_id, orig_min_id] = *b.new_ids;
    b.v1 = to_cur.at(b.v1);
    b.v2 = to_cur.at(b.v2);
    const VertexId f = cur.fresh_id();
    b.new_ids = {{f, f + 1}};
    to_cur[orig_max_id] = f;
    to_cur[orig_min_id] = f + 1;
    script.push_back(b);
    cur = apply(cur, b);
  }
  return script;
}

}  // namespace reebedit

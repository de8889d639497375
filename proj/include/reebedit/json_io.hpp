#pragma once

#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "reebedit/circle_function.hpp"
#include "reebedit/deformations.hpp"
#include "reebedit/errors.hpp"
#include "reebedit/reeb_graph.hpp"

namespace reebedit {

/// Raised when a document does not have the expected JSON shape. Domain
/// violations (a graph breaking its invariants, an unreplayable script) keep
/// their usual exception types; this one means the bytes themselves are wrong
/// and maps to the I/O exit code in the CLI.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

inline nlohmann::json to_json(const CircleFunction& f) {
  nlohmann::json j;
  if (f.is_trig()) {
    const auto& t = f.trig();
    j["kind"] = "trig";
    j["a0"] = t.a0;
    j["cos"] = t.cos_coeffs;
    j["sin"] = t.sin_coeffs;
  } else {
    j["kind"] = "pl";
    auto pts = nlohmann::json::array();
    for (const auto& p : f.pl().points) pts.push_back({p.position, p.value});
    j["points"] = std::move(pts);
  }
  return j;
}

inline CircleFunction function_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw FormatError("function document needs a string \"kind\" field");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "trig") {
    if (!j.contains("a0") || !j["a0"].is_number())
      throw FormatError("trig function needs a numeric \"a0\"");
    if (!j.contains("cos") || !j["cos"].is_array() || !j.contains("sin") || !j["sin"].is_array())
      throw FormatError("trig function needs \"cos\" and \"sin\" coefficient arrays");
    TrigPoly p;
    p.a0 = j["a0"].get<double>();
    for (const auto& c : j["cos"]) {
      if (!c.is_number()) throw FormatError("trig coefficients must be numbers");
      p.cos_coeffs.push_back(c.get<double>());
    }
    for (const auto& c : j["sin"]) {
      if (!c.is_number()) throw FormatError("trig coefficients must be numbers");
      p.sin_coeffs.push_back(c.get<double>());
    }
    return CircleFunction(std::move(p));
  }
  if (kind == "pl") {
    if (!j.contains("points") || !j["points"].is_array())
      throw FormatError("piecewise-linear function needs a \"points\" array");
    PiecewiseLinear p;
    for (const auto& e : j["points"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw FormatError("each breakpoint must be a [position, value] pair");
      p.points.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    return CircleFunction(std::move(p));
  }
  throw FormatError("unknown function kind \"" + kind + "\"");
}

inline nlohmann::json to_json(const LabelledReebGraph& g) {
  auto verts = nlohmann::json::array();
  for (const auto& v : g.cycle())
    verts.push_back({{"id", v.id},
                     {"label", v.label},
                     {"index", v.index == CriticalIndex::kMin ? "min" : "max"}});
  return nlohmann::json{{"vertices", std::move(verts)}};
}

inline LabelledReebGraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("vertices") || !j["vertices"].is_array())
    throw FormatError("graph document needs a \"vertices\" array");
  std::vector<ReebVertex> cyc;
  for (const auto& e : j["vertices"]) {
    if (!e.is_object() || !e.contains("id") || !e.contains("label") || !e.contains("index"))
      throw FormatError("each vertex needs \"id\", \"label\" and \"index\"");
    if (!e["id"].is_number_integer() || !e["label"].is_number() || !e["index"].is_string())
      throw FormatError("vertex fields have the wrong types");
    const std::string idx = e["index"].get<std::string>();
    if (idx != "min" && idx != "max")
      throw FormatError("vertex index must be \"min\" or \"max\"");
    cyc.push_back({e["id"].get<VertexId>(), e["label"].get<double>(),
                   idx == "min" ? CriticalIndex::kMin : CriticalIndex::kMax});
  }
  return LabelledReebGraph(std::move(cyc));  // cycle invariants are checked there
}

inline nlohmann::json to_json(const EditScript& script) {
  auto steps = nlohmann::json::array();
  for (const auto& op : script) {
    if (const auto* b = std::get_if<BirthOp>(&op)) {
      nlohmann::json s{{"op", "birth"},
                       {"edge", {b->v1, b->v2}},
                       {"labels", {b->new_max_label, b->new_min_label}}};
      if (b->new_ids) s["ids"] = {b->new_ids->first, b->new_ids->second};
      steps.push_back(std::move(s));
    } else if (const auto* d = std::get_if<DeathOp>(&op)) {
      steps.push_back({{"op", "death"}, {"pair", {d->u1, d->u2}}});
    } else {
      const auto& r = std::get<RelabelOp>(op);
      // ordered keys keep the serialization byte-stable
      const std::map<VertexId, double> ordered(r.labels.begin(), r.labels.end());
      nlohmann::json m = nlohmann::json::object();
      for (const auto& [id, label] : ordered) m[std::to_string(id)] = label;
      steps.push_back({{"op", "relabel"}, {"map", std::move(m)}});
    }
  }
  return nlohmann::json{{"steps", std::move(steps)}};
}

namespace detail {

inline VertexId id_from_key(const std::string& key) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(key, &used);
  } catch (const std::exception&) {
    throw FormatError("relabel map key \"" + key + "\" is not a vertex id");
  }
  if (used != key.size()) throw FormatError("relabel map key \"" + key + "\" is not a vertex id");
  return static_cast<VertexId>(v);
}

inline std::pair<VertexId, VertexId> id_pair(const nlohmann::json& e, const char* what) {
  if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
    throw FormatError(std::string(what) + " must be a pair of vertex ids");
  return {e[0].get<VertexId>(), e[1].get<VertexId>()};
}

}  // namespace detail

inline EditScript script_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("steps") || !j["steps"].is_array())
    throw FormatError("script document needs a \"steps\" array");
  EditScript script;
  for (const auto& s : j["steps"]) {
    if (!s.is_object() || !s.contains("op") || !s["op"].is_string())
      throw FormatError("each step needs a string \"op\" field");
    const std::string op = s["op"].get<std::string>();
    if (op == "birth") {
      if (!s.contains("edge") || !s.contains("labels"))
        throw FormatError("birth step needs \"edge\" and \"labels\"");
      const auto edge = detail::id_pair(s["edge"], "birth edge");
      const auto& labels = s["labels"];
      if (!labels.is_array() || labels.size() != 2 || !labels[0].is_number() ||
          !labels[1].is_number())
        throw FormatError("birth labels must be a [max, min] pair");
      BirthOp b;
      b.v1 = edge.first;
      b.v2 = edge.second;
      b.new_max_label = labels[0].get<double>();
      b.new_min_label = labels[1].get<double>();
      if (s.contains("ids")) b.new_ids = detail::id_pair(s["ids"], "birth ids");
      script.push_back(std::move(b));
    } else if (op == "death") {
      if (!s.contains("pair")) throw FormatError("death step needs a \"pair\"");
      const auto pair = detail::id_pair(s["pair"], "death pair");
      script.push_back(DeathOp{pair.first, pair.second});
    } else if (op == "relabel") {
      if (!s.contains("map") || !s["map"].is_object())
        throw FormatError("relabel step needs a \"map\" object");
      RelabelOp r;
      for (const auto& [key, value] : s["map"].items()) {
        if (!value.is_number()) throw FormatError("relabel targets must be numbers");
        r.labels[detail::id_from_key(key)] = value.get<double>();
      }
      script.push_back(std::move(r));
    } else {
      throw FormatError("unknown step op \"" + op + "\"");
    }
  }
  return script;
}

/// Cycle drawing for graphviz, one node per vertex annotated with its label.
inline std::string to_dot(const LabelledReebGraph& g) {
  std::ostringstream out;
  out << "graph reeb {\n  layout=circo;\n";
  char buf[64];
  for (const auto& v : g.cycle()) {
    std::snprintf(buf, sizeof buf, "%.17g", v.label);
    out << "  v" << v.id << " [label=\"" << v.id
        << (v.index == CriticalIndex::kMin ? ": min " : ": max ") << buf << "\"];\n";
  }
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i)
    out << "  v" << g.at(i).id << " -- v" << g.at(i + 1).id << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace reebedit

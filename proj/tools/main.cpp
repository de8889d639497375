// Command-line front end for the labelled Reeb graph toolkit.
//
//   reeb extract --f fn.json [--out graph.json] [--dot graph.dot]
//   reeb realize --graph graph.json [--out fn.json]
//   dist edit --g1 a.json --g2 b.json [--oracle] [--grid 0.01] [--out result.json]
//   dist pseudo --f f.json --g g.json [--resolution 512] [--out result.json]
//   trace --f f.json --g g.json [--out trace.json]
//   sweep --seed S --trials N --out sweep.csv [--degree-min D] [--degree-max D]
//         [--scale C] [--pass-tol T]
//   validate [--graph g.json ...] [--f fn.json ...]
//
// Exit codes: 0 success, 1 domain error (a library invariant was violated),
// 2 I/O, format, or usage error. REEB_EDIT_THREADS sets the sweep worker
// count; rows are buffered and written in trial order either way.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "reebedit/reebedit.hpp"

namespace {

using nlohmann::json;
using namespace reebedit;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << text;
  if (!out) throw FormatError("failed while writing " + path);
}

// JSON documents go to --out when given, otherwise to stdout.
void emit(const json& j, const std::string& out_path) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
    write_text(out_path, text);
}

std::string g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json plan_to_json(const Plan& plan) {
  const auto pairs = [](const std::vector<std::pair<VertexId, VertexId>>& ps) {
    json a = json::array();
    for (const auto& [x, y] : ps) a.push_back(json::array({x, y}));
    return a;
  };
  return json{{"matching", pairs(plan.matching)},
              {"deletions", pairs(plan.deletions)},
              {"insertions", pairs(plan.insertions)}};
}

// ---------------------------------------------------------------------------
// reeb extract / realize
// ---------------------------------------------------------------------------

int cmd_extract(const std::string& fn_path, const std::string& out_path,
                const std::string& dot_path) {
  const CircleFunction f = function_from_json(read_json_file(fn_path));
  const LabelledReebGraph g = extract(f);
  emit(to_json(g), out_path);
  if (!dot_path.empty()) write_text(dot_path, to_dot(g));
  return 0;
}

int cmd_realize(const std::string& graph_path, const std::string& out_path) {
  const LabelledReebGraph g = graph_from_json(read_json_file(graph_path));
  emit(to_json(realize(g)), out_path);
  return 0;
}

// ---------------------------------------------------------------------------
// dist edit / pseudo
// ---------------------------------------------------------------------------

int cmd_dist_edit(const std::string& g1_path, const std::string& g2_path, bool oracle, double grid,
                  const std::string& out_path) {
  const LabelledReebGraph g1 = graph_from_json(read_json_file(g1_path));
  const LabelledReebGraph g2 = graph_from_json(read_json_file(g2_path));
  EditOptions opt;
  opt.oracle = oracle;
  opt.oracle_grid = grid;
  const auto t0 = std::chrono::steady_clock::now();
  const DistanceEstimate est = edit_distance(g1, g2, opt);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json out{{"lower", est.lower},
           {"upper", est.upper},
           {"eta", est.eta},
           {"lower_source", est.lower_source},
           {"multi_round", est.multi_round},
           {"witness_script", to_json(est.witness_script)},
           {"plan", plan_to_json(est.witness_plan)},
           {"timings", json{{"edit_seconds", seconds}}}};
  if (est.oracle_value) out["oracle_value"] = *est.oracle_value;
  emit(out, out_path);
  return 0;
}

int cmd_dist_pseudo(const std::string& f_path, const std::string& g_path, int resolution,
                    const std::string& out_path) {
  const CircleFunction f = function_from_json(read_json_file(f_path));
  const CircleFunction g = function_from_json(read_json_file(g_path));
  const double lower = pseudo_lower(f, g);
  const Alignment al = pseudo_upper(f, g, resolution);
  json corr = json::array();
  for (const auto& [tf, tg] : al.correspondence) corr.push_back(json::array({tf, tg}));
  emit(json{{"lower", lower},
            {"upper", al.cost},
            {"alignment", corr},
            {"orientation", al.orientation},
            {"resolution_used", al.resolution_used}},
       out_path);
  return 0;
}

// ---------------------------------------------------------------------------
// trace
// ---------------------------------------------------------------------------

const char* kind_name(StratumKind k) {
  return k == StratumKind::kBirthDeath ? "birth_death" : "value_swap";
}

int cmd_trace(const std::string& f_path, const std::string& g_path, const std::string& out_path) {
  const CircleFunction f = function_from_json(read_json_file(f_path));
  const CircleFunction g = function_from_json(read_json_file(g_path));
  const TraceResult tr = trace(f, g);
  json events = json::array();
  for (const StratumEvent& ev : tr.events)
    events.push_back(json{{"lambda", ev.lambda},
                          {"kind", kind_name(ev.kind)},
                          {"count_delta", ev.count_delta},
                          {"angles", json::array({ev.angles[0], ev.angles[1]})}});
  emit(json{{"events", events},
            {"script", to_json(tr.script)},
            {"script_cost", tr.script_cost},
            {"c2_bound", tr.c2_bound}},
       out_path);
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct RunConfig {
  std::uint64_t seed = 1;
  std::uint64_t trials = 1;
  int degree_min = 1;
  int degree_max = 4;
  double coefficient_scale = 1.0;
  std::map<std::string, double> tolerances{{"pass", 1e-6}};

  void check() const {
    if (trials < 1) throw PreconditionViolated("trials must be at least 1");
    if (degree_min < 1) throw PreconditionViolated("degree range must start at 1 or above");
    if (degree_max < degree_min) throw PreconditionViolated("degree range is empty");
    if (!(coefficient_scale > 0.0)) throw PreconditionViolated("coefficient scale must be positive");
    for (const auto& [name, tol] : tolerances)
      if (!(tol > 0.0)) throw PreconditionViolated("tolerance \"" + name + "\" must be positive");
  }
};

// Stateless per-trial seed stream (splitmix64 over seed and stream index), so
// trials can run on any thread in any order and still see identical draws.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string sweep_row(const RunConfig& rc, std::uint64_t t) {
  const double pass_tol = rc.tolerances.at("pass");
  for (std::uint64_t attempt = 0;; ++attempt) {
    std::mt19937_64 meta(sub_seed(rc.seed, 3 * t) + attempt);
    std::uniform_int_distribution<int> deg(rc.degree_min, rc.degree_max);
    const int deg_f = deg(meta);
    const int deg_g = deg(meta);
    const CircleFunction f =
        random_simple_morse(sub_seed(rc.seed, 3 * t + 1) + attempt, deg_f, rc.coefficient_scale);
    const CircleFunction g =
        random_simple_morse(sub_seed(rc.seed, 3 * t + 2) + attempt, deg_g, rc.coefficient_scale);
    TraceResult tr;
    try {
      tr = trace(f, g);
    } catch (const NonGenericPath&) {
      if (attempt >= 32) throw;
      continue;  // the segment between this pair is not generic; redraw
    }
    const CircleFunction d = difference(f, g);
    const double c0 = cr_norm(d, 0);
    const double c1 = cr_norm(d, 1);
    const double c2 = cr_norm(d, 2);
    const DistanceEstimate est = edit_distance(extract(f), extract(g));
    const bool pass_trace = tr.script_cost <= c2 + pass_tol;
    const bool pass_upper = est.upper <= c2 + pass_tol;
    const bool pass_lower = pseudo_lower(f, g) <= est.upper + pass_tol;
    std::ostringstream row;
    row << t << ',' << g17(c0) << ',' << g17(c1) << ',' << g17(c2) << ',' << g17(est.lower) << ','
        << g17(est.upper) << ',' << g17(tr.script_cost) << ',' << tr.events.size() << ','
        << (pass_trace ? 1 : 0) << ',' << (pass_upper ? 1 : 0) << ',' << (pass_lower ? 1 : 0)
        << '\n';
    return row.str();
  }
}

unsigned sweep_threads(std::uint64_t trials) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("REEB_EDIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw FormatError("REEB_EDIT_THREADS must be a positive integer");
    n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<std::uint64_t>(n, trials));
}

int cmd_sweep(const RunConfig& rc, const std::string& out_path) {
  rc.check();
  std::vector<std::string> rows(rc.trials);
  std::atomic<std::uint64_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  const auto worker = [&] {
    for (;;) {
      const std::uint64_t t = next.fetch_add(1);
      if (t >= rc.trials) return;
      try {
        rows[t] = sweep_row(rc, t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(rc.trials);
        return;
      }
    }
  };
  const unsigned n = sweep_threads(rc.trials);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::ostringstream csv;
  csv << "# reebedit sweep csv v1; doubles carry 17 significant digits\n";
  csv << "# seed=" << rc.seed << " trials=" << rc.trials << " degree=[" << rc.degree_min << ","
      << rc.degree_max << "] scale=" << g17(rc.coefficient_scale) << " pass_tol="
      << g17(rc.tolerances.at("pass")) << "\n";
  csv << "trial,c0_norm,c1_norm,c2_norm,d_lower,d_upper,script_cost,events,"
         "pass_trace,pass_upper,pass_lower\n";
  for (const std::string& row : rows) csv << row;
  if (out_path.empty())
    std::cout << csv.str();
  else
    write_text(out_path, csv.str());
  return 0;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const std::vector<std::string>& graph_paths,
                 const std::vector<std::string>& fn_paths) {
  for (const std::string& path : graph_paths) {
    const LabelledReebGraph g = graph_from_json(read_json_file(path));
    std::cout << path << ": ok (" << g.size() << " vertices)\n";
  }
  for (const std::string& path : fn_paths) {
    const CircleFunction f = function_from_json(read_json_file(path));
    const GenericityReport rep = genericity_report(f);
    if (!rep.is_simple) {
      std::string why = rep.violations.empty() ? "not simple Morse" : rep.violations.front();
      throw NotSimpleMorse(path + ": " + why);
    }
    std::cout << path << ": ok (simple Morse, " << extract(f).size()
              << " critical points, min value gap " << g17(rep.min_value_gap) << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Labelled Reeb graphs of circle-valued functions: extraction, editing distance "
               "with certified bounds, reparameterization bounds, and homotopy tracing"};
  app.require_subcommand(1);

  // reeb extract | realize
  auto* reeb = app.add_subcommand("reeb", "Convert between functions and labelled Reeb graphs");
  reeb->require_subcommand(1);
  std::string ex_f, ex_out, ex_dot;
  auto* extract_cmd = reeb->add_subcommand("extract", "Labelled Reeb graph of a function");
  extract_cmd->add_option("--f", ex_f, "function JSON")->required();
  extract_cmd->add_option("--out", ex_out, "write the graph JSON here instead of stdout");
  extract_cmd->add_option("--dot", ex_dot, "also write a Graphviz rendering here");
  std::string re_graph, re_out;
  auto* realize_cmd = reeb->add_subcommand("realize", "Piecewise-linear function with this graph");
  realize_cmd->add_option("--graph", re_graph, "graph JSON")->required();
  realize_cmd->add_option("--out", re_out, "write the function JSON here instead of stdout");

  // dist edit | pseudo
  auto* dist = app.add_subcommand("dist", "Distances between graphs or functions");
  dist->require_subcommand(1);
  std::string de_g1, de_g2, de_out;
  bool de_oracle = false;
  double de_grid = 0.01;
  auto* edit_cmd = dist->add_subcommand("edit", "Editing distance between two labelled graphs");
  edit_cmd->add_option("--g1", de_g1, "first graph JSON")->required();
  edit_cmd->add_option("--g2", de_g2, "second graph JSON")->required();
  edit_cmd->add_flag("--oracle", de_oracle, "also run the exhaustive grid oracle (≤4 vertices)");
  edit_cmd->add_option("--grid", de_grid, "oracle grid step")->check(CLI::PositiveNumber);
  edit_cmd->add_option("--out", de_out, "write the result JSON here instead of stdout");
  std::string dp_f, dp_g, dp_out;
  int dp_resolution = 512;
  auto* pseudo_cmd =
      dist->add_subcommand("pseudo", "Reparameterization distance bounds between two functions");
  pseudo_cmd->add_option("--f", dp_f, "first function JSON")->required();
  pseudo_cmd->add_option("--g", dp_g, "second function JSON")->required();
  pseudo_cmd->add_option("--resolution", dp_resolution, "alignment grid resolution")
      ->check(CLI::PositiveNumber);
  pseudo_cmd->add_option("--out", dp_out, "write the result JSON here instead of stdout");

  // trace
  std::string tr_f, tr_g, tr_out;
  auto* trace_cmd =
      app.add_subcommand("trace", "Follow the straight-line homotopy between two functions");
  trace_cmd->add_option("--f", tr_f, "start function JSON")->required();
  trace_cmd->add_option("--g", tr_g, "end function JSON")->required();
  trace_cmd->add_option("--out", tr_out, "write the trace JSON here instead of stdout");

  // sweep
  RunConfig rc;
  std::string sw_out;
  double sw_pass_tol = 1e-6;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Random-pair experiment harness writing one CSV row per trial");
  sweep_cmd->add_option("--seed", rc.seed, "stream seed")->required();
  sweep_cmd->add_option("--trials", rc.trials, "number of random pairs")->required();
  sweep_cmd->add_option("--degree-min", rc.degree_min, "lowest trig degree drawn");
  sweep_cmd->add_option("--degree-max", rc.degree_max, "highest trig degree drawn");
  sweep_cmd->add_option("--scale", rc.coefficient_scale, "coefficient scale of the draws");
  sweep_cmd->add_option("--pass-tol", sw_pass_tol, "slack used by the pass flags");
  sweep_cmd->add_option("--out", sw_out, "write the CSV here instead of stdout");

  // validate
  std::vector<std::string> va_graphs, va_fns;
  auto* validate_cmd =
      app.add_subcommand("validate", "Check documents against the library invariants");
  validate_cmd->add_option("--graph", va_graphs, "graph JSON files")->take_all();
  validate_cmd->add_option("--f", va_fns, "function JSON files")->take_all();

  try {
    app.parse(argc, argv);
    if (extract_cmd->parsed()) return cmd_extract(ex_f, ex_out, ex_dot);
    if (realize_cmd->parsed()) return cmd_realize(re_graph, re_out);
    if (edit_cmd->parsed()) return cmd_dist_edit(de_g1, de_g2, de_oracle, de_grid, de_out);
    if (pseudo_cmd->parsed()) return cmd_dist_pseudo(dp_f, dp_g, dp_resolution, dp_out);
    if (trace_cmd->parsed()) return cmd_trace(tr_f, tr_g, tr_out);
    if (sweep_cmd->parsed()) {
      rc.tolerances["pass"] = sw_pass_tol;
      return cmd_sweep(rc, sw_out);
    }
    if (validate_cmd->parsed()) return cmd_validate(va_graphs, va_fns);
    std::cerr << app.help();
    return 2;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;  // --help and --version exit 0
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

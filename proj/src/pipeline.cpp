#include "wkam/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unistd.h>

#include "json.hpp"
#include "wkam/errors.hpp"
#include "wkam/expr.hpp"
#include "wkam/extremals.hpp"
#include "wkam/lax_oleinik.hpp"
#include "wkam/skorokhod.hpp"
#include "wkam/viscosity.hpp"
#include "wkam/weak_kam.hpp"

namespace wkam {

using Json = nlohmann::ordered_json;

bool RunSummary::all_pass() const {
  for (const CheckResult& c : checks)
    if (!c.pass) return false;
  return true;
}

const std::vector<std::string>& pipeline_commands() {
  static const std::vector<std::string> v{"solve-cauchy", "critical-value", "distance",
                                          "aubry",        "weak-kam-solve", "extremal",
                                          "aubry-orbit",  "skorokhod",      "verify"};
  return v;
}

std::string format_csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& h = header[i];
    const bool quote = h.find_first_of(",\"\r\n") != std::string::npos;
    std::string cell = h;
    if (quote) {
      cell.clear();
      for (char ch : h) cell += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      cell = "\"" + cell + "\"";
    }
    text_ += (i ? "," : "") + cell;
  }
  text_ += "\r\n";
}

void CsvTable::row(const std::vector<double>& values) {
  require(values.size() == columns_, "CSV row width does not match the header");
  for (std::size_t i = 0; i < values.size(); ++i) text_ += (i ? "," : "") + format_csv_number(values[i]);
  text_ += "\r\n";
  ++rows_;
}

std::string CsvTable::str() const { return text_; }

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      fail(ErrorCode::InvalidArgument, "write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, target);
}

namespace {

struct Context {
  const ProblemSpec& spec;
  RunRequest req;
  Problem prob;
  Json results = Json::object();
  std::vector<CheckResult> checks;
  std::vector<std::pair<std::string, std::string>> csvs;  // file name, content

  void check(const std::string& name, bool pass, double value, double limit) {
    checks.push_back({name, pass, value, limit});
  }
  const Grid& grid() const { return *prob.grid; }
  double h() const { return prob.grid->h(); }
  SolverOptions solver_options() const {
    SolverOptions o;
    o.dt = spec.number("grid", "dt");
    return o;
  }
};

Json to_json(const Vec2& p) { return Json::array({p.x, p.y}); }

struct WeakKamStage {
  ActionGraph graph;
  CriticalValue cv;
};

WeakKamStage critical_stage(Context& ctx) {
  ActionGraph g = ActionGraph::build(ctx.prob.model, ctx.prob.field, ctx.prob.grid, 0.0);
  CriticalValue cv = critical_value_cycle(g);
  ctx.results["c_cycle"] = cv.c_cycle;
  ctx.results["bracket"] = Json::array({cv.bracket_lo, cv.bracket_hi});
  ctx.results["edges"] = g.edge_count();
  return {std::move(g), std::move(cv)};
}

struct AubryStage {
  WeakKamStage wk;
  ManePotential d;
  AubryResult aubry;
};

AubryStage aubry_stage(Context& ctx) {
  WeakKamStage wk = critical_stage(ctx);
  ManePotential d = mane_potential(wk.graph);
  AubryResult a = aubry_detect(wk.graph, d, ctx.prob.field);
  ctx.results["aubry_size"] = a.nodes.size();
  ctx.results["aubry_tol"] = a.tol;
  ctx.results["tau_min"] = a.tau_min;
  ctx.results["aubry_forced"] = a.forced;
  return {std::move(wk), std::move(d), std::move(a)};
}

// d(·, y₀) for the Aubry node with the smallest residual, through the
// representation formula.
std::vector<double> weak_kam_solution(const AubryStage& st) {
  int y0 = st.aubry.nodes.front();
  for (int y : st.aubry.nodes)
    if (st.aubry.residual[y] < st.aubry.residual[y0]) y0 = y;
  std::vector<double> trace;
  for (int y : st.aubry.nodes) trace.push_back(st.d(y, y0));
  return representation(trace, st.aubry, st.d, 1e-9);
}

void solution_checks(Context& ctx, const std::vector<double>& u, double c, const std::string& prefix) {
  const double tol = viscosity_tolerance(ctx.grid(), u);
  const ViscosityReport sub = check_subsolution(ctx.prob.model, ctx.prob.field, ctx.grid(), u, c, tol);
  const ViscosityReport sup = check_supersolution(ctx.prob.model, ctx.prob.field, ctx.grid(), u, c, tol);
  ctx.check(prefix + "subsolution", sub.pass, sub.defect, tol);
  ctx.check(prefix + "supersolution", sup.pass, sup.defect, tol);
  if (sub.witness >= 0) ctx.results[prefix + "subsolution_witness"] = to_json(ctx.grid().node(sub.witness));
  if (sup.witness >= 0) ctx.results[prefix + "supersolution_witness"] = to_json(ctx.grid().node(sup.witness));
}

void cmd_solve_cauchy(Context& ctx) {
  const Expr u0e = Expr::parse(ctx.spec.text("run", "u0"));
  const auto u0 = sample_on_grid(ctx.grid(), [&](const Vec2& p) { return u0e(p); });
  const double T = ctx.spec.number("grid", "T");
  const TimeField tf = solve_cauchy(ctx.prob.model, ctx.prob.field, ctx.prob.grid, u0, T, ctx.solver_options());
  const BarrierReport b = tf.barriers();
  ctx.results["dt"] = tf.dt();
  ctx.results["steps"] = tf.steps();
  ctx.results["upper_barrier_constant"] = b.upper_constant;
  ctx.results["lower_barrier_constant"] = b.lower_constant;
  ctx.check("upper_barrier", b.upper_defect <= 1e-9, b.upper_defect, 1e-9);
  const double slack = (ctx.h() + tf.dt()) * (1.0 + T) * (1.0 + b.lipschitz_u0);
  ctx.check("lower_barrier", b.lower_defect <= slack, b.lower_defect, slack);
  ctx.check("control_bound", tf.control_bound_respected(), 0.0, 0.0);
  // Semigroup check from the midpoint slice, re-solved at the same step.
  const int mid = tf.steps() / 2;
  if (mid > 0) {
    const double tol = 3.0 * (ctx.h() + tf.dt());
    const DppReport dpp = check_dpp(tf, mid * tf.dt(), (tf.steps() - mid) * tf.dt(), tol);
    ctx.results["dpp_defect"] = dpp.max_defect;
    ctx.check("dynamic_programming", dpp.pass, dpp.max_defect, tol);
  }
  ctx.results["lipschitz_ratio"] = ctx.grid().lipschitz_ratio(tf.final());
  CsvTable t({"t", "x", "y", "w"});
  const int n_slices = std::min(4, tf.steps());
  for (int q = 0; q <= n_slices; ++q) {
    const int k = n_slices == 0 ? 0 : q * tf.steps() / n_slices;
    const auto w = tf.slice(k);
    for (int i = 0; i < ctx.grid().size(); ++i) {
      const Vec2 p = ctx.grid().node(i);
      t.row({k * tf.dt(), p.x, p.y, w[i]});
    }
  }
  ctx.csvs.push_back({"solve-cauchy.csv", t.str()});
}

void cmd_critical_value(Context& ctx) {
  WeakKamStage wk = critical_stage(ctx);
  SlopeOptions so;
  so.solver = ctx.solver_options();
  so.dt = so.solver.dt;
  const SlopeEstimate s = critical_value_slope(ctx.prob.model, ctx.prob.field, ctx.prob.grid,
                                               ctx.spec.number("run", "slope_horizon"), so);
  wk.cv.c_slope = s.c;
  wk.cv.gap = std::abs(wk.cv.c_cycle - s.c);
  ctx.results["c_slope"] = s.c;
  ctx.results["gap"] = wk.cv.gap;
  ctx.results["c"] = wk.cv.c;
  const double tol_c = ctx.spec.number("run", "tol_c");
  // Strict: tol_c = 0 is an impossible gate by design.
  ctx.check("cycle_slope_gap", wk.cv.gap < tol_c, wk.cv.gap, tol_c);
  const double tol = viscosity_tolerance(ctx.grid(), wk.cv.subsolution);
  const ViscosityReport sub =
      check_subsolution(ctx.prob.model, ctx.prob.field, ctx.grid(), wk.cv.subsolution, wk.cv.c, tol);
  ctx.check("potential_subsolution", sub.pass, sub.defect, tol);
  CsvTable t({"x", "y", "subsolution"});
  for (int i = 0; i < ctx.grid().size(); ++i) {
    const Vec2 p = ctx.grid().node(i);
    t.row({p.x, p.y, wk.cv.subsolution[i]});
  }
  ctx.csvs.push_back({"critical-value.csv", t.str()});
}

void cmd_distance(Context& ctx) {
  WeakKamStage wk = critical_stage(ctx);
  const Vec2 from = ctx.req.from.value_or(spec_point(ctx.spec, "run", "from"));
  const int y = ctx.grid().nearest(from);
  auto pot = bellman_ford_potential(wk.graph);
  if (!pot) fail(ErrorCode::NegativeCycleAtC, "negative cycle at the adopted critical value");
  const PathTree tree = shortest_to(wk.graph, *pot, y);
  ctx.results["target_node"] = y;
  ctx.results["target"] = to_json(ctx.grid().node(y));
  const double tol = viscosity_tolerance(ctx.grid(), tree.dist);
  ViscosityOptions away;
  away.exclude = ctx.grid().nodes_within(ctx.grid().node(y), 1.5 * ctx.h());
  const ViscosityReport sub = check_subsolution(ctx.prob.model, ctx.prob.field, ctx.grid(), tree.dist, wk.cv.c, tol);
  const ViscosityReport sup =
      check_supersolution(ctx.prob.model, ctx.prob.field, ctx.grid(), tree.dist, wk.cv.c, tol, away);
  ctx.check("subsolution", sub.pass, sub.defect, tol);
  ctx.check("supersolution_away_from_target", sup.pass, sup.defect, tol);
  CsvTable t({"x", "y", "d"});
  for (int i = 0; i < ctx.grid().size(); ++i) {
    const Vec2 p = ctx.grid().node(i);
    t.row({p.x, p.y, tree.dist[i]});
  }
  ctx.csvs.push_back({"distance.csv", t.str()});
}

void cmd_aubry(Context& ctx) {
  AubryStage st = aubry_stage(ctx);
  ctx.check("aubry_nonempty", !st.aubry.nodes.empty(), static_cast<double>(st.aubry.nodes.size()), 1.0);
  double rmin = std::numeric_limits<double>::infinity();
  for (double r : st.aubry.residual) rmin = std::min(rmin, r);
  ctx.check("loop_residual_nonnegative", rmin >= -st.aubry.tol, rmin, -st.aubry.tol);
  Json pts = Json::array();
  for (int y : st.aubry.nodes) pts.push_back(to_json(ctx.grid().node(y)));
  ctx.results["aubry_points"] = pts;
  CsvTable t({"x", "y", "residual", "member"});
  for (int i = 0; i < ctx.grid().size(); ++i) {
    const Vec2 p = ctx.grid().node(i);
    t.row({p.x, p.y, st.aubry.residual[i], st.aubry.contains(i) ? 1.0 : 0.0});
  }
  ctx.csvs.push_back({"aubry.csv", t.str()});
}

void cmd_weak_kam_solve(Context& ctx) {
  AubryStage st = aubry_stage(ctx);
  const std::vector<double> u = weak_kam_solution(st);
  solution_checks(ctx, u, st.wk.cv.c, "");
  const std::vector<double> back = representation(restrict_to_aubry(u, st.aubry), st.aubry, st.d, 1e-9);
  double diff = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) diff = std::max(diff, std::abs(u[i] - back[i]));
  const double lim = 5.0 * ctx.h() * (1.0 + ctx.grid().lipschitz_ratio(u));
  ctx.check("representation_round_trip", diff <= lim, diff, lim);
  CsvTable t({"x", "y", "u"});
  for (int i = 0; i < ctx.grid().size(); ++i) {
    const Vec2 p = ctx.grid().node(i);
    t.row({p.x, p.y, u[i]});
  }
  ctx.csvs.push_back({"weak-kam-solve.csv", t.str()});
}

void cmd_extremal(Context& ctx) {
  AubryStage st = aubry_stage(ctx);
  const std::vector<double> phi = weak_kam_solution(st);
  const Vec2 from = ctx.req.from.value_or(spec_point(ctx.spec, "run", "from"));
  require(ctx.prob.domain.in_closure(from), "--from lies outside the domain");
  const double T = ctx.req.horizon.value_or(ctx.spec.number("run", "horizon"));
  CalibrationOptions co;
  co.solver = ctx.solver_options();
  const CalibratedCurve cc = calibrated_extremal(ctx.prob.model, ctx.prob.field, ctx.prob.grid, phi,
                                                 st.wk.cv.c, from, T, co);
  const AubryApproach ap = aubry_convergence(cc, st.aubry, ctx.grid());
  ctx.results["window"] = cc.window;
  ctx.results["windows"] = cc.window_defect.size();
  ctx.results["window_defects"] = cc.window_defect;
  ctx.results["max_speed"] = cc.max_speed;
  ctx.results["speed_bound"] = cc.speed_bound;
  ctx.results["tail_distance"] = ap.tail_late;
  ctx.check("calibration", cc.max_abs_defect() <= cc.tol, cc.max_abs_defect(), cc.tol);
  ctx.check("speed_bound", cc.max_speed <= 1.2 * cc.speed_bound, cc.max_speed, 1.2 * cc.speed_bound);
  ctx.check("aubry_approach", ap.pass, ap.tail_late, std::max(2.0 * ctx.h(), ap.tail_mid));
  const bool two = ctx.grid().dim() == 2;
  CsvTable t(two ? std::vector<std::string>{"t", "eta_1", "eta_2", "v_1", "v_2", "l", "calibration_defect",
                                            "dist_to_aubry"}
                 : std::vector<std::string>{"t", "eta_1", "v_1", "l", "calibration_defect", "dist_to_aubry"});
  const auto& tr = cc.triple;
  std::size_t w = 0;
  for (std::size_t j = 0; j < tr.t.size(); ++j) {
    while (w + 1 < cc.window_start.size() && tr.t[j] >= cc.window_start[w + 1] - 1e-12) ++w;
    const double defect = cc.window_defect.empty() ? 0.0 : cc.window_defect[std::min(w, cc.window_defect.size() - 1)];
    if (two)
      t.row({tr.t[j], tr.eta[j].x, tr.eta[j].y, tr.v[j].x, tr.v[j].y, tr.l[j], defect, ap.distance[j]});
    else
      t.row({tr.t[j], tr.eta[j].x, tr.v[j].x, tr.l[j], defect, ap.distance[j]});
  }
  ctx.csvs.push_back({"extremal.csv", t.str()});
}

void cmd_aubry_orbit(Context& ctx) {
  AubryStage st = aubry_stage(ctx);
  const Vec2 at = ctx.req.at.value_or(spec_point(ctx.spec, "run", "at"));
  const int y = ctx.grid().nearest(at);
  const double T = ctx.req.horizon.value_or(ctx.spec.number("run", "horizon"));
  const TwoSidedCurve c = two_sided_extremal(st.wk.graph, st.d, st.aubry, y, T);
  const double cons = two_sided_consistency(c, st.d);
  double far = 0.0;
  for (int v : c.nodes) far = std::max(far, st.aubry.distance(ctx.grid(), ctx.grid().node(v)));
  ctx.results["node"] = y;
  ctx.results["loop_cost"] = c.loop_cost;
  ctx.results["loop_duration"] = c.loop_duration;
  ctx.results["loops"] = c.loops;
  ctx.check("subinterval_consistency", cons <= st.aubry.tol, cons, st.aubry.tol);
  ctx.check("stays_near_aubry", far <= 2.0 * ctx.h(), far, 2.0 * ctx.h());
  CsvTable t({"t", "x", "y", "node", "segment_cost"});
  for (std::size_t k = 0; k < c.t.size(); ++k) {
    const Vec2 p = ctx.grid().node(c.nodes[k]);
    t.row({c.t[k], p.x, p.y, static_cast<double>(c.nodes[k]), k == 0 ? 0.0 : c.cost[k - 1]});
  }
  ctx.csvs.push_back({"aubry-orbit.csv", t.str()});
}

void cmd_skorokhod(Context& ctx) {
  const Vec2 x0 = spec_point(ctx.spec, "run", "x0");
  const Vec2 v = spec_point(ctx.spec, "run", "v");
  const double T = ctx.spec.number("run", "skorokhod_T");
  require(ctx.prob.domain.in_closure(x0), "run.x0 lies outside the domain");
  const ReflectedResult r = solve_reflected(ctx.prob.domain, ctx.prob.field, x0, constant_input(v, T, 4096));
  const TripleTolerances tol = default_tolerances(r.triple);
  const TripleReport rep = validate_triple(ctx.prob.domain, ctx.prob.field, r.triple, tol);
  const std::map<std::string, double> limits{
      {"membership", tol.geo},
      {"l_nonnegative", 1e-12},
      {"complementarity", tol.comp},
      {"ode_residual", tol.ode},
      {"a_priori_bound", tol.bound_factor * (1.0 + ctx.prob.field.gamma_sup() / ctx.prob.field.delta0())}};
  for (const Clause& c : rep.clauses) ctx.check(c.name, c.pass, c.worst, limits.at(c.name));
  ctx.results["epsilon"] = r.triple.epsilon;
  ctx.results["halvings"] = r.epsilons.size();
  ctx.results["ratios"] = r.ratios;
  const bool two = ctx.prob.domain.dim() == 2;
  CsvTable t(two ? std::vector<std::string>{"t", "eta_1", "eta_2", "v_1", "v_2", "l"}
                 : std::vector<std::string>{"t", "eta_1", "v_1", "l"});
  const auto& tr = r.triple;
  for (std::size_t j = 0; j < tr.t.size(); ++j) {
    if (two)
      t.row({tr.t[j], tr.eta[j].x, tr.eta[j].y, tr.v[j].x, tr.v[j].y, tr.l[j]});
    else
      t.row({tr.t[j], tr.eta[j].x, tr.v[j].x, tr.l[j]});
  }
  ctx.csvs.push_back({"skorokhod.csv", t.str()});
}

void cmd_verify(Context& ctx) {
  AubryStage st = aubry_stage(ctx);
  const double c = st.wk.cv.c;
  std::mt19937_64 rng(static_cast<std::uint64_t>(ctx.spec.number("run", "seed")));
  std::uniform_int_distribution<int> pick(0, ctx.grid().size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int pairs = static_cast<int>(ctx.spec.number("run", "pairs"));
  auto pot = st.d.bellman_ford_potential();
  double worst_min = -1e300, worst_comb = -1e300, worst_input = -1e300, tol_used = 0.0;
  bool ok = true;
  CsvTable t({"pair", "y1", "y2", "lambda", "min_defect", "combination_defect", "limit"});
  for (int k = 0; k < pairs; ++k) {
    const int y1 = pick(rng), y2 = pick(rng);
    const double lam = unit(rng);
    const std::vector<double> u1 = shortest_to(st.wk.graph, pot, y1).dist;
    const std::vector<double> u2 = shortest_to(st.wk.graph, pot, y2).dist;
    const double tol = std::max(viscosity_tolerance(ctx.grid(), u1), viscosity_tolerance(ctx.grid(), u2));
    const ViscosityReport r1 = check_subsolution(ctx.prob.model, ctx.prob.field, ctx.grid(), u1, c, tol);
    const ViscosityReport r2 = check_subsolution(ctx.prob.model, ctx.prob.field, ctx.grid(), u2, c, tol);
    const StabilityReport s =
        stability_suite(ctx.prob.model, ctx.prob.field, ctx.grid(), u1, u2, c, lam, tol, ctx.h());
    worst_input = std::max({worst_input, r1.defect, r2.defect});
    worst_min = std::max(worst_min, s.minimum.defect);
    worst_comb = std::max(worst_comb, s.combination.defect);
    tol_used = std::max(tol_used, tol + ctx.h());
    ok = ok && s.pass();
    t.row({static_cast<double>(k), static_cast<double>(y1), static_cast<double>(y2), lam, s.minimum.defect,
           s.combination.defect, tol + ctx.h()});
  }
  ctx.check("inputs_are_subsolutions", worst_input <= tol_used, worst_input, tol_used);
  ctx.check("stability_minimum", worst_min <= tol_used, worst_min, tol_used);
  ctx.check("stability_combination", worst_comb <= tol_used, worst_comb, tol_used);
  ctx.check("stability_all_pairs", ok, 0.0, 0.0);

  const std::vector<double> u = weak_kam_solution(st);
  const double tol = viscosity_tolerance(ctx.grid(), u);
  const ComparisonReport cr =
      comparison_suite(ctx.prob.model, ctx.prob.field, ctx.grid(), u, u, c, c + 3.0 * tol, tol);
  ctx.results["comparison"] = {{"sub_defect", cr.sub.defect},
                               {"super_defect", cr.super.defect},
                               {"pair_defect", cr.pair_defect},
                               {"consistent", cr.consistent}};
  ctx.check("comparison_consistent", cr.consistent, cr.pair_defect, cr.expected_pair_defect);

  // Reflected dynamics: the a priori bound on random starts and inputs.
  int bound_fail = 0;
  double worst_ratio = 0.0;
  const ImplicitDomain& dom = ctx.prob.domain;
  const Box& box = dom.bounding_box();
  for (int k = 0; k < 5; ++k) {
    Vec2 x0;
    do {
      x0 = {box.lo.x + unit(rng) * (box.hi.x - box.lo.x),
            dom.dim() == 1 ? 0.0 : box.lo.y + unit(rng) * (box.hi.y - box.lo.y)};
    } while (!dom.in_closure(x0));
    const double th = 2.0 * 3.141592653589793 * unit(rng);
    const Vec2 v = dom.dim() == 1 ? Vec2{unit(rng) < 0.5 ? -1.0 : 1.0, 0.0} : Vec2{std::cos(th), std::sin(th)};
    const ReflectedResult r = solve_reflected(dom, ctx.prob.field, x0, constant_input(v, 1.0, 1024));
    const TripleReport rep = validate_triple(dom, ctx.prob.field, r.triple, default_tolerances(r.triple));
    worst_ratio = std::max(worst_ratio, r.triple.bound_ratio);
    if (!rep.clause("a_priori_bound").pass) ++bound_fail;
  }
  ctx.check("reflected_a_priori_bound", bound_fail == 0, worst_ratio,
            1.1 * (1.0 + ctx.prob.field.gamma_sup() / ctx.prob.field.delta0()));
  ctx.csvs.push_back({"verify.csv", t.str()});
}

}  // namespace

RunSummary run_pipeline(const ProblemSpec& spec, const RunRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cmds = pipeline_commands();
  if (std::find(cmds.begin(), cmds.end(), request.command) == cmds.end())
    fail(ErrorCode::InvalidArgument, "unknown command " + request.command);
  Context ctx{spec, request, build_problem(spec), Json::object(), {}, {}};
  const std::string& cmd = request.command;
  if (cmd == "solve-cauchy") cmd_solve_cauchy(ctx);
  else if (cmd == "critical-value") cmd_critical_value(ctx);
  else if (cmd == "distance") cmd_distance(ctx);
  else if (cmd == "aubry") cmd_aubry(ctx);
  else if (cmd == "weak-kam-solve") cmd_weak_kam_solve(ctx);
  else if (cmd == "extremal") cmd_extremal(ctx);
  else if (cmd == "aubry-orbit") cmd_aubry_orbit(ctx);
  else if (cmd == "skorokhod") cmd_skorokhod(ctx);
  else cmd_verify(ctx);

  RunSummary s;
  s.command = cmd;
  s.checks = ctx.checks;
  s.exit_code = s.all_pass() ? 0 : 3;
  const std::string dir = request.out_dir.value_or(spec.text("output", "dir"));
  const std::string formats = spec.text("output", "formats");
  if (formats.find("csv") != std::string::npos) {
    for (const auto& [name, body] : ctx.csvs) {
      const std::string path = (std::filesystem::path(dir) / name).string();
      write_atomic(path, body);
      s.files.push_back(path);
    }
  }
  Json doc = Json::object();
  doc["schema"] = "wkam-run/1";
  doc["command"] = cmd;
  doc["spec"] = Json::parse(emit_spec_json(spec));
  doc["grid"] = {{"h", ctx.h()}, {"nodes", ctx.grid().size()}, {"boundary_nodes", ctx.grid().boundary_count()}};
  doc["results"] = ctx.results;
  Json checks = Json::array();
  for (const CheckResult& c : s.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"limit", c.limit}});
  doc["checks"] = checks;
  doc["exit_code"] = s.exit_code;
  doc["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  s.json = doc.dump(2) + "\n";
  if (formats.find("json") != std::string::npos) {
    const std::string path = (std::filesystem::path(dir) / (cmd + ".json")).string();
    write_atomic(path, s.json);
    s.files.push_back(path);
  }
  return s;
}

}  // namespace wkam

#include "morse/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "morse/complex.hpp"

namespace morse {

void RunConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
  };
  positive(tol_ode, "--tol-ode");
  positive(tol_newton, "--tol-newton");
  positive(tol_quad, "--tol-quad");
  positive(tol_verify, "--tol-verify");
  if (sweep < 1) throw std::invalid_argument("--sweep must be at least 1");
  if (quad_order < 2) throw std::invalid_argument("--order must be at least 2");
  if (samples < 0) throw std::invalid_argument("--samples must not be negative");
  if (consistency_samples < 1 || lyapunov_samples < 1) throw std::invalid_argument("sample counts must be positive");
  if (scenario.empty()) throw std::invalid_argument("no scenario given");
}

std::set<std::string> parse_checks(const std::string& list) {
  static const std::set<std::string> known = {"delta2", "stokes", "leibniz", "cup", "detect"};
  std::set<std::string> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "all") {
      out.insert(known.begin(), known.end());
    } else if (known.count(item)) {
      out.insert(item);
    } else {
      throw std::invalid_argument("unknown check '" + item + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("empty check selection");
  return out;
}

Json identity_json(const IdentityCheck& c) {
  Json j;
  j["name"] = c.name;
  j["rest_point"] = c.rest_point;
  j["left"] = c.left;
  j["right"] = c.right;
  j["residual"] = c.residual;
  j["tolerance"] = c.tolerance;
  j["verdict"] = c.verdict;
  return j;
}

std::string deterministic_dump(const Json& report) {
  Json copy = report;
  copy.erase("timestamp");
  return copy.dump(2);
}

namespace {

// Thrown inside the pipeline for anything that rejects the scenario itself.
struct Rejection {
  std::string stage;
  std::string reason;
  Json detail;
};

std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

int locate(const FlowModel& m, const ChartPoint& p) {
  for (const RestPoint& r : m.rest_points())
    if (m.scenario().atlas().distance(r.point, p) < 1e-6) return r.id;
  return -1;
}

Json int_matrix(const IntMat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json stratum_json(const CornerStratum& s) {
  Json j;
  j["kind"] = to_string(s.kind);
  j["chain"] = s.chain;
  j["depth"] = s.depth;
  j["dimension"] = s.dimension;
  j["link_counts"] = s.link_counts;
  j["marker_rest_point"] = s.marker_rest_point;
  j["marked_link"] = s.marked_link;
  j["multiplicity"] = s.multiplicity;
  return j;
}

Json config_json(const RunConfig& c) {
  Json j;
  j["scenario"] = c.scenario;
  j["tol_ode"] = c.tol_ode;
  j["tol_newton"] = c.tol_newton;
  j["tol_quad"] = c.tol_quad;
  j["tol_verify"] = c.tol_verify;
  j["sweep"] = c.sweep;
  j["quad_order"] = c.quad_order;
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["consistency_samples"] = c.consistency_samples;
  j["lyapunov_samples"] = c.lyapunov_samples;
  j["checks"] = Json(std::vector<std::string>(c.checks.begin(), c.checks.end()));
  const char* stages[] = {"critical", "instantons", "cohomology", "verify"};
  j["stage"] = stages[static_cast<int>(c.stage)];
  return j;
}

// Flow and quadrature options derived from the tolerances.
FlowOptions ode_options(const RunConfig& c) {
  FlowOptions o;
  o.abs_tol = c.tol_ode;
  o.rel_tol = 10.0 * c.tol_ode;
  return o;
}

QuadratureConfig quadrature_options(const RunConfig& c) {
  QuadratureConfig q;
  q.order = c.quad_order;
  q.tolerance = c.tol_quad;
  q.flow.abs_tol = std::min(q.flow.abs_tol, 1e-3 * c.tol_quad);
  q.flow.rel_tol = 10.0 * q.flow.abs_tol;
  q.threads = c.threads;
  return q;
}

class Table {
 public:
  void row(std::string section, std::string item, std::string value, std::string tol, std::string verdict) {
    rows_.push_back({std::move(section), std::move(item), std::move(value), std::move(tol), std::move(verdict)});
  }
  std::string str() const {
    std::vector<std::size_t> w(5, 0);
    std::vector<std::array<std::string, 5>> all = {{"section", "item", "value", "tolerance", "verdict"}};
    all.insert(all.end(), rows_.begin(), rows_.end());
    for (const auto& r : all)
      for (std::size_t k = 0; k < 5; ++k) w[k] = std::max(w[k], r[k].size());
    std::ostringstream out;
    for (const auto& r : all) {
      for (std::size_t k = 0; k < 5; ++k) out << std::left << std::setw(static_cast<int>(w[k]) + 2) << r[k];
      out << '\n';
    }
    return out.str();
  }

 private:
  std::vector<std::array<std::string, 5>> rows_;
};

std::string num(double v) {
  std::ostringstream out;
  out << std::setprecision(3) << v;
  return out.str();
}

std::string ints(const std::vector<int>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + ")";
}

struct Pipeline {
  const RunConfig& config;
  Json report;
  Table table;
  std::vector<std::string> failures;

  void fail(const std::string& what) { failures.push_back(what); }

  void run();
  const Scenario& scenario_stage(std::optional<Scenario>& holder);
  void critical_stage(const FlowModel& m);
  void instanton_stage(const FlowModel& m);
  void corner_stage(const FlowModel& m);
  MorseComplex complex_stage(const FlowModel& m);
  void identity_stage(const Bridge& b);
  void detection_stage(const Bridge& b);
};

const Scenario& Pipeline::scenario_stage(std::optional<Scenario>& holder) {
  try {
    holder.emplace(resolve_scenario(config.scenario));
  } catch (const ScenarioFormatError& e) {
    throw Rejection{"scenario", "malformed scenario", Json(e.what())};
  } catch (const std::runtime_error& e) {
    throw Rejection{"scenario", "scenario could not be loaded", Json(e.what())};
  }
  const Scenario& s = *holder;
  Json sec;
  sec["name"] = s.name();
  sec["dimension"] = s.dimension();
  Json charts = Json::array();
  for (int c = 0; c < s.atlas().size(); ++c) charts.push_back(s.atlas().chart(c).id);
  sec["charts"] = charts;
  Json forms = Json::array();
  for (const NamedForm& f : s.data().forms)
    forms.push_back({{"name", f.name}, {"degree", f.form.degree()}, {"closed", f.form.declared_closed()}});
  sec["forms"] = forms;

  ConsistencyReport cr = check_consistency(s, config.consistency_samples, config.seed);
  Json cj;
  cj["samples"] = config.consistency_samples;
  cj["overlap_points"] = cr.overlap_points;
  cj["tolerance"] = 1e-9;
  cj["transition_roundtrip"] = cr.transition_roundtrip;
  cj["jacobian_sign_violations"] = cr.jacobian_sign_violations;
  cj["min_metric_eigenvalue"] = cr.min_metric_eigenvalue;
  cj["metric_asymmetry"] = cr.metric_asymmetry;
  cj["field_mismatch"] = cr.field_mismatch;
  cj["lyapunov_mismatch"] = cr.lyapunov_mismatch;
  cj["form_mismatch"] = cr.form_mismatch;
  cj["closedness"] = cr.closedness;
  cj["failures"] = cr.failures;
  cj["verdict"] = cr.passed ? "pass" : "fail";
  sec["consistency"] = cj;
  report["scenario"] = sec;
  table.row("scenario", "consistency", s.name(), "1e-09", cr.passed ? "pass" : "fail");
  if (!cr.passed) throw Rejection{"consistency", "chart consistency check failed", cj};
  return s;
}

void Pipeline::critical_stage(const FlowModel& m) {
  const Scenario& s = m.scenario();
  const int n = s.dimension();
  Json pts = Json::array();
  double worst = 0.0;
  for (const RestPoint& r : m.rest_points()) {
    Json p;
    p["id"] = r.id;
    p["index"] = r.index();
    p["f"] = r.f;
    p["point"] = chart_point_json(s.atlas(), r.point);
    p["residual"] = r.residual;
    Json eig = Json::array();
    for (Eigen::Index k = 0; k < r.linear.eigenvalues.size(); ++k)
      eig.push_back({r.linear.eigenvalues[k].real(), r.linear.eigenvalues[k].imag()});
    p["eigenvalues"] = eig;
    pts.push_back(p);
    worst = std::max(worst, r.residual);
  }
  Json sec;
  sec["rest_points"] = pts;
  std::vector<int> counts = count_by_index(m.rest_points(), n);
  sec["counts_by_index"] = counts;
  bool newton_ok = worst < config.tol_newton;
  sec["newton"] = {{"max_residual", worst}, {"tolerance", config.tol_newton}, {"verdict", newton_ok ? "pass" : "fail"}};
  table.row("critical", "newton residual", num(worst), num(config.tol_newton), newton_ok ? "pass" : "fail");
  if (!newton_ok) fail("critical: Newton residual above tolerance");
  if (const auto& gt = s.ground_truth()) {
    bool match = counts == gt->rest_points_per_index;
    sec["expected_counts"] = {{"expected", gt->rest_points_per_index}, {"verdict", match ? "pass" : "fail"}};
    table.row("critical", "counts by index", ints(counts), "exact", match ? "pass" : "fail");
    if (!match) fail("critical: rest point counts differ from ground truth");
  } else {
    sec["expected_counts"] = nullptr;
    table.row("critical", "counts by index", ints(counts), "-", "-");
  }

  // df(X) < 0 off small balls around the located rest points.
  std::vector<ChartPoint> centers;
  for (const RestPoint& r : m.rest_points()) centers.push_back(r.point);
  const double exclusion = 1e-3;
  LyapunovReport lr = check_lyapunov(s, config.lyapunov_samples, exclusion, centers, config.seed);
  Json lj;
  lj["samples_checked"] = lr.samples_checked;
  lj["excluded"] = lr.excluded;
  lj["exclusion_radius"] = exclusion;
  lj["worst_rate"] = lr.worst_rate;
  lj["tolerance"] = 0.0;
  lj["violation"] = lr.violation ? chart_point_json(s.atlas(), *lr.violation) : Json(nullptr);
  lj["verdict"] = lr.passed ? "pass" : "fail";
  report["scenario"]["lyapunov"] = lj;
  table.row("scenario", "lyapunov max df(X)", num(lr.worst_rate), "0", lr.passed ? "pass" : "fail");
  report["critical"] = sec;
  if (!lr.passed) throw Rejection{"check_lyapunov", "df(X) is not negative off the rest points", lj};
}

void Pipeline::instanton_stage(const FlowModel& m) {
  const Scenario& s = m.scenario();
  Json sec;
  sec["enumeration_complete"] = m.enumeration_complete();
  sec["warnings"] = m.warnings();
  Json items = Json::array();
  for (const Instanton& i : m.instantons()) {
    Json j;
    j["id"] = i.id;
    j["from"] = i.from;
    j["to"] = i.to;
    j["canonical_sign"] = i.canonical_sign;
    j["projection_det"] = i.projection_det;
    j["launch"] = i.launch;
    j["backward_shot"] = i.backward_shot;
    j["mid"] = chart_point_json(s.atlas(), i.mid);
    items.push_back(j);
  }
  sec["items"] = items;
  Json arcs = Json::array();
  for (const Arc& a : m.arcs())
    arcs.push_back({{"from", a.from},
                    {"to", a.to},
                    {"begin", a.begin},
                    {"end", a.end},
                    {"confirmed", a.confirmed},
                    {"contradicted", a.contradicted}});
  sec["arcs"] = arcs;

  if (const auto& gt = s.ground_truth()) {
    Json checks = Json::array();
    bool all = true;
    int expected_total = 0;
    for (const ExpectedInstantons& e : gt->instantons) {
      int x = locate(m, e.from), y = locate(m, e.to);
      int found = (x >= 0 && y >= 0) ? static_cast<int>(m.instantons_between(x, y).size()) : -1;
      bool ok = found == e.count;
      all = all && ok;
      expected_total += e.count;
      checks.push_back({{"from", x}, {"to", y}, {"expected", e.count}, {"found", found}, {"verdict", ok ? "pass" : "fail"}});
    }
    bool total_ok = expected_total == static_cast<int>(m.instantons().size());
    sec["expected"] = {{"pairs", checks},
                       {"expected_total", expected_total},
                       {"found_total", m.instantons().size()},
                       {"verdict", all && total_ok ? "pass" : "fail"}};
    table.row("instantons", "count", std::to_string(m.instantons().size()), "exact", all && total_ok ? "pass" : "fail");
    if (!(all && total_ok)) fail("instantons: counts differ from ground truth");
  } else {
    sec["expected"] = nullptr;
    table.row("instantons", "count", std::to_string(m.instantons().size()), "-", "-");
  }
  report["instantons"] = sec;

  for (const Instanton& i : m.instantons())
    if (i.degenerate)
      throw Rejection{"instantons", "non-transversal connection",
                      {{"instanton", i.id}, {"projection_det", i.projection_det}}};
  if (!m.enumeration_complete())
    throw Rejection{"instantons", "connection enumeration incomplete", Json(m.warnings())};
}

void Pipeline::corner_stage(const FlowModel& m) {
  Json sec;
  Json unstable = Json::array(), stable = Json::array(), moduli = Json::array();
  auto strata = [](const std::vector<CornerStratum>& v) {
    Json a = Json::array();
    for (const CornerStratum& s : v) a.push_back(stratum_json(s));
    return a;
  };
  std::size_t total = 0;
  for (const RestPoint& r : m.rest_points()) {
    auto u = corner_catalog_unstable(m, r.id);
    auto st = corner_catalog_stable(m, r.id);
    total += u.size() + st.size();
    unstable.push_back({{"rest_point", r.id}, {"strata", strata(u)}});
    stable.push_back({{"rest_point", r.id}, {"strata", strata(st)}});
  }
  for (const RestPoint& x : m.rest_points())
    for (const RestPoint& y : m.rest_points()) {
      if (x.id == y.id || !m.precedes(x.id, y.id)) continue;
      auto md = corner_catalog_moduli(m, x.id, y.id);
      auto tr = corner_catalog_trajectories(m, x.id, y.id);
      total += md.size() + tr.size();
      moduli.push_back({{"from", x.id}, {"to", y.id}, {"moduli", strata(md)}, {"trajectories", strata(tr)}});
    }
  sec["unstable"] = unstable;
  sec["stable"] = stable;
  sec["pairs"] = moduli;
  report["corners"] = sec;
  table.row("corners", "strata", std::to_string(total), "-", "-");
}

MorseComplex Pipeline::complex_stage(const FlowModel& m) {
  MorseComplex c = build_complex(m, choose_orientations(m.rest_points()));
  Json sec;
  sec["orientations"] = c.orientations.sign;
  sec["basis"] = c.basis;
  Json deltas = Json::array();
  for (const IntMat& d : c.delta) deltas.push_back(int_matrix(d));
  sec["delta"] = deltas;

  DeltaSquaredCheck d2 = verify_delta_squared(c);
  Json dj;
  dj["tolerance"] = 0;
  dj["verdict"] = d2.pass ? "pass" : "fail";
  if (!d2.pass) {
    Json chains = Json::array();
    for (const BrokenChain& b : d2.chains) chains.push_back({{"middle", b.middle}, {"first", b.first}, {"second", b.second}});
    dj["witness"] = {{"degree", d2.degree}, {"from", d2.from}, {"to", d2.to}, {"value", d2.value}, {"chains", chains}};
  } else {
    dj["witness"] = nullptr;
  }
  sec["delta_squared"] = dj;
  if (config.checks.count("delta2")) {
    table.row("complex", "delta^2 = 0", d2.pass ? "0" : std::to_string(d2.value), "exact", d2.pass ? "pass" : "fail");
    if (!d2.pass) fail("complex: delta squared is not zero");
  }

  CohomologyReport rep = betti_numbers(c, m);
  sec["betti"] = rep.betti;
  sec["counts"] = rep.counts;
  sec["ranks"] = rep.ranks;
  sec["nonempty_by_gap"] = rep.nonempty_by_gap;
  const Scenario& s = m.scenario();
  if (s.ground_truth() && !s.ground_truth()->triangulation.empty()) {
    std::vector<int> oracle = simplicial_oracle(triangulation(s.ground_truth()->triangulation));
    bool ok = oracle == rep.betti;
    sec["oracle"] = {{"triangulation", s.ground_truth()->triangulation}, {"betti", oracle}, {"verdict", ok ? "pass" : "fail"}};
    table.row("complex", "betti vs oracle", ints(rep.betti), "exact", ok ? "pass" : "fail");
    if (!ok) fail("complex: Betti numbers differ from the simplicial oracle");
  } else {
    sec["oracle"] = nullptr;
    table.row("complex", "betti", ints(rep.betti), "-", "-");
  }

  MorseInequalities mi = morse_inequalities(rep);
  Json degrees = Json::array();
  for (const MorseVerdict& v : mi.degrees)
    degrees.push_back(
        {{"degree", v.degree}, {"betti", v.betti}, {"count", v.count}, {"weak", v.weak}, {"strict", v.strict}});
  sec["morse_inequalities"] = {{"degrees", degrees},
                               {"euler_betti", mi.euler_betti},
                               {"euler_counts", mi.euler_counts},
                               {"euler", mi.euler},
                               {"verdict", mi.holds() ? "pass" : "fail"}};
  table.row("complex", "morse inequalities", "chi=" + std::to_string(mi.euler_betti), "exact",
            mi.holds() ? "pass" : "fail");
  if (!mi.holds()) fail("complex: Morse inequalities violated");
  report["complex"] = sec;
  return c;
}

void Pipeline::identity_stage(const Bridge& b) {
  const Scenario& s = b.model().scenario();
  const int n = s.dimension();
  const double tol = config.tol_verify;
  Json sec;
  auto record = [&](Json& list, const IdentityCheck& c, const std::string& label) {
    Json j = identity_json(c);
    j["subject"] = label;
    list.push_back(j);
    if (!c.passed()) fail("identities: " + c.name + " " + label + " " + c.verdict);
  };
  auto summarize = [&](const char* item, const Json& list) {
    double worst = 0.0;
    bool ok = true;
    for (const Json& j : list) {
      worst = std::max(worst, j["residual"].get<double>());
      ok = ok && j["verdict"] == "pass";
    }
    table.row("identities", item + (" x" + std::to_string(list.size())), num(worst), num(tol), ok ? "pass" : "fail");
  };

  sec["delta2"] = config.checks.count("delta2") ? report["complex"]["delta_squared"] : Json(nullptr);

  if (config.checks.count("stokes")) {
    Json list = Json::array();
    for (int r = 0; r < n; ++r) {
      std::vector<DifferentialForm> forms;
      std::vector<std::string> labels;
      for (const NamedForm& f : s.data().forms)
        if (f.form.degree() == r) {
          forms.push_back(f.form);
          labels.push_back(f.name);
        }
      for (int k = 0; k < config.samples; ++k) {
        std::uint64_t seed = config.seed * 1000 + static_cast<std::uint64_t>(100 * r + k);
        forms.push_back(random_form(s, r, seed));
        labels.push_back("random degree " + std::to_string(r) + " seed " + std::to_string(seed));
      }
      if (forms.empty()) continue;
      auto checks = verify_chain_map(b, forms, tol);
      for (std::size_t i = 0; i < checks.size(); ++i) record(list, checks[i], labels[i]);
    }
    sec["stokes"] = list;
    summarize("chain map", list);
  } else {
    sec["stokes"] = nullptr;
  }

  if (config.checks.count("leibniz")) {
    Json list = Json::array();
    for (int r = 0; r < n; ++r)
      for (int p = 0; r + p < n; ++p) {
        std::vector<DifferentialForm> forms;
        std::vector<Cochain> fs;
        std::vector<std::string> labels;
        for (int k = 0; k < config.samples; ++k) {
          std::uint64_t seed = config.seed * 1000 + static_cast<std::uint64_t>(500 + 100 * r + 10 * p + k);
          forms.push_back(random_form(s, r, seed));
          fs.push_back(random_cochain(b, p, seed));
          labels.push_back("form degree " + std::to_string(r) + ", cochain degree " + std::to_string(p) + ", seed " +
                           std::to_string(seed));
        }
        auto checks = verify_leibniz(b, forms, fs, tol);
        for (std::size_t i = 0; i < checks.size(); ++i) record(list, checks[i], labels[i]);
      }
    sec["leibniz"] = list;
    summarize("leibniz", list);
  } else {
    sec["leibniz"] = nullptr;
  }

  if (config.checks.count("cup")) {
    Json list = Json::array();
    auto gens = closed_generators(s);
    for (const NamedForm* g1 : gens)
      for (const NamedForm* g2 : gens) {
        if (g1->form.degree() + g2->form.degree() > n) continue;
        CupCheck c = verify_cup_diagram(b, g1->form, g2->form, tol);
        Json j = identity_json(c.numeric);
        j["subject"] = g1->name + " ^ " + g2->name;
        j["wedge_side"] = vec_json(c.wedge_side.values);
        j["product_side"] = vec_json(c.product_side.values);
        j["same_class"] = c.same_class ? Json(*c.same_class) : Json(nullptr);
        list.push_back(j);
        if (!c.numeric.passed()) fail("identities: cup " + g1->name + " ^ " + g2->name + " " + c.numeric.verdict);
      }
    sec["cup"] = list;
    summarize("cup diagram", list);
  } else {
    sec["cup"] = nullptr;
  }
  report["identities"] = sec;
}

void Pipeline::detection_stage(const Bridge& b) {
  if (!config.checks.count("detect")) {
    report["detection"] = nullptr;
    return;
  }
  Json sec;
  sec["tolerance"] = config.tol_verify;
  Json items = Json::array();
  int nontrivial = 0;
  bool ok = true;
  for (const Detection& d : detect_instantons(b, config.tol_verify)) {
    items.push_back({{"left", d.left},
                     {"right", d.right},
                     {"gap", d.gap},
                     {"nontrivial", d.nontrivial},
                     {"witness_from", d.witness_from},
                     {"witness_to", d.witness_to},
                     {"verdict", !d.nontrivial || d.witnessed() ? "pass" : "fail"}});
    if (d.nontrivial) {
      ++nontrivial;
      if (!d.witnessed()) {
        ok = false;
        fail("detection: no witness for " + d.left + " x " + d.right);
      }
    }
  }
  sec["items"] = items;
  std::vector<long long> ranks = int_class_ranks(b, config.tol_verify);
  sec["int_class_ranks"] = ranks;
  report["detection"] = sec;
  table.row("detection", "nontrivial products", std::to_string(nontrivial), num(config.tol_verify), ok ? "pass" : "fail");
}

void Pipeline::run() {
  report["tool"] = {{"name", "morse"}, {"version", kToolVersion}};
  report["timestamp"] = config.timestamp ? Json(utc_now()) : Json(nullptr);
  report["config"] = config_json(config);
  for (const char* k : {"scenario", "critical", "instantons", "corners", "complex", "identities", "detection"})
    report[k] = nullptr;
  report["rejection"] = nullptr;

  std::optional<Scenario> holder;
  const Scenario& s = scenario_stage(holder);

  ModuliConfig mc;
  mc.flow = ode_options(config);
  mc.sweep_per_arc = config.sweep;
  mc.critical.newton_tol = config.tol_newton;
  std::optional<FlowModel> model;
  try {
    model.emplace(s, mc);
  } catch (const NonHyperbolicError& e) {
    throw Rejection{"critical", "non-hyperbolic rest point", Json(e.what())};
  } catch (const NewtonError& e) {
    throw Rejection{"critical", "Newton iteration failed",
                    {{"message", e.what()}, {"seed", chart_point_json(s.atlas(), e.seed())}}};
  }
  critical_stage(*model);
  if (config.stage == Stage::Critical) return;

  instanton_stage(*model);
  corner_stage(*model);
  if (config.stage == Stage::Instantons) return;

  MorseComplex c = complex_stage(*model);
  if (config.stage == Stage::Cohomology) return;

  Bridge b(*model, c.orientations, quadrature_options(config));
  identity_stage(b);
  detection_stage(b);
}

}  // namespace

RunResult run_pipeline(const RunConfig& config) {
  config.validate();
  Pipeline p{config, Json::object(), {}, {}};
  RunResult out;
  try {
    p.run();
    out.exit_code = p.failures.empty() ? kPass : kVerificationFailure;
  } catch (const Rejection& r) {
    p.report["rejection"] = {{"stage", r.stage}, {"reason", r.reason}, {"detail", r.detail}};
    p.table.row("rejection", r.stage, r.reason, "-", "rejected");
    out.exit_code = kRejected;
  }
  const char* status[] = {"pass", "fail", "rejected"};
  p.report["verdict"] = {{"status", status[out.exit_code]}, {"exit_code", out.exit_code}, {"failures", p.failures}};
  out.report = std::move(p.report);
  out.summary = p.table.str();
  return out;
}

}  // namespace morse

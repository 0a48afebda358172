// Acceptance run over the five builtin scenarios. Prints one line per
// criterion and exits nonzero when any of them fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "morse/bridge.hpp"
#include "morse/complex.hpp"
#include "morse/report.hpp"

using namespace morse;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [" << what << "]";
    }
  }
};

const FlowModel& model(const std::string& name) {
  static std::map<std::string, std::unique_ptr<FlowModel>> cache;
  auto& slot = cache[name];
  if (!slot) slot = std::make_unique<FlowModel>(builtin_scenario(name));
  return *slot;
}

const Bridge& bridge(const std::string& name) {
  static std::map<std::string, std::unique_ptr<Bridge>> cache;
  auto& slot = cache[name];
  if (!slot) {
    const FlowModel& m = model(name);
    QuadratureConfig q;
    q.threads = threads_from_environment();
    slot = std::make_unique<Bridge>(m, choose_orientations(m.rest_points()), q);
  }
  return *slot;
}

int locate(const FlowModel& m, const ChartPoint& p) {
  for (const RestPoint& r : m.rest_points())
    if (m.scenario().atlas().distance(r.point, p) < 1e-6) return r.id;
  return -1;
}

std::map<std::pair<int, int>, int> pair_counts(const FlowModel& m) {
  std::map<std::pair<int, int>, int> out;
  for (const Instanton& i : m.instantons()) ++out[{i.from, i.to}];
  return out;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

void rest_points(Outcome& o) {
  double worst_time = 0.0, worst_residual = 0.0;
  for (const Scenario& s : builtin_scenarios()) {
    auto t0 = Clock::now();
    std::vector<RestPoint> pts = find_rest_points(s);
    double t = seconds_since(t0);
    worst_time = std::max(worst_time, t);
    o.require(count_by_index(pts, s.dimension()) == s.ground_truth()->rest_points_per_index, s.name() + " counts");
    for (const RestPoint& r : pts) worst_residual = std::max(worst_residual, r.residual);
    o.require(t < 5.0, s.name() + " time");
  }
  o.require(worst_residual < 1e-12, "residual");
  o.detail << "max residual " << sci(worst_residual) << ", slowest " << sci(worst_time) << " s";
}

void instanton_counts(Outcome& o) {
  int total = 0;
  for (const Scenario& s : builtin_scenarios()) {
    const FlowModel& m = model(s.name());
    int expected = 0;
    for (const ExpectedInstantons& e : s.ground_truth()->instantons) {
      int x = locate(m, e.from), y = locate(m, e.to);
      o.require(x >= 0 && y >= 0 && static_cast<int>(m.instantons_between(x, y).size()) == e.count,
                s.name() + " pair count");
      expected += e.count;
    }
    o.require(expected == static_cast<int>(m.instantons().size()), s.name() + " total");
    total += static_cast<int>(m.instantons().size());

    ModuliConfig half;
    half.flow.abs_tol *= 0.5;
    half.flow.rel_tol *= 0.5;
    FlowModel tight(s, half);
    o.require(pair_counts(tight) == pair_counts(m), s.name() + " halved tolerance");
  }
  o.detail << total << " instantons, unchanged at half tolerance";
}

void delta_squared(Outcome& o) {
  int complexes = 0;
  for (const Scenario& s : builtin_scenarios()) {
    const FlowModel& m = model(s.name());
    o.require(verify_delta_squared(build_complex(m, choose_orientations(m.rest_points()))).pass, s.name());
    ++complexes;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      o.require(verify_delta_squared(build_complex(m, random_orientations(m.rest_points(), seed))).pass,
                s.name() + " seed " + std::to_string(seed));
      ++complexes;
    }
  }
  o.detail << complexes << " complexes";
}

void betti(Outcome& o) {
  for (const Scenario& s : builtin_scenarios()) {
    const FlowModel& m = model(s.name());
    CohomologyReport rep = betti_numbers(build_complex(m, choose_orientations(m.rest_points())), m);
    o.require(rep.betti == simplicial_oracle(triangulation(s.ground_truth()->triangulation)), s.name() + " oracle");
    MorseInequalities mi = morse_inequalities(rep);
    o.require(mi.holds(), s.name() + " inequalities");
    o.require(mi.euler_betti == mi.euler_counts, s.name() + " euler");
  }
  o.detail << "all five agree with the simplicial oracle";
}

void chain_map(Outcome& o) {
  const Bridge& well = bridge("double_well_circle");
  const DifferentialForm& g = well.model().scenario().form("sin2pit1");
  Cochain d = well.delta(int_cochain(well, g));
  for (Eigen::Index k = 0; k < d.values.size(); ++k)
    o.require(std::fabs(std::fabs(d.values[k]) - 2.0) < 1e-6, "double well |delta Int| = 2");
  double worst = verify_chain_map(well, g, 1e-6).residual;

  int forms = 0;
  for (const Scenario& s : builtin_scenarios()) {
    const Bridge& b = bridge(s.name());
    for (int r = 0; r < s.dimension(); ++r) {
      std::vector<DifferentialForm> ws;
      for (std::uint64_t k = 0; k < 10; ++k) ws.push_back(random_form(s, r, 7000 + 100 * r + k));
      for (const IdentityCheck& c : verify_chain_map(b, ws, 1e-6)) {
        o.require(c.passed(), s.name() + " degree " + std::to_string(r));
        worst = std::max(worst, c.residual);
        ++forms;
      }
    }
  }
  o.detail << forms << " random forms, max residual " << sci(worst);
}

void leibniz(Outcome& o) {
  const Bridge& b = bridge("flat_torus");
  const Scenario& s = b.model().scenario();
  // Degree pairs (form, cochain) with form + cochain + 1 <= 2.
  const std::pair<int, int> degrees[] = {{0, 0}, {0, 1}, {1, 0}};
  std::map<std::pair<int, int>, std::pair<std::vector<DifferentialForm>, std::vector<Cochain>>> batches;
  for (std::uint64_t k = 0; k < 10; ++k) {
    auto [r, p] = degrees[k % 3];
    auto& batch = batches[{r, p}];
    batch.first.push_back(random_form(s, r, 9100 + k));
    batch.second.push_back(random_cochain(b, p, 9100 + k));
  }
  double worst = 0.0;
  int pairs = 0;
  for (const auto& [key, batch] : batches)
    for (const IdentityCheck& c : verify_leibniz(b, batch.first, batch.second, 1e-6)) {
      o.require(c.passed(), "degrees " + std::to_string(key.first) + "," + std::to_string(key.second));
      worst = std::max(worst, c.residual);
      ++pairs;
    }
  o.detail << pairs << " pairs, max residual " << sci(worst);
}

void cup(Outcome& o) {
  const Bridge& torus = bridge("flat_torus");
  const Scenario& ts = torus.model().scenario();
  CupCheck t = verify_cup_diagram(torus, ts.form("dt1"), ts.form("dt2"), 1e-4);
  o.require(t.numeric.passed() && t.same_class == std::optional<bool>(true), "torus");

  const Bridge& sphere = bridge("round_sphere_height");
  const Scenario& ss = sphere.model().scenario();
  CupCheck p = verify_cup_diagram(sphere, ss.form("area"), ss.form("one"), 1e-6);
  o.require(p.numeric.passed() && p.same_class == std::optional<bool>(true), "sphere");

  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Bridge tf(torus.model(), random_orientations(torus.model().rest_points(), seed));
    CupCheck a = verify_cup_diagram(tf, ts.form("dt1"), ts.form("dt2"), 1e-4);
    o.require(a.numeric.verdict == t.numeric.verdict && a.same_class == t.same_class, "torus flip");
    Bridge sf(sphere.model(), random_orientations(sphere.model().rest_points(), seed));
    CupCheck c = verify_cup_diagram(sf, ss.form("area"), ss.form("one"), 1e-6);
    o.require(c.numeric.verdict == p.numeric.verdict && c.same_class == p.same_class, "sphere flip");
  }
  o.detail << "torus residual " << sci(t.numeric.residual) << ", sphere residual " << sci(p.numeric.residual)
           << ", stable under 4 orientation flips";
}

void detection(Outcome& o) {
  int nontrivial = 0;
  for (const Scenario& s : builtin_scenarios())
    for (const Detection& d : detect_instantons(bridge(s.name()), 1e-6))
      if (d.nontrivial) {
        ++nontrivial;
        o.require(d.witnessed(), s.name() + " " + d.left + " x " + d.right);
      }
  o.require(nontrivial > 0, "no nontrivial product");
  o.detail << nontrivial << " nontrivial products, all witnessed";
}

void order_and_basins(Outcome& o) {
  double worst = 0.0;
  for (const Scenario& s : builtin_scenarios()) {
    const Bridge& b = bridge(s.name());
    QuadratureConfig fine;
    fine.order = 64;
    fine.threads = b.config().threads;
    Bridge f(b.model(), b.orientations(), fine);
    std::map<int, std::vector<const DifferentialForm*>> by_degree;
    for (const NamedForm* g : closed_generators(s)) by_degree[g->form.degree()].push_back(&g->form);
    for (const auto& [r, forms] : by_degree) {
      auto coarse = int_cochains(b, forms), refined = int_cochains(f, forms);
      for (std::size_t k = 0; k < forms.size(); ++k)
        if (coarse[k].values.size())
          worst = std::max(worst, (coarse[k].values - refined[k].values).cwiseAbs().maxCoeff());
    }
    BasinReport basins = basin_partition(b.model(), 10000, 2024);
    o.require(basins.classified == basins.samples && basins.samples == 10000, s.name() + " basins");
  }
  o.require(worst < 1e-7, "order 32 vs 64");
  o.detail << "order change " << sci(worst) << ", 5 x 10^4 points classified";
}

Clock::time_point g_start;

void budget_and_determinism(Outcome& o) {
  RunConfig c;
  c.scenario = "flat_torus";
  c.seed = 17;
  c.samples = 1;
  c.threads = threads_from_environment();
  RunResult a = run_pipeline(c);
  RunResult b = run_pipeline(c);
  o.require(a.exit_code == kPass, "report verdict");
  o.require(deterministic_dump(a.report) == deterministic_dump(b.report), "byte-identical reports");
  double elapsed = seconds_since(g_start);
  o.require(elapsed < 300.0, "time budget");
  o.detail << "acceptance run " << sci(elapsed) << " s, reports identical";
}

}  // namespace

int main() {
  g_start = Clock::now();
  struct Criterion {
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const Criterion criteria[] = {
      {"rest points", rest_points},
      {"instanton counts", instanton_counts},
      {"delta squared", delta_squared},
      {"Betti numbers", betti},
      {"chain map", chain_map},
      {"Leibniz rule", leibniz},
      {"cup diagram", cup},
      {"detection witnesses", detection},
      {"quadrature order and basins", order_and_basins},
      {"budget and determinism", budget_and_determinism},
  };
  int failed = 0;
  int number = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    auto t0 = Clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failed += !o.pass;
    std::printf("%2d %-28s %s  %s (%.1f s)\n", ++number, c.name, o.pass ? "PASS" : "FAIL", o.detail.str().c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}

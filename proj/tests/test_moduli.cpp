#include <doctest.h>

#include <cmath>
#include <map>

#include "morse/moduli.hpp"

using namespace morse;

namespace {

int locate(const FlowModel& m, const ChartPoint& p) {
  for (const RestPoint& r : m.rest_points())
    if (m.scenario().atlas().distance(r.point, p) < 1e-6) return r.id;
  return -1;
}

ChartPoint pt(int chart, std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return {chart, v};
}

const FlowModel& model(const std::string& name) {
  static std::map<std::string, FlowModel> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, FlowModel(builtin_scenario(name))).first;
  return it->second;
}

}  // namespace

TEST_CASE("instanton counts match ground truth") {
  for (const Scenario& s : builtin_scenarios()) {
    CAPTURE(s.name());
    const FlowModel& m = model(s.name());
    CHECK(m.warnings().empty());
    int expected_total = 0;
    for (const ExpectedInstantons& e : s.ground_truth()->instantons) {
      int x = locate(m, e.from), y = locate(m, e.to);
      REQUIRE(x >= 0);
      REQUIRE(y >= 0);
      CHECK(static_cast<int>(m.instantons_between(x, y).size()) == e.count);
      expected_total += e.count;
    }
    CHECK(static_cast<int>(m.instantons().size()) == expected_total);
  }
}

TEST_CASE("instanton counts are stable when the tolerance is halved") {
  for (const char* name : {"double_well_circle", "ellipsoid_sphere", "flat_torus"}) {
    ModuliConfig tight;
    tight.flow.abs_tol /= 2;
    tight.flow.rel_tol /= 2;
    FlowModel a(builtin_scenario(name));
    FlowModel b(builtin_scenario(name), tight);
    REQUIRE(a.instantons().size() == b.instantons().size());
    for (std::size_t i = 0; i < a.instantons().size(); ++i) {
      CHECK(a.instantons()[i].from == b.instantons()[i].from);
      CHECK(a.instantons()[i].to == b.instantons()[i].to);
      CHECK(a.instantons()[i].canonical_sign == b.instantons()[i].canonical_sign);
    }
  }
}

TEST_CASE("sign examples on the circles") {
  const FlowModel& c = model("circle_cos");
  auto insts = c.instantons_between(1, 0);
  REQUIRE(insts.size() == 2);
  int sum = 0;
  for (const Instanton* g : insts) {
    sum += g->canonical_sign;
    // the orbit leaving 0 in the positive direction is the positive one
    double mid = g->mid.coords[0];
    CHECK((std::fabs(mid - 0.25) < 1e-6 || std::fabs(mid - 0.75) < 1e-6));
    CHECK(g->canonical_sign == (mid < 0.5 ? 1 : -1));
  }
  CHECK(sum == 0);

  const FlowModel& w = model("double_well_circle");
  Orientations o = choose_orientations(w.rest_points());
  int max0 = locate(w, pt(0, {0.0}));
  int low = locate(w, pt(0, {0.25}));
  int high = locate(w, pt(0, {0.75}));
  REQUIRE(w.instantons_between(max0, low).size() == 1);
  REQUIRE(w.instantons_between(max0, high).size() == 1);
  CHECK(instanton_sign(*w.instantons_between(max0, low)[0], o) == 1);
  CHECK(instanton_sign(*w.instantons_between(max0, high)[0], o) == -1);
}

TEST_CASE("flipping an orientation negates the incident signs") {
  for (const char* name : {"ellipsoid_sphere", "flat_torus"}) {
    const FlowModel& m = model(name);
    Orientations base = choose_orientations(m.rest_points());
    for (std::size_t k = 0; k < m.rest_points().size(); ++k) {
      Orientations flipped = base;
      flipped.sign[k] = -1;
      for (const Instanton& g : m.instantons()) {
        bool incident = g.from == static_cast<int>(k) || g.to == static_cast<int>(k);
        CHECK(instanton_sign(g, flipped) == (incident ? -1 : 1) * instanton_sign(g, base));
      }
    }
  }
}

TEST_CASE("instanton orbits are invariant sets of the symmetric scenarios") {
  const FlowModel& t = model("flat_torus");
  for (const Instanton& g : t.instantons()) {
    // every torus instanton runs along a coordinate circle
    const RestPoint& x = t.rest_point(g.from);
    const RestPoint& y = t.rest_point(g.to);
    bool shared0 = std::fabs(x.point.coords[0] - y.point.coords[0]) < 1e-9;
    bool shared1 = std::fabs(x.point.coords[1] - y.point.coords[1]) < 1e-9;
    REQUIRE((shared0 || shared1));
    int axis = shared0 ? 0 : 1;
    CHECK(std::fabs(g.mid.coords[axis] - x.point.coords[axis]) < 1e-6);
    CHECK(t.scenario().lyapunov(g.mid) == doctest::Approx((x.f + y.f) / 2).epsilon(1e-9));
  }

  const FlowModel& e = model("ellipsoid_sphere");
  for (const Instanton& g : e.instantons()) {
    // saddles (y-axis) link to minima in the xy-plane and to maxima in the yz-plane
    auto xyz = sphere_embedding(g.mid.chart);
    std::vector<double> c(g.mid.coords.data(), g.mid.coords.data() + 2);
    bool to_min = e.rest_point(g.to).index() == 0;
    double off_plane = to_min ? xyz[2].evaluate(c) : xyz[0].evaluate(c);
    CHECK(std::fabs(off_plane) < 1e-6);
  }
}

TEST_CASE("instanton trajectories join their endpoints") {
  for (const char* name : {"double_well_circle", "ellipsoid_sphere", "flat_torus"}) {
    const FlowModel& m = model(name);
    auto balls = m.capture(1e-3);
    for (const Instanton& g : m.instantons()) {
      StopRule rule{balls, std::nullopt, 1e3};
      Trajectory fwd = integrate_trajectory(m.scenario(), g.mid, Direction::Forward, rule, m.config().flow);
      Trajectory bwd = integrate_trajectory(m.scenario(), g.mid, Direction::Backward, rule, m.config().flow);
      CHECK(fwd.captured == std::optional<int>(g.to));
      CHECK(bwd.captured == std::optional<int>(g.from));
    }
  }
}

TEST_CASE("moduli charts") {
  const FlowModel& s = model("round_sphere_height");
  ModuliChart top = sample_moduli(s, 1, 0, 16);
  CHECK(top.gap == 2);
  REQUIRE(top.arcs.size() == 1);
  const Arc& a = s.arcs()[static_cast<std::size_t>(top.arcs[0])];
  CHECK(a.end - a.begin == doctest::Approx(2 * M_PI));
  CHECK(a.contradicted == 0);
  CHECK(!top.samples.empty());
  for (const ModuliSample& q : top.samples) {
    CHECK(q.level < s.rest_point(1).f);
    CHECK(q.level > s.rest_point(0).f);
  }

  const FlowModel& t = model("flat_torus");
  ModuliChart quad = sample_moduli(t, 3, 0, 8);
  CHECK(quad.arcs.size() == 4);
  for (int id : quad.arcs) {
    const Arc& q = t.arcs()[static_cast<std::size_t>(id)];
    CHECK(q.end - q.begin == doctest::Approx(M_PI / 2).epsilon(1e-6));
  }
  // the two saddles are not connected to each other
  CHECK(sample_moduli(t, 1, 2, 8).samples.empty());
  CHECK(t.trajectory_components(1, 2) == 0);
  CHECK(t.precedes(3, 0));
  CHECK(!t.precedes(0, 3));

  ModuliChart one = sample_moduli(t, 1, 0, 8);
  CHECK(one.gap == 1);
  CHECK(one.instantons.size() == 2);
}

TEST_CASE("corner strata obey the dimension law") {
  for (const char* name : {"ellipsoid_sphere", "flat_torus", "double_well_circle"}) {
    const FlowModel& m = model(name);
    int n = m.dimension();
    for (const RestPoint& x : m.rest_points()) {
      for (const CornerStratum& c : corner_catalog_unstable(m, x.id)) {
        CHECK(c.dimension == x.index() - c.depth);
        CHECK(c.chain.front() == x.id);
        CHECK(c.multiplicity > 0);
      }
      for (const CornerStratum& c : corner_catalog_stable(m, x.id)) {
        CHECK(c.dimension == n - x.index() - c.depth);
        CHECK(c.chain.back() == x.id);
      }
      for (const RestPoint& y : m.rest_points()) {
        if (!m.precedes(x.id, y.id)) continue;
        int gap = x.index() - y.index();
        for (const CornerStratum& c : corner_catalog_moduli(m, x.id, y.id)) CHECK(c.dimension == gap - c.depth);
        for (const CornerStratum& c : corner_catalog_trajectories(m, x.id, y.id))
          CHECK(c.dimension == gap - 1 - c.depth);
      }
    }
  }

  // the torus maximum: its unstable set is the whole torus, with boundary
  // strata through each saddle and the minimum
  const FlowModel& t = model("flat_torus");
  auto cat = corner_catalog_unstable(t, 3);
  int depth1 = 0, depth2 = 0;
  for (const CornerStratum& c : cat) {
    if (c.depth == 1) ++depth1;
    if (c.depth == 2) ++depth2;
  }
  CHECK(depth1 == 3);
  CHECK(depth2 == 2);
}

TEST_CASE("basin partition classifies every sample") {
  for (const char* name : {"flat_torus", "ellipsoid_sphere", "double_well_circle"}) {
    const FlowModel& m = model(name);
    BasinReport r = basin_partition(m, 400, 7);
    CHECK(r.samples == 400);
    CHECK(r.classified_fraction() == 1.0);
    for (const auto& [pair, count] : r.pairs) {
      CHECK(count > 0);
      CHECK(m.rest_point(pair.first).index() >= m.rest_point(pair.second).index());
    }
  }
  BasinReport a = basin_partition(model("flat_torus"), 100, 11);
  BasinReport b = basin_partition(model("flat_torus"), 100, 11);
  CHECK(a.pairs == b.pairs);

  // a point on the unstable axis of a torus saddle
  const FlowModel& t = model("flat_torus");
  auto [from, to] = classify_point(t, pt(0, {0.2, 0.5}), t.config().flow);
  CHECK(from == std::optional<int>(locate(t, pt(0, {0.0, 0.5}))));
  CHECK(to == std::optional<int>(locate(t, pt(0, {0.5, 0.5}))));
}

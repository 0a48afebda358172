#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "morse/flow.hpp"

using namespace morse;

namespace {

ChartPoint pt(int chart, std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return {chart, v};
}

std::vector<CaptureBall> torus_rest(double radius) {
  return {{0, pt(0, {0.0, 0.0}), radius}, {1, pt(0, {0.5, 0.0}), radius}, {2, pt(0, {0.0, 0.5}), radius},
          {3, pt(0, {0.5, 0.5}), radius}};
}

std::vector<CaptureBall> ellipsoid_rest(double radius) {
  return {{0, pt(0, {0.0, 0.0}), radius}, {1, pt(1, {0.0, 0.0}), radius}, {2, pt(0, {0.0, 1.0}), radius},
          {3, pt(0, {0.0, -1.0}), radius}, {4, pt(0, {1.0, 0.0}), radius}, {5, pt(0, {-1.0, 0.0}), radius}};
}

}  // namespace

TEST_CASE("circle_cos flows from 0.3 to the minimum") {
  const Scenario& s = builtin_scenario("circle_cos");
  Trajectory tr = integrate_trajectory(s, pt(0, {0.3}), Direction::Forward, {});
  CHECK(tr.termination == Termination::RestReached);
  CHECK(std::fabs(tr.back().point.coords[0] - 0.5) < 1e-6);
  CHECK(tr.monotonicity_violations == 0);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) CHECK(tr.samples[i].f <= tr.samples[i - 1].f + 1e-9);
}

TEST_CASE("torus flow preserves the coordinate axis") {
  const Scenario& s = builtin_scenario("flat_torus");
  Trajectory tr = integrate_trajectory(s, pt(0, {0.25, 0.0}), Direction::Forward, {});
  CHECK(tr.termination == Termination::RestReached);
  for (const FlowSample& x : tr.samples) CHECK(x.point.coords[1] == 0.0);
  CHECK(std::fabs(tr.back().point.coords[0] - 0.5) < 1e-6);
}

TEST_CASE("a rest point is stationary and captured by itself") {
  const Scenario& s = builtin_scenario("flat_torus");
  StopRule stop;
  stop.capture = torus_rest(1e-4);
  Trajectory tr = integrate_trajectory(s, pt(0, {0.5, 0.0}), Direction::Forward, stop);
  CHECK(tr.samples.size() == 1);
  REQUIRE(tr.captured.has_value());
  CHECK(*tr.captured == 1);
}

TEST_CASE("classify_limit examples on the torus") {
  const Scenario& s = builtin_scenario("flat_torus");
  auto rest = torus_rest(1e-4);
  Trajectory fwd = integrate_trajectory(s, pt(0, {0.25, 0.25}), Direction::Forward, {});
  Trajectory bwd = integrate_trajectory(s, pt(0, {0.25, 0.25}), Direction::Backward, {});
  CHECK(classify_limit(s, fwd, rest, 1e-4) == std::optional<int>(3));
  CHECK(classify_limit(s, bwd, rest, 1e-4) == std::optional<int>(0));

  StopRule short_run;
  short_run.max_time = 1e-3;
  Trajectory cut = integrate_trajectory(s, pt(0, {0.2, 0.3}), Direction::Forward, short_run);
  CHECK(cut.termination == Termination::MaxTime);
  CHECK_FALSE(classify_limit(s, cut, rest, 1e-4).has_value());

  CHECK_THROWS_AS(classify_limit(s, fwd, rest, 0.3), ClassificationError);
}

TEST_CASE("level crossings") {
  const Scenario& circle = builtin_scenario("circle_cos");
  Trajectory inst = integrate_trajectory(circle, pt(0, {1e-6}), Direction::Forward, {});
  ChartPoint mid = level_crossing(circle, inst, 0.0);
  CHECK(std::fabs(mid.coords[0] - 0.25) < 1e-9);
  CHECK(std::fabs(circle.lyapunov(mid)) < 1e-10);
  CHECK_THROWS_AS(level_crossing(circle, inst, inst.samples.front().f), LevelError);
  CHECK_THROWS_AS(level_crossing(circle, inst, 5.0), LevelError);

  const Scenario& torus = builtin_scenario("flat_torus");
  Trajectory axis = integrate_trajectory(torus, pt(0, {1e-6, 0.0}), Direction::Forward, {});
  ChartPoint p = level_crossing(torus, axis, 1.0);
  CHECK(std::fabs(p.coords[0] - 0.25) < 1e-9);
  CHECK(p.coords[1] == 0.0);

  // The level stop rule lands on the level directly.
  StopRule stop;
  stop.level = 0.5;
  Trajectory to_level = integrate_trajectory(circle, pt(0, {0.01}), Direction::Forward, stop);
  CHECK(to_level.termination == Termination::LevelReached);
  CHECK(std::fabs(to_level.back().f - 0.5) < 1e-10);
  CHECK(std::fabs(to_level.back().point.coords[0] - 1.0 / 6.0) < 1e-9);
}

TEST_CASE("sphere trajectories hand off between charts consistently") {
  const Scenario& s = builtin_scenario("round_sphere_height");
  // Start near the north pole in chart A: far from the origin of A.
  Trajectory tr = integrate_trajectory(s, pt(1, {0.01, 0.02}), Direction::Forward, {});
  CHECK(tr.termination == Termination::RestReached);
  CHECK(tr.back().point.chart == 0);
  CHECK(tr.back().point.coords.norm() < 1e-6);
  int handoffs = 0;
  for (std::size_t i = 1; i < tr.samples.size(); ++i) {
    const FlowSample& a = tr.samples[i - 1];
    const FlowSample& b = tr.samples[i];
    if (a.point.chart != b.point.chart) {
      ++handoffs;
      auto mapped = s.atlas().to_chart(a.point, b.point.chart);
      REQUIRE(mapped.has_value());
      CHECK((*mapped - b.point.coords).norm() < 1e-7);
    }
  }
  CHECK(handoffs == 1);
  CHECK(tr.monotonicity_violations == 0);
}

TEST_CASE("variational frames follow the linearized flow") {
  // On the round sphere chart A, X = -t, so W(t) = exp(-t) W(0).
  const Scenario& s = builtin_scenario("round_sphere_height");
  StopRule stop;
  stop.max_time = 2.0;
  AccumulatorRate rate = [](const ChartPoint&, const Vec& v, const Mat&, Vec& out) { out[0] = v.norm(); };
  AugmentedFlow r = integrate_augmented(s, pt(0, {0.5, 0.0}), Direction::Forward, stop, Mat::Identity(2, 2), 1, rate);
  CHECK(r.trajectory.termination == Termination::MaxTime);
  CHECK((r.frame - std::exp(-2.0) * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);
  // Arc length along the ray equals the coordinate distance travelled.
  CHECK(r.accumulators[0] == doctest::Approx(0.5 - 0.5 * std::exp(-2.0)).epsilon(1e-9));
}

TEST_CASE("time reversal duality") {
  std::mt19937_64 rng(17);
  for (const char* name : {"flat_torus", "ellipsoid_sphere"}) {
    const Scenario& s = builtin_scenario(name);
    Scenario rev = s.reversed();
    auto rest = std::string(name) == "flat_torus" ? torus_rest(1e-4) : ellipsoid_rest(1e-4);
    StopRule stop;
    stop.capture = rest;
    for (int k = 0; k < 50; ++k) {
      ChartPoint p = s.atlas().sample(rng);
      Trajectory back = integrate_trajectory(s, p, Direction::Backward, stop);
      Trajectory fwd_rev = integrate_trajectory(rev, p, Direction::Forward, stop);
      CHECK(back.captured == fwd_rev.captured);
      CHECK(back.captured.has_value());
    }
  }
}

TEST_CASE("classification is stable when the tolerance is halved") {
  std::mt19937_64 rng(23);
  const Scenario& s = builtin_scenario("ellipsoid_sphere");
  StopRule stop;
  stop.capture = ellipsoid_rest(1e-3);
  FlowOptions loose, tight;
  tight.abs_tol = loose.abs_tol / 2;
  tight.rel_tol = loose.rel_tol / 2;
  loose.record_samples = tight.record_samples = false;
  int mismatches = 0;
  for (int k = 0; k < 200; ++k) {
    ChartPoint p = s.atlas().sample(rng);
    auto a = integrate_trajectory(s, p, Direction::Forward, stop, loose).captured;
    auto b = integrate_trajectory(s, p, Direction::Forward, stop, tight).captured;
    if (a != b) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("trajectory JSON export") {
  const Scenario& s = builtin_scenario("circle_cos");
  Trajectory tr = integrate_trajectory(s, pt(0, {0.3}), Direction::Forward, {});
  Json j = trajectory_json(s, tr);
  CHECK(j["direction"] == "forward");
  CHECK(j["points"].size() == tr.samples.size());
  CHECK(j["points"][0]["coords"][0].get<double>() == 0.3);
}

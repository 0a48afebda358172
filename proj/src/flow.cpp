#include "morse/flow.hpp"

#include <cmath>
#include <limits>

namespace morse {

const char* to_string(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Captured:
      return "captured";
    case Termination::RestReached:
      return "rest-reached";
    case Termination::LevelReached:
      return "level-reached";
    case Termination::MaxTime:
      return "max-time";
    case Termination::StepFailure:
      return "step-failure";
    case Termination::CoverageError:
      return "coverage-error";
  }
  return "unknown";
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// The augmented ODE y = [coords, vec(W), accumulators] in a fixed chart.
class AugmentedSystem {
 public:
  AugmentedSystem(const Scenario& s, double sign, int frame_cols, int acc, const AccumulatorRate& rate)
      : s_(s), sign_(sign), n_(s.dimension()), k_(frame_cols), m_(acc), rate_(rate) {}

  int size() const { return n_ + n_ * k_ + m_; }
  int n() const { return n_; }
  int k() const { return k_; }

  void operator()(int chart, const Vec& y, Vec& dy) const {
    ChartPoint p{chart, y.head(n_)};
    Vec v = sign_ * s_.field(p);
    dy.resize(size());
    dy.head(n_) = v;
    Mat w;
    if (k_ > 0 || m_ > 0) w = Eigen::Map<const Mat>(y.data() + n_, n_, k_);
    if (k_ > 0) {
      Mat dw = sign_ * s_.field_jacobian(p) * w;
      dy.segment(n_, n_ * k_) = Eigen::Map<const Vec>(dw.data(), n_ * k_);
    }
    if (m_ > 0) {
      Vec r = Vec::Zero(m_);
      rate_(p, v, w, r);
      dy.tail(m_) = r;
    }
  }

 private:
  const Scenario& s_;
  double sign_;
  int n_, k_, m_;
  const AccumulatorRate& rate_;
};

struct StepResult {
  Vec y;
  Vec k7;
  double error = 0.0;
};

// One Dormand-Prince step of size h from y with k1 = f(y) given.
StepResult dopri_step(const AugmentedSystem& sys, int chart, const Vec& y, const Vec& k1, double h, double abs_tol,
                      double rel_tol) {
  Vec k2, k3, k4, k5, k6, k7;
  sys(chart, y + h * a21 * k1, k2);
  sys(chart, y + h * (a31 * k1 + a32 * k2), k3);
  sys(chart, y + h * (a41 * k1 + a42 * k2 + a43 * k3), k4);
  sys(chart, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
  sys(chart, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
  StepResult r;
  r.y = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  sys(chart, r.y, k7);
  Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double scale = abs_tol + rel_tol * std::max(std::fabs(y[i]), std::fabs(r.y[i]));
    worst = std::max(worst, std::fabs(err[i]) / scale);
  }
  r.error = worst;
  r.k7 = std::move(k7);
  return r;
}

Vec pack(const ChartPoint& p, const Mat& frame, const Vec& acc) {
  const Eigen::Index n = p.coords.size();
  Vec y(n + frame.size() + acc.size());
  y.head(n) = p.coords;
  if (frame.size() > 0) y.segment(n, frame.size()) = Eigen::Map<const Vec>(frame.data(), frame.size());
  if (acc.size() > 0) y.tail(acc.size()) = acc;
  return y;
}

}  // namespace

AugmentedFlow integrate_augmented(const Scenario& s, const ChartPoint& start, Direction direction,
                                  const StopRule& stop, const Mat& frame, int accumulator_count,
                                  const AccumulatorRate& rate, const FlowOptions& opt) {
  const Atlas& atlas = s.atlas();
  const int n = s.dimension();
  const int k = static_cast<int>(frame.cols());
  if (k > 0 && frame.rows() != n) throw std::invalid_argument("frame has wrong row count");
  const double sign = direction_sign(direction);
  AugmentedSystem sys(s, sign, k, accumulator_count, rate);

  AugmentedFlow out;
  Trajectory& tr = out.trajectory;
  tr.direction = direction;

  ChartPoint p = atlas.wrap(start);
  if (!atlas.in_domain(p.chart, p.coords)) throw std::invalid_argument("start point outside its chart domain");
  if (!atlas.is_inner(p)) {
    ChartPoint q = atlas.best_chart(p);
    p = q;
  }
  Mat w = frame;
  if (k > 0 && p.chart != start.chart) w = *atlas.transition_jacobian(atlas.wrap(start), p.chart) * frame;
  Vec acc = Vec::Zero(accumulator_count);

  double t = 0.0;
  double f_now = s.lyapunov(p);
  double speed = s.field(p).norm();
  auto record = [&](const ChartPoint& q, double time, double f) {
    if (opt.record_samples || tr.samples.empty()) tr.samples.push_back({q, time, f});
  };
  record(p, t, f_now);

  auto finish = [&](Termination why) {
    tr.termination = why;
    if (!opt.record_samples && (tr.samples.size() == 1 || tr.samples.back().time != t)) tr.samples.push_back({p, t, f_now});
    out.end = p;
    out.frame = w;
    out.accumulators = acc;
    return out;
  };
  auto nearest_ball = [&](double limit) -> std::optional<int> {
    std::optional<int> best;
    double best_d = limit;
    for (const CaptureBall& b : stop.capture) {
      double d = atlas.distance(p, b.center);
      if (d < best_d) {
        best_d = d;
        best = b.id;
      }
    }
    return best;
  };

  if (speed < opt.rest_speed) {
    tr.captured = nearest_ball(1e-6);
    return finish(Termination::RestReached);
  }
  for (const CaptureBall& b : stop.capture)
    if (atlas.distance(p, b.center) < b.radius) {
      tr.captured = b.id;
      return finish(Termination::Captured);
    }
  if (stop.level) {
    double gap = sign * (f_now - *stop.level);
    if (gap <= 0.0) throw LevelError("target level is not ahead of the start point");
  }

  Vec y = pack(p, w, acc);
  Vec k1;
  sys(p.chart, y, k1);
  double h = std::min(opt.initial_step, opt.max_step);

  while (true) {
    if (tr.steps >= opt.max_steps) {
      tr.message = "step budget exhausted";
      return finish(Termination::MaxTime);
    }
    if (t >= stop.max_time) return finish(Termination::MaxTime);
    h = std::min(h, stop.max_time - t);
    StepResult r;
    bool ok = false;
    try {
      r = dopri_step(sys, p.chart, y, k1, h, opt.abs_tol, opt.rel_tol);
      ok = std::isfinite(r.error) && atlas.in_domain(p.chart, r.y.head(n));
    } catch (const EvaluationError&) {
      ok = false;
    }
    if (!ok || r.error > 1.0) {
      double factor = ok ? std::max(0.2, 0.9 * std::pow(r.error, -0.2)) : 0.5;
      h *= factor;
      if (h < opt.min_step) {
        tr.message = "step size underflow";
        return finish(Termination::StepFailure);
      }
      continue;
    }

    // Accepted step.
    ++tr.steps;
    ChartPoint q{p.chart, r.y.head(n)};
    double f_new = s.lyapunov(q);

    if (stop.level && sign * (f_new - *stop.level) <= 0.0) {
      // Bisect the step length so that the end point sits on the level.
      double lo = 0.0, hi = h;
      StepResult best = r;
      double f_best = f_new;
      for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lo + hi);
        StepResult m = dopri_step(sys, p.chart, y, k1, mid, opt.abs_tol, opt.rel_tol);
        double fm = s.lyapunov({p.chart, m.y.head(n)});
        best = m;
        f_best = fm;
        h = mid;
        if (std::fabs(fm - *stop.level) < 1e-13 || hi - lo < 1e-16) break;
        if (sign * (fm - *stop.level) > 0.0)
          lo = mid;
        else
          hi = mid;
      }
      t += h;
      y = best.y;
      p = atlas.wrap({p.chart, y.head(n)});
      if (k > 0) w = Eigen::Map<const Mat>(y.data() + n, n, k);
      if (accumulator_count > 0) acc = y.tail(accumulator_count);
      if (sign * (f_best - f_now) > 1e-9) ++tr.monotonicity_violations;
      f_now = f_best;
      record(p, t, f_now);
      return finish(Termination::LevelReached);
    }

    if (sign * (f_new - f_now) > 1e-9) ++tr.monotonicity_violations;
    t += h;
    y = r.y;
    k1 = r.k7;
    f_now = f_new;
    p = atlas.wrap(q);
    y.head(n) = p.coords;
    if (k > 0) w = Eigen::Map<const Mat>(y.data() + n, n, k);
    if (accumulator_count > 0) acc = y.tail(accumulator_count);

    if (!atlas.is_inner(p)) {
      ChartPoint moved = atlas.best_chart(p);
      if (moved.chart != p.chart) {
        // Record the hand-off point in both charts.
        record(p, t, f_now);
        if (k > 0) w = *atlas.transition_jacobian(p, moved.chart) * w;
        p = moved;
        y = pack(p, w, acc);
        sys(p.chart, y, k1);
      } else if (atlas.interiority(p.chart, p.coords) <= 0.0) {
        tr.message = "trajectory left every chart domain";
        return finish(Termination::CoverageError);
      }
    }
    record(p, t, f_now);

    double new_speed = k1.head(n).norm();
    if (new_speed < opt.rest_speed) {
      tr.captured = nearest_ball(1e-6);
      return finish(Termination::RestReached);
    }
    for (const CaptureBall& b : stop.capture)
      if (new_speed < speed && atlas.distance(p, b.center) < b.radius) {
        tr.captured = b.id;
        return finish(Termination::Captured);
      }
    speed = new_speed;

    double factor = r.error > 0.0 ? std::min(5.0, 0.9 * std::pow(r.error, -0.2)) : 5.0;
    h = std::min(h * factor, opt.max_step);
  }
}

Trajectory integrate_trajectory(const Scenario& s, const ChartPoint& start, Direction direction, const StopRule& stop,
                                const FlowOptions& options) {
  static const AccumulatorRate none = [](const ChartPoint&, const Vec&, const Mat&, Vec&) {};
  return integrate_augmented(s, start, direction, stop, Mat(), 0, none, options).trajectory;
}

std::optional<int> classify_limit(const Scenario& s, const Trajectory& trajectory,
                                  const std::vector<CaptureBall>& rest_points, double capture_radius) {
  const Atlas& atlas = s.atlas();
  for (std::size_t i = 0; i < rest_points.size(); ++i)
    for (std::size_t j = i + 1; j < rest_points.size(); ++j)
      if (atlas.distance(rest_points[i].center, rest_points[j].center) < 2 * capture_radius)
        throw ClassificationError("rest points closer than twice the capture radius");
  if (trajectory.samples.empty()) return std::nullopt;
  const FlowSample& last = trajectory.back();
  double last_speed = s.field(last.point).norm();
  bool contracting = last_speed < 1e-8;
  if (!contracting && trajectory.samples.size() >= 2) {
    const FlowSample& prev = trajectory.samples[trajectory.samples.size() - 2];
    contracting = last_speed < s.field(prev.point).norm();
  }
  if (!contracting) return std::nullopt;
  for (const CaptureBall& b : rest_points)
    if (atlas.distance(last.point, b.center) < capture_radius) return b.id;
  return std::nullopt;
}

ChartPoint level_crossing(const Scenario& s, const Trajectory& trajectory, double c) {
  const auto& xs = trajectory.samples;
  if (xs.size() < 2) throw LevelError("trajectory has no extent");
  double f0 = xs.front().f, f1 = xs.back().f;
  if (!(c < std::max(f0, f1) && c > std::min(f0, f1))) throw LevelError("level outside the open f-range of the trajectory");
  const double sign = direction_sign(trajectory.direction);
  static const AccumulatorRate none = [](const ChartPoint&, const Vec&, const Mat&, Vec&) {};
  AugmentedSystem sys(s, sign, 0, 0, none);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    double fa = xs[i].f, fb = xs[i + 1].f;
    if ((fa - c) * (fb - c) > 0.0) continue;
    if (fa == c) return xs[i].point;
    if (fb == c) return xs[i + 1].point;
    const ChartPoint& a = xs[i].point;
    Vec k1;
    sys(a.chart, a.coords, k1);
    double lo = 0.0, hi = xs[i + 1].time - xs[i].time;
    ChartPoint best = xs[i + 1].point;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      StepResult m = dopri_step(sys, a.chart, a.coords, k1, mid, 1.0, 0.0);
      ChartPoint q{a.chart, m.y};
      double fq = s.lyapunov(q);
      best = q;
      if (std::fabs(fq - c) < 1e-12 || hi - lo < 1e-17) break;
      if ((fq - c) * (fa - c) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    return s.atlas().wrap(best);
  }
  throw LevelError("level not bracketed by any pair of samples");
}

Json trajectory_json(const Scenario& s, const Trajectory& trajectory) {
  Json pts = Json::array();
  for (const FlowSample& x : trajectory.samples) {
    Json j = chart_point_json(s.atlas(), x.point);
    j["time"] = x.time;
    j["f"] = x.f;
    pts.push_back(j);
  }
  Json out;
  out["direction"] = to_string(trajectory.direction);
  out["termination"] = to_string(trajectory.termination);
  out["points"] = pts;
  return out;
}

}  // namespace morse

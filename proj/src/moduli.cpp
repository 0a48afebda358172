#include "morse/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

namespace morse {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a;
}

int sign_of(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

std::vector<CaptureBall> balls_except(const std::vector<RestPoint>& pts, int skip, double radius) {
  std::vector<CaptureBall> out;
  for (const RestPoint& r : pts)
    if (r.id != skip) out.push_back({r.id, r.point, radius});
  return out;
}

// Minimum distance between distinct rest points (in charts they share).
double rest_point_separation(const Atlas& atlas, const std::vector<RestPoint>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, atlas.distance(pts[i].point, pts[j].point));
  return best;
}

}  // namespace

const char* to_string(CornerStratum::Kind k) {
  switch (k) {
    case CornerStratum::Kind::Unstable:
      return "unstable";
    case CornerStratum::Kind::Stable:
      return "stable";
    case CornerStratum::Kind::Moduli:
      return "moduli";
    case CornerStratum::Kind::Trajectories:
      return "trajectories";
  }
  return "unknown";
}

double transported_determinant(const Scenario& s, const ChartPoint& start, const Mat& frame, const RestPoint& target,
                               double arrival_radius, const FlowOptions& options) {
  static const AccumulatorRate none = [](const ChartPoint&, const Vec&, const Mat&, Vec&) {};
  StopRule stop;
  stop.capture = {{target.id, target.point, arrival_radius}};
  FlowOptions opt = options;
  opt.record_samples = false;
  AugmentedFlow run = integrate_augmented(s, start, Direction::Forward, stop, frame, 0, none, opt);
  if (run.trajectory.captured != target.id) throw std::runtime_error("frame transport did not arrive at the target");
  ChartPoint p = run.end;
  Mat w = run.frame;
  Vec v = s.field(p);
  if (p.chart != target.point.chart) {
    auto jac = s.atlas().transition_jacobian(p, target.point.chart);
    if (!jac) throw std::runtime_error("arrival point is not covered by the target's chart");
    w = *jac * w;
    v = *jac * v;
  }
  const Eigen::Index k = w.cols();
  Eigen::HouseholderQR<Mat> qr(w);
  Mat q = qr.householderQ() * Mat::Identity(w.rows(), k);
  Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < k; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  Mat b(w.rows(), k);
  b.col(0) = v.normalized();
  if (k > 1) b.rightCols(k - 1) = target.frame();
  if (target.frame().cols() != k - 1) throw std::invalid_argument("index gap between frame and target is not 1");
  return (q.transpose() * b).determinant();
}

Mat matrix_exponential(const Mat& m) {
  // scaling and squaring with a Taylor polynomial
  int squarings = std::max(0, static_cast<int>(std::ceil(std::log2(std::max(1.0, m.cwiseAbs().sum())))) + 1);
  Mat a = m / std::ldexp(1.0, squarings);
  Mat term = Mat::Identity(m.rows(), m.cols()), sum = term;
  for (int k = 1; k < 20; ++k) {
    term = term * a / k;
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

LaunchCurve launch_curve(const RestPoint& x, double radius) {
  const Mat& f = x.frame();
  if (f.cols() != 2 || f.rows() != 2) throw std::invalid_argument("launch curves need an index-2 rest point on a surface");
  LaunchCurve c;
  c.linear = f.inverse() * x.linear.jacobian * f;
  const double slow = c.linear.eigenvalues().real().minCoeff();
  const double t = std::log(1.0 / radius) / slow;
  c.back = matrix_exponential(-t * c.linear);
  c.ahead = matrix_exponential(t * c.linear);
  return c;
}

ChartPoint launch_seed(const Scenario& s, const RestPoint& x, const LaunchCurve& c, double angle) {
  Vec u(2);
  u << std::cos(angle), std::sin(angle);
  return s.atlas().wrap({x.point.chart, x.point.coords + x.frame() * (c.back * u)});
}

Vec launch_tangent(const RestPoint& x, const LaunchCurve& c, double angle) {
  Vec du(2);
  du << -std::sin(angle), std::cos(angle);
  return x.frame() * (c.back * du);
}

double launch_angle(const Scenario& s, const RestPoint& x, const LaunchCurve& c, const ChartPoint& p) {
  auto d = s.atlas().displacement(x.point, p);
  if (!d) throw std::runtime_error("point is not in a chart shared with the rest point");
  Vec xi = x.frame().fullPivLu().solve(*d);
  // carry the point along the linear flow to the unit circle
  auto at = [&](double t) -> Vec { return matrix_exponential(t * c.linear) * xi; };
  double lo = 0.0, hi = 1.0;
  while (at(lo).norm() > 1.0) lo -= 1.0;
  while (at(hi).norm() < 1.0) hi *= 2;
  for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
    double mid = 0.5 * (lo + hi);
    (at(mid).norm() < 1.0 ? lo : hi) = mid;
  }
  Vec u = at(0.5 * (lo + hi));
  return wrap_angle(std::atan2(u[1], u[0]));
}

FlowModel::FlowModel(const Scenario& scenario, ModuliConfig config) : scenario_(&scenario), config_(config) {
  rest_points_ = find_rest_points(scenario, config_.critical);
  enumerate();
}

void FlowModel::add_instanton(Instanton inst) {
  for (const Instanton& other : instantons_)
    if (other.from == inst.from && other.to == inst.to &&
        scenario_->atlas().distance(other.mid, inst.mid) < config_.dedup_distance)
      return;
  inst.id = static_cast<int>(instantons_.size());
  instantons_.push_back(std::move(inst));
}

void FlowModel::enumerate_forward(const RestPoint& x) {
  const Scenario& s = *scenario_;
  UnstableDisk disk = unstable_disk(s, x, config_.disk_radius);
  StopRule stop;
  stop.capture = balls_except(rest_points_, x.id, config_.sign_radius);
  for (std::size_t k = 0; k < disk.seeds.size(); ++k) {
    const ChartPoint& seed = disk.seeds[k];
    Trajectory tr = integrate_trajectory(s, seed, Direction::Forward, stop, config_.flow);
    if (!tr.captured) {
      warnings_.push_back("unresolved launch from rest point " + std::to_string(x.id));
      complete_ = false;
      continue;
    }
    const RestPoint& y = rest_point(*tr.captured);
    if (y.index() != x.index() - 1) {
      warnings_.push_back("launch from rest point " + std::to_string(x.id) + " lands at rest point " +
                          std::to_string(y.id) + " of index " + std::to_string(y.index()));
      continue;
    }
    Instanton inst;
    inst.from = x.id;
    inst.to = y.id;
    inst.launch = disk.parameters[k][0];
    inst.trajectory = std::move(tr);
    inst.mid = level_crossing(s, inst.trajectory, 0.5 * (x.f + y.f));
    inst.projection_det = transported_determinant(s, seed, x.frame(), y, config_.sign_radius, config_.flow);
    inst.canonical_sign = sign_of(inst.projection_det);
    inst.degenerate = std::fabs(inst.projection_det) < 1e-8;
    if (inst.degenerate) warnings_.push_back("near-singular orientation projection on an instanton");
    add_instanton(std::move(inst));
  }
}

void FlowModel::enumerate_backward(const RestPoint& y) {
  const Scenario& s = *scenario_;
  const double rho = config_.disk_radius;
  StopRule stop;
  stop.capture = balls_except(rest_points_, y.id, 2 * rho);
  for (double u : {1.0, -1.0}) {
    ChartPoint seed = s.atlas().wrap({y.point.chart, y.point.coords + rho * u * y.linear.stable_frame.col(0)});
    Trajectory tr = integrate_trajectory(s, seed, Direction::Backward, stop, config_.flow);
    if (!tr.captured) {
      warnings_.push_back("unresolved backward launch from rest point " + std::to_string(y.id));
      complete_ = false;
      continue;
    }
    const RestPoint& x = rest_point(*tr.captured);
    if (x.index() != y.index() + 1) {
      warnings_.push_back("backward launch from rest point " + std::to_string(y.id) + " reaches rest point " +
                          std::to_string(x.id) + " of index " + std::to_string(x.index()));
      continue;
    }
    Instanton inst;
    inst.from = x.id;
    inst.to = y.id;
    inst.backward_shot = true;
    ChartPoint near_x = tr.back().point;
    inst.launch = launch_angle(s, x, launch_curve(x, rho), near_x);
    inst.trajectory = std::move(tr);
    inst.mid = level_crossing(s, inst.trajectory, 0.5 * (x.f + y.f));
    // W-_x is open, so any frame with orientation o_x is tangent to it.
    Mat frame = x.frame();
    if (near_x.chart != x.point.chart) frame = *s.atlas().transition_jacobian(x.point, near_x.chart) * frame;
    try {
      inst.projection_det = transported_determinant(s, near_x, frame, y, config_.sign_radius, config_.flow);
    } catch (const std::runtime_error&) {
      // The forward re-trace drifted off the stable manifold of y; the flow
      // preserves orientation of full frames, so compare at the seed instead.
      warnings_.push_back("frame transport fell back to the full-frame determinant");
      Vec v = s.field(seed);
      Mat b(s.dimension(), s.dimension());
      b.col(0) = v.normalized();
      b.rightCols(s.dimension() - 1) = y.frame();
      inst.projection_det = sign_of(x.frame().determinant()) * b.determinant();
    }
    inst.canonical_sign = sign_of(inst.projection_det);
    inst.degenerate = std::fabs(inst.projection_det) < 1e-8;
    if (inst.degenerate) warnings_.push_back("near-singular orientation projection on an instanton");
    add_instanton(std::move(inst));
  }
}

void FlowModel::refine_launches(const RestPoint& x, const LaunchCurve& curve) {
  const Scenario& s = *scenario_;
  std::vector<Instanton*> from_x;
  for (Instanton& inst : instantons_)
    if (inst.from == x.id) from_x.push_back(&inst);
  if (from_x.empty()) return;
  std::sort(from_x.begin(), from_x.end(), [](const Instanton* a, const Instanton* b) { return a->launch < b->launch; });

  StopRule stop;
  for (const RestPoint& r : rest_points_)
    if (r.index() == 0) stop.capture.push_back({r.id, r.point, config_.sign_radius});
  FlowOptions opt = config_.flow;
  opt.abs_tol /= 100;
  opt.rel_tol /= 100;
  opt.rest_speed = 0.0;

  // Which side of the saddle's stable curve an orbit passes: the sign of its
  // unstable coordinate where it comes closest to the saddle.
  auto side = [&](double angle, const RestPoint& saddle) {
    Trajectory tr = integrate_trajectory(s, launch_seed(s, x, curve, angle), Direction::Forward, stop, opt);
    const FlowSample* closest = nullptr;
    double best = 1e-2;
    for (const FlowSample& q : tr.samples) {
      double d = s.atlas().distance(q.point, saddle.point);
      if (d < best) {
        best = d;
        closest = &q;
      }
    }
    if (!closest) return 0;
    auto d = s.atlas().displacement(saddle.point, closest->point);
    if (!d) return 0;
    Mat basis(2, 2);
    basis << saddle.linear.unstable_frame, saddle.linear.stable_frame;
    return sign_of(basis.fullPivLu().solve(*d)[0]);
  };

  const std::size_t m = from_x.size();
  for (std::size_t i = 0; i < m; ++i) {
    Instanton& inst = *from_x[i];
    const RestPoint& saddle = rest_point(inst.to);
    double room = std::numbers::pi;
    if (m > 1) {
      double prev = from_x[(i + m - 1) % m]->launch, next = from_x[(i + 1) % m]->launch;
      room = std::min(wrap_angle(inst.launch - prev), wrap_angle(next - inst.launch));
    }
    const double c = inst.launch;
    const double width = 1e-11;
    if (int l = side(c - width, saddle), r = side(c + width, saddle); l != 0 && r != 0 && l != r) continue;
    bool bracketed = false;
    double lo = 0, hi = 0;
    int left = 0;
    for (double h = 1e-3; h < 0.45 * room && !bracketed; h *= 2) {
      left = side(c - h, saddle);
      int right = side(c + h, saddle);
      if (left != 0 && right != 0 && left != right) {
        bracketed = true;
        lo = c - h;
        hi = c + h;
      }
    }
    if (!bracketed) {
      warnings_.push_back("could not refine the launch angle of an instanton from rest point " + std::to_string(x.id));
      continue;
    }
    while (hi - lo > width) {
      double mid = 0.5 * (lo + hi);
      (side(mid, saddle) == left ? lo : hi) = mid;
    }
    inst.launch = wrap_angle(0.5 * (lo + hi));
  }
}

void FlowModel::build_arcs(const RestPoint& x) {
  const Scenario& s = *scenario_;
  const LaunchCurve curve = launch_curve(x, config_.disk_radius);
  refine_launches(x, curve);
  std::vector<double> cuts;
  for (const Instanton& inst : instantons_)
    if (inst.from == x.id) cuts.push_back(inst.launch);
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::pair<double, double>> spans;
  if (cuts.empty()) {
    spans.emplace_back(0.0, kTwoPi);
  } else {
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) spans.emplace_back(cuts[i], cuts[i + 1]);
    spans.emplace_back(cuts.back(), cuts.front() + kTwoPi);
  }
  StopRule stop;
  stop.capture = balls_except(rest_points_, x.id, config_.sign_radius);
  FlowOptions opt = config_.flow;
  opt.record_samples = false;
  auto land = [&](double angle) -> std::optional<int> {
    return integrate_trajectory(s, launch_seed(s, x, curve, angle), Direction::Forward, stop, opt).captured;
  };
  for (const auto& [a, b] : spans) {
    auto target = land(0.5 * (a + b));
    if (!target || rest_point(*target).index() != 0) {
      warnings_.push_back("arc midpoint from rest point " + std::to_string(x.id) + " does not reach a minimum");
      continue;
    }
    Arc arc{x.id, *target, a, b, 0, 0};
    for (int k = 0; k < config_.sweep_per_arc; ++k) {
      double angle = a + (b - a) * (k + 0.5) / config_.sweep_per_arc;
      (land(angle) == target ? arc.confirmed : arc.contradicted)++;
    }
    if (arc.contradicted > 0) warnings_.push_back("sweep found an unresolved basin boundary inside an arc");
    arcs_.push_back(arc);
  }
}

void FlowModel::enumerate() {
  const int n = dimension();
  for (const RestPoint& x : rest_points_)
    if (x.index() == 1) enumerate_forward(x);
  if (n >= 2)
    for (const RestPoint& y : rest_points_)
      if (y.index() == n - 1) enumerate_backward(y);
  if (n > 2) {
    warnings_.push_back("connections between intermediate indices are not enumerated above dimension 2");
    complete_ = false;
  }
  if (n == 2)
    for (const RestPoint& x : rest_points_)
      if (x.index() == 2) build_arcs(x);

  const std::size_t m = rest_points_.size();
  precedes_.assign(m, std::vector<bool>(m, false));
  for (const Instanton& i : instantons_) precedes_[static_cast<std::size_t>(i.from)][static_cast<std::size_t>(i.to)] = true;
  for (const Arc& a : arcs_) precedes_[static_cast<std::size_t>(a.from)][static_cast<std::size_t>(a.to)] = true;
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (precedes_[i][k] && precedes_[k][j]) precedes_[i][j] = true;
}

std::vector<const Instanton*> FlowModel::instantons_between(int x, int y) const {
  std::vector<const Instanton*> out;
  for (const Instanton& i : instantons_)
    if (i.from == x && i.to == y) out.push_back(&i);
  return out;
}

std::vector<const Arc*> FlowModel::arcs_between(int x, int y) const {
  std::vector<const Arc*> out;
  for (const Arc& a : arcs_)
    if (a.from == x && a.to == y) out.push_back(&a);
  return out;
}

int FlowModel::trajectory_components(int x, int y) const {
  int gap = rest_point(x).index() - rest_point(y).index();
  if (gap == 1) return static_cast<int>(instantons_between(x, y).size());
  if (gap == 2) return static_cast<int>(arcs_between(x, y).size());
  return 0;
}

bool FlowModel::precedes(int x, int y) const {
  return precedes_.at(static_cast<std::size_t>(x)).at(static_cast<std::size_t>(y));
}

std::vector<Instanton> enumerate_instantons(const FlowModel& model, int x, int y) {
  if (model.rest_point(x).index() - model.rest_point(y).index() != 1)
    throw std::invalid_argument("instanton enumeration needs an index gap of 1");
  std::vector<Instanton> out;
  for (const Instanton* i : model.instantons_between(x, y)) out.push_back(*i);
  return out;
}

int instanton_sign(const Instanton& inst, const Orientations& o) { return o[inst.from] * o[inst.to] * inst.canonical_sign; }

ModuliChart sample_moduli(const FlowModel& model, int x, int y, int resolution) {
  const Scenario& s = model.scenario();
  const RestPoint& rx = model.rest_point(x);
  const RestPoint& ry = model.rest_point(y);
  ModuliChart chart;
  chart.from = x;
  chart.to = y;
  chart.gap = rx.index() - ry.index();
  if (x == y) {
    chart.samples.push_back({-1, 0.0, rx.f, rx.point});
    return chart;
  }
  auto levels = [&](int j) { return ry.f + (rx.f - ry.f) * (j + 0.5) / resolution; };
  if (chart.gap == 1) {
    for (const Instanton* inst : model.instantons_between(x, y)) {
      chart.instantons.push_back(inst->id);
      for (int j = 0; j < resolution; ++j) {
        try {
          chart.samples.push_back({inst->id, inst->launch, levels(j), level_crossing(s, inst->trajectory, levels(j))});
        } catch (const LevelError&) {
        }
      }
    }
  } else if (chart.gap == 2) {
    StopRule stop;
    stop.capture = {{ry.id, ry.point, model.config().sign_radius}};
    auto arcs = model.arcs_between(x, y);
    const LaunchCurve curve = launch_curve(rx, model.config().disk_radius);
    for (std::size_t a = 0; a < arcs.size(); ++a) {
      const Arc& arc = *arcs[a];
      chart.arcs.push_back(static_cast<int>(arcs[a] - model.arcs().data()));
      for (int i = 0; i < resolution; ++i) {
        double angle = arc.begin + (arc.end - arc.begin) * (i + 0.5) / resolution;
        Trajectory tr = integrate_trajectory(s, launch_seed(s, rx, curve, angle), Direction::Forward,
                                             stop, model.config().flow);
        for (int j = 0; j < resolution; ++j) {
          try {
            chart.samples.push_back({chart.arcs.back(), angle, levels(j), level_crossing(s, tr, levels(j))});
          } catch (const LevelError&) {
          }
        }
      }
    }
  }
  return chart;
}

namespace {

// All chains start = c0 -> c1 -> ... with nonempty T on every link.
void chains_from(const FlowModel& model, std::vector<int>& chain, const std::function<void(const std::vector<int>&)>& visit) {
  visit(chain);
  int last = chain.back();
  for (const RestPoint& r : model.rest_points()) {
    if (model.rest_point(last).index() <= r.index()) continue;
    if (model.trajectory_components(last, r.id) == 0) continue;
    chain.push_back(r.id);
    chains_from(model, chain, visit);
    chain.pop_back();
  }
}

CornerStratum make_stratum(const FlowModel& model, CornerStratum::Kind kind, const std::vector<int>& chain) {
  CornerStratum st;
  st.kind = kind;
  st.chain = chain;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    int c = model.trajectory_components(chain[i], chain[i + 1]);
    st.link_counts.push_back(c);
    st.multiplicity *= c;
  }
  return st;
}

int trajectory_dim(const FlowModel& model, int a, int b) {
  return model.rest_point(a).index() - model.rest_point(b).index() - 1;
}

}  // namespace

std::vector<CornerStratum> corner_catalog_unstable(const FlowModel& model, int x) {
  std::vector<CornerStratum> out;
  std::vector<int> chain{x};
  chains_from(model, chain, [&](const std::vector<int>& c) {
    CornerStratum st = make_stratum(model, CornerStratum::Kind::Unstable, c);
    st.depth = static_cast<int>(c.size()) - 1;
    int dim = model.rest_point(c.back()).index();
    for (std::size_t i = 0; i + 1 < c.size(); ++i) dim += trajectory_dim(model, c[i], c[i + 1]);
    st.dimension = dim;
    out.push_back(std::move(st));
  });
  return out;
}

std::vector<CornerStratum> corner_catalog_stable(const FlowModel& model, int y) {
  std::vector<CornerStratum> out;
  const int n = model.dimension();
  for (const RestPoint& start : model.rest_points()) {
    std::vector<int> chain{start.id};
    chains_from(model, chain, [&](const std::vector<int>& c) {
      if (c.back() != y) return;
      CornerStratum st = make_stratum(model, CornerStratum::Kind::Stable, c);
      st.depth = static_cast<int>(c.size()) - 1;
      int dim = n - model.rest_point(c.front()).index();
      for (std::size_t i = 0; i + 1 < c.size(); ++i) dim += trajectory_dim(model, c[i], c[i + 1]);
      st.dimension = dim;
      out.push_back(std::move(st));
    });
  }
  return out;
}

std::vector<CornerStratum> corner_catalog_moduli(const FlowModel& model, int x, int y) {
  std::vector<CornerStratum> out;
  std::vector<int> chain{x};
  chains_from(model, chain, [&](const std::vector<int>& c) {
    if (c.size() < 2 || c.back() != y) return;
    const int breaks = static_cast<int>(c.size()) - 2;
    int tdims = 0;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) tdims += trajectory_dim(model, c[i], c[i + 1]);
    // Marked point on one trajectory piece: that factor is M instead of T.
    for (int link = 0; link <= breaks; ++link) {
      CornerStratum st = make_stratum(model, CornerStratum::Kind::Moduli, c);
      st.depth = breaks;
      st.marked_link = link;
      st.dimension = tdims + 1;
      out.push_back(std::move(st));
    }
    // Marked point sitting at one of the rest points of the chain.
    for (int pos = 0; pos < static_cast<int>(c.size()); ++pos) {
      CornerStratum st = make_stratum(model, CornerStratum::Kind::Moduli, c);
      st.depth = breaks + 1;
      st.marker_rest_point = pos;
      st.dimension = tdims;
      out.push_back(std::move(st));
    }
  });
  return out;
}

std::vector<CornerStratum> corner_catalog_trajectories(const FlowModel& model, int x, int y) {
  std::vector<CornerStratum> out;
  std::vector<int> chain{x};
  chains_from(model, chain, [&](const std::vector<int>& c) {
    if (c.size() < 2 || c.back() != y) return;
    CornerStratum st = make_stratum(model, CornerStratum::Kind::Trajectories, c);
    st.depth = static_cast<int>(c.size()) - 2;
    int dim = 0;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) dim += trajectory_dim(model, c[i], c[i + 1]);
    st.dimension = dim;
    out.push_back(std::move(st));
  });
  return out;
}

std::pair<std::optional<int>, std::optional<int>> classify_point(const FlowModel& model, const ChartPoint& p,
                                                                 const FlowOptions& options) {
  const Scenario& s = model.scenario();
  const int n = model.dimension();
  double sep = rest_point_separation(s.atlas(), model.rest_points());
  double big = std::isfinite(sep) ? std::min(0.05, 0.1 * sep) : 0.05;
  StopRule fwd, bwd;
  for (const RestPoint& r : model.rest_points()) {
    fwd.capture.push_back({r.id, r.point, r.index() == 0 ? big : 1e-4});
    bwd.capture.push_back({r.id, r.point, r.index() == n ? big : 1e-4});
  }
  FlowOptions opt = options;
  opt.record_samples = false;
  auto up = integrate_trajectory(s, p, Direction::Backward, bwd, opt).captured;
  auto down = integrate_trajectory(s, p, Direction::Forward, fwd, opt).captured;
  return {up, down};
}

BasinReport basin_partition(const FlowModel& model, int samples, std::uint64_t seed) {
  BasinReport rep;
  std::mt19937_64 rng(seed);
  FlowOptions opt = model.config().flow;
  opt.abs_tol = 1e-8;
  opt.rel_tol = 1e-6;
  for (int k = 0; k < samples; ++k) {
    ChartPoint p = model.scenario().atlas().sample(rng);
    ++rep.samples;
    auto [up, down] = classify_point(model, p, opt);
    if (up && down) {
      ++rep.classified;
      ++rep.pairs[{*up, *down}];
    } else {
      ++rep.unresolved;
    }
  }
  return rep;
}

}  // namespace morse

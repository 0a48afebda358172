#include "morse/scenario.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace morse {

namespace {

using E = Expression;

E num(double v) { return E::constant(v); }
E t(int i) { return E::variable(i); }

std::vector<Program> compile_all(const std::vector<Expression>& exprs) {
  std::vector<Program> out;
  out.reserve(exprs.size());
  for (const Expression& e : exprs) out.emplace_back(e);
  return out;
}

std::span<const double> view(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

Scenario::Scenario(ScenarioData data) : data_(std::move(data)), atlas_(data_.charts) {
  const int n = atlas_.dimension();
  const auto charts = static_cast<std::size_t>(atlas_.size());
  if (data_.metric.size() != charts || data_.vector_field.size() != charts || data_.lyapunov.size() != charts)
    throw std::invalid_argument("scenario " + data_.name + ": per-chart data does not match the atlas");
  for (std::size_t c = 0; c < charts; ++c) {
    if (static_cast<int>(data_.metric[c].size()) != n * n || static_cast<int>(data_.vector_field[c].size()) != n)
      throw std::invalid_argument("scenario " + data_.name + ": wrong metric or field arity");
    field_.push_back(compile_all(data_.vector_field[c]));
    std::vector<Expression> jac;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) jac.push_back(data_.vector_field[c][static_cast<std::size_t>(i)].derivative(j));
    jacobian_.push_back(compile_all(jac));
    lyapunov_.emplace_back(data_.lyapunov[c]);
    std::vector<Expression> df;
    for (int j = 0; j < n; ++j) df.push_back(data_.lyapunov[c].derivative(j));
    lyapunov_diff_.push_back(compile_all(df));
    metric_.push_back(compile_all(data_.metric[c]));
  }
  for (const NamedForm& f : data_.forms)
    if (f.form.dimension() != n || f.form.charts() != atlas_.size())
      throw std::invalid_argument("scenario " + data_.name + ": form '" + f.name + "' does not match the atlas");
}

const DifferentialForm& Scenario::form(const std::string& name) const {
  for (const NamedForm& f : data_.forms)
    if (f.name == name) return f.form;
  throw std::invalid_argument("scenario " + data_.name + " has no form '" + name + "'");
}

Vec Scenario::field(const ChartPoint& p) const {
  const auto& progs = field_[static_cast<std::size_t>(p.chart)];
  Vec out(dimension());
  for (int i = 0; i < dimension(); ++i) out[i] = progs[static_cast<std::size_t>(i)](view(p.coords));
  return out;
}

Mat Scenario::field_jacobian(const ChartPoint& p) const {
  const auto& progs = jacobian_[static_cast<std::size_t>(p.chart)];
  const int n = dimension();
  Mat out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = progs[static_cast<std::size_t>(i * n + j)](view(p.coords));
  return out;
}

double Scenario::lyapunov(const ChartPoint& p) const {
  return lyapunov_[static_cast<std::size_t>(p.chart)](view(p.coords));
}

Vec Scenario::lyapunov_differential(const ChartPoint& p) const {
  const auto& progs = lyapunov_diff_[static_cast<std::size_t>(p.chart)];
  Vec out(dimension());
  for (int i = 0; i < dimension(); ++i) out[i] = progs[static_cast<std::size_t>(i)](view(p.coords));
  return out;
}

Mat Scenario::metric(const ChartPoint& p) const {
  const auto& progs = metric_[static_cast<std::size_t>(p.chart)];
  const int n = dimension();
  Mat out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = progs[static_cast<std::size_t>(i * n + j)](view(p.coords));
  return out;
}

Scenario Scenario::reversed() const {
  ScenarioData d = data_;
  d.name = data_.name + "_reversed";
  for (auto& chart : d.vector_field)
    for (auto& e : chart) e = -e;
  for (auto& e : d.lyapunov) e = -e;
  d.ground_truth.reset();
  return Scenario(std::move(d));
}

std::vector<Expression> negative_gradient(const Expression& f, const std::vector<Expression>& metric, int n) {
  std::vector<Expression> df;
  for (int i = 0; i < n; ++i) df.push_back(f.derivative(i));
  if (n == 1) return {-(df[0] / metric[0])};
  if (n != 2) throw std::invalid_argument("negative_gradient: only dimensions 1 and 2 are supported");
  const E& g11 = metric[0];
  const E& g12 = metric[1];
  const E& g21 = metric[2];
  const E& g22 = metric[3];
  if (g12.is_zero() && g21.is_zero()) return {-(df[0] / g11), -(df[1] / g22)};
  E det = g11 * g22 - g12 * g21;
  return {-((g22 * df[0] - g12 * df[1]) / det), -((g11 * df[1] - g21 * df[0]) / det)};
}

std::vector<Expression> sphere_embedding(int chart) {
  E s = pow(t(0), 2) + pow(t(1), 2);
  E denom = num(1.0) + s;
  if (chart == 0) return {num(2.0) * t(0) / denom, num(2.0) * t(1) / denom, (s - num(1.0)) / denom};
  return {num(2.0) * t(0) / denom, -(num(2.0) * t(1)) / denom, (num(1.0) - s) / denom};
}

namespace {

Chart periodic_chart(int n) {
  Chart c;
  c.id = "T";
  c.dimension = n;
  c.axes.assign(static_cast<std::size_t>(n), AxisSpec{0.0, 1.0, true});
  return c;
}

std::vector<Chart> sphere_charts() {
  // A: stereographic projection from the north pole, B: the conjugate
  // projection from the south pole; B = 1/A as complex numbers, so the
  // transition is orientation preserving.
  E s = pow(t(0), 2) + pow(t(1), 2);
  Transition tr;
  tr.overlap = s - num(0.25);
  tr.map = {t(0) / s, -t(1) / s};
  tr.inverse = tr.map;
  Chart a{"A", 2, {AxisSpec{-2.5, 2.5, false}, AxisSpec{-2.5, 2.5, false}}, {}};
  Chart b = a;
  b.id = "B";
  tr.target = 1;
  a.transitions.push_back(tr);
  tr.target = 0;
  b.transitions.push_back(tr);
  return {a, b};
}

std::vector<Expression> round_metric() {
  E s = pow(t(0), 2) + pow(t(1), 2);
  E lambda = num(4.0) / pow(num(1.0) + s, 2);
  return {lambda, E(), E(), lambda};
}

ChartPoint cp(int chart, std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return {chart, v};
}

ScenarioData gradient_scenario(std::string name, std::vector<Chart> charts, std::vector<Expression> lyapunov,
                               std::vector<std::vector<Expression>> metric) {
  ScenarioData d;
  d.name = std::move(name);
  int n = charts.front().dimension;
  d.charts = std::move(charts);
  d.lyapunov = std::move(lyapunov);
  d.metric = std::move(metric);
  for (std::size_t c = 0; c < d.charts.size(); ++c) d.vector_field.push_back(negative_gradient(d.lyapunov[c], d.metric[c], n));
  return d;
}

ScenarioData circle(std::string name, double freq) {
  E two_pi_k = num(2.0 * freq) * E::pi();
  ScenarioData d = gradient_scenario(std::move(name), {periodic_chart(1)}, {cos(two_pi_k * t(0))}, {{num(1.0)}});
  d.forms.push_back({"one", DifferentialForm::uniform(0, 1, 1, {num(1.0)}, true)});
  d.forms.push_back({"dt1", DifferentialForm::uniform(1, 1, 1, {num(1.0)}, true)});
  E g = sin(num(2.0) * E::pi() * t(0));
  d.forms.push_back({"sin2pit1", DifferentialForm::uniform(0, 1, 1, {g}, false)});
  d.forms.push_back({"cos2pit1_dt1", DifferentialForm::uniform(1, 1, 1, {cos(num(2.0) * E::pi() * t(0))}, false)});
  return d;
}

ScenarioData sphere(std::string name, bool ellipsoid) {
  std::vector<Expression> f;
  for (int c = 0; c < 2; ++c) {
    auto xyz = sphere_embedding(c);
    if (ellipsoid)
      f.push_back(pow(xyz[0], 2) + num(2.0) * pow(xyz[1], 2) + num(3.0) * pow(xyz[2], 2));
    else
      f.push_back(xyz[2]);
  }
  ScenarioData d = gradient_scenario(std::move(name), sphere_charts(), f, {round_metric(), round_metric()});
  E s = pow(t(0), 2) + pow(t(1), 2);
  E area = num(1.0) / (E::pi() * pow(num(1.0) + s, 2));
  d.forms.push_back({"one", DifferentialForm::uniform(0, 2, 2, {num(1.0)}, true)});
  d.forms.push_back({"area", DifferentialForm::uniform(2, 2, 2, {area}, true)});
  std::vector<Expression> xs, zs;
  for (int c = 0; c < 2; ++c) {
    auto xyz = sphere_embedding(c);
    xs.push_back(xyz[0]);
    zs.push_back(xyz[2]);
  }
  // x dz: a non-closed 1-form defined globally through the embedding.
  std::vector<std::vector<Expression>> xdz;
  for (int c = 0; c < 2; ++c) xdz.push_back({xs[c] * zs[c].derivative(0), xs[c] * zs[c].derivative(1)});
  d.forms.push_back({"x_dz", DifferentialForm(1, 2, xdz, false)});
  return d;
}

ScenarioData torus() {
  E two_pi = num(2.0) * E::pi();
  ScenarioData d = gradient_scenario("flat_torus", {periodic_chart(2)}, {cos(two_pi * t(0)) + cos(two_pi * t(1))},
                                     {{num(1.0), E(), E(), num(1.0)}});
  d.forms.push_back({"one", DifferentialForm::uniform(0, 2, 1, {num(1.0)}, true)});
  d.forms.push_back({"dt1", DifferentialForm::uniform(1, 2, 1, {num(1.0), E()}, true)});
  d.forms.push_back({"dt2", DifferentialForm::uniform(1, 2, 1, {E(), num(1.0)}, true)});
  d.forms.push_back({"dt1_dt2", DifferentialForm::uniform(2, 2, 1, {num(1.0)}, true)});
  d.forms.push_back({"sin2pit2_dt1", DifferentialForm::uniform(1, 2, 1, {sin(two_pi * t(1)), E()}, false)});
  d.forms.push_back({"sin2pit1_dt2", DifferentialForm::uniform(1, 2, 1, {E(), sin(two_pi * t(0))}, false)});
  return d;
}

std::vector<Scenario> make_builtins() {
  std::vector<Scenario> out;

  ScenarioData c = circle("circle_cos", 1.0);
  c.ground_truth = GroundTruth{{1, 1}, {1, 1}, {{cp(0, {0.0}), cp(0, {0.5}), 2}}, "circle"};
  out.emplace_back(std::move(c));

  ScenarioData dw = circle("double_well_circle", 2.0);
  GroundTruth dwt{{2, 2}, {1, 1}, {}, "circle"};
  for (double mx : {0.0, 0.5})
    for (double mn : {0.25, 0.75}) dwt.instantons.push_back({cp(0, {mx}), cp(0, {mn}), 1});
  dw.ground_truth = dwt;
  out.emplace_back(std::move(dw));

  ScenarioData rs = sphere("round_sphere_height", false);
  rs.ground_truth = GroundTruth{{1, 0, 1}, {1, 0, 1}, {}, "sphere"};
  out.emplace_back(std::move(rs));

  ScenarioData el = sphere("ellipsoid_sphere", true);
  GroundTruth elt{{2, 2, 2}, {1, 0, 1}, {}, "sphere"};
  // Maxima (0,0,-1) = A(0,0) and (0,0,1) = B(0,0); saddles (0,+-1,0); minima (+-1,0,0).
  for (const ChartPoint& mx : {cp(0, {0.0, 0.0}), cp(1, {0.0, 0.0})})
    for (double y : {1.0, -1.0}) elt.instantons.push_back({mx, cp(0, {0.0, y}), 1});
  for (double y : {1.0, -1.0})
    for (double x : {1.0, -1.0}) elt.instantons.push_back({cp(0, {0.0, y}), cp(0, {x, 0.0}), 1});
  el.ground_truth = elt;
  out.emplace_back(std::move(el));

  ScenarioData to = torus();
  GroundTruth tot{{1, 2, 1}, {1, 2, 1}, {}, "torus"};
  for (const ChartPoint& s : {cp(0, {0.5, 0.0}), cp(0, {0.0, 0.5})}) {
    tot.instantons.push_back({cp(0, {0.0, 0.0}), s, 2});
    tot.instantons.push_back({s, cp(0, {0.5, 0.5}), 2});
  }
  to.ground_truth = tot;
  out.emplace_back(std::move(to));
  return out;
}

}  // namespace

const std::vector<Scenario>& builtin_scenarios() {
  static const std::vector<Scenario> all = make_builtins();
  return all;
}

const Scenario& builtin_scenario(const std::string& name) {
  for (const Scenario& s : builtin_scenarios())
    if (s.name() == name) return s;
  throw std::invalid_argument("unknown builtin scenario '" + name + "'");
}

ConsistencyReport check_consistency(const Scenario& s, int samples, std::uint64_t seed) {
  ConsistencyReport r;
  r.min_metric_eigenvalue = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  const Atlas& atlas = s.atlas();
  const int n = s.dimension();
  std::vector<ChartPoint> points;
  for (int k = 0; k < samples; ++k) points.push_back(atlas.sample(rng));

  for (const ChartPoint& p : points) {
    Mat g = s.metric(p);
    r.metric_asymmetry = std::max(r.metric_asymmetry, (g - g.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (g + g.transpose()));
    r.min_metric_eigenvalue = std::min(r.min_metric_eigenvalue, es.eigenvalues().minCoeff());

    const Chart& ch = atlas.chart(p.chart);
    for (const Transition& tr : ch.transitions) {
      auto q = atlas.to_chart(p, tr.target);
      if (!q) continue;
      ++r.overlap_points;
      std::vector<double> qv(q->data(), q->data() + q->size());
      Vec back(n);
      for (int i = 0; i < n; ++i) back[i] = tr.inverse[static_cast<std::size_t>(i)].evaluate(qv);
      ChartPoint pb = atlas.wrap({p.chart, back});
      auto disp = atlas.displacement(p, pb);
      double err = disp ? disp->norm() : std::numeric_limits<double>::infinity();
      r.transition_roundtrip = std::max(r.transition_roundtrip, err);
      Mat J = *atlas.transition_jacobian(p, tr.target);
      if (J.determinant() <= 0.0) r.jacobian_sign_violations += 1.0;
      ChartPoint pq{tr.target, *q};
      r.field_mismatch = std::max(r.field_mismatch, (J * s.field(p) - s.field(pq)).cwiseAbs().maxCoeff());
      r.lyapunov_mismatch = std::max(r.lyapunov_mismatch, std::fabs(s.lyapunov(p) - s.lyapunov(pq)));
    }
  }
  for (const NamedForm& f : s.data().forms) {
    r.form_mismatch = std::max(r.form_mismatch, chart_consistency_defect(f.form, atlas, points));
    if (f.form.declared_closed()) r.closedness = std::max(r.closedness, closedness_defect(f.form, points));
  }

  auto require = [&](bool ok, const std::string& what) {
    if (!ok) r.failures.push_back(what);
  };
  require(r.transition_roundtrip < 1e-9, "transition round trip exceeds 1e-9");
  require(r.jacobian_sign_violations == 0.0, "transition Jacobian is not orientation preserving");
  require(r.metric_asymmetry < 1e-12, "metric is not symmetric");
  require(r.min_metric_eigenvalue > 1e-9, "metric is not positive definite");
  require(r.field_mismatch < 1e-9, "vector field does not transform by the transition Jacobian");
  require(r.lyapunov_mismatch < 1e-9, "Lyapunov function disagrees across charts");
  require(r.form_mismatch < 1e-9, "a form does not transform by pullback");
  require(r.closedness < 1e-9, "a form flagged closed has nonzero exterior derivative");
  r.passed = r.failures.empty();
  return r;
}

LyapunovReport check_lyapunov(const Scenario& s, int samples, double exclusion_radius,
                              const std::vector<ChartPoint>& centers, std::uint64_t seed, double margin) {
  LyapunovReport r;
  r.worst_rate = -std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  for (int k = 0; k < samples; ++k) {
    ChartPoint p = s.atlas().sample(rng);
    bool excluded = false;
    for (const ChartPoint& c : centers)
      if (s.atlas().distance(p, c) < exclusion_radius) {
        excluded = true;
        break;
      }
    if (excluded) {
      ++r.excluded;
      continue;
    }
    ++r.samples_checked;
    double rate = s.lyapunov_rate(p);
    r.worst_rate = std::max(r.worst_rate, rate);
    if (!(rate < -margin)) {
      r.violation = p;
      r.passed = false;
      return r;
    }
  }
  r.passed = true;
  return r;
}

}  // namespace morse

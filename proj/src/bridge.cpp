#include "morse/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <random>
#include <thread>

namespace morse {

FlowOptions QuadratureConfig::tight_flow() {
  FlowOptions o;
  o.abs_tol = 1e-10;
  o.rel_tol = 1e-9;
  // Trajectories near a separatrix slow down close to a saddle; they must
  // not be mistaken for having arrived.
  o.rest_speed = 0.0;
  o.record_samples = false;
  o.max_steps = 400000;
  return o;
}

int threads_from_environment() {
  const char* env = std::getenv("MORSE_THREADS");
  if (!env) return 1;
  int n = std::atoi(env);
  return n > 0 ? n : 1;
}

GaussLegendre gauss_legendre(int order) {
  if (order < 1) throw std::invalid_argument("quadrature order must be positive");
  GaussLegendre g;
  g.nodes.resize(static_cast<std::size_t>(order));
  g.weights.resize(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (order == 1) p0 = 1.0;
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    // ascending nodes on [0, 1]
    auto k = static_cast<std::size_t>(i);
    g.nodes[k] = 0.5 * (1.0 - x);
    g.weights[k] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return g;
}

namespace {

// Quintic end-point grading on [0, 1]. Integrands over moduli arcs blow up
// mildly where the launch angle approaches a separatrix; the grading flattens
// that to a smooth function of u.
constexpr int kGrading = 5;
constexpr double kEndMargin = 1e-10;
double grade(double u) {
  double a = std::pow(u, kGrading), b = std::pow(1 - u, kGrading);
  return a / (a + b);
}
double grade_derivative(double u) {
  double a = std::pow(u, kGrading), b = std::pow(1 - u, kGrading);
  return kGrading * std::pow(u * (1 - u), kGrading - 1) / ((a + b) * (a + b));
}

template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < count; i += threads) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void check_degrees(const std::vector<const DifferentialForm*>& forms, int degree) {
  for (const DifferentialForm* w : forms)
    if (w->degree() != degree)
      throw DegreeError("form of degree " + std::to_string(w->degree()) + " where degree " + std::to_string(degree) +
                        " is needed");
}

double one_form_along(const DifferentialForm& w, const ChartPoint& p, const Vec& v) {
  Mat m(v.size(), 1);
  m.col(0) = v;
  return w.apply(p, m);
}

}  // namespace

namespace {

std::string form_key(const DifferentialForm& w) {
  std::string key = std::to_string(w.degree());
  for (const auto& chart : w.coefficients())
    for (const Expression& e : chart) {
      key += ';';
      key += e.to_string();
    }
  return key;
}

}  // namespace

Bridge::Bridge(const FlowModel& model, const Orientations& orientations, QuadratureConfig config)
    : model_(&model), complex_(build_complex(model, orientations)), config_(config), rule_(gauss_legendre(config.order)),
      cache_(std::make_shared<EntCache>()) {}

Cochain Bridge::zero(int degree) const { return {degree, Vec::Zero(static_cast<Eigen::Index>(basis(degree).size()))}; }

Cochain Bridge::delta(const Cochain& c) const {
  if (c.degree >= complex_.dimension) return {c.degree + 1, Vec()};
  return {c.degree + 1, complex_.delta[static_cast<std::size_t>(c.degree)].cast<double>() * c.values};
}

std::vector<double> Bridge::ent(const std::vector<const DifferentialForm*>& forms, int y, int x) const {
  const RestPoint& rx = model_->rest_point(x);
  const RestPoint& ry = model_->rest_point(y);
  const int gap = rx.index() - ry.index();
  check_degrees(forms, gap);
  std::vector<double> out(forms.size(), 0.0);
  if (gap == 0) {
    if (x == y)
      for (std::size_t j = 0; j < forms.size(); ++j) out[j] = forms[j]->apply(rx.point, Mat(rx.point.coords.size(), 0));
    return out;
  }
  if (gap == 1) return ent_instantons(forms, y, x);
  if (gap == 2) {
    // Moduli integrals over arcs are costly and recur (Int, E and the
    // detection table share them), so they are remembered per form text.
    std::vector<std::string> keys;
    std::vector<const DifferentialForm*> missing;
    std::vector<std::size_t> slots;
    {
      std::lock_guard<std::mutex> lock(cache_->mutex);
      for (std::size_t j = 0; j < forms.size(); ++j) {
        keys.push_back(form_key(*forms[j]) + "@" + std::to_string(x) + ">" + std::to_string(y));
        auto it = cache_->values.find(keys.back());
        if (it != cache_->values.end()) {
          out[j] = it->second;
        } else {
          missing.push_back(forms[j]);
          slots.push_back(j);
        }
      }
    }
    if (missing.empty()) return out;
    std::vector<double> fresh = ent_arcs(missing, x, y);
    std::lock_guard<std::mutex> lock(cache_->mutex);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      out[slots[i]] = fresh[i];
      cache_->values.emplace(keys[slots[i]], fresh[i]);
    }
    return out;
  }
  throw std::invalid_argument("moduli integrals are implemented for index gaps up to 2");
}

std::vector<double> Bridge::ent_instantons(const std::vector<const DifferentialForm*>& forms, int y, int x) const {
  const Scenario& s = model_->scenario();
  const Atlas& atlas = s.atlas();
  const RestPoint& rx = model_->rest_point(x);
  const RestPoint& ry = model_->rest_point(y);
  const int m = static_cast<int>(forms.size());
  auto insts = model_->instantons_between(x, y);
  std::vector<std::vector<double>> parts(insts.size());

  parallel_for(static_cast<int>(insts.size()), config_.threads, [&](int i) {
    const Instanton& g = *insts[static_cast<std::size_t>(i)];
    const ChartPoint& seed = g.trajectory.samples.front().point;
    const RestPoint& goal = g.backward_shot ? rx : ry;
    StopRule stop;
    stop.capture = {{goal.id, goal.point, config_.end_radius}};
    AccumulatorRate rate = [&](const ChartPoint& p, const Vec& v, const Mat&, Vec& r) {
      for (int j = 0; j < m; ++j) r[j] = one_form_along(*forms[static_cast<std::size_t>(j)], p, v);
    };
    Direction dir = g.backward_shot ? Direction::Backward : Direction::Forward;
    AugmentedFlow run = integrate_augmented(s, seed, dir, stop, Mat(), m, rate, config_.flow);
    if (run.trajectory.captured != goal.id)
      throw std::runtime_error("instanton re-trace did not reach rest point " + std::to_string(goal.id));
    // Near x and near y, in flow order.
    const ChartPoint& near_x = g.backward_shot ? run.end : seed;
    const ChartPoint& near_y = g.backward_shot ? seed : run.end;
    Vec head = *atlas.displacement(rx.point, near_x);
    Vec tail = *atlas.displacement(near_y, ry.point);
    std::vector<double> v(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      const DifferentialForm& w = *forms[static_cast<std::size_t>(j)];
      double body = g.backward_shot ? -run.accumulators[j] : run.accumulators[j];
      v[static_cast<std::size_t>(j)] =
          instanton_sign(g, complex_.orientations) *
          (one_form_along(w, rx.point, head) + body + one_form_along(w, near_y, tail));
    }
    parts[static_cast<std::size_t>(i)] = std::move(v);
  });

  std::vector<double> out(forms.size(), 0.0);
  for (const auto& p : parts)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += p[j];
  return out;
}

std::vector<double> Bridge::ent_arcs(const std::vector<const DifferentialForm*>& forms, int x, int y) const {
  const Scenario& s = model_->scenario();
  const RestPoint& rx = model_->rest_point(x);
  const RestPoint& ry = model_->rest_point(y);
  const int m = static_cast<int>(forms.size());
  const double rho = model_->config().disk_radius;
  const Mat& F = rx.frame();
  if (F.cols() != 2 || F.rows() != 2) throw std::invalid_argument("gap-2 moduli integrals need a surface");

  const LaunchCurve curve = launch_curve(rx, rho);
  const double inner_scale = curve.back.determinant() / curve.linear.trace();
  std::vector<double> at_x(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) at_x[static_cast<std::size_t>(j)] = forms[static_cast<std::size_t>(j)]->apply(rx.point, F);

  // Quadrature nodes in the arc parameter u in [0, 1]. Graded arcs are split
  // at their midpoint: the grading map has complex poles near u = 1/2 that
  // would otherwise limit a single Gauss rule.
  struct Node {
    const Arc* arc;
    double u, weight;
    bool graded;
  };
  std::vector<Node> plan;
  for (const Arc* arc : model_->arcs_between(x, y)) {
    // A full circle has no end points to grade towards.
    if (arc->end - arc->begin >= 2 * M_PI - 1e-12) {
      for (std::size_t k = 0; k < rule_.nodes.size(); ++k) plan.push_back({arc, rule_.nodes[k], rule_.weights[k], false});
      continue;
    }
    for (int half = 0; half < 2; ++half)
      for (std::size_t k = 0; k < rule_.nodes.size(); ++k)
        plan.push_back({arc, 0.5 * (half + rule_.nodes[k]), 0.5 * rule_.weights[k], true});
  }

  const int jobs = static_cast<int>(plan.size());
  std::vector<std::vector<double>> parts(static_cast<std::size_t>(jobs));

  // Nodes within a hair of an arc end may numerically fall on the other side
  // of the separatrix; their weight is negligible, so any minimum ends them.
  StopRule stop;
  for (const RestPoint& r : model_->rest_points())
    if (r.index() == 0) stop.capture.push_back({r.id, r.point, config_.end_radius});
  parallel_for(jobs, config_.threads, [&](int job) {
    const Node& nd = plan[static_cast<std::size_t>(job)];
    const double length = nd.arc->end - nd.arc->begin;
    const double u = nd.u;
    double psi = nd.arc->begin + length * (nd.graded ? grade(u) : u);
    // Arc ends are only known to about 1e-11; nodes closer than that could
    // run into the saddle. Their weight is far below the tolerance.
    if (nd.graded) psi = std::clamp(psi, nd.arc->begin + kEndMargin, nd.arc->end - kEndMargin);
    double weight = nd.weight * length * (nd.graded ? grade_derivative(u) : 1.0);
    Vec e(2), de(2);
    e << std::cos(psi), std::sin(psi);
    de << -std::sin(psi), std::cos(psi);
    ChartPoint seed = launch_seed(s, rx, curve, psi);
    Mat w0 = launch_tangent(rx, curve, psi);
    // The tangent is tiny on the launch curve; integrate a unit copy so the
    // absolute tolerance does not swamp it, and rescale afterwards.
    const double w_scale = w0.norm();
    w0 /= w_scale;
    AccumulatorRate rate = [&](const ChartPoint& p, const Vec& v, const Mat& frame, Vec& r) {
      Mat pair(v.size(), 2);
      pair.col(0) = v;
      pair.col(1) = frame.col(0);
      for (int j = 0; j < m; ++j) r[j] = forms[static_cast<std::size_t>(j)]->apply(p, pair);
    };
    AugmentedFlow run = integrate_augmented(s, seed, Direction::Forward, stop, w0, m, rate, config_.flow);
    double from_end = length * std::min(grade(u), 1.0 - grade(u));
    bool near_end = nd.graded && from_end < 1e-8;
    if (!run.trajectory.captured || (*run.trajectory.captured != ry.id && !near_end))
      throw std::runtime_error("launch from rest point " + std::to_string(x) + " did not reach rest point " +
                               std::to_string(y) + " (" + to_string(run.trajectory.termination) + " " +
                               run.trajectory.message + ", psi " + std::to_string(psi) + ")");
    Vec Ae = curve.linear * e;
    double inner = inner_scale * (Ae[0] * de[1] - Ae[1] * de[0]);
    std::vector<double> v(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j)
      v[static_cast<std::size_t>(j)] = weight * (w_scale * run.accumulators[j] + at_x[static_cast<std::size_t>(j)] * inner);
    parts[static_cast<std::size_t>(job)] = std::move(v);
  });

  const double sign = complex_.orientations[x] * complex_.orientations[y];
  std::vector<double> out(forms.size(), 0.0);
  for (const auto& p : parts)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += p[j];
  for (double& v : out) v *= sign;
  return out;
}

std::vector<double> Bridge::integrate(const std::vector<const DifferentialForm*>& forms, int x) const {
  const RestPoint& rx = model_->rest_point(x);
  check_degrees(forms, rx.index());
  std::vector<double> out(forms.size(), 0.0);
  for (int y : basis(0)) {
    if (y != x && !model_->precedes(x, y)) continue;
    std::vector<double> e = ent(forms, y, x);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += complex_.orientations[y] * e[j];
  }
  return out;
}

double int_unstable(const Bridge& b, const DifferentialForm& w, int x) { return b.integrate({&w}, x)[0]; }

double ent_moduli(const Bridge& b, const DifferentialForm& w, int y, int x) {
  const int gap = b.model().rest_point(x).index() - b.model().rest_point(y).index();
  if (gap < 0 || (gap > 0 && !b.model().precedes(x, y)) || (gap == 0 && x != y)) return 0.0;
  return b.ent({&w}, y, x)[0];
}

std::vector<Cochain> int_cochains(const Bridge& b, const std::vector<const DifferentialForm*>& forms) {
  if (forms.empty()) return {};
  const int degree = forms.front()->degree();
  std::vector<Cochain> out(forms.size(), b.zero(degree));
  const auto& ids = b.basis(degree);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    std::vector<double> v = b.integrate(forms, ids[k]);
    for (std::size_t j = 0; j < forms.size(); ++j) out[j].values[static_cast<Eigen::Index>(k)] = v[j];
  }
  return out;
}

Cochain int_cochain(const Bridge& b, const DifferentialForm& w) { return int_cochains(b, {&w}).front(); }

std::vector<Cochain> e_maps(const Bridge& b, const std::vector<const DifferentialForm*>& forms,
                            const std::vector<Cochain>& fs) {
  if (forms.size() != fs.size()) throw std::invalid_argument("e_maps needs one cochain per form");
  if (forms.empty()) return {};
  const int r = forms.front()->degree();
  const int p = fs.front().degree;
  const int degree = p + r;
  if (degree > b.model().dimension()) throw DegreeError("E lands above the top degree");
  std::vector<Cochain> out(forms.size(), b.zero(degree));
  const auto& xs = b.basis(degree);
  const auto& ys = b.basis(p);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t k = 0; k < ys.size(); ++k) {
      if (r == 0 ? xs[i] != ys[k] : !b.model().precedes(xs[i], ys[k])) continue;
      auto pos = static_cast<Eigen::Index>(k);
      if (std::all_of(fs.begin(), fs.end(), [&](const Cochain& f) { return f.values[pos] == 0.0; })) continue;
      std::vector<double> e = b.ent(forms, ys[k], xs[i]);
      for (std::size_t j = 0; j < forms.size(); ++j) out[j].values[static_cast<Eigen::Index>(i)] += fs[j].values[pos] * e[j];
    }
  return out;
}

Cochain e_map(const Bridge& b, const DifferentialForm& w, const Cochain& f) { return e_maps(b, {&w}, {f}).front(); }

namespace {

IdentityCheck compare(std::string name, const Bridge& b, const Cochain& left, const Cochain& right, double tol) {
  IdentityCheck c;
  c.name = std::move(name);
  c.tolerance = tol;
  const auto& ids = b.basis(left.degree);
  for (Eigen::Index k = 0; k < left.values.size(); ++k) {
    double r = std::fabs(left.values[k] - right.values[k]);
    if (c.rest_point < 0 || r > c.residual) {
      c.residual = r;
      c.left = left.values[k];
      c.right = right.values[k];
      c.rest_point = ids[static_cast<std::size_t>(k)];
    }
  }
  c.verdict = c.residual < tol ? "pass" : "fail";
  return c;
}

}  // namespace

std::vector<IdentityCheck> verify_chain_map(const Bridge& b, const std::vector<DifferentialForm>& forms, double tol) {
  std::vector<const DifferentialForm*> ws, dws;
  std::vector<DifferentialForm> derived;
  derived.reserve(forms.size());
  for (const DifferentialForm& w : forms) {
    if (w.degree() >= b.model().dimension()) throw DegreeError("chain map check needs a form below the top degree");
    if (w.degree() != forms.front().degree()) throw DegreeError("batched forms must share a degree");
    derived.push_back(exterior_derivative(w));
    ws.push_back(&w);
  }
  for (const DifferentialForm& d : derived) dws.push_back(&d);
  std::vector<Cochain> lower = int_cochains(b, ws), upper = int_cochains(b, dws);
  std::vector<IdentityCheck> out;
  for (std::size_t j = 0; j < forms.size(); ++j) out.push_back(compare("chain_map", b, b.delta(lower[j]), upper[j], tol));
  return out;
}

IdentityCheck verify_chain_map(const Bridge& b, const DifferentialForm& w, double tol) {
  return verify_chain_map(b, std::vector<DifferentialForm>{w}, tol).front();
}

std::vector<IdentityCheck> verify_leibniz(const Bridge& b, const std::vector<DifferentialForm>& forms,
                                          const std::vector<Cochain>& fs, double tol) {
  if (forms.size() != fs.size()) throw std::invalid_argument("Leibniz check needs one cochain per form");
  if (forms.empty()) return {};
  const int r = forms.front().degree();
  if (fs.front().degree + r + 1 > b.model().dimension()) throw DegreeError("Leibniz check lands above the top degree");
  std::vector<const DifferentialForm*> ws, dws;
  std::vector<DifferentialForm> derived;
  derived.reserve(forms.size());
  std::vector<Cochain> dfs;
  for (std::size_t j = 0; j < forms.size(); ++j) {
    derived.push_back(exterior_derivative(forms[j]));
    ws.push_back(&forms[j]);
    dfs.push_back(b.delta(fs[j]));
  }
  for (const DifferentialForm& d : derived) dws.push_back(&d);
  std::vector<Cochain> plain = e_maps(b, ws, fs), with_dw = e_maps(b, dws, fs), with_df = e_maps(b, ws, dfs);
  std::vector<IdentityCheck> out;
  for (std::size_t j = 0; j < forms.size(); ++j) {
    Cochain right = with_dw[j];
    right.values += (r % 2 == 0 ? 1.0 : -1.0) * with_df[j].values;
    out.push_back(compare("leibniz", b, b.delta(plain[j]), right, tol));
  }
  return out;
}

IdentityCheck verify_leibniz(const Bridge& b, const DifferentialForm& w, const Cochain& f, double tol) {
  return verify_leibniz(b, std::vector<DifferentialForm>{w}, std::vector<Cochain>{f}, tol).front();
}

Snapped snap_to_lattice(const std::vector<Vec>& columns, double tol) {
  Snapped s;
  const double floor = 10 * tol;
  double unit = 0.0;
  Eigen::Index rows = columns.empty() ? 0 : columns.front().size();
  for (const Vec& c : columns)
    for (Eigen::Index i = 0; i < c.size(); ++i)
      if (std::fabs(c[i]) > floor && (unit == 0.0 || std::fabs(c[i]) < unit)) unit = std::fabs(c[i]);
  s.unit = unit == 0.0 ? 1.0 : unit;
  s.values = IntMat::Zero(rows, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      double q = columns[j][i] / s.unit;
      double k = std::round(q);
      if (std::fabs(columns[j][i] - k * s.unit) > floor) s.conclusive = false;
      s.values(i, static_cast<Eigen::Index>(j)) = static_cast<long long>(k);
    }
  return s;
}

namespace {

// rank([delta_{r-1} | K]) - rank(delta_{r-1}) for integer columns K of degree r.
long long class_rank(const Bridge& b, int degree, const IntMat& k) {
  if (degree == 0) return exact_rank(k);
  const IntMat& d = b.complex().delta[static_cast<std::size_t>(degree - 1)];
  IntMat joined(d.rows(), d.cols() + k.cols());
  joined << d, k;
  return exact_rank(joined) - exact_rank(d);
}

}  // namespace

std::optional<bool> is_coboundary(const Bridge& b, const Cochain& c, double tol) {
  Snapped s = snap_to_lattice({c.values}, tol);
  if (!s.conclusive) return std::nullopt;
  return class_rank(b, c.degree, s.values) == 0;
}

CupCheck verify_cup_diagram(const Bridge& b, const DifferentialForm& w1, const DifferentialForm& w2, double tol) {
  const int degree = w1.degree() + w2.degree();
  if (degree > b.model().dimension()) throw DegreeError("cup product lands above the top degree");
  CupCheck out;
  out.wedge_side = int_cochain(b, wedge(w1, w2));
  out.product_side = e_map(b, w1, int_cochain(b, w2));
  out.numeric = compare("cup_diagram", b, out.wedge_side, out.product_side, tol);

  Snapped s = snap_to_lattice({out.wedge_side.values, out.product_side.values}, tol);
  if (s.conclusive) {
    IntMat diff = s.values.col(0) - s.values.col(1);
    out.same_class = class_rank(b, degree, diff) == 0;
  }
  bool lower_delta_zero = degree == 0 || !b.complex().delta[static_cast<std::size_t>(degree - 1)].any();
  if (!out.same_class)
    out.numeric.verdict = "inconclusive";
  else if (!*out.same_class || (lower_delta_zero && out.numeric.residual >= tol))
    out.numeric.verdict = "fail";
  else
    out.numeric.verdict = "pass";
  return out;
}

std::vector<const NamedForm*> closed_generators(const Scenario& s) {
  std::vector<const NamedForm*> out;
  for (const NamedForm& f : s.data().forms)
    if (f.form.declared_closed()) out.push_back(&f);
  return out;
}

namespace {

// Integrals of every closed generator, grouped by degree and batched.
std::map<const NamedForm*, Cochain> generator_integrals(const Bridge& b, const std::vector<const NamedForm*>& gens) {
  std::map<const NamedForm*, Cochain> out;
  for (int r = 0; r <= b.model().dimension(); ++r) {
    std::vector<const NamedForm*> named;
    std::vector<const DifferentialForm*> forms;
    for (const NamedForm* g : gens)
      if (g->form.degree() == r) {
        named.push_back(g);
        forms.push_back(&g->form);
      }
    std::vector<Cochain> cs = int_cochains(b, forms);
    for (std::size_t j = 0; j < named.size(); ++j) out.emplace(named[j], std::move(cs[j]));
  }
  return out;
}

}  // namespace

std::vector<Detection> detect_instantons(const Bridge& b, double tol) {
  const FlowModel& m = b.model();
  const int n = m.dimension();
  auto gens = closed_generators(m.scenario());
  auto integrals = generator_integrals(b, gens);
  std::vector<Detection> out;
  for (const NamedForm* g1 : gens) {
    const int r = g1->form.degree();
    if (r < 1) continue;
    for (const NamedForm* g2 : gens) {
      const int q = g2->form.degree();
      if (r + q > n) continue;
      const Cochain& c2 = integrals.at(g2);
      auto c2_exact = is_coboundary(b, c2, tol);
      if (!c2_exact || *c2_exact) continue;  // the right factor is not a nonzero class

      // E(g1 (x) c2), keeping the moduli integrals to name a witness.
      const auto& xs = b.basis(r + q);
      const auto& ys = b.basis(q);
      Cochain prod = b.zero(r + q);
      std::vector<std::tuple<int, int, double>> terms;
      for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t k = 0; k < ys.size(); ++k) {
          double fy = c2.values[static_cast<Eigen::Index>(k)];
          if (fy == 0.0 || !m.precedes(xs[i], ys[k])) continue;
          double e = b.ent({&g1->form}, ys[k], xs[i])[0];
          prod.values[static_cast<Eigen::Index>(i)] += fy * e;
          terms.emplace_back(xs[i], ys[k], std::fabs(fy) > tol ? e : 0.0);
        }

      Detection d;
      d.left = g1->name;
      d.right = g2->name;
      d.gap = r;
      auto exact = is_coboundary(b, prod, tol);
      d.nontrivial = exact.has_value() && !*exact;
      if (d.nontrivial)
        for (const auto& [x, y, e] : terms)
          if (std::fabs(e) > tol && m.trajectory_components(x, y) > 0) {
            d.witness_from = x;
            d.witness_to = y;
            break;
          }
      out.push_back(d);
    }
  }
  return out;
}

std::vector<long long> int_class_ranks(const Bridge& b, double tol) {
  const int n = b.model().dimension();
  auto gens = closed_generators(b.model().scenario());
  auto integrals = generator_integrals(b, gens);
  std::vector<long long> out;
  for (int r = 0; r <= n; ++r) {
    std::vector<Vec> cols;
    for (const NamedForm* g : gens)
      if (g->form.degree() == r) cols.push_back(integrals.at(g).values);
    if (cols.empty()) {
      out.push_back(0);
      continue;
    }
    Snapped s = snap_to_lattice(cols, tol);
    out.push_back(s.conclusive ? class_rank(b, r, s.values) : -1);
  }
  return out;
}

namespace {

using E = Expression;

E random_combination(const std::vector<E>& basis, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  E sum;
  for (const E& b : basis) sum = sum + E::constant(coef(rng)) * b;
  return sum;
}

}  // namespace

DifferentialForm random_form(const Scenario& s, int degree, std::uint64_t seed) {
  const Atlas& atlas = s.atlas();
  const int n = s.dimension();
  if (degree < 0 || degree > n) throw DegreeError("random form degree out of range");
  std::mt19937_64 rng(seed);
  const std::size_t slots = multi_indices(n, degree).size();

  bool periodic = atlas.size() == 1;
  for (const AxisSpec& a : atlas.chart(0).axes) periodic = periodic && a.periodic;
  if (periodic) {
    E two_pi = E::constant(2.0) * E::pi();
    std::vector<E> basis{E::constant(1.0)};
    for (int i = 0; i < n; ++i) {
      basis.push_back(sin(two_pi * E::variable(i)));
      basis.push_back(cos(two_pi * E::variable(i)));
    }
    if (n == 2) {
      basis.push_back(sin(two_pi * (E::variable(0) + E::variable(1))));
      basis.push_back(cos(two_pi * (E::variable(0) - E::variable(1))));
    }
    std::vector<E> coeffs;
    for (std::size_t k = 0; k < slots; ++k) coeffs.push_back(random_combination(basis, rng));
    return DifferentialForm::uniform(degree, n, 1, coeffs);
  }

  if (n == 2 && atlas.size() == 2) {
    // Polynomials of degree <= 2 in the ambient coordinates of the sphere.
    std::vector<std::vector<E>> monomials(2);
    for (int c = 0; c < 2; ++c) {
      auto xyz = sphere_embedding(c);
      monomials[static_cast<std::size_t>(c)].push_back(E::constant(1.0));
      for (int i = 0; i < 3; ++i) monomials[static_cast<std::size_t>(c)].push_back(xyz[static_cast<std::size_t>(i)]);
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
          monomials[static_cast<std::size_t>(c)].push_back(xyz[static_cast<std::size_t>(i)] * xyz[static_cast<std::size_t>(j)]);
    }
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    auto poly = [&] {
      std::vector<double> a(monomials[0].size());
      for (double& v : a) v = coef(rng);
      std::vector<E> per_chart(2);
      for (int c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < a.size(); ++k)
          per_chart[static_cast<std::size_t>(c)] =
              per_chart[static_cast<std::size_t>(c)] + E::constant(a[k]) * monomials[static_cast<std::size_t>(c)][k];
      return per_chart;
    };
    std::vector<std::vector<E>> coeffs(2, std::vector<E>(slots));
    if (degree == 0) {
      auto g = poly();
      for (int c = 0; c < 2; ++c) coeffs[static_cast<std::size_t>(c)][0] = g[static_cast<std::size_t>(c)];
    } else if (degree == 1) {
      // sum of g_i d(x_i) over the ambient coordinates
      for (int i = 0; i < 3; ++i) {
        auto g = poly();
        for (int c = 0; c < 2; ++c) {
          E xi = sphere_embedding(c)[static_cast<std::size_t>(i)];
          for (int a = 0; a < 2; ++a)
            coeffs[static_cast<std::size_t>(c)][static_cast<std::size_t>(a)] =
                coeffs[static_cast<std::size_t>(c)][static_cast<std::size_t>(a)] + g[static_cast<std::size_t>(c)] * xi.derivative(a);
        }
      }
    } else {
      // g times the area element, which has the same expression in both charts
      auto g = poly();
      E sq = pow(E::variable(0), 2) + pow(E::variable(1), 2);
      E area = E::constant(1.0) / (E::pi() * pow(E::constant(1.0) + sq, 2));
      for (int c = 0; c < 2; ++c) coeffs[static_cast<std::size_t>(c)][0] = g[static_cast<std::size_t>(c)] * area;
    }
    return DifferentialForm(degree, n, coeffs);
  }
  throw std::invalid_argument("no random form family for scenario " + s.name());
}

Cochain random_cochain(const Bridge& b, int degree, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  Cochain c = b.zero(degree);
  for (Eigen::Index i = 0; i < c.values.size(); ++i) c.values[i] = coef(rng);
  return c;
}

}  // namespace morse

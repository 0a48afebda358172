#include "morse/atlas.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace morse {

Atlas::Atlas(std::vector<Chart> charts) : charts_(std::move(charts)) {
  if (charts_.empty()) throw std::invalid_argument("atlas needs at least one chart");
  dimension_ = charts_.front().dimension;
  compiled_.resize(charts_.size());
  for (std::size_t c = 0; c < charts_.size(); ++c) {
    const Chart& ch = charts_[c];
    if (ch.dimension != dimension_ || static_cast<int>(ch.axes.size()) != dimension_)
      throw std::invalid_argument("chart " + ch.id + ": dimension mismatch");
    for (const AxisSpec& a : ch.axes)
      if (!(a.upper > a.lower)) throw std::invalid_argument("chart " + ch.id + ": empty axis");
    for (const Transition& t : ch.transitions) {
      if (t.target < 0 || t.target >= static_cast<int>(charts_.size()))
        throw std::invalid_argument("chart " + ch.id + ": transition to unknown chart");
      if (static_cast<int>(t.map.size()) != dimension_ || static_cast<int>(t.inverse.size()) != dimension_)
        throw std::invalid_argument("chart " + ch.id + ": transition arity mismatch");
      CompiledTransition ct;
      ct.target = t.target;
      ct.overlap = Program(t.overlap);
      for (const Expression& e : t.map) {
        ct.map.emplace_back(e);
        std::vector<Program> row;
        for (int j = 0; j < dimension_; ++j) row.emplace_back(e.derivative(j));
        ct.jacobian.push_back(std::move(row));
      }
      compiled_[c].push_back(std::move(ct));
    }
  }
}

int Atlas::chart_index(const std::string& id) const {
  for (std::size_t i = 0; i < charts_.size(); ++i)
    if (charts_[i].id == id) return static_cast<int>(i);
  throw std::invalid_argument("unknown chart '" + id + "'");
}

ChartPoint Atlas::wrap(ChartPoint p) const {
  const Chart& ch = chart(p.chart);
  for (int i = 0; i < dimension_; ++i) {
    const AxisSpec& a = ch.axes[static_cast<std::size_t>(i)];
    if (!a.periodic) continue;
    double w = a.width();
    double v = std::fmod(p.coords[i] - a.lower, w);
    if (v < 0) v += w;
    if (v >= w) v = 0.0;
    p.coords[i] = a.lower + v;
  }
  return p;
}

bool Atlas::in_domain(int c, const Vec& coords) const {
  const Chart& ch = chart(c);
  for (int i = 0; i < dimension_; ++i) {
    const AxisSpec& a = ch.axes[static_cast<std::size_t>(i)];
    if (!std::isfinite(coords[i])) return false;
    if (!a.periodic && !(coords[i] > a.lower && coords[i] < a.upper)) return false;
  }
  return true;
}

double Atlas::interiority(int c, const Vec& coords) const {
  const Chart& ch = chart(c);
  double best = 1.0;
  for (int i = 0; i < dimension_; ++i) {
    const AxisSpec& a = ch.axes[static_cast<std::size_t>(i)];
    if (a.periodic) continue;
    double half = 0.5 * a.width();
    double d = std::min(coords[i] - a.lower, a.upper - coords[i]) / half;
    best = std::min(best, d);
  }
  return best;
}

std::optional<std::size_t> Atlas::find_transition(int source, int target) const {
  const auto& list = compiled_.at(static_cast<std::size_t>(source));
  for (std::size_t k = 0; k < list.size(); ++k)
    if (list[k].target == target) return k;
  return std::nullopt;
}

std::optional<Vec> Atlas::to_chart(const ChartPoint& p, int target) const {
  if (p.chart == target) return p.coords;
  auto k = find_transition(p.chart, target);
  if (!k) return std::nullopt;
  const CompiledTransition& t = compiled_[static_cast<std::size_t>(p.chart)][*k];
  std::span<const double> x(p.coords.data(), static_cast<std::size_t>(p.coords.size()));
  try {
    if (!(t.overlap(x) > 0.0)) return std::nullopt;
    Vec out(dimension_);
    for (int i = 0; i < dimension_; ++i) out[i] = t.map[static_cast<std::size_t>(i)](x);
    ChartPoint q = wrap({target, out});
    if (!in_domain(target, q.coords)) return std::nullopt;
    return q.coords;
  } catch (const EvaluationError&) {
    return std::nullopt;
  }
}

std::optional<Mat> Atlas::transition_jacobian(const ChartPoint& p, int target) const {
  if (p.chart == target) return Mat::Identity(dimension_, dimension_);
  auto k = find_transition(p.chart, target);
  if (!k) return std::nullopt;
  const CompiledTransition& t = compiled_[static_cast<std::size_t>(p.chart)][*k];
  std::span<const double> x(p.coords.data(), static_cast<std::size_t>(p.coords.size()));
  Mat J(dimension_, dimension_);
  try {
    for (int i = 0; i < dimension_; ++i)
      for (int j = 0; j < dimension_; ++j)
        J(i, j) = t.jacobian[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](x);
  } catch (const EvaluationError&) {
    return std::nullopt;
  }
  return J;
}

ChartPoint Atlas::best_chart(const ChartPoint& p) const {
  ChartPoint best = wrap(p);
  double score = interiority(best.chart, best.coords);
  for (const CompiledTransition& t : compiled_[static_cast<std::size_t>(p.chart)]) {
    auto q = to_chart(best, t.target);
    if (!q) continue;
    double s = interiority(t.target, *q);
    if (s > score + 1e-12) {
      score = s;
      best = {t.target, *q};
    }
  }
  return best;
}

std::optional<Vec> Atlas::displacement(const ChartPoint& a, const ChartPoint& b) const {
  auto bc = to_chart(b, a.chart);
  if (!bc) return std::nullopt;
  Vec d = *bc - a.coords;
  const Chart& ch = chart(a.chart);
  for (int i = 0; i < dimension_; ++i) {
    const AxisSpec& ax = ch.axes[static_cast<std::size_t>(i)];
    if (!ax.periodic) continue;
    double w = ax.width();
    d[i] -= w * std::nearbyint(d[i] / w);
  }
  return d;
}

double Atlas::distance(const ChartPoint& a, const ChartPoint& b) const {
  if (auto d = displacement(a, b)) return d->norm();
  if (auto d = displacement(b, a)) return d->norm();
  return std::numeric_limits<double>::infinity();
}

ChartPoint Atlas::sample(std::mt19937_64& rng) const {
  std::uniform_int_distribution<int> pick(0, size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int c = pick(rng);
  const Chart& ch = chart(c);
  Vec x(dimension_);
  for (int i = 0; i < dimension_; ++i) {
    const AxisSpec& a = ch.axes[static_cast<std::size_t>(i)];
    double u = unit(rng);
    if (a.periodic)
      x[i] = a.lower + u * a.width();
    else
      x[i] = a.lower + a.width() * (0.05 + 0.9 * u);
  }
  return {c, x};
}

}  // namespace morse

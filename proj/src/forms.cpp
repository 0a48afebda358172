#include "morse/forms.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace morse {

namespace {

void combos(int n, int r, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == r) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < n; ++i) {
    cur.push_back(i);
    combos(n, r, i + 1, cur, out);
    cur.pop_back();
  }
}

// Sign of the permutation that sorts `v` (entries distinct).
int sort_sign(std::vector<int> v) {
  int sign = 1;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j + 1 < v.size() - i; ++j)
      if (v[j] > v[j + 1]) {
        std::swap(v[j], v[j + 1]);
        sign = -sign;
      }
  return sign;
}

std::size_t count_for(int n, int degree) { return multi_indices(n, degree).size(); }

}  // namespace

const std::vector<std::vector<int>>& multi_indices(int n, int degree) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::vector<std::vector<int>>> cache;
  std::lock_guard lock(mu);
  auto key = std::make_pair(n, degree);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<std::vector<int>> out;
  if (degree >= 0 && degree <= n) {
    std::vector<int> cur;
    combos(n, degree, 0, cur, out);
  }
  return cache.emplace(key, std::move(out)).first->second;
}

int multi_index_position(int n, const std::vector<int>& index) {
  const auto& all = multi_indices(n, static_cast<int>(index.size()));
  auto it = std::find(all.begin(), all.end(), index);
  if (it == all.end()) throw std::invalid_argument("not a strictly increasing multi-index");
  return static_cast<int>(it - all.begin());
}

DifferentialForm::DifferentialForm(int degree, int dimension, std::vector<std::vector<Expression>> coefficients,
                                   bool declared_closed)
    : degree_(degree), dimension_(dimension), declared_closed_(declared_closed), coefficients_(std::move(coefficients)) {
  if (degree < 0 || degree > dimension) throw DegreeError("form degree out of range");
  auto programs = std::make_shared<std::vector<std::vector<Program>>>();
  for (const auto& chart : coefficients_) {
    if (chart.size() != count_for(dimension, degree)) throw DegreeError("form coefficient count mismatch");
    std::vector<Program> row;
    row.reserve(chart.size());
    for (const Expression& e : chart) row.emplace_back(e);
    programs->push_back(std::move(row));
  }
  programs_ = std::move(programs);
}

DifferentialForm DifferentialForm::uniform(int degree, int dimension, int charts, std::vector<Expression> coefficients,
                                           bool declared_closed) {
  return DifferentialForm(degree, dimension,
                          std::vector<std::vector<Expression>>(static_cast<std::size_t>(charts), coefficients),
                          declared_closed);
}

DifferentialForm DifferentialForm::zero(int degree, int dimension, int charts) {
  return uniform(degree, dimension, charts, std::vector<Expression>(count_for(dimension, degree)), true);
}

Vec DifferentialForm::coefficients_at(const ChartPoint& p) const {
  const auto& progs = (*programs_)[static_cast<std::size_t>(p.chart)];
  std::span<const double> x(p.coords.data(), static_cast<std::size_t>(p.coords.size()));
  Vec out(static_cast<Eigen::Index>(progs.size()));
  for (std::size_t k = 0; k < progs.size(); ++k) out[static_cast<Eigen::Index>(k)] = progs[k](x);
  return out;
}

double DifferentialForm::apply(const ChartPoint& p, const Mat& vectors) const {
  Vec a = coefficients_at(p);
  if (degree_ == 0) return a[0];
  const auto& idx = multi_indices(dimension_, degree_);
  double sum = 0.0;
  Mat minor(degree_, degree_);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (a[static_cast<Eigen::Index>(k)] == 0.0) continue;
    for (int i = 0; i < degree_; ++i) minor.row(i) = vectors.row(idx[k][static_cast<std::size_t>(i)]);
    sum += a[static_cast<Eigen::Index>(k)] * (degree_ == 1 ? minor(0, 0) : minor.determinant());
  }
  return sum;
}

DifferentialForm DifferentialForm::scaled(double s) const {
  auto coeffs = coefficients_;
  Expression c = Expression::constant(s);
  for (auto& chart : coeffs)
    for (auto& e : chart) e = c * e;
  return DifferentialForm(degree_, dimension_, std::move(coeffs), declared_closed_);
}

DifferentialForm DifferentialForm::with_closed_flag(bool closed) const {
  DifferentialForm f = *this;
  f.declared_closed_ = closed;
  return f;
}

DifferentialForm exterior_derivative(const DifferentialForm& form) {
  const int n = form.dimension();
  const int r = form.degree();
  if (r >= n) throw DegreeError("exterior derivative of a top-degree form");
  const auto& src = multi_indices(n, r);
  const auto& dst = multi_indices(n, r + 1);
  std::vector<std::vector<Expression>> out;
  for (const auto& chart : form.coefficients()) {
    std::vector<Expression> coeffs(dst.size());
    for (std::size_t k = 0; k < dst.size(); ++k) {
      const auto& J = dst[k];
      for (std::size_t pos = 0; pos < J.size(); ++pos) {
        std::vector<int> I = J;
        I.erase(I.begin() + static_cast<std::ptrdiff_t>(pos));
        auto it = std::find(src.begin(), src.end(), I);
        Expression term = chart[static_cast<std::size_t>(it - src.begin())].derivative(J[pos]);
        coeffs[k] = (pos % 2 == 0) ? coeffs[k] + term : coeffs[k] - term;
      }
    }
    out.push_back(std::move(coeffs));
  }
  return DifferentialForm(r + 1, n, std::move(out), true);
}

DifferentialForm wedge(const DifferentialForm& a, const DifferentialForm& b) {
  const int n = a.dimension();
  if (b.dimension() != n || a.charts() != b.charts()) throw std::invalid_argument("wedge of incompatible forms");
  const int r = a.degree() + b.degree();
  if (r > n) throw DegreeError("wedge degree exceeds dimension");
  const auto& ia = multi_indices(n, a.degree());
  const auto& ib = multi_indices(n, b.degree());
  const auto& out_idx = multi_indices(n, r);
  std::vector<std::vector<Expression>> out;
  for (int c = 0; c < a.charts(); ++c) {
    std::vector<Expression> coeffs(out_idx.size());
    for (std::size_t i = 0; i < ia.size(); ++i) {
      const Expression& ca = a.coefficient(c, static_cast<int>(i));
      if (ca.is_zero()) continue;
      for (std::size_t j = 0; j < ib.size(); ++j) {
        const Expression& cb = b.coefficient(c, static_cast<int>(j));
        if (cb.is_zero()) continue;
        std::vector<int> cat = ia[i];
        cat.insert(cat.end(), ib[j].begin(), ib[j].end());
        std::vector<int> sorted = cat;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) continue;
        int sign = sort_sign(cat);
        auto pos = static_cast<std::size_t>(std::find(out_idx.begin(), out_idx.end(), sorted) - out_idx.begin());
        Expression term = ca * cb;
        coeffs[pos] = sign > 0 ? coeffs[pos] + term : coeffs[pos] - term;
      }
    }
    out.push_back(std::move(coeffs));
  }
  return DifferentialForm(r, n, std::move(out), a.declared_closed() && b.declared_closed());
}

DifferentialForm operator+(const DifferentialForm& a, const DifferentialForm& b) {
  if (a.degree() != b.degree() || a.dimension() != b.dimension() || a.charts() != b.charts())
    throw DegreeError("sum of forms of different degree");
  auto coeffs = a.coefficients();
  for (std::size_t c = 0; c < coeffs.size(); ++c)
    for (std::size_t k = 0; k < coeffs[c].size(); ++k)
      coeffs[c][k] = coeffs[c][k] + b.coefficients()[c][k];
  return DifferentialForm(a.degree(), a.dimension(), std::move(coeffs), a.declared_closed() && b.declared_closed());
}

DifferentialForm multiply(const std::vector<Expression>& function, const DifferentialForm& form) {
  if (static_cast<int>(function.size()) != form.charts()) throw std::invalid_argument("function/form chart mismatch");
  auto coeffs = form.coefficients();
  for (std::size_t c = 0; c < coeffs.size(); ++c)
    for (auto& e : coeffs[c]) e = function[c] * e;
  return DifferentialForm(form.degree(), form.dimension(), std::move(coeffs), false);
}

double closedness_defect(const DifferentialForm& form, const std::vector<ChartPoint>& samples) {
  if (form.degree() >= form.dimension()) return 0.0;
  DifferentialForm d = exterior_derivative(form);
  double worst = 0.0;
  for (const ChartPoint& p : samples) worst = std::max(worst, d.coefficients_at(p).cwiseAbs().maxCoeff());
  return worst;
}

double chart_consistency_defect(const DifferentialForm& form, const Atlas& atlas,
                                const std::vector<ChartPoint>& samples) {
  const int n = form.dimension();
  const auto& idx = multi_indices(n, form.degree());
  double worst = 0.0;
  for (const ChartPoint& p : samples) {
    Vec here = form.coefficients_at(p);
    for (int target = 0; target < atlas.size(); ++target) {
      if (target == p.chart) continue;
      auto q = atlas.to_chart(p, target);
      auto J = atlas.transition_jacobian(p, target);
      if (!q || !J) continue;
      ChartPoint pq{target, *q};
      for (std::size_t k = 0; k < idx.size(); ++k) {
        Mat v(n, form.degree());
        for (int i = 0; i < form.degree(); ++i) v.col(i) = J->col(idx[k][static_cast<std::size_t>(i)]);
        double pulled = form.apply(pq, v);
        worst = std::max(worst, std::fabs(pulled - here[static_cast<Eigen::Index>(k)]));
      }
    }
  }
  return worst;
}

}  // namespace morse

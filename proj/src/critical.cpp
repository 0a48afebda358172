#include "morse/critical.hpp"

#include <algorithm>
#include <complex>
#include <limits>
#include <optional>
#include <cmath>
#include <numbers>
#include <random>

namespace morse {

namespace {

// Deterministic basis of span(columns): project e1..en onto the subspace,
// Gram-Schmidt in that order, then make each vector's first clearly
// nonzero component positive.
Mat canonical_basis(const Mat& spanning, int dim) {
  const Eigen::Index n = spanning.rows();
  if (dim == 0) return Mat(n, 0);
  Eigen::JacobiSVD<Mat> svd(spanning, Eigen::ComputeThinU);
  Mat q = svd.matrixU().leftCols(dim);
  Mat proj = q * q.transpose();
  Mat out(n, dim);
  int filled = 0;
  for (Eigen::Index j = 0; j < n && filled < dim; ++j) {
    Vec v = proj.col(j);
    for (int c = 0; c < filled; ++c) v -= out.col(c).dot(v) * out.col(c);
    double norm = v.norm();
    if (norm < 1e-6) continue;
    out.col(filled++) = v / norm;
  }
  if (filled < dim) throw std::logic_error("eigenspace basis construction failed");
  for (int c = 0; c < dim; ++c)
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::fabs(out(i, c)) > 1e-9) {
        if (out(i, c) < 0) out.col(c) = -out.col(c);
        break;
      }
  return out;
}

// Canonical frame for the eigenvalues in [begin, end) of the sorted list,
// grouped into clusters of numerically equal eigenvalues.
Mat frame_for(const Eigen::VectorXcd& values, const Eigen::MatrixXcd& vectors, const std::vector<int>& order, int begin,
              int end) {
  const Eigen::Index n = vectors.rows();
  Mat frame(n, end - begin);
  int col = 0;
  int i = begin;
  while (i < end) {
    int j = i + 1;
    std::complex<double> li = values[order[static_cast<std::size_t>(i)]];
    while (j < end &&
           std::abs(values[order[static_cast<std::size_t>(j)]] - li) <= 1e-8 * std::max(1.0, std::abs(li)) + 1e-12)
      ++j;
    // Conjugate partners share a real part; keep them in one real 2-plane.
    while (j < end && std::fabs(values[order[static_cast<std::size_t>(j)]].real() - li.real()) <=
                          1e-8 * std::max(1.0, std::abs(li)) &&
           std::fabs(values[order[static_cast<std::size_t>(j)]].imag()) > 1e-12)
      ++j;
    Mat span(n, 2 * (j - i));
    for (int k = i; k < j; ++k) {
      Eigen::VectorXcd v = vectors.col(order[static_cast<std::size_t>(k)]);
      span.col(2 * (k - i)) = v.real();
      span.col(2 * (k - i) + 1) = v.imag();
    }
    frame.middleCols(col, j - i) = canonical_basis(span, j - i);
    col += j - i;
    i = j;
  }
  return frame;
}

ChartPoint canonical_chart(const Atlas& atlas, const ChartPoint& p) {
  ChartPoint best = p;
  double best_in = atlas.interiority(p.chart, p.coords);
  for (int c = 0; c < atlas.size(); ++c) {
    if (c == p.chart) continue;
    auto q = atlas.to_chart(p, c);
    if (!q) continue;
    double in = atlas.interiority(c, *q);
    if (in > best_in + 1e-9 || (std::fabs(in - best_in) <= 1e-9 && c < best.chart)) {
      best = atlas.wrap({c, *q});
      best_in = in;
    }
  }
  return best;
}

// Damped Newton on X = 0 starting at `seed`.
std::optional<ChartPoint> newton(const Scenario& s, ChartPoint x, const CriticalOptions& opt) {
  const Atlas& atlas = s.atlas();
  Vec fx = s.field(x);
  for (int it = 0; it < opt.newton_max_iterations; ++it) {
    double r = fx.norm();
    if (r < opt.newton_tol) return x;
    Vec step = s.field_jacobian(x).colPivHouseholderQr().solve(-fx);
    if (!step.allFinite()) return std::nullopt;
    double alpha = 1.0;
    bool improved = false;
    for (int k = 0; k < 30; ++k) {
      ChartPoint trial{x.chart, x.coords + alpha * step};
      if (atlas.in_domain(trial.chart, trial.coords)) {
        trial = atlas.wrap(trial);
        Vec ft = s.field(trial);
        if (ft.norm() < r) {
          x = trial;
          fx = ft;
          improved = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!improved) return fx.norm() < opt.newton_tol ? std::optional<ChartPoint>(x) : std::nullopt;
    if (!atlas.is_inner(x)) {
      x = atlas.best_chart(x);
      fx = s.field(x);
    }
  }
  if (fx.norm() < opt.newton_tol) return x;
  return std::nullopt;
}

// Grid nodes of a chart's inner box; local minima of |X| are Newton seeds.
std::vector<ChartPoint> grid_seeds(const Scenario& s, int chart, int density) {
  const Atlas& atlas = s.atlas();
  const Chart& ch = atlas.chart(chart);
  const int n = s.dimension();
  std::vector<double> lo(static_cast<std::size_t>(n)), step(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const AxisSpec& a = ch.axes[static_cast<std::size_t>(i)];
    double margin = a.periodic ? 0.0 : 0.05 * a.width();
    lo[static_cast<std::size_t>(i)] = a.lower + margin;
    step[static_cast<std::size_t>(i)] = (a.width() - 2 * margin) / density;
  }
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(density);
  std::vector<double> speed(total);
  std::vector<ChartPoint> nodes(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec c(n);
    std::size_t rest = idx;
    for (int i = 0; i < n; ++i) {
      std::size_t k = rest % static_cast<std::size_t>(density);
      rest /= static_cast<std::size_t>(density);
      c[i] = lo[static_cast<std::size_t>(i)] + (static_cast<double>(k) + 0.5) * step[static_cast<std::size_t>(i)];
    }
    nodes[idx] = {chart, c};
    speed[idx] = s.field(nodes[idx]).norm();
  }
  double max_speed = *std::max_element(speed.begin(), speed.end());
  std::vector<ChartPoint> seeds;
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (speed[idx] >= 0.2 * max_speed) continue;
    bool minimum = true;
    std::size_t stride = 1;
    std::size_t rest = idx;
    for (int i = 0; i < n && minimum; ++i) {
      std::size_t k = rest % static_cast<std::size_t>(density);
      rest /= static_cast<std::size_t>(density);
      bool periodic = ch.axes[static_cast<std::size_t>(i)].periodic;
      for (int d : {-1, 1}) {
        long kk = static_cast<long>(k) + d;
        if (kk < 0 || kk >= density) {
          if (!periodic) {
            minimum = false;  // edge nodes are left to the neighbouring chart
            break;
          }
          kk = (kk + density) % density;
        }
        std::size_t other = idx - k * stride + static_cast<std::size_t>(kk) * stride;
        if (speed[other] < speed[idx]) {
          minimum = false;
          break;
        }
      }
      stride *= static_cast<std::size_t>(density);
    }
    if (minimum) seeds.push_back(nodes[idx]);
  }
  return seeds;
}

}  // namespace

Linearization linearize_and_index(const Scenario& s, const ChartPoint& p, double margin) {
  Linearization lin;
  lin.jacobian = s.field_jacobian(p);
  const int n = s.dimension();
  Eigen::EigenSolver<Mat> es(lin.jacobian);
  if (es.info() != Eigen::Success) throw NonHyperbolicError("eigen decomposition failed");
  Eigen::VectorXcd values = es.eigenvalues();
  Eigen::MatrixXcd vectors = es.eigenvectors();
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (values[a].real() != values[b].real()) return values[a].real() > values[b].real();
    return values[a].imag() > values[b].imag();
  });
  lin.eigenvalues.resize(n);
  lin.min_abs_real = std::numeric_limits<double>::infinity();
  int index = 0;
  for (int i = 0; i < n; ++i) {
    std::complex<double> l = values[order[static_cast<std::size_t>(i)]];
    lin.eigenvalues[i] = l;
    lin.min_abs_real = std::min(lin.min_abs_real, std::fabs(l.real()));
    if (l.real() > margin) ++index;
  }
  if (lin.min_abs_real <= margin)
    throw NonHyperbolicError("non-hyperbolic rest point: eigenvalue with |Re| = " + std::to_string(lin.min_abs_real));
  lin.index = index;
  lin.unstable_frame = frame_for(values, vectors, order, 0, index);
  lin.stable_frame = frame_for(values, vectors, order, index, n);
  return lin;
}

std::vector<RestPoint> find_rest_points(const Scenario& s, const CriticalOptions& opt) {
  if (opt.grid_density < 16) throw std::invalid_argument("grid density must be at least 16 per axis");
  const Atlas& atlas = s.atlas();
  std::vector<RestPoint> found;
  for (int c = 0; c < atlas.size(); ++c) {
    for (const ChartPoint& seed : grid_seeds(s, c, opt.grid_density)) {
      auto z = newton(s, seed, opt);
      if (!z) throw NewtonError("Newton iteration did not converge from a grid seed", seed);
      ChartPoint p = canonical_chart(atlas, *z);
      bool duplicate = false;
      for (const RestPoint& r : found)
        if (atlas.distance(r.point, p) < opt.dedup_distance) {
          duplicate = true;
          break;
        }
      if (duplicate) continue;
      // Polish in the canonical chart.
      auto polished = newton(s, p, opt);
      if (polished && polished->chart == p.chart) p = *polished;
      RestPoint r;
      r.point = p;
      r.f = s.lyapunov(p);
      r.residual = s.field(p).norm();
      r.linear = linearize_and_index(s, p, opt.hyperbolicity_margin);
      found.push_back(std::move(r));
    }
  }
  std::sort(found.begin(), found.end(), [](const RestPoint& a, const RestPoint& b) {
    if (a.index() != b.index()) return a.index() < b.index();
    if (a.point.chart != b.point.chart) return a.point.chart < b.point.chart;
    return std::lexicographical_compare(a.point.coords.data(), a.point.coords.data() + a.point.coords.size(),
                                        b.point.coords.data(), b.point.coords.data() + b.point.coords.size());
  });
  for (std::size_t i = 0; i < found.size(); ++i) found[i].id = static_cast<int>(i);
  return found;
}

std::vector<std::vector<int>> by_index(const std::vector<RestPoint>& points, int dimension) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(dimension + 1));
  for (const RestPoint& r : points) out[static_cast<std::size_t>(r.index())].push_back(r.id);
  return out;
}

std::vector<int> count_by_index(const std::vector<RestPoint>& points, int dimension) {
  std::vector<int> out(static_cast<std::size_t>(dimension + 1), 0);
  for (const RestPoint& r : points) ++out[static_cast<std::size_t>(r.index())];
  return out;
}

Orientations choose_orientations(const std::vector<RestPoint>& points) {
  return Orientations{std::vector<int>(points.size(), 1)};
}

Orientations random_orientations(const std::vector<RestPoint>& points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  Orientations o;
  for (std::size_t i = 0; i < points.size(); ++i) o.sign.push_back(coin(rng) ? -1 : 1);
  return o;
}

Mat oriented_frame(const RestPoint& x, int sign) {
  Mat f = x.frame();
  if (sign < 0 && f.cols() > 0) f.col(0) = -f.col(0);
  return f;
}

UnstableDisk unstable_disk(const Scenario& s, const RestPoint& x, double radius, int samples) {
  UnstableDisk disk;
  disk.rest_point = x.id;
  disk.radius = radius;
  const int k = x.index();
  const Mat& frame = x.frame();
  if (k == 1) {
    for (double u : {1.0, -1.0}) disk.parameters.push_back(Vec::Constant(1, u));
  } else if (k == 2) {
    for (int j = 0; j < samples; ++j) {
      double th = 2.0 * std::numbers::pi * j / samples;
      Vec u(2);
      u << std::cos(th), std::sin(th);
      disk.parameters.push_back(u);
    }
  } else if (k > 2) {
    throw std::invalid_argument("unstable disks of dimension above 2 are not supported");
  }
  double worst = 0.0;
  for (const Vec& u : disk.parameters) {
    Vec offset = radius * frame * u;
    ChartPoint q{x.point.chart, x.point.coords + offset};
    Vec remainder = s.field(q) - x.linear.jacobian * offset;
    worst = std::max(worst, remainder.norm() / (radius * x.linear.min_abs_real));
    disk.seeds.push_back(s.atlas().wrap(q));
  }
  disk.remainder_ratio = worst;
  if (worst >= 0.1) throw DiskRadiusError("disk radius too large for the linearization to dominate");
  return disk;
}

std::vector<CaptureBall> capture_balls(const std::vector<RestPoint>& points, double radius) {
  std::vector<CaptureBall> out;
  for (const RestPoint& r : points) out.push_back({r.id, r.point, radius});
  return out;
}

}  // namespace morse

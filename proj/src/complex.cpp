#include "morse/complex.hpp"

#include <algorithm>
#include <map>

#include <boost/multiprecision/cpp_int.hpp>

namespace morse {

using boost::multiprecision::cpp_int;

long long exact_rank(const IntMat& m) {
  const Eigen::Index rows = m.rows(), cols = m.cols();
  std::vector<std::vector<cpp_int>> a(static_cast<std::size_t>(rows), std::vector<cpp_int>(static_cast<std::size_t>(cols)));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);

  cpp_int prev = 1;
  std::size_t rank = 0;
  for (std::size_t c = 0; c < static_cast<std::size_t>(cols) && rank < a.size(); ++c) {
    std::size_t p = rank;
    while (p < a.size() && a[p][c] == 0) ++p;
    if (p == a.size()) continue;
    std::swap(a[p], a[rank]);
    const cpp_int& piv = a[rank][c];
    for (std::size_t i = rank + 1; i < a.size(); ++i) {
      for (std::size_t j = c + 1; j < static_cast<std::size_t>(cols); ++j)
        a[i][j] = (piv * a[i][j] - a[i][c] * a[rank][j]) / prev;
      a[i][c] = 0;
    }
    prev = piv;
    ++rank;
  }
  return static_cast<long long>(rank);
}

int MorseComplex::position(int degree, int id) const {
  if (degree < 0 || degree >= static_cast<int>(basis.size())) return -1;
  const auto& b = basis[static_cast<std::size_t>(degree)];
  auto it = std::find(b.begin(), b.end(), id);
  return it == b.end() ? -1 : static_cast<int>(it - b.begin());
}

long long MorseComplex::incidence(int x, int y) const {
  for (int r = 0; r < dimension; ++r) {
    int col = position(r, y), row = position(r + 1, x);
    if (col >= 0 && row >= 0) return delta[static_cast<std::size_t>(r)](row, col);
  }
  return 0;
}

MorseComplex build_complex(int dimension, const std::vector<RestPoint>& rest_points,
                           const std::vector<Instanton>& instantons, const Orientations& orientations) {
  MorseComplex c;
  c.dimension = dimension;
  c.orientations = orientations;
  c.basis.assign(static_cast<std::size_t>(dimension + 1), {});
  for (const RestPoint& r : rest_points) c.basis.at(static_cast<std::size_t>(r.index())).push_back(r.id);
  auto before = [&](int a, int b) {
    const RestPoint& p = rest_points[static_cast<std::size_t>(a)];
    const RestPoint& q = rest_points[static_cast<std::size_t>(b)];
    if (p.f != q.f) return p.f < q.f;
    if (p.point.chart != q.point.chart) return p.point.chart < q.point.chart;
    return std::lexicographical_compare(p.point.coords.begin(), p.point.coords.end(), q.point.coords.begin(),
                                        q.point.coords.end());
  };
  for (auto& b : c.basis) std::sort(b.begin(), b.end(), before);

  for (int r = 0; r <= dimension; ++r) {
    Eigen::Index rows = r < dimension ? static_cast<Eigen::Index>(c.basis[static_cast<std::size_t>(r + 1)].size()) : 0;
    c.delta.push_back(IntMat::Zero(rows, static_cast<Eigen::Index>(c.basis[static_cast<std::size_t>(r)].size())));
  }
  for (const Instanton& g : instantons) {
    int r = rest_points[static_cast<std::size_t>(g.to)].index();
    int row = c.position(r + 1, g.from), col = c.position(r, g.to);
    if (row < 0 || col < 0) throw std::invalid_argument("instanton joins rest points whose indices differ by more than 1");
    c.delta[static_cast<std::size_t>(r)](row, col) += instanton_sign(g, orientations);
  }
  return c;
}

MorseComplex build_complex(const FlowModel& model, const Orientations& orientations) {
  if (!model.enumeration_complete())
    throw IncompleteEnumerationError("connections of " + model.scenario().name() + " are not fully enumerated");
  return build_complex(model.dimension(), model.rest_points(), model.instantons(), orientations);
}

DeltaSquaredCheck verify_delta_squared(const MorseComplex& c) {
  DeltaSquaredCheck out;
  for (int r = 0; r + 1 < c.dimension; ++r) {
    const IntMat& lo = c.delta[static_cast<std::size_t>(r)];
    const IntMat& hi = c.delta[static_cast<std::size_t>(r + 1)];
    for (Eigen::Index x = 0; x < hi.rows(); ++x)
      for (Eigen::Index z = 0; z < lo.cols(); ++z) {
        cpp_int sum = 0;
        for (Eigen::Index y = 0; y < hi.cols(); ++y) sum += cpp_int(hi(x, y)) * lo(y, z);
        if (sum == 0) continue;
        out.pass = false;
        out.degree = r;
        out.from = c.basis[static_cast<std::size_t>(r + 2)][static_cast<std::size_t>(x)];
        out.to = c.basis[static_cast<std::size_t>(r)][static_cast<std::size_t>(z)];
        out.value = static_cast<long long>(sum);
        for (Eigen::Index y = 0; y < hi.cols(); ++y)
          if (hi(x, y) != 0 && lo(y, z) != 0)
            out.chains.push_back({c.basis[static_cast<std::size_t>(r + 1)][static_cast<std::size_t>(y)], hi(x, y), lo(y, z)});
        return out;
      }
  }
  return out;
}

CohomologyReport betti_numbers(const MorseComplex& c) {
  CohomologyReport rep;
  for (int r = 0; r <= c.dimension; ++r) {
    rep.counts.push_back(static_cast<int>(c.basis[static_cast<std::size_t>(r)].size()));
    rep.ranks.push_back(exact_rank(c.delta[static_cast<std::size_t>(r)]));
  }
  for (int r = 0; r <= c.dimension; ++r) {
    long long b = rep.counts[static_cast<std::size_t>(r)] - rep.ranks[static_cast<std::size_t>(r)];
    if (r > 0) b -= rep.ranks[static_cast<std::size_t>(r - 1)];
    rep.betti.push_back(static_cast<int>(b));
  }
  return rep;
}

CohomologyReport betti_numbers(const MorseComplex& c, const FlowModel& model) {
  CohomologyReport rep = betti_numbers(c);
  rep.nonempty_by_gap.assign(static_cast<std::size_t>(c.dimension + 1), false);
  if (!model.instantons().empty()) rep.nonempty_by_gap[1] = true;
  for (const Arc& a : model.arcs()) {
    int gap = model.rest_point(a.from).index() - model.rest_point(a.to).index();
    rep.nonempty_by_gap.at(static_cast<std::size_t>(gap)) = true;
  }
  return rep;
}

bool MorseInequalities::holds() const {
  return euler && std::all_of(degrees.begin(), degrees.end(), [](const MorseVerdict& v) { return v.weak; });
}

MorseInequalities morse_inequalities(const CohomologyReport& rep) {
  MorseInequalities out;
  for (std::size_t r = 0; r < rep.betti.size(); ++r) {
    MorseVerdict v{static_cast<int>(r), rep.betti[r], rep.counts[r], rep.betti[r] <= rep.counts[r],
                   rep.betti[r] < rep.counts[r]};
    out.degrees.push_back(v);
    int sign = r % 2 == 0 ? 1 : -1;
    out.euler_betti += sign * v.betti;
    out.euler_counts += sign * v.count;
  }
  out.euler = out.euler_betti == out.euler_counts;
  return out;
}

namespace {

void close_under_faces(SimplicialComplex& k, const std::vector<std::vector<int>>& top) {
  int d = static_cast<int>(top.front().size()) - 1;
  k.simplices.assign(static_cast<std::size_t>(d + 1), {});
  for (auto t : top) {
    std::sort(t.begin(), t.end());
    const int m = static_cast<int>(t.size());
    for (int mask = 1; mask < (1 << m); ++mask) {
      std::vector<int> face;
      for (int i = 0; i < m; ++i)
        if (mask & (1 << i)) face.push_back(t[static_cast<std::size_t>(i)]);
      k.simplices[face.size() - 1].push_back(face);
    }
  }
  for (auto& level : k.simplices) {
    std::sort(level.begin(), level.end());
    level.erase(std::unique(level.begin(), level.end()), level.end());
  }
}

}  // namespace

SimplicialComplex triangulation(const std::string& name) {
  SimplicialComplex k;
  k.name = name;
  if (name == "circle") {
    close_under_faces(k, {{0, 1}, {1, 2}, {0, 2}});
  } else if (name == "sphere") {
    // octahedron: poles 0, 5 and equator 1..4
    std::vector<std::vector<int>> faces;
    for (int i = 0; i < 4; ++i) {
      int a = 1 + i, b = 1 + (i + 1) % 4;
      faces.push_back({0, a, b});
      faces.push_back({5, a, b});
    }
    close_under_faces(k, faces);
  } else if (name == "torus") {
    // 3 x 3 grid with opposite sides identified, two triangles per square
    auto v = [](int i, int j) { return 3 * (i % 3) + (j % 3); };
    std::vector<std::vector<int>> faces;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        faces.push_back({v(i, j), v(i + 1, j), v(i + 1, j + 1)});
        faces.push_back({v(i, j), v(i, j + 1), v(i + 1, j + 1)});
      }
    close_under_faces(k, faces);
  } else {
    throw std::invalid_argument("unknown triangulation '" + name + "'");
  }
  return k;
}

IntMat boundary_matrix(const SimplicialComplex& k, int degree) {
  const auto& cells = k.simplices.at(static_cast<std::size_t>(degree));
  if (degree == 0) return IntMat::Zero(0, static_cast<Eigen::Index>(cells.size()));
  const auto& faces = k.simplices.at(static_cast<std::size_t>(degree - 1));
  std::map<std::vector<int>, Eigen::Index> index;
  for (std::size_t i = 0; i < faces.size(); ++i) index[faces[i]] = static_cast<Eigen::Index>(i);
  IntMat d = IntMat::Zero(static_cast<Eigen::Index>(faces.size()), static_cast<Eigen::Index>(cells.size()));
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::size_t drop = 0; drop < cells[c].size(); ++drop) {
      std::vector<int> face = cells[c];
      face.erase(face.begin() + static_cast<std::ptrdiff_t>(drop));
      auto it = index.find(face);
      if (it == index.end()) throw SimplicialError("missing face in " + k.name);
      d(it->second, static_cast<Eigen::Index>(c)) = drop % 2 == 0 ? 1 : -1;
    }
  return d;
}

std::vector<int> simplicial_oracle(const SimplicialComplex& k) {
  const int n = k.dimension();
  std::vector<IntMat> bd;
  for (int q = 0; q <= n; ++q) bd.push_back(boundary_matrix(k, q));
  for (int q = 2; q <= n; ++q)
    if ((bd[static_cast<std::size_t>(q - 1)] * bd[static_cast<std::size_t>(q)]).any())
      throw SimplicialError("boundary of a boundary does not vanish in " + k.name);
  // Coboundary ranks equal boundary ranks, so b_q = c_q - rank d_q - rank d_{q+1}.
  std::vector<int> betti;
  for (int q = 0; q <= n; ++q) {
    long long b = static_cast<long long>(k.simplices[static_cast<std::size_t>(q)].size()) -
                  exact_rank(bd[static_cast<std::size_t>(q)]);
    if (q < n) b -= exact_rank(bd[static_cast<std::size_t>(q + 1)]);
    betti.push_back(static_cast<int>(b));
  }
  return betti;
}

}  // namespace morse

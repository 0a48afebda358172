#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "morse/complex.hpp"

using namespace morse;

namespace {

const FlowModel& model(const std::string& name) {
  static std::map<std::string, FlowModel> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, FlowModel(builtin_scenario(name))).first;
  return it->second;
}

// Rank by brute force: the largest k with a nonzero k x k minor.
long long minor_rank(const IntMat& m) {
  const int rows = static_cast<int>(m.rows()), cols = static_cast<int>(m.cols());
  long long best = 0;
  for (int rmask = 1; rmask < (1 << rows); ++rmask)
    for (int cmask = 1; cmask < (1 << cols); ++cmask) {
      int k = __builtin_popcount(static_cast<unsigned>(rmask));
      if (k != __builtin_popcount(static_cast<unsigned>(cmask)) || k <= best) continue;
      Eigen::MatrixXd sub(k, k);
      int r = 0;
      for (int i = 0; i < rows; ++i) {
        if (!(rmask & (1 << i))) continue;
        int c = 0;
        for (int j = 0; j < cols; ++j)
          if (cmask & (1 << j)) sub(r, c++) = static_cast<double>(m(i, j));
        ++r;
      }
      if (std::fabs(sub.determinant()) > 0.5) best = k;
    }
  return best;
}

}  // namespace

TEST_CASE("exact rank") {
  IntMat a(3, 3);
  a << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  CHECK(exact_rank(a) == 2);
  CHECK(exact_rank(IntMat::Zero(4, 2)) == 0);
  CHECK(exact_rank(IntMat::Zero(0, 3)) == 0);
  IntMat big(2, 2);
  // entries whose products overflow 64 bits
  big << 3037000500LL, 3037000499LL, 3037000501LL, 3037000500LL;
  CHECK(exact_rank(big) == 2);
  IntMat lin(2, 2);
  lin << 4000000000LL, 6000000000LL, 6000000000LL, 9000000000LL;
  CHECK(exact_rank(lin) == 1);

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> entry(-2, 2);
  for (int trial = 0; trial < 200; ++trial) {
    IntMat m(1 + trial % 4, 1 + (trial / 4) % 4);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = entry(rng) * (trial % 3 == 0 ? 1 : entry(rng));
    CHECK(exact_rank(m) == minor_rank(m));
  }
}

TEST_CASE("simplicial oracle") {
  CHECK(simplicial_oracle(triangulation("circle")) == std::vector<int>{1, 1});
  CHECK(simplicial_oracle(triangulation("sphere")) == std::vector<int>{1, 0, 1});
  SimplicialComplex t = triangulation("torus");
  CHECK(t.simplices[0].size() == 9);
  CHECK(t.simplices[1].size() == 27);
  CHECK(t.simplices[2].size() == 18);
  CHECK(simplicial_oracle(t) == std::vector<int>{1, 2, 1});
  CHECK_THROWS_AS(triangulation("klein"), std::invalid_argument);

  SimplicialComplex broken = triangulation("circle");
  broken.simplices[0].pop_back();
  CHECK_THROWS_AS(simplicial_oracle(broken), SimplicialError);
}

TEST_CASE("incidence examples") {
  const FlowModel& torus = model("flat_torus");
  MorseComplex ct = build_complex(torus, choose_orientations(torus.rest_points()));
  for (const IntMat& d : ct.delta) CHECK(!d.any());

  const FlowModel& well = model("double_well_circle");
  MorseComplex cw = build_complex(well, choose_orientations(well.rest_points()));
  REQUIRE(cw.delta[0].rows() == 2);
  REQUIRE(cw.delta[0].cols() == 2);
  // minima ordered by position: 0.25 then 0.75, both at the same level
  const RestPoint& first_min = well.rest_point(cw.basis[0][0]);
  CHECK(first_min.point.coords[0] == doctest::Approx(0.25));
  for (Eigen::Index row = 0; row < 2; ++row) {
    const RestPoint& mx = well.rest_point(cw.basis[1][static_cast<std::size_t>(row)]);
    if (std::fabs(mx.point.coords[0]) < 1e-9) {
      CHECK(cw.delta[0](row, 0) == 1);
      CHECK(cw.delta[0](row, 1) == -1);
    }
  }

  const FlowModel& sphere = model("round_sphere_height");
  MorseComplex cs = build_complex(sphere, choose_orientations(sphere.rest_points()));
  for (const IntMat& d : cs.delta) CHECK(d.size() == 0);
}

TEST_CASE("delta squared vanishes for every orientation collection") {
  for (const Scenario& s : builtin_scenarios()) {
    CAPTURE(s.name());
    const FlowModel& m = model(s.name());
    MorseComplex base = build_complex(m, choose_orientations(m.rest_points()));
    CHECK(verify_delta_squared(base).pass);
    CohomologyReport ref = betti_numbers(base);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      Orientations o = random_orientations(m.rest_points(), seed);
      MorseComplex c = build_complex(m, o);
      CHECK(verify_delta_squared(c).pass);
      // flipping orientations conjugates delta by diagonal signs
      for (int r = 0; r < c.dimension; ++r)
        for (Eigen::Index i = 0; i < c.delta[static_cast<std::size_t>(r)].rows(); ++i)
          for (Eigen::Index j = 0; j < c.delta[static_cast<std::size_t>(r)].cols(); ++j) {
            int x = c.basis[static_cast<std::size_t>(r + 1)][static_cast<std::size_t>(i)];
            int y = c.basis[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
            CHECK(c.delta[static_cast<std::size_t>(r)](i, j) ==
                  o[x] * o[y] * base.delta[static_cast<std::size_t>(r)](i, j));
          }
      CHECK(betti_numbers(c).betti == ref.betti);
    }
  }

  const FlowModel& e = model("ellipsoid_sphere");
  MorseComplex c = build_complex(e, choose_orientations(e.rest_points()));
  // two nonzero chains through the saddles that cancel
  for (int top : c.basis[2])
    for (int bottom : c.basis[0]) {
      int nonzero = 0;
      long long sum = 0;
      for (int mid : c.basis[1]) {
        long long p = c.incidence(top, mid) * c.incidence(mid, bottom);
        nonzero += p != 0;
        sum += p;
      }
      CHECK(nonzero == 2);
      CHECK(sum == 0);
    }
}

TEST_CASE("a broken complex yields a witness") {
  MorseComplex c;
  c.dimension = 2;
  c.basis = {{0}, {1, 2}, {3}};
  c.delta = {IntMat::Ones(2, 1), IntMat::Ones(1, 2), IntMat::Zero(0, 1)};
  DeltaSquaredCheck w = verify_delta_squared(c);
  CHECK(!w.pass);
  CHECK(w.from == 3);
  CHECK(w.to == 0);
  CHECK(w.value == 2);
  CHECK(w.chains.size() == 2);
}

TEST_CASE("Betti numbers agree with the simplicial oracle") {
  for (const Scenario& s : builtin_scenarios()) {
    CAPTURE(s.name());
    const FlowModel& m = model(s.name());
    MorseComplex c = build_complex(m, choose_orientations(m.rest_points()));
    CohomologyReport rep = betti_numbers(c, m);
    CHECK(rep.betti == simplicial_oracle(triangulation(s.ground_truth()->triangulation)));
    CHECK(rep.betti == s.ground_truth()->betti);
    CHECK(rep.counts == s.ground_truth()->rest_points_per_index);
    MorseInequalities mi = morse_inequalities(rep);
    CHECK(mi.holds());
    CHECK(mi.euler_betti == mi.euler_counts);
  }

  auto verdicts = [](const char* name) {
    const FlowModel& m = model(name);
    return morse_inequalities(betti_numbers(build_complex(m, choose_orientations(m.rest_points())), m));
  };
  MorseInequalities torus = verdicts("flat_torus");
  for (const MorseVerdict& v : torus.degrees) {
    CHECK(v.betti == v.count);
    CHECK(!v.strict);
  }
  MorseInequalities ell = verdicts("ellipsoid_sphere");
  for (const MorseVerdict& v : ell.degrees) CHECK(v.strict);

  const FlowModel& t = model("flat_torus");
  CohomologyReport rep = betti_numbers(build_complex(t, choose_orientations(t.rest_points())), t);
  CHECK(rep.nonempty_by_gap == std::vector<bool>{false, true, true});
}

#ifndef MORSE_COMPLEX_HPP
#define MORSE_COMPLEX_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "morse/moduli.hpp"

namespace morse {

using IntMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

/// Rank over Q by fraction-free (Bareiss) elimination on arbitrary-precision
/// integers.
long long exact_rank(const IntMat& m);

class IncompleteEnumerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The cochain complex generated by rest points. basis[r] lists rest point
/// ids of index r ordered by (f, chart, coordinates); delta[r] is the matrix
/// of C^r -> C^{r+1}, rows indexed by basis[r + 1] and columns by basis[r],
/// with entries I(x, y) = sum of instanton signs from x to y.
struct MorseComplex {
  int dimension = 0;
  std::vector<std::vector<int>> basis;
  std::vector<IntMat> delta;
  Orientations orientations;

  /// Position of rest point `id` in basis[degree], or -1.
  int position(int degree, int id) const;
  /// I(x, y) for rest point ids with index(x) = index(y) + 1.
  long long incidence(int x, int y) const;
};

MorseComplex build_complex(int dimension, const std::vector<RestPoint>& rest_points,
                           const std::vector<Instanton>& instantons, const Orientations& orientations);
/// Refuses to build (IncompleteEnumerationError) when the model could not
/// trace every gap-1 connection.
MorseComplex build_complex(const FlowModel& model, const Orientations& orientations);

/// A two-step chain x -> y -> z contributing I(x, y) I(y, z).
struct BrokenChain {
  int middle = -1;
  long long first = 0;
  long long second = 0;
};

struct DeltaSquaredCheck {
  bool pass = true;
  /// First failing entry: degree r of delta_{r+1} delta_r, the pair (x, z)
  /// and the chains through the middle degree.
  int degree = -1;
  int from = -1;
  int to = -1;
  long long value = 0;
  std::vector<BrokenChain> chains;
};

DeltaSquaredCheck verify_delta_squared(const MorseComplex& complex);

struct CohomologyReport {
  std::vector<int> betti;
  std::vector<int> counts;
  /// rank of delta_r.
  std::vector<long long> ranks;
  /// nonempty_by_gap[g] is true when some T(x, y) with index gap g is
  /// nonempty (filled by the model overload; index 0 unused).
  std::vector<bool> nonempty_by_gap;
};

CohomologyReport betti_numbers(const MorseComplex& complex);
CohomologyReport betti_numbers(const MorseComplex& complex, const FlowModel& model);

struct MorseVerdict {
  int degree = 0;
  int betti = 0;
  int count = 0;
  bool weak = true;    // b_r <= #X_r
  bool strict = true;  // b_r < #X_r
};

struct MorseInequalities {
  std::vector<MorseVerdict> degrees;
  int euler_betti = 0;
  int euler_counts = 0;
  bool euler = true;
  bool holds() const;
};

MorseInequalities morse_inequalities(const CohomologyReport& report);

class SimplicialError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An abstract simplicial complex: simplices[k] lists sorted vertex tuples.
struct SimplicialComplex {
  std::string name;
  std::vector<std::vector<std::vector<int>>> simplices;
  int dimension() const { return static_cast<int>(simplices.size()) - 1; }
};

/// "circle" (triangle), "sphere" (octahedron) or "torus" (9 vertices).
SimplicialComplex triangulation(const std::string& name);

/// Boundary matrix of k-chains, rows indexed by (k-1)-simplices.
IntMat boundary_matrix(const SimplicialComplex& k, int degree);

/// Betti numbers over Q. Throws SimplicialError if a face is missing or the
/// boundary of a boundary does not vanish.
std::vector<int> simplicial_oracle(const SimplicialComplex& k);

}  // namespace morse

#endif  // MORSE_COMPLEX_HPP

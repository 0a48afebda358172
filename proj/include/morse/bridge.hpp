#ifndef MORSE_BRIDGE_HPP
#define MORSE_BRIDGE_HPP

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "morse/complex.hpp"
#include "morse/forms.hpp"

namespace morse {

struct QuadratureConfig {
  /// Gauss-Legendre nodes per panel of launch angles. Full circles are one
  /// panel; arcs between separatrices are two graded panels.
  int order = 32;
  /// Target accuracy of a single reported integral.
  double tolerance = 1e-7;
  /// Trajectories stop once inside this ball around their end point.
  double end_radius = 1e-7;
  FlowOptions flow = tight_flow();
  /// Worker threads for quadrature nodes; results are reduced in node order.
  int threads = 1;

  static FlowOptions tight_flow();
};

/// Thread count from MORSE_THREADS, or 1.
int threads_from_environment();

/// Gauss-Legendre nodes and weights on [0, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussLegendre gauss_legendre(int order);

/// A cochain of the Morse complex: values[k] belongs to basis[degree][k].
struct Cochain {
  int degree = 0;
  Vec values;
};

/// Integration of differential forms over unstable sets and moduli spaces
/// of a FlowModel, for one orientation collection.
class Bridge {
 public:
  Bridge(const FlowModel& model, const Orientations& orientations, QuadratureConfig config = {});

  const FlowModel& model() const { return *model_; }
  const MorseComplex& complex() const { return complex_; }
  const Orientations& orientations() const { return complex_.orientations; }
  const QuadratureConfig& config() const { return config_; }

  /// Ent(w, y, x) for every form in `forms`, all of degree i(x) - i(y).
  std::vector<double> ent(const std::vector<const DifferentialForm*>& forms, int y, int x) const;
  /// Int(w, x) for every form, all of degree i(x).
  std::vector<double> integrate(const std::vector<const DifferentialForm*>& forms, int x) const;

  Cochain zero(int degree) const;
  const std::vector<int>& basis(int degree) const { return complex_.basis.at(static_cast<std::size_t>(degree)); }
  Cochain delta(const Cochain& c) const;

 private:
  std::vector<double> ent_instantons(const std::vector<const DifferentialForm*>& forms, int y, int x) const;
  std::vector<double> ent_arcs(const std::vector<const DifferentialForm*>& forms, int x, int y) const;

  struct EntCache {
    std::mutex mutex;
    std::map<std::string, double> values;
  };

  const FlowModel* model_;
  MorseComplex complex_;
  QuadratureConfig config_;
  GaussLegendre rule_;
  std::shared_ptr<EntCache> cache_;
};

double int_unstable(const Bridge& b, const DifferentialForm& w, int x);
double ent_moduli(const Bridge& b, const DifferentialForm& w, int y, int x);
/// Int_r(w) as a cochain of degree deg w.
Cochain int_cochain(const Bridge& b, const DifferentialForm& w);
/// int_cochain for several forms of one degree, sharing trajectories.
std::vector<Cochain> int_cochains(const Bridge& b, const std::vector<const DifferentialForm*>& forms);
/// E(w (x) f)(x) = sum over y of f(y) Ent(w, y, x).
Cochain e_map(const Bridge& b, const DifferentialForm& w, const Cochain& f);
/// e_map(forms[j], fs[j]) for every j; forms share a degree, cochains too.
std::vector<Cochain> e_maps(const Bridge& b, const std::vector<const DifferentialForm*>& forms,
                            const std::vector<Cochain>& fs);

struct IdentityCheck {
  std::string name;
  /// Entry where the residual is largest (rest point id, -1 if none).
  int rest_point = -1;
  double left = 0.0;
  double right = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  /// "pass", "fail" or "inconclusive".
  std::string verdict = "pass";
  bool passed() const { return verdict == "pass"; }
};

/// max over x of |delta(Int w)(x) - Int(dw)(x)|.
IdentityCheck verify_chain_map(const Bridge& b, const DifferentialForm& w, double tol);
std::vector<IdentityCheck> verify_chain_map(const Bridge& b, const std::vector<DifferentialForm>& forms, double tol);
/// max over x of |delta E(w f) - E(dw f) - (-1)^r E(w delta f)|.
IdentityCheck verify_leibniz(const Bridge& b, const DifferentialForm& w, const Cochain& f, double tol);
std::vector<IdentityCheck> verify_leibniz(const Bridge& b, const std::vector<DifferentialForm>& forms,
                                          const std::vector<Cochain>& fs, double tol);

/// Cochains of integrals snapped to an integer multiple of `unit`.
struct Snapped {
  bool conclusive = true;
  double unit = 1.0;
  IntMat values;
};
/// Snaps the columns to the lattice spanned by the smallest nonzero
/// magnitude among them; entries farther than 10 tol from it make the
/// result inconclusive.
Snapped snap_to_lattice(const std::vector<Vec>& columns, double tol);

/// Whether `c` is a coboundary, decided on the snapped lattice values.
/// Returns nullopt when snapping is inconclusive.
std::optional<bool> is_coboundary(const Bridge& b, const Cochain& c, double tol);

struct CupCheck {
  IdentityCheck numeric;
  Cochain wedge_side;    // Int(w1 ^ w2)
  Cochain product_side;  // E(w1 (x) Int w2)
  /// nullopt when the class comparison is inconclusive.
  std::optional<bool> same_class;
};

/// Compares Int(w1 ^ w2) with E(w1 (x) Int w2) for closed forms w1, w2.
CupCheck verify_cup_diagram(const Bridge& b, const DifferentialForm& w1, const DifferentialForm& w2, double tol);

struct Detection {
  std::string left;   // form names
  std::string right;
  int gap = 0;
  bool nontrivial = false;
  /// Witness pair x > y with T(x, y) nonempty and a nonzero contribution.
  int witness_from = -1;
  int witness_to = -1;
  bool witnessed() const { return witness_from >= 0; }
};

/// For every pair of closed generator forms (w1 of degree >= 1, w2 any),
/// decides whether the product class is nontrivial and, if so, finds a
/// witness connection of gap deg w1.
std::vector<Detection> detect_instantons(const Bridge& b, double tol);

/// Rank of the classes of Int over the closed generator forms of degree r,
/// against b_r. Entries are the snapped rank (or -1 when inconclusive).
std::vector<long long> int_class_ranks(const Bridge& b, double tol);

/// Named forms of the scenario flagged closed.
std::vector<const NamedForm*> closed_generators(const Scenario& s);

/// A random form of the given degree with bounded trigonometric (periodic
/// charts) or ambient-polynomial (sphere) coefficients. Generally not closed.
DifferentialForm random_form(const Scenario& s, int degree, std::uint64_t seed);
/// Random cochain with entries in [-1, 1].
Cochain random_cochain(const Bridge& b, int degree, std::uint64_t seed);

}  // namespace morse

#endif  // MORSE_BRIDGE_HPP

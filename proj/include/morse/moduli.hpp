#ifndef MORSE_MODULI_HPP
#define MORSE_MODULI_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "morse/critical.hpp"
#include "morse/flow.hpp"

namespace morse {

struct ModuliConfig {
  /// Radius of the first-order unstable (or stable) disk used for shooting.
  double disk_radius = 1e-4;
  /// Arrival radius at which the transported frame is compared with o_y.
  double sign_radius = 1e-3;
  /// Extra sample angles per arc used to confirm arc landings.
  int sweep_per_arc = 8;
  /// Instantons closer than this at the mid level are the same orbit.
  double dedup_distance = 1e-4;
  FlowOptions flow;
  CriticalOptions critical;
};

/// An isolated connecting orbit between rest points of adjacent index.
struct Instanton {
  int id = -1;
  int from = -1;
  int to = -1;
  /// Sign under the canonical orientations; the sign for a collection O is
  /// O[from] * O[to] * canonical_sign.
  int canonical_sign = 0;
  /// Determinant of the arrival projection (transversality margin).
  double projection_det = 0.0;
  bool degenerate = false;
  /// Launch parameter on the unstable sphere of `from`: +-1 for index 1,
  /// an angle of the launch curve for index 2.
  double launch = 0.0;
  /// Point at level (f(from) + f(to)) / 2.
  ChartPoint mid;
  /// Polyline from near `from` to near `to` (may be traced backwards).
  Trajectory trajectory;
  /// true when traced backward from the stable disk of `to`.
  bool backward_shot = false;
};

/// A connected family of index-gap-2 trajectories on a surface: launch
/// angles strictly between `begin` and `end` on the launch curve of `from`,
/// all flowing to `to`.
struct Arc {
  int from = -1;
  int to = -1;
  double begin = 0.0;
  double end = 0.0;
  /// Sweep samples inside the arc that confirmed the landing.
  int confirmed = 0;
  int contradicted = 0;
};

/// A stratum of a compactified unstable/stable set, moduli space or
/// trajectory space: a chain of rest points and the stratum dimension.
struct CornerStratum {
  enum class Kind { Unstable, Stable, Moduli, Trajectories };
  Kind kind = Kind::Unstable;
  int depth = 0;
  std::vector<int> chain;
  /// Components of T for each link of the chain.
  std::vector<int> link_counts;
  /// For moduli strata: position in the chain of the marked rest point
  /// (-1 when the marked point lies on a trajectory piece), and the link
  /// carrying the marked trajectory piece otherwise.
  int marker_rest_point = -1;
  int marked_link = -1;
  int dimension = 0;
  long long multiplicity = 1;
};
const char* to_string(CornerStratum::Kind k);

/// Launch curve around an index-2 rest point of a surface: the unit circle
/// of frame coordinates carried back by the linearized flow until its
/// largest semi-axis equals `radius`. Its angle labels each nearby orbit by
/// where the linearized orbit meets the unit circle, so quantities along
/// orbits stay smooth in the angle even when the two rates differ.
struct LaunchCurve {
  Mat linear;  // DX in frame coordinates
  Mat back;    // exp(-T linear)
  Mat ahead;   // exp(T linear)
};
/// Rest points, connecting orbits and gap-2 arcs of a scenario.
class FlowModel {
 public:
  explicit FlowModel(const Scenario& scenario, ModuliConfig config = {});

  const Scenario& scenario() const { return *scenario_; }
  const ModuliConfig& config() const { return config_; }
  const std::vector<RestPoint>& rest_points() const { return rest_points_; }
  const RestPoint& rest_point(int id) const { return rest_points_.at(static_cast<std::size_t>(id)); }
  const std::vector<Instanton>& instantons() const { return instantons_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  int dimension() const { return scenario_->dimension(); }
  const std::vector<std::string>& warnings() const { return warnings_; }
  /// false when some gap-1 pair may have connections that were not traced.
  bool enumeration_complete() const { return complete_; }

  std::vector<const Instanton*> instantons_between(int x, int y) const;
  std::vector<const Arc*> arcs_between(int x, int y) const;
  /// Number of components of T(x, y) (instantons for gap 1, arcs for gap 2).
  int trajectory_components(int x, int y) const;
  /// Transitive closure of "T(x, y) is nonempty".
  bool precedes(int x, int y) const;

  std::vector<CaptureBall> capture(double radius) const { return capture_balls(rest_points_, radius); }

 private:
  void enumerate();
  void enumerate_forward(const RestPoint& x);
  void enumerate_backward(const RestPoint& y);
  void build_arcs(const RestPoint& x);
  void refine_launches(const RestPoint& x, const LaunchCurve& curve);
  void add_instanton(Instanton inst);

  const Scenario* scenario_;
  ModuliConfig config_;
  std::vector<RestPoint> rest_points_;
  std::vector<Instanton> instantons_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<bool>> precedes_;
  std::vector<std::string> warnings_;
  bool complete_ = true;
};

/// Instantons from x to y (i(x) - i(y) = 1).
std::vector<Instanton> enumerate_instantons(const FlowModel& model, int x, int y);

/// epsilon(gamma) for an orientation collection.
int instanton_sign(const Instanton& inst, const Orientations& o);

/// Transports `frame` (tangent to W-_from at `start`) forward along the flow
/// until it arrives near `target`, then returns det(Q^T [X/|X|, F_target])
/// with Q the positively oriented orthonormalization of the transported frame.
double transported_determinant(const Scenario& s, const ChartPoint& start, const Mat& frame, const RestPoint& target,
                               double arrival_radius, const FlowOptions& options);

LaunchCurve launch_curve(const RestPoint& x, double radius);
/// Seed x + F back (cos a, sin a).
ChartPoint launch_seed(const Scenario& s, const RestPoint& x, const LaunchCurve& c, double angle);
/// Derivative of the seed in the angle (x's chart).
Vec launch_tangent(const RestPoint& x, const LaunchCurve& c, double angle);
/// Angle in [0, 2 pi) of the linearized orbit through a point near x.
double launch_angle(const Scenario& s, const RestPoint& x, const LaunchCurve& c, const ChartPoint& p);

/// Matrix exponential of a small matrix.
Mat matrix_exponential(const Mat& m);

/// A sampled description of M(x, y) = T(x, y) x (f(y), f(x)).
struct ModuliSample {
  /// Instanton id (gap 1) or arc index (gap 2).
  int component = -1;
  /// Launch parameter (gap 2 angle; gap 1 the instanton's launch).
  double parameter = 0.0;
  double level = 0.0;
  ChartPoint point;
};

struct ModuliChart {
  int from = -1;
  int to = -1;
  int gap = 0;
  std::vector<int> instantons;
  std::vector<int> arcs;
  std::vector<ModuliSample> samples;
  /// o_{x,y} relative to the (flow time, launch) parametrization under the
  /// canonical orientations; multiply by O[x] * O[y] for other choices.
  int orientation = 1;
};

ModuliChart sample_moduli(const FlowModel& model, int x, int y, int resolution);

/// Corner strata of the compactification rooted at x (unstable set), at y
/// (stable set), or at a pair (moduli / trajectory space).
std::vector<CornerStratum> corner_catalog_unstable(const FlowModel& model, int x);
std::vector<CornerStratum> corner_catalog_stable(const FlowModel& model, int y);
std::vector<CornerStratum> corner_catalog_moduli(const FlowModel& model, int x, int y);
std::vector<CornerStratum> corner_catalog_trajectories(const FlowModel& model, int x, int y);

struct BasinReport {
  int samples = 0;
  int classified = 0;
  int unresolved = 0;
  /// (x, y) -> count of samples in W-_x intersect W+_y.
  std::map<std::pair<int, int>, int> pairs;
  double classified_fraction() const { return samples ? static_cast<double>(classified) / samples : 0.0; }
};

/// Flows `samples` random points both ways and classifies their limits.
BasinReport basin_partition(const FlowModel& model, int samples, std::uint64_t seed);
/// Classification of a single point: (backward limit, forward limit).
std::pair<std::optional<int>, std::optional<int>> classify_point(const FlowModel& model, const ChartPoint& p,
                                                                 const FlowOptions& options);

}  // namespace morse

#endif  // MORSE_MODULI_HPP

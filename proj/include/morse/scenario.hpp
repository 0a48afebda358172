#ifndef MORSE_SCENARIO_HPP
#define MORSE_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morse/atlas.hpp"
#include "morse/forms.hpp"

namespace morse {

struct NamedForm {
  std::string name;
  DifferentialForm form;
};

/// Expected instanton count between two rest points located by coordinates.
struct ExpectedInstantons {
  ChartPoint from;
  ChartPoint to;
  int count = 0;
};

struct GroundTruth {
  std::vector<int> rest_points_per_index;
  std::vector<int> betti;
  std::vector<ExpectedInstantons> instantons;
  /// Name of the reference triangulation ("circle", "sphere", "torus").
  std::string triangulation;
};

/// Raw, serializable scenario description. Every analytic quantity is an
/// Expression per chart.
struct ScenarioData {
  std::string name;
  std::vector<Chart> charts;
  std::vector<std::vector<Expression>> metric;        // [chart][row * n + col]
  std::vector<std::vector<Expression>> vector_field;  // [chart][component]
  std::vector<Expression> lyapunov;                   // [chart]
  std::vector<NamedForm> forms;
  std::optional<GroundTruth> ground_truth;
};

/// Compiled, immutable scenario: the manifold atlas together with the
/// metric, the vector field X, its Lyapunov function f and a library of
/// forms. All evaluation members are const and thread-safe.
class Scenario {
 public:
  explicit Scenario(ScenarioData data);

  const ScenarioData& data() const { return data_; }
  const std::string& name() const { return data_.name; }
  int dimension() const { return atlas_.dimension(); }
  const Atlas& atlas() const { return atlas_; }
  const std::optional<GroundTruth>& ground_truth() const { return data_.ground_truth; }
  const DifferentialForm& form(const std::string& name) const;

  Vec field(const ChartPoint& p) const;
  Mat field_jacobian(const ChartPoint& p) const;
  double lyapunov(const ChartPoint& p) const;
  /// Coordinate differential of f (row of partials).
  Vec lyapunov_differential(const ChartPoint& p) const;
  Mat metric(const ChartPoint& p) const;
  /// df(X), negative off the rest points for a Lyapunov pair.
  double lyapunov_rate(const ChartPoint& p) const { return lyapunov_differential(p).dot(field(p)); }

  /// Scenario with X replaced by -X and f by -f (time reversal).
  Scenario reversed() const;

 private:
  ScenarioData data_;
  Atlas atlas_;
  std::vector<std::vector<Program>> field_;
  std::vector<std::vector<Program>> jacobian_;  // [chart][i * n + j]
  std::vector<Program> lyapunov_;
  std::vector<std::vector<Program>> lyapunov_diff_;
  std::vector<std::vector<Program>> metric_;
};

/// X = -grad_g f built symbolically (dimension 1 or 2).
std::vector<Expression> negative_gradient(const Expression& f, const std::vector<Expression>& metric, int n);

/// The five builtin scenarios with ground truth, in a fixed order:
/// circle_cos, double_well_circle, round_sphere_height, ellipsoid_sphere, flat_torus.
const std::vector<Scenario>& builtin_scenarios();
const Scenario& builtin_scenario(const std::string& name);

/// Ambient (x, y, z) of the unit sphere in stereographic chart `chart` (0 or 1).
std::vector<Expression> sphere_embedding(int chart);

/// Results of the sampled chart-consistency checks on a scenario.
struct ConsistencyReport {
  double transition_roundtrip = 0.0;
  double jacobian_sign_violations = 0.0;
  double min_metric_eigenvalue = 0.0;
  double metric_asymmetry = 0.0;
  double field_mismatch = 0.0;
  double lyapunov_mismatch = 0.0;
  double form_mismatch = 0.0;
  double closedness = 0.0;
  int overlap_points = 0;
  bool passed = false;
  std::vector<std::string> failures;
};

ConsistencyReport check_consistency(const Scenario& s, int samples, std::uint64_t seed);

struct LyapunovReport {
  bool passed = false;
  int samples_checked = 0;
  int excluded = 0;
  /// max df(X) over the checked samples (negative on a pass).
  double worst_rate = 0.0;
  std::optional<ChartPoint> violation;
};

/// Samples df(X) outside balls of `exclusion_radius` around `centers`.
LyapunovReport check_lyapunov(const Scenario& s, int samples, double exclusion_radius,
                              const std::vector<ChartPoint>& centers, std::uint64_t seed, double margin = 0.0);

}  // namespace morse

#endif  // MORSE_SCENARIO_HPP

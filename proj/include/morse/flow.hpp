#ifndef MORSE_FLOW_HPP
#define MORSE_FLOW_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "morse/scenario.hpp"
#include "morse/scenario_io.hpp"

namespace morse {

enum class Direction { Forward = 1, Backward = -1 };

inline double direction_sign(Direction d) { return d == Direction::Forward ? 1.0 : -1.0; }
const char* to_string(Direction d);

struct FlowOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  double initial_step = 1e-3;
  double min_step = 1e-14;
  double max_step = 0.5;
  int max_steps = 200000;
  /// |X| below this counts as having reached a rest point.
  double rest_speed = 1e-8;
  bool record_samples = true;
};

/// A ball around a rest point that terminates integration on entry.
struct CaptureBall {
  int id = -1;
  ChartPoint center;
  double radius = 1e-4;
};

struct StopRule {
  std::vector<CaptureBall> capture;
  /// Stop when f reaches this level (refined by bisection).
  std::optional<double> level;
  double max_time = 1e3;
};

enum class Termination { Captured, RestReached, LevelReached, MaxTime, StepFailure, CoverageError };
const char* to_string(Termination t);

struct FlowSample {
  ChartPoint point;
  double time = 0.0;
  double f = 0.0;
};

struct Trajectory {
  Direction direction = Direction::Forward;
  std::vector<FlowSample> samples;
  Termination termination = Termination::MaxTime;
  /// Id of the capture ball entered, if any.
  std::optional<int> captured;
  /// Accepted steps along which f moved against the flow by more than 1e-9.
  int monotonicity_violations = 0;
  int steps = 0;
  std::string message;

  const FlowSample& back() const { return samples.back(); }
};

/// Extra quantities carried along a trajectory: a tangent frame W obeying
/// W' = s DX W (s = +-1 for the direction) and scalar accumulators whose
/// rates are supplied by the caller.
///
/// The rate callback receives the current point, the direction-signed field
/// s X, the frame, and writes the accumulator rates into `rates`.
using AccumulatorRate = std::function<void(const ChartPoint& p, const Vec& velocity, const Mat& frame, Vec& rates)>;

struct AugmentedFlow {
  Trajectory trajectory;
  ChartPoint end;
  Mat frame;
  Vec accumulators;
};

AugmentedFlow integrate_augmented(const Scenario& s, const ChartPoint& start, Direction direction,
                                  const StopRule& stop, const Mat& frame, int accumulator_count,
                                  const AccumulatorRate& rate, const FlowOptions& options = {});

Trajectory integrate_trajectory(const Scenario& s, const ChartPoint& start, Direction direction, const StopRule& stop,
                                const FlowOptions& options = {});

class ClassificationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rest point id whose ball of `capture_radius` holds the trajectory's end
/// with the speed still shrinking; nullopt when unresolved. Throws
/// ClassificationError when two rest points lie within 2 * capture_radius.
std::optional<int> classify_limit(const Scenario& s, const Trajectory& trajectory,
                                  const std::vector<CaptureBall>& rest_points, double capture_radius);

class LevelError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Point of the trajectory with |f - c| < 1e-10, c strictly inside the range.
ChartPoint level_crossing(const Scenario& s, const Trajectory& trajectory, double c);

/// Polyline export: {"direction", "termination", "points": [{chart, coords, time, f}]}.
Json trajectory_json(const Scenario& s, const Trajectory& trajectory);

}  // namespace morse

#endif  // MORSE_FLOW_HPP

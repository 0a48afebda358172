#ifndef MORSE_CRITICAL_HPP
#define MORSE_CRITICAL_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "morse/flow.hpp"
#include "morse/scenario.hpp"

namespace morse {

class NonHyperbolicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NewtonError : public std::runtime_error {
 public:
  NewtonError(const std::string& what, ChartPoint seed) : std::runtime_error(what), seed_(std::move(seed)) {}
  const ChartPoint& seed() const { return seed_; }

 private:
  ChartPoint seed_;
};

/// Linear data of X at a zero.
struct Linearization {
  Mat jacobian;
  /// Sorted by descending real part.
  Eigen::VectorXcd eigenvalues;
  int index = 0;
  /// Columns span the unstable (resp. stable) eigenspace in canonical form.
  Mat unstable_frame;
  Mat stable_frame;
  double min_abs_real = 0.0;
};

struct RestPoint {
  int id = -1;
  ChartPoint point;
  double f = 0.0;
  double residual = 0.0;
  Linearization linear;

  int index() const { return linear.index; }
  const Mat& frame() const { return linear.unstable_frame; }
};

struct CriticalOptions {
  int grid_density = 32;
  double newton_tol = 1e-12;
  double dedup_distance = 1e-6;
  double hyperbolicity_margin = 1e-6;
  int newton_max_iterations = 60;
};

/// Eigendata and index at a zero of X. Throws NonHyperbolicError when an
/// eigenvalue has |Re| at or below the margin.
Linearization linearize_and_index(const Scenario& s, const ChartPoint& p, double margin = 1e-6);

/// Grid scan plus damped Newton. Points are ordered by index, then by chart
/// and coordinates; ids follow that order. Throws NewtonError and
/// NonHyperbolicError.
std::vector<RestPoint> find_rest_points(const Scenario& s, const CriticalOptions& options = {});

/// Rest points per index, 0..n.
std::vector<std::vector<int>> by_index(const std::vector<RestPoint>& points, int dimension);
std::vector<int> count_by_index(const std::vector<RestPoint>& points, int dimension);

/// Orientation choices o_x as signs relative to each point's canonical
/// unstable frame. For index 0 the sign is the point orientation.
struct Orientations {
  std::vector<int> sign;

  int operator[](int id) const { return sign[static_cast<std::size_t>(id)]; }
};

/// The canonical choice: every sign +1.
Orientations choose_orientations(const std::vector<RestPoint>& points);
/// Uniformly random signs from `seed`.
Orientations random_orientations(const std::vector<RestPoint>& points, std::uint64_t seed);
/// The frame representing o_x: the canonical frame with its first column
/// negated when the sign is -1.
Mat oriented_frame(const RestPoint& x, int sign);

struct UnstableDisk {
  int rest_point = -1;
  double radius = 0.0;
  /// Points x + radius * F u for u on the unit sphere of the frame coordinates.
  std::vector<ChartPoint> seeds;
  /// Frame coordinates u of each seed.
  std::vector<Vec> parameters;
  /// max |X(q) - DX (q - x)| / (radius * min|Re|) over the seeds.
  double remainder_ratio = 0.0;
};

class DiskRadiusError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Boundary of the first-order unstable disk. Index 1 yields the two points
/// +-radius e; index 2 yields `samples` points around a circle. Throws
/// DiskRadiusError when the quadratic remainder is not dominated.
UnstableDisk unstable_disk(const Scenario& s, const RestPoint& x, double radius, int samples = 64);

/// Capture balls centered at the rest points.
std::vector<CaptureBall> capture_balls(const std::vector<RestPoint>& points, double radius);

}  // namespace morse

#endif  // MORSE_CRITICAL_HPP

#ifndef MORSE_ATLAS_HPP
#define MORSE_ATLAS_HPP

#include <Eigen/Dense>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "morse/expression.hpp"

namespace morse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// One coordinate axis of a chart box.
struct AxisSpec {
  double lower = 0.0;
  double upper = 1.0;
  bool periodic = false;

  double width() const { return upper - lower; }
};

/// A coordinate change into another chart.
///
/// Applies where `overlap` evaluates > 0 in source coordinates and the image
/// lies inside the target box.
struct Transition {
  int target = 0;
  Expression overlap;
  std::vector<Expression> map;
  std::vector<Expression> inverse;
};

struct Chart {
  std::string id;
  int dimension = 1;
  std::vector<AxisSpec> axes;
  std::vector<Transition> transitions;
};

/// A point on the manifold in the coordinates of one chart.
struct ChartPoint {
  int chart = 0;
  Vec coords;
};

/// Compiled chart atlas: box domains, periodic wrapping, and transitions.
class Atlas {
 public:
  Atlas() = default;
  explicit Atlas(std::vector<Chart> charts);

  int dimension() const { return dimension_; }
  int size() const { return static_cast<int>(charts_.size()); }
  const Chart& chart(int i) const { return charts_.at(static_cast<std::size_t>(i)); }
  const std::vector<Chart>& charts() const { return charts_; }
  int chart_index(const std::string& id) const;

  /// Periodic axes reduced into [lower, upper).
  ChartPoint wrap(ChartPoint p) const;
  bool in_domain(int chart, const Vec& coords) const;
  /// min over bounded axes of distance to the box edge divided by the half
  /// width: 1 at the centre, 0 on the boundary, 1 when all axes are periodic.
  double interiority(int chart, const Vec& coords) const;
  /// Inside the 90% inner box of its chart.
  bool is_inner(const ChartPoint& p) const { return interiority(p.chart, p.coords) > 0.1; }

  /// Coordinates of p in chart `target`, if a transition applies.
  std::optional<Vec> to_chart(const ChartPoint& p, int target) const;
  /// Jacobian of the transition p.chart -> target evaluated at p.
  std::optional<Mat> transition_jacobian(const ChartPoint& p, int target) const;
  /// Re-expresses p in the chart where it is most interior (ties keep p.chart).
  ChartPoint best_chart(const ChartPoint& p) const;
  /// Coordinate distance after moving both points into a common chart;
  /// +inf when no common chart applies.
  double distance(const ChartPoint& a, const ChartPoint& b) const;
  /// Difference b - a in a's chart with periodic axes wrapped to the
  /// shortest representative.
  std::optional<Vec> displacement(const ChartPoint& a, const ChartPoint& b) const;

  /// Uniform sample from a uniformly chosen chart's 90% inner box.
  ChartPoint sample(std::mt19937_64& rng) const;

 private:
  struct CompiledTransition {
    int target;
    Program overlap;
    std::vector<Program> map;
    std::vector<std::vector<Program>> jacobian;  // [row][col]
  };
  std::optional<std::size_t> find_transition(int source, int target) const;

  int dimension_ = 0;
  std::vector<Chart> charts_;
  std::vector<std::vector<CompiledTransition>> compiled_;
};

}  // namespace morse

#endif  // MORSE_ATLAS_HPP

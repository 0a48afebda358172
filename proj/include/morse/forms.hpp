#ifndef MORSE_FORMS_HPP
#define MORSE_FORMS_HPP

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "morse/atlas.hpp"
#include "morse/expression.hpp"

namespace morse {

class DegreeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Strictly increasing index sets of size `degree` from {0..n-1}, in
/// lexicographic order. This is the coefficient layout of every form.
const std::vector<std::vector<int>>& multi_indices(int n, int degree);

/// Position of a multi-index in multi_indices(n, degree).
int multi_index_position(int n, const std::vector<int>& index);

/// A differential form stored chart by chart.
///
/// coefficients[c][k] multiplies dt_{I_k} in chart c, with I_k the k-th entry
/// of multi_indices(n, degree). Coefficients are compiled on construction.
class DifferentialForm {
 public:
  DifferentialForm() = default;
  DifferentialForm(int degree, int dimension, std::vector<std::vector<Expression>> coefficients,
                   bool declared_closed = false);

  /// The same coefficient expressions in every chart (one-chart atlases,
  /// or forms whose chart expressions coincide).
  static DifferentialForm uniform(int degree, int dimension, int charts, std::vector<Expression> coefficients,
                                  bool declared_closed = false);
  static DifferentialForm zero(int degree, int dimension, int charts);

  int degree() const { return degree_; }
  int dimension() const { return dimension_; }
  int charts() const { return static_cast<int>(coefficients_.size()); }
  bool declared_closed() const { return declared_closed_; }
  const std::vector<std::vector<Expression>>& coefficients() const { return coefficients_; }
  const Expression& coefficient(int chart, int k) const {
    return coefficients_[static_cast<std::size_t>(chart)][static_cast<std::size_t>(k)];
  }

  /// Coefficient vector at a point.
  Vec coefficients_at(const ChartPoint& p) const;
  /// Value on the columns of `vectors` (n x degree); a 0-form returns its value.
  double apply(const ChartPoint& p, const Mat& vectors) const;

  DifferentialForm scaled(double s) const;
  DifferentialForm with_closed_flag(bool closed) const;

 private:
  int degree_ = 0;
  int dimension_ = 0;
  bool declared_closed_ = false;
  std::vector<std::vector<Expression>> coefficients_;
  std::shared_ptr<const std::vector<std::vector<Program>>> programs_;
};

DifferentialForm exterior_derivative(const DifferentialForm& form);
DifferentialForm wedge(const DifferentialForm& a, const DifferentialForm& b);
DifferentialForm operator+(const DifferentialForm& a, const DifferentialForm& b);
/// Multiplies a form by a function given per chart.
DifferentialForm multiply(const std::vector<Expression>& function, const DifferentialForm& form);

/// Max |coefficient| of d(form) over the given sample points.
double closedness_defect(const DifferentialForm& form, const std::vector<ChartPoint>& samples);

/// Max coefficient mismatch between the chart representations of a form on
/// sampled overlap points (pullback under each transition).
double chart_consistency_defect(const DifferentialForm& form, const Atlas& atlas,
                                const std::vector<ChartPoint>& samples);

}  // namespace morse

#endif  // MORSE_FORMS_HPP

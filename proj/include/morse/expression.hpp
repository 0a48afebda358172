#ifndef MORSE_EXPRESSION_HPP
#define MORSE_EXPRESSION_HPP

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace morse {

/// Thrown by parse_expression; carries the byte offset of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Domain violation during evaluation (division by zero, sqrt of a negative).
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Sqrt };

struct ExprNode;

/// Immutable analytic expression over chart coordinates t1..tn.
///
/// Nodes are shared, so copies are cheap and values may be used from many
/// threads. Variables are 0-based internally (`t1` is variable 0).
class Expression {
 public:
  Expression();  // the constant 0
  static Expression constant(double value);
  static Expression variable(int index);
  static Expression pi();

  double evaluate(std::span<const double> vars) const;
  Expression derivative(int var) const;
  /// Replaces variable i by replacements[i].
  Expression substitute(const std::vector<Expression>& replacements) const;

  /// Text in the input grammar; re-parses to a bit-identical evaluator.
  std::string to_string() const;

  bool is_constant() const;
  bool is_zero() const;
  /// Value of a constant expression; only valid when is_constant().
  double constant_value() const;
  /// Highest variable index used, or -1.
  int max_variable() const;

  const ExprNode& node() const { return *node_; }
  explicit Expression(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}

  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator/(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a);
  friend Expression pow(const Expression& base, int exponent);
  friend Expression sin(const Expression& a);
  friend Expression cos(const Expression& a);
  friend Expression exp(const Expression& a);
  friend Expression sqrt(const Expression& a);

 private:
  std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
  Op op = Op::Const;
  double value = 0.0;  // Const
  int index = 0;       // Var index, or Pow exponent
  bool is_pi = false;
  std::shared_ptr<const ExprNode> lhs;
  std::shared_ptr<const ExprNode> rhs;
};

Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression pow(const Expression& base, int exponent);
Expression sin(const Expression& a);
Expression cos(const Expression& a);
Expression exp(const Expression& a);
Expression sqrt(const Expression& a);

/// Parses the closed grammar: numbers, `pi`, t1..tn, + - * / ^ (integer
/// exponent), sin cos exp sqrt, parentheses. Throws ParseError.
Expression parse_expression(std::string_view source);

/// Flattened register program for fast repeated evaluation of one
/// expression. Shared and structurally equal subexpressions get one register.
class Program {
 public:
  Program() = default;
  explicit Program(const Expression& expr);

  double operator()(std::span<const double> vars) const;
  std::size_t size() const { return code_.size(); }

 private:
  struct Instr {
    Op op;
    double value;
    int index;
    int a;  // operand registers, -1 when unused
    int b;
  };
  std::vector<Instr> code_;
};

}  // namespace morse

#endif  // MORSE_EXPRESSION_HPP

#include "morse/expression.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <tuple>
#include <algorithm>

namespace morse {

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make_const(double v) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

const NodePtr& zero_node() {
  static const NodePtr zero = make_const(0.0);
  return zero;
}

NodePtr make_node(Op op, NodePtr lhs, NodePtr rhs = nullptr, int index = 0) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  n->index = index;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

double ipow(double base, int e) {
  double result = 1.0;
  bool inv = e < 0;
  unsigned k = inv ? static_cast<unsigned>(-e) : static_cast<unsigned>(e);
  while (k) {
    if (k & 1U) result *= base;
    base *= base;
    k >>= 1U;
  }
  if (inv) {
    if (result == 0.0) throw EvaluationError("division by zero in negative power");
    result = 1.0 / result;
  }
  return result;
}

double eval_node(const ExprNode& n, std::span<const double> vars) {
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Var:
      if (n.index < 0 || static_cast<std::size_t>(n.index) >= vars.size())
        throw EvaluationError("variable t" + std::to_string(n.index + 1) + " out of range");
      return vars[static_cast<std::size_t>(n.index)];
    case Op::Add:
      return eval_node(*n.lhs, vars) + eval_node(*n.rhs, vars);
    case Op::Sub:
      return eval_node(*n.lhs, vars) - eval_node(*n.rhs, vars);
    case Op::Mul:
      return eval_node(*n.lhs, vars) * eval_node(*n.rhs, vars);
    case Op::Div: {
      double d = eval_node(*n.rhs, vars);
      if (d == 0.0) throw EvaluationError("division by zero");
      return eval_node(*n.lhs, vars) / d;
    }
    case Op::Pow:
      return ipow(eval_node(*n.lhs, vars), n.index);
    case Op::Neg:
      return -eval_node(*n.lhs, vars);
    case Op::Sin:
      return std::sin(eval_node(*n.lhs, vars));
    case Op::Cos:
      return std::cos(eval_node(*n.lhs, vars));
    case Op::Exp:
      return std::exp(eval_node(*n.lhs, vars));
    case Op::Sqrt: {
      double a = eval_node(*n.lhs, vars);
      if (a < 0.0) throw EvaluationError("sqrt of negative value");
      return std::sqrt(a);
    }
  }
  return 0.0;
}

std::string format_number(double v) {
  if (v == std::numbers::pi) return "pi";
  if (std::nearbyint(v) == v && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_node(const ExprNode& n, std::string& out) {
  auto unary = [&](const char* name) {
    out += name;
    out += '(';
    print_node(*n.lhs, out);
    out += ')';
  };
  auto binary = [&](char sym) {
    out += '(';
    print_node(*n.lhs, out);
    out += ' ';
    out += sym;
    out += ' ';
    print_node(*n.rhs, out);
    out += ')';
  };
  switch (n.op) {
    case Op::Const: {
      std::string s = format_number(n.value);
      if (n.value < 0) {
        out += '(';
        out += s;
        out += ')';
      } else {
        out += s;
      }
      return;
    }
    case Op::Var:
      out += 't' + std::to_string(n.index + 1);
      return;
    case Op::Add:
      return binary('+');
    case Op::Sub:
      return binary('-');
    case Op::Mul:
      return binary('*');
    case Op::Div:
      return binary('/');
    case Op::Pow:
      out += '(';
      print_node(*n.lhs, out);
      out += ")^";
      if (n.index < 0)
        out += "(" + std::to_string(n.index) + ")";
      else
        out += std::to_string(n.index);
      return;
    case Op::Neg:
      out += "(-";
      print_node(*n.lhs, out);
      out += ')';
      return;
    case Op::Sin:
      return unary("sin");
    case Op::Cos:
      return unary("cos");
    case Op::Exp:
      return unary("exp");
    case Op::Sqrt:
      return unary("sqrt");
  }
}

// Recursive-descent parser over the closed grammar.
class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expression parse() {
    Expression e = expr();
    skip();
    if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError("syntax error: " + msg, pos_); }

  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expression expr() {
    Expression lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = lhs + term();
      else if (accept('-'))
        lhs = lhs - term();
      else
        return lhs;
    }
  }

  Expression term() {
    Expression lhs = factor();
    for (;;) {
      if (accept('*'))
        lhs = lhs * factor();
      else if (accept('/'))
        lhs = lhs / factor();
      else
        return lhs;
    }
  }

  Expression factor() {
    if (accept('-')) return -factor();
    if (accept('+')) return factor();
    return power();
  }

  int integer_exponent() {
    bool paren = accept('(');
    bool neg = accept('-');
    if (!neg) accept('+');
    skip();
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (start == pos_) fail("exponent must be an integer literal");
    int value = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc()) fail("exponent out of range");
    if (paren) expect(')');
    return neg ? -value : value;
  }

  Expression power() {
    Expression base = primary();
    if (accept('^')) return pow(base, integer_exponent());
    return base;
  }

  Expression primary() {
    skip();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expression e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  Expression number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return Expression::constant(value);
  }

  Expression identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    std::string_view name = src_.substr(start, pos_ - start);
    if (name == "pi") return Expression::pi();
    if (name.size() >= 2 && name[0] == 't') {
      int idx = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      if (ec == std::errc() && ptr == name.data() + name.size() && idx >= 1 && name[1] != '0')
        return Expression::variable(idx - 1);
    }
    using Fn = Expression (*)(const Expression&);
    Fn fn = nullptr;
    if (name == "sin")
      fn = [](const Expression& a) { return sin(a); };
    else if (name == "cos")
      fn = [](const Expression& a) { return cos(a); };
    else if (name == "exp")
      fn = [](const Expression& a) { return exp(a); };
    else if (name == "sqrt")
      fn = [](const Expression& a) { return sqrt(a); };
    if (!fn) {
      pos_ = start;
      throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }
    expect('(');
    Expression arg = expr();
    expect(')');
    return fn(arg);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : node_(zero_node()) {}

Expression Expression::constant(double value) { return Expression(make_const(value)); }

Expression Expression::variable(int index) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Var;
  n->index = index;
  return Expression(NodePtr(n));
}

Expression Expression::pi() {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Const;
  n->value = std::numbers::pi;
  n->is_pi = true;
  return Expression(NodePtr(n));
}

double Expression::evaluate(std::span<const double> vars) const { return eval_node(*node_, vars); }

bool Expression::is_constant() const { return node_->op == Op::Const; }
bool Expression::is_zero() const { return is_const(node_, 0.0); }
double Expression::constant_value() const { return node_->value; }

int Expression::max_variable() const {
  const ExprNode& n = *node_;
  if (n.op == Op::Var) return n.index;
  int m = -1;
  if (n.lhs) m = std::max(m, Expression(n.lhs).max_variable());
  if (n.rhs) m = std::max(m, Expression(n.rhs).max_variable());
  return m;
}

std::string Expression::to_string() const {
  std::string out;
  print_node(*node_, out);
  return out;
}

Expression operator+(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() + b.constant_value());
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return Expression(make_node(Op::Add, a.node_, b.node_));
}

Expression operator-(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() - b.constant_value());
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  return Expression(make_node(Op::Sub, a.node_, b.node_));
}

Expression operator*(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() * b.constant_value());
  if (a.is_zero() || b.is_zero()) return Expression();
  if (is_const(a.node_, 1.0)) return b;
  if (is_const(b.node_, 1.0)) return a;
  if (is_const(a.node_, -1.0)) return -b;
  if (is_const(b.node_, -1.0)) return -a;
  return Expression(make_node(Op::Mul, a.node_, b.node_));
}

Expression operator/(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant() && b.constant_value() != 0.0)
    return Expression::constant(a.constant_value() / b.constant_value());
  if (a.is_zero() && !(b.is_constant() && b.constant_value() == 0.0)) return Expression();
  if (is_const(b.node_, 1.0)) return a;
  return Expression(make_node(Op::Div, a.node_, b.node_));
}

Expression operator-(const Expression& a) {
  if (a.is_constant()) return Expression::constant(-a.constant_value());
  if (a.node_->op == Op::Neg) return Expression(a.node_->lhs);
  return Expression(make_node(Op::Neg, a.node_));
}

Expression pow(const Expression& base, int exponent) {
  if (exponent == 0) return Expression::constant(1.0);
  if (exponent == 1) return base;
  if (base.is_constant() && (exponent > 0 || base.constant_value() != 0.0))
    return Expression::constant(ipow(base.constant_value(), exponent));
  return Expression(make_node(Op::Pow, base.node_, nullptr, exponent));
}

Expression sin(const Expression& a) {
  if (a.is_zero()) return Expression();
  return Expression(make_node(Op::Sin, a.node_));
}

Expression cos(const Expression& a) {
  if (a.is_zero()) return Expression::constant(1.0);
  return Expression(make_node(Op::Cos, a.node_));
}

Expression exp(const Expression& a) {
  if (a.is_zero()) return Expression::constant(1.0);
  return Expression(make_node(Op::Exp, a.node_));
}

Expression sqrt(const Expression& a) { return Expression(make_node(Op::Sqrt, a.node_)); }

Expression Expression::derivative(int var) const {
  const ExprNode& n = *node_;
  Expression l = n.lhs ? Expression(n.lhs) : Expression();
  Expression r = n.rhs ? Expression(n.rhs) : Expression();
  switch (n.op) {
    case Op::Const:
      return Expression();
    case Op::Var:
      return Expression::constant(n.index == var ? 1.0 : 0.0);
    case Op::Add:
      return l.derivative(var) + r.derivative(var);
    case Op::Sub:
      return l.derivative(var) - r.derivative(var);
    case Op::Mul:
      return l.derivative(var) * r + l * r.derivative(var);
    case Op::Div: {
      Expression dl = l.derivative(var);
      Expression dr = r.derivative(var);
      if (dr.is_zero()) return dl / r;
      return (dl * r - l * dr) / pow(r, 2);
    }
    case Op::Pow:
      return Expression::constant(n.index) * pow(l, n.index - 1) * l.derivative(var);
    case Op::Neg:
      return -l.derivative(var);
    case Op::Sin:
      return cos(l) * l.derivative(var);
    case Op::Cos:
      return -(sin(l) * l.derivative(var));
    case Op::Exp:
      return *this * l.derivative(var);
    case Op::Sqrt:
      return l.derivative(var) / (Expression::constant(2.0) * *this);
  }
  return Expression();
}

Expression Expression::substitute(const std::vector<Expression>& replacements) const {
  const ExprNode& n = *node_;
  auto sub = [&](const NodePtr& p) { return Expression(p).substitute(replacements); };
  switch (n.op) {
    case Op::Const:
      return *this;
    case Op::Var:
      if (n.index < 0 || static_cast<std::size_t>(n.index) >= replacements.size())
        throw std::out_of_range("substitute: no replacement for t" + std::to_string(n.index + 1));
      return replacements[static_cast<std::size_t>(n.index)];
    case Op::Add:
      return sub(n.lhs) + sub(n.rhs);
    case Op::Sub:
      return sub(n.lhs) - sub(n.rhs);
    case Op::Mul:
      return sub(n.lhs) * sub(n.rhs);
    case Op::Div:
      return sub(n.lhs) / sub(n.rhs);
    case Op::Pow:
      return pow(sub(n.lhs), n.index);
    case Op::Neg:
      return -sub(n.lhs);
    case Op::Sin:
      return sin(sub(n.lhs));
    case Op::Cos:
      return cos(sub(n.lhs));
    case Op::Exp:
      return exp(sub(n.lhs));
    case Op::Sqrt:
      return sqrt(sub(n.lhs));
  }
  return *this;
}

Expression parse_expression(std::string_view source) { return Parser(source).parse(); }

// ---------------------------------------------------------------------------
// Program

namespace {

// Assigns every distinct subexpression one register. Nodes are identified
// structurally, so subtrees rebuilt by differentiation or substitution are
// evaluated once.
struct TapeBuilder {
  using Key = std::tuple<Op, std::uint64_t, int, int, int>;
  std::vector<std::tuple<Op, double, int, int, int>> code;
  std::map<const ExprNode*, int> by_node;
  std::map<Key, int> by_shape;

  int add(const ExprNode& n) {
    if (auto it = by_node.find(&n); it != by_node.end()) return it->second;
    int a = -1, b = -1;
    if (n.lhs) a = add(*n.lhs);
    if (n.rhs) b = add(*n.rhs);
    int index = n.op == Op::Var || n.op == Op::Pow ? n.index : 0;
    double value = n.op == Op::Const ? n.value : 0.0;
    Key key{n.op, std::bit_cast<std::uint64_t>(value), index, a, b};
    auto [it, fresh] = by_shape.emplace(key, static_cast<int>(code.size()));
    if (fresh) code.emplace_back(n.op, value, index, a, b);
    by_node.emplace(&n, it->second);
    return it->second;
  }
};

constexpr std::size_t kInlineRegisters = 256;

}  // namespace

Program::Program(const Expression& expr) {
  TapeBuilder t;
  t.add(expr.node());
  code_.reserve(t.code.size());
  for (auto& [op, v, i, a, b] : t.code) code_.push_back({op, v, i, a, b});
}

double Program::operator()(std::span<const double> vars) const {
  if (code_.empty()) return 0.0;
  std::array<double, kInlineRegisters> inline_regs;
  std::vector<double> heap;
  double* r = inline_regs.data();
  if (code_.size() > kInlineRegisters) {
    heap.resize(code_.size());
    r = heap.data();
  }
  for (std::size_t k = 0; k < code_.size(); ++k) {
    const Instr& in = code_[k];
    double& out = r[k];
    switch (in.op) {
      case Op::Const:
        out = in.value;
        break;
      case Op::Var:
        if (static_cast<std::size_t>(in.index) >= vars.size())
          throw EvaluationError("variable t" + std::to_string(in.index + 1) + " out of range");
        out = vars[static_cast<std::size_t>(in.index)];
        break;
      case Op::Add:
        out = r[in.a] + r[in.b];
        break;
      case Op::Sub:
        out = r[in.a] - r[in.b];
        break;
      case Op::Mul:
        out = r[in.a] * r[in.b];
        break;
      case Op::Div:
        if (r[in.b] == 0.0) throw EvaluationError("division by zero");
        out = r[in.a] / r[in.b];
        break;
      case Op::Pow:
        out = ipow(r[in.a], in.index);
        break;
      case Op::Neg:
        out = -r[in.a];
        break;
      case Op::Sin:
        out = std::sin(r[in.a]);
        break;
      case Op::Cos:
        out = std::cos(r[in.a]);
        break;
      case Op::Exp:
        out = std::exp(r[in.a]);
        break;
      case Op::Sqrt:
        if (r[in.a] < 0.0) throw EvaluationError("sqrt of negative value");
        out = std::sqrt(r[in.a]);
        break;
    }
  }
  return r[code_.size() - 1];
}

}  // namespace morse

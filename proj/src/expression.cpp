#include "geodex/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "geodex/error.hpp"

namespace geodex {

struct Expression::Node {
  enum class Kind { number, variable, add, sub, mul, div, pow, neg, call } kind;
  double value = 0.0;
  int index = 0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = k;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

double (*lookup(const std::string& name))(double) {
  if (name == "sin") return [](double x) { return std::sin(x); };
  if (name == "cos") return [](double x) { return std::cos(x); };
  if (name == "tan") return [](double x) { return std::tan(x); };
  if (name == "exp") return [](double x) { return std::exp(x); };
  if (name == "log") return [](double x) { return std::log(x); };
  if (name == "sqrt") return [](double x) { return std::sqrt(x); };
  if (name == "sinh") return [](double x) { return std::sinh(x); };
  if (name == "cosh") return [](double x) { return std::cosh(x); };
  if (name == "tanh") return [](double x) { return std::tanh(x); };
  if (name == "abs") return [](double x) { return std::fabs(x); };
  return nullptr;
}

class Parser {
 public:
  Parser(const std::string& s, const std::vector<std::string>& vars) : s_(s), vars_(vars) {}

  NodePtr parse() {
    auto e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error("expression '" + s_ + "' at offset " + std::to_string(pos_) + ": " + what);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (eat('+')) lhs = make(Kind::add, lhs, term());
      else if (eat('-')) lhs = make(Kind::sub, lhs, term());
      else return lhs;
    }
  }
  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (eat('*')) lhs = make(Kind::mul, lhs, unary());
      else if (eat('/')) lhs = make(Kind::div, lhs, unary());
      else return lhs;
    }
  }
  NodePtr unary() {
    if (eat('-')) return make(Kind::neg, unary());
    if (eat('+')) return unary();
    return power();
  }
  NodePtr power() {
    auto base = primary();
    if (eat('^')) return make(Kind::pow, base, unary());  // right associative
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (eat('(')) {
      auto e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::number;
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (eat('(')) {
        auto fn = lookup(name);
        if (!fn) fail("unknown function '" + name + "'");
        auto arg = expr();
        if (!eat(')')) fail("expected ')'");
        auto n = std::make_shared<Expression::Node>();
        n->kind = Kind::call;
        n->fn = fn;
        n->lhs = arg;
        return n;
      }
      auto n = std::make_shared<Expression::Node>();
      if (name == "pi") {
        n->kind = Kind::number;
        n->value = std::numbers::pi;
        return n;
      }
      for (std::size_t i = 0; i < vars_.size(); ++i)
        if (vars_[i] == name) {
          n->kind = Kind::variable;
          n->index = static_cast<int>(i);
          return n;
        }
      pos_ = start;
      fail("unknown variable '" + name + "'");
    }
    fail("unexpected character");
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

double eval(const Expression::Node& n, std::span<const double> x) {
  switch (n.kind) {
    case Kind::number: return n.value;
    case Kind::variable: return x[static_cast<std::size_t>(n.index)];
    case Kind::add: return eval(*n.lhs, x) + eval(*n.rhs, x);
    case Kind::sub: return eval(*n.lhs, x) - eval(*n.rhs, x);
    case Kind::mul: return eval(*n.lhs, x) * eval(*n.rhs, x);
    case Kind::div: return eval(*n.lhs, x) / eval(*n.rhs, x);
    case Kind::pow: return std::pow(eval(*n.lhs, x), eval(*n.rhs, x));
    case Kind::neg: return -eval(*n.lhs, x);
    case Kind::call: return n.fn(eval(*n.lhs, x));
  }
  return 0.0;
}

}  // namespace

Expression::Expression(const std::string& text, std::vector<std::string> variables) : text_(text) {
  root_ = Parser(text_, variables).parse();
}

double Expression::operator()(std::span<const double> values) const { return eval(*root_, values); }

}  // namespace geodex

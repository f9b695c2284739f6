#pragma once

// Small arithmetic expression language for metrics and fields given in config
// files: numbers, named variables, + - * / ^, parentheses, unary minus, the
// constant `pi`, and sin cos tan exp log sqrt sinh cosh tanh abs.

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace geodex {

class Expression {
 public:
  /// Parses `text`; identifiers must be listed in `variables` (or be `pi`).
  /// Throws geodex::Error with the character offset on malformed input.
  Expression(const std::string& text, std::vector<std::string> variables);

  double operator()(std::span<const double> values) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace geodex

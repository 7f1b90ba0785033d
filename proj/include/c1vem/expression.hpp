#pragma once

#include <memory>
#include <string>

namespace c1vem {

/// Compiled scalar expression in x, y, t (grammar in docs/expression_grammar.md).
class Expression {
public:
    struct Node;

    /// Throws ParseError with the offending column on malformed input.
    static Expression parse(const std::string& text);

    double operator()(double x, double y, double t = 0.0) const;
    const std::string& text() const { return text_; }
    /// True when the expression contains a comparison (a jump discontinuity).
    bool has_comparison() const { return has_comparison_; }

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
    bool has_comparison_ = false;
};

} // namespace c1vem

// Small real-valued expression language for scenario files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?          right associative, binds tighter than unary minus
//   primary := number | name | name '(' expr ')' | '(' expr ')'
//
// Functions: sin cos tan sinh cosh tanh atan exp log sqrt abs bump.
// Constants: pi. Any other name must be one of the declared variables.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "canop/core.hpp"

namespace canop::cli {

/// Parse failure; `column` is 1-based inside the expression text.
class ExprError : public ConfigError {
public:
    ExprError(const std::string& what, std::size_t column) : ConfigError(what), column_(column) {}
    std::size_t column() const { return column_; }

private:
    std::size_t column_;
};

class Expr {
public:
    struct Node;
    struct Program;

    Expr() = default;
    static Expr parse(std::string_view text, std::vector<std::string> variables);
    static Expr constant(double value);

    /// Values in the order of the declared variables.
    double eval(std::span<const double> values) const;
    double operator()(std::initializer_list<double> values) const {
        return eval(std::span<const double>(values.begin(), values.size()));
    }
    /// Same, with bump(s) replaced by the indicator of |s| < 1. Used to find exact supports.
    double eval_support(std::span<const double> values) const;

    Expr derivative(std::size_t variable) const;
    bool depends_on(std::size_t variable) const;
    bool is_constant() const;

    const std::string& text() const { return text_; }
    const std::vector<std::string>& variables() const { return vars_; }
    bool valid() const { return root_ != nullptr; }

    /// Several expressions over the same variables compiled into one program;
    /// subexpressions they share are evaluated once. `out` receives one value per expression.
    class Batch {
    public:
        explicit Batch(const std::vector<Expr>& exprs);
        void eval(std::span<const double> values, std::span<double> out) const;
        std::size_t size() const { return outputs_.size(); }

    private:
        std::shared_ptr<const Program> prog_;
        std::vector<std::uint32_t> outputs_;
    };

private:
    void compile();

    std::shared_ptr<const Node> root_;
    std::shared_ptr<const Program> prog_;   // flattened, shared subexpressions evaluated once
    std::string text_;
    std::vector<std::string> vars_;
};

}  // namespace canop::cli

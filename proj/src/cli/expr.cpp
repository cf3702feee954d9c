#include "canop/cli/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <tuple>

#include "canop/families.hpp"

namespace canop::cli {

enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Fn { Sin, Cos, Tan, Sinh, Cosh, Tanh, Atan, Exp, Log, Sqrt, Abs, Bump, BumpPrime, BumpSecond, Sign };

struct Expr::Node {
    Op op = Op::Num;
    double value = 0.0;
    std::size_t var = 0;
    Fn fn = Fn::Sin;
    std::shared_ptr<const Node> a, b;
};

struct Expr::Program {
    struct Instr {
        Op op;
        Fn fn;
        double value;   // constant, or the integer exponent of a small power
        std::uint32_t var, a, b;
        bool int_pow;
    };
    std::vector<Instr> code;   // operands precede their users; result is the last entry
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

struct FnName {
    const char* name;
    Fn fn;
};
constexpr FnName kFunctions[] = {
    {"sin", Fn::Sin},   {"cos", Fn::Cos}, {"tan", Fn::Tan},   {"sinh", Fn::Sinh}, {"cosh", Fn::Cosh},
    {"tanh", Fn::Tanh}, {"atan", Fn::Atan}, {"exp", Fn::Exp}, {"log", Fn::Log},   {"sqrt", Fn::Sqrt},
    {"abs", Fn::Abs},   {"bump", Fn::Bump},
};

NodePtr num(double v) {
    auto n = std::make_shared<Expr::Node>();
    n->value = v;
    return n;
}

bool is_num(const NodePtr& n, double v) { return n->op == Op::Num && n->value == v; }

NodePtr bin(Op op, NodePtr a, NodePtr b) {
    // light folding keeps derivatives readable and cheap
    if (a->op == Op::Num && b->op == Op::Num && op != Op::Pow) {
        switch (op) {
            case Op::Add: return num(a->value + b->value);
            case Op::Sub: return num(a->value - b->value);
            case Op::Mul: return num(a->value * b->value);
            case Op::Div: if (b->value != 0.0) return num(a->value / b->value); break;
            default: break;
        }
    }
    if (op == Op::Add) {
        if (is_num(a, 0)) return b;
        if (is_num(b, 0)) return a;
    } else if (op == Op::Sub) {
        if (is_num(b, 0)) return a;
    } else if (op == Op::Mul) {
        if (is_num(a, 0) || is_num(b, 0)) return num(0.0);
        if (is_num(a, 1)) return b;
        if (is_num(b, 1)) return a;
    } else if (op == Op::Div) {
        if (is_num(a, 0)) return num(0.0);
        if (is_num(b, 1)) return a;
    }
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr neg(NodePtr a) {
    if (a->op == Op::Num) return num(-a->value);
    auto n = std::make_shared<Expr::Node>();
    n->op = Op::Neg;
    n->a = std::move(a);
    return n;
}

NodePtr call(Fn fn, NodePtr a) {
    auto n = std::make_shared<Expr::Node>();
    n->op = Op::Call;
    n->fn = fn;
    n->a = std::move(a);
    return n;
}

double apply(Fn fn, double v, bool support) {
    switch (fn) {
        case Fn::Sin: return std::sin(v);
        case Fn::Cos: return std::cos(v);
        case Fn::Tan: return std::tan(v);
        case Fn::Sinh: return std::sinh(v);
        case Fn::Cosh: return std::cosh(v);
        case Fn::Tanh: return std::tanh(v);
        case Fn::Atan: return std::atan(v);
        case Fn::Exp: return std::exp(v);
        case Fn::Log: return std::log(v);
        case Fn::Sqrt: return std::sqrt(v);
        case Fn::Abs: return std::abs(v);
        case Fn::Bump: return support ? (std::abs(v) < 1.0 ? 1.0 : 0.0) : bump(v);
        case Fn::BumpPrime: return support ? (std::abs(v) < 1.0 ? 1.0 : 0.0) : bump_derivative(v);
        case Fn::BumpSecond: return support ? (std::abs(v) < 1.0 ? 1.0 : 0.0) : bump_second_derivative(v);
        case Fn::Sign: return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
    }
    return 0.0;
}

double int_pow(double x, int n) {
    const bool inv = n < 0;
    double r = 1.0;
    for (int k = inv ? -n : n; k > 0; --k) r *= x;
    return inv ? 1.0 / r : r;
}

void run_into(const Expr::Program& p, std::span<const double> vals, bool support, double* r) {
    for (std::size_t i = 0; i < p.code.size(); ++i) {
        const auto& in = p.code[i];
        switch (in.op) {
            case Op::Num: r[i] = in.value; break;
            case Op::Var: r[i] = vals[in.var]; break;
            case Op::Neg: r[i] = -r[in.a]; break;
            case Op::Add: r[i] = r[in.a] + r[in.b]; break;
            case Op::Sub: r[i] = r[in.a] - r[in.b]; break;
            case Op::Mul: r[i] = r[in.a] * r[in.b]; break;
            case Op::Div: r[i] = r[in.a] / r[in.b]; break;
            case Op::Pow:
                r[i] = in.int_pow ? int_pow(r[in.a], static_cast<int>(in.value)) : std::pow(r[in.a], r[in.b]);
                break;
            case Op::Call: r[i] = apply(in.fn, r[in.a], support); break;
        }
    }
}

template <class F>
void with_registers(std::size_t n, F&& f) {
    constexpr std::size_t kLocal = 512;
    if (n <= kLocal) {
        double local[kLocal];
        f(local);
    } else {
        std::vector<double> heap(n);
        f(heap.data());
    }
}

double run(const Expr::Program& p, std::span<const double> vals, bool support) {
    double out = 0.0;
    with_registers(p.code.size(), [&](double* r) {
        run_into(p, vals, support, r);
        out = r[p.code.size() - 1];
    });
    return out;
}

// Structural hashing: identical subtrees share one instruction.
struct Compiler {
    Expr::Program prog;
    std::map<const Expr::Node*, std::uint32_t> seen;
    std::map<std::tuple<int, int, std::uint64_t, std::uint32_t, std::uint32_t, std::uint32_t>, std::uint32_t> shapes;

    std::uint32_t emit(const Expr::Node& n) {
        if (auto it = seen.find(&n); it != seen.end()) return it->second;
        Expr::Program::Instr in{n.op, n.fn, n.value, 0, 0, 0, false};
        if (n.op == Op::Var) in.var = static_cast<std::uint32_t>(n.var);
        if (n.a) in.a = emit(*n.a);
        if (n.b) in.b = emit(*n.b);
        if (n.op == Op::Pow && n.b->op == Op::Num && std::abs(n.b->value) <= 8 && n.b->value == std::trunc(n.b->value)) {
            in.int_pow = true;
            in.value = n.b->value;
        }
        std::uint64_t bits = 0;
        std::memcpy(&bits, &in.value, sizeof bits);
        const auto key = std::make_tuple(static_cast<int>(in.op), in.op == Op::Call ? static_cast<int>(in.fn) : -1, bits,
                                         in.var, in.a, in.b);
        std::uint32_t id;
        if (auto it = shapes.find(key); it != shapes.end()) {
            id = it->second;
        } else {
            id = static_cast<std::uint32_t>(prog.code.size());
            prog.code.push_back(in);
            shapes.emplace(key, id);
        }
        seen.emplace(&n, id);
        return id;
    }
};

bool depends(const Expr::Node& n, std::size_t var) {
    if (n.op == Op::Var) return n.var == var;
    return (n.a && depends(*n.a, var)) || (n.b && depends(*n.b, var));
}

NodePtr diff(const NodePtr& n, std::size_t var) {
    if (!depends(*n, var)) return num(0.0);
    const NodePtr& a = n->a;
    const NodePtr& b = n->b;
    switch (n->op) {
        case Op::Num: return num(0.0);
        case Op::Var: return num(1.0);
        case Op::Neg: return neg(diff(a, var));
        case Op::Add: return bin(Op::Add, diff(a, var), diff(b, var));
        case Op::Sub: return bin(Op::Sub, diff(a, var), diff(b, var));
        case Op::Mul: return bin(Op::Add, bin(Op::Mul, diff(a, var), b), bin(Op::Mul, a, diff(b, var)));
        case Op::Div:
            return bin(Op::Div, bin(Op::Sub, bin(Op::Mul, diff(a, var), b), bin(Op::Mul, a, diff(b, var))),
                       bin(Op::Mul, b, b));
        case Op::Pow:
            if (!depends(*b, var)) {
                // b a^(b-1) a'
                return bin(Op::Mul, bin(Op::Mul, b, bin(Op::Pow, a, bin(Op::Sub, b, num(1.0)))), diff(a, var));
            }
            // a^b (b' log a + b a' / a)
            return bin(Op::Mul, n,
                       bin(Op::Add, bin(Op::Mul, diff(b, var), call(Fn::Log, a)),
                           bin(Op::Div, bin(Op::Mul, b, diff(a, var)), a)));
        case Op::Call: {
            NodePtr outer;
            switch (n->fn) {
                case Fn::Sin: outer = call(Fn::Cos, a); break;
                case Fn::Cos: outer = neg(call(Fn::Sin, a)); break;
                case Fn::Tan: outer = bin(Op::Div, num(1.0), bin(Op::Pow, call(Fn::Cos, a), num(2.0))); break;
                case Fn::Sinh: outer = call(Fn::Cosh, a); break;
                case Fn::Cosh: outer = call(Fn::Sinh, a); break;
                case Fn::Tanh: outer = bin(Op::Div, num(1.0), bin(Op::Pow, call(Fn::Cosh, a), num(2.0))); break;
                case Fn::Atan: outer = bin(Op::Div, num(1.0), bin(Op::Add, num(1.0), bin(Op::Mul, a, a))); break;
                case Fn::Exp: outer = n; break;
                case Fn::Log: outer = bin(Op::Div, num(1.0), a); break;
                case Fn::Sqrt: outer = bin(Op::Div, num(0.5), n); break;
                case Fn::Abs: outer = call(Fn::Sign, a); break;
                case Fn::Bump: outer = call(Fn::BumpPrime, a); break;
                case Fn::BumpPrime: outer = call(Fn::BumpSecond, a); break;
                case Fn::BumpSecond:
                    // bump'' = bump' * g + bump * g', g = -2 s / q^2, q = 1 - s^2; third derivatives only
                    {
                        const NodePtr q = bin(Op::Sub, num(1.0), bin(Op::Mul, a, a));
                        const NodePtr g = bin(Op::Div, bin(Op::Mul, num(-2.0), a), bin(Op::Mul, q, q));
                        // g' = -2/q^2 - 8 s^2/q^3
                        const NodePtr gp = bin(Op::Sub, bin(Op::Div, num(-2.0), bin(Op::Mul, q, q)),
                                               bin(Op::Div, bin(Op::Mul, num(8.0), bin(Op::Mul, a, a)),
                                                   bin(Op::Mul, q, bin(Op::Mul, q, q))));
                        const NodePtr closed = bin(Op::Add, bin(Op::Mul, call(Fn::BumpPrime, a), g),
                                                   bin(Op::Mul, call(Fn::Bump, a), gp));
                        return bin(Op::Mul, closed, diff(a, var));
                    }
                case Fn::Sign: return num(0.0);
            }
            return bin(Op::Mul, outer, diff(a, var));
        }
    }
    return num(0.0);
}

class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& vars) : s_(text), vars_(vars) {}

    NodePtr parse() {
        NodePtr n = expr();
        skip();
        if (pos_ < s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ExprError(msg, pos_ + 1); }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr n = term();
        for (;;) {
            if (accept('+')) n = bin(Op::Add, n, term());
            else if (accept('-')) n = bin(Op::Sub, n, term());
            else return n;
        }
    }

    NodePtr term() {
        NodePtr n = unary();
        for (;;) {
            if (accept('*')) n = bin(Op::Mul, n, unary());
            else if (accept('/')) n = bin(Op::Div, n, unary());
            else return n;
        }
    }

    NodePtr unary() {
        if (accept('-')) return neg(unary());
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) {
            auto n = std::make_shared<Expr::Node>();
            n->op = Op::Pow;
            n->a = base;
            n->b = unary();
            return n;
        }
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr n = expr();
            if (!accept(')')) fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
            if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
                pos_ = p;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            }
        }
        double v = 0.0;
        const auto r = std::from_chars(s_.data() + start, s_.data() + pos_, v);
        if (r.ec != std::errc() || r.ptr != s_.data() + pos_) {
            pos_ = start;
            fail("malformed number");
        }
        return num(v);
    }

    NodePtr name() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        const std::string id(s_.substr(start, pos_ - start));
        skip();
        if (pos_ < s_.size() && s_[pos_] == '(') {
            for (const FnName& f : kFunctions) {
                if (id == f.name) {
                    ++pos_;
                    NodePtr arg = expr();
                    if (!accept(')')) fail("expected ')' after argument of " + id);
                    return call(f.fn, arg);
                }
            }
            pos_ = start;
            fail("unknown function '" + id + "'");
        }
        if (id == "pi") return num(kPi);
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            if (vars_[i] == id) {
                auto n = std::make_shared<Expr::Node>();
                n->op = Op::Var;
                n->var = i;
                return n;
            }
        }
        pos_ = start;
        std::string allowed;
        for (const auto& v : vars_) allowed += (allowed.empty() ? "" : ", ") + v;
        fail("unknown name '" + id + "'" + (allowed.empty() ? std::string() : " (variables: " + allowed + ")"));
    }

    std::string_view s_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr Expr::parse(std::string_view text, std::vector<std::string> variables) {
    Expr e;
    e.vars_ = std::move(variables);
    e.text_ = std::string(text);
    e.root_ = Parser(text, e.vars_).parse();
    e.compile();
    return e;
}

Expr Expr::constant(double value) {
    Expr e;
    e.root_ = num(value);
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, value);
    e.text_.assign(buf, r.ptr);
    e.compile();
    return e;
}

double Expr::eval(std::span<const double> values) const {
    if (!root_) throw ConfigError("empty expression");
    if (values.size() < vars_.size()) throw ConfigError("expression '" + text_ + "' needs more variable values");
    return run(*prog_, values, false);
}

double Expr::eval_support(std::span<const double> values) const {
    if (!root_) throw ConfigError("empty expression");
    if (values.size() < vars_.size()) throw ConfigError("expression '" + text_ + "' needs more variable values");
    return run(*prog_, values, true);
}

void Expr::compile() {
    Compiler c;
    c.emit(*root_);
    prog_ = std::make_shared<const Program>(std::move(c.prog));
}

Expr::Batch::Batch(const std::vector<Expr>& exprs) {
    Compiler c;
    for (const Expr& e : exprs) {
        if (!e.root_) throw ConfigError("empty expression");
        outputs_.push_back(c.emit(*e.root_));
    }
    prog_ = std::make_shared<const Program>(std::move(c.prog));
}

void Expr::Batch::eval(std::span<const double> values, std::span<double> out) const {
    with_registers(prog_->code.size(), [&](double* r) {
        run_into(*prog_, values, false, r);
        for (std::size_t i = 0; i < outputs_.size() && i < out.size(); ++i) out[i] = r[outputs_[i]];
    });
}

Expr Expr::derivative(std::size_t variable) const {
    Expr e;
    e.vars_ = vars_;
    e.text_ = "d(" + text_ + ")/d" + (variable < vars_.size() ? vars_[variable] : std::string("?"));
    e.root_ = root_ ? diff(root_, variable) : num(0.0);
    e.compile();
    return e;
}

bool Expr::depends_on(std::size_t variable) const { return root_ && depends(*root_, variable); }

bool Expr::is_constant() const {
    if (!root_) return true;
    for (std::size_t i = 0; i < vars_.size(); ++i)
        if (depends(*root_, i)) return false;
    return true;
}

}  // namespace canop::cli

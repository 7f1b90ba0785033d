#include "c1vem/expression.hpp"

#include "c1vem/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

namespace c1vem {

struct Expression::Node {
    enum class Kind { Number, X, Y, T, Neg, Add, Sub, Mul, Div, Pow, Less, Greater, LessEq, GreaterEq, Call };
    Kind kind = Kind::Number;
    double value = 0.0;
    double (*fn)(double) = nullptr;
    std::shared_ptr<const Node> a, b;

    double eval(double x, double y, double t) const
    {
        auto cmp = [](bool c) { return c ? 1.0 : -1.0; };
        switch (kind) {
        case Kind::Number: return value;
        case Kind::X: return x;
        case Kind::Y: return y;
        case Kind::T: return t;
        case Kind::Neg: return -a->eval(x, y, t);
        case Kind::Add: return a->eval(x, y, t) + b->eval(x, y, t);
        case Kind::Sub: return a->eval(x, y, t) - b->eval(x, y, t);
        case Kind::Mul: return a->eval(x, y, t) * b->eval(x, y, t);
        case Kind::Div: return a->eval(x, y, t) / b->eval(x, y, t);
        case Kind::Pow: return std::pow(a->eval(x, y, t), b->eval(x, y, t));
        case Kind::Less: return cmp(a->eval(x, y, t) < b->eval(x, y, t));
        case Kind::Greater: return cmp(a->eval(x, y, t) > b->eval(x, y, t));
        case Kind::LessEq: return cmp(a->eval(x, y, t) <= b->eval(x, y, t));
        case Kind::GreaterEq: return cmp(a->eval(x, y, t) >= b->eval(x, y, t));
        case Kind::Call: return fn(a->eval(x, y, t));
        }
        return 0.0;
    }
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr)
{
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

double call_cos(double v) { return std::cos(v); }
double call_sin(double v) { return std::sin(v); }
double call_exp(double v) { return std::exp(v); }
double call_abs(double v) { return std::abs(v); }
double call_sqrt(double v) { return std::sqrt(v); }
double call_tanh(double v) { return std::tanh(v); }

struct Function {
    const char* name;
    double (*fn)(double);
};
constexpr Function kFunctions[] = {{"cos", call_cos},   {"sin", call_sin},   {"exp", call_exp},
                                   {"abs", call_abs},   {"sqrt", call_sqrt}, {"tanh", call_tanh}};

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse_all()
    {
        NodePtr n = comparison();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

    bool saw_comparison = false;

private:
    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ParseError("expression column " + std::to_string(pos_ + 1) + ": " + msg + " in \"" + s_ + "\"");
    }

    void skip()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(const char* tok)
    {
        skip();
        const std::size_t n = std::char_traits<char>::length(tok);
        if (s_.compare(pos_, n, tok) == 0) {
            pos_ += n;
            return true;
        }
        return false;
    }

    NodePtr comparison()
    {
        NodePtr lhs = additive();
        static const std::pair<const char*, Node::Kind> ops[] = {{"<=", Node::Kind::LessEq},
                                                                  {">=", Node::Kind::GreaterEq},
                                                                  {"<", Node::Kind::Less},
                                                                  {">", Node::Kind::Greater}};
        for (const auto& [tok, kind] : ops)
            if (accept(tok)) {
                saw_comparison = true;
                return make(kind, lhs, additive());
            }
        return lhs;
    }

    NodePtr additive()
    {
        NodePtr n = term();
        for (;;) {
            if (accept("+")) n = make(Node::Kind::Add, n, term());
            else if (accept("-")) n = make(Node::Kind::Sub, n, term());
            else return n;
        }
    }

    NodePtr term()
    {
        NodePtr n = unary();
        for (;;) {
            if (accept("*")) n = make(Node::Kind::Mul, n, unary());
            else if (accept("/")) n = make(Node::Kind::Div, n, unary());
            else return n;
        }
    }

    NodePtr unary()
    {
        if (accept("-")) return make(Node::Kind::Neg, unary());
        if (accept("+")) return unary();
        return power();
    }

    // right associative, binds tighter than unary minus on its left: -x^2 = -(x^2)
    NodePtr power()
    {
        NodePtr base = primary();
        if (accept("^")) return make(Node::Kind::Pow, base, unary());
        return base;
    }

    NodePtr primary()
    {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        if (accept("(")) {
            NodePtr n = comparison();
            if (!accept(")")) fail("expected ')'");
            return n;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr number()
    {
        double v = 0.0;
        const char* begin = s_.data() + pos_;
        const auto [end, ec] = std::from_chars(begin, s_.data() + s_.size(), v);
        if (ec != std::errc()) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        auto n = std::make_shared<Node>();
        n->value = v;
        return n;
    }

    NodePtr identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        const std::string id = s_.substr(start, pos_ - start);
        if (id == "x") return make(Node::Kind::X);
        if (id == "y") return make(Node::Kind::Y);
        if (id == "t") return make(Node::Kind::T);
        if (id == "pi") {
            auto n = std::make_shared<Node>();
            n->value = std::numbers::pi;
            return n;
        }
        for (const auto& f : kFunctions)
            if (id == f.name) {
                if (!accept("(")) fail("expected '(' after " + id);
                NodePtr arg = comparison();
                if (!accept(")")) fail("expected ')'");
                auto n = std::make_shared<Node>();
                n->kind = Node::Kind::Call;
                n->fn = f.fn;
                n->a = std::move(arg);
                return n;
            }
        pos_ = start;
        fail("unknown identifier '" + id + "'");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

} // namespace

Expression Expression::parse(const std::string& text)
{
    Parser p(text);
    Expression e;
    e.root_ = p.parse_all();
    e.text_ = text;
    e.has_comparison_ = p.saw_comparison;
    return e;
}

double Expression::operator()(double x, double y, double t) const { return root_->eval(x, y, t); }

} // namespace c1vem

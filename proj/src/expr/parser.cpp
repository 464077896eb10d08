#include "ldg/expr/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

#include "ldg/error.hpp"

namespace ldg::expr {

int arity(Op op) noexcept
{
    switch (op) {
    case Op::Const:
    case Op::Symbol: return 0;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow:
    case Op::Min:
    case Op::Max: return 2;
    default: return 1;
    }
}

bool is_commutative(Op op) noexcept
{
    return op == Op::Add || op == Op::Mul || op == Op::Min || op == Op::Max;
}

std::string_view function_name(Op op) noexcept
{
    switch (op) {
    case Op::Pow: return "pow";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tan: return "tan";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::Tanh: return "tanh";
    case Op::Min: return "min";
    case Op::Max: return "max";
    default: return {};
    }
}

std::optional<Op> function_from_name(std::string_view name) noexcept
{
    for (Op op : {Op::Pow, Op::Sin, Op::Cos, Op::Tan, Op::Exp, Op::Log, Op::Sqrt, Op::Abs, Op::Tanh,
                  Op::Min, Op::Max})
        if (function_name(op) == name)
            return op;
    return std::nullopt;
}

double apply_op(Op op, double a, double b) noexcept
{
    switch (op) {
    case Op::Neg: return -a;
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Pow: return std::pow(a, b);
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Tan: return std::tan(a);
    case Op::Exp: return std::exp(a);
    case Op::Log: return std::log(a);
    case Op::Sqrt: return std::sqrt(a);
    case Op::Abs: return std::abs(a);
    case Op::Tanh: return std::tanh(a);
    case Op::Min: return b < a ? b : a;
    case Op::Max: return b > a ? b : a;
    default: return a;
    }
}

SymbolTable::SymbolTable(std::vector<std::string> names)
{
    for (auto& n : names)
        add(n);
}

int SymbolTable::add(const std::string& name)
{
    if (auto it = index_.find(name); it != index_.end())
        return it->second;
    const int id = size();
    names_.push_back(name);
    index_.emplace(name, id);
    return id;
}

std::optional<int> SymbolTable::find(std::string_view name) const
{
    auto it = index_.find(std::string(name));
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

int ExpressionGraph::add_node(const Node& node)
{
    if (node.op == Op::Symbol) {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].op == Op::Symbol && nodes[i].symbol == node.symbol)
                return static_cast<int>(i);
    }
    nodes.push_back(node);
    return static_cast<int>(nodes.size()) - 1;
}

bool ExpressionGraph::structurally_equal(const ExpressionGraph& other) const
{
    return symbols == other.symbols && nodes == other.nodes && roots == other.roots;
}

std::vector<int> ExpressionGraph::used_symbols() const
{
    std::vector<int> used;
    for (const auto& n : nodes)
        if (n.op == Op::Symbol)
            used.push_back(n.symbol);
    return used;
}

namespace {

class Parser
{
public:
    Parser(std::string_view text, ExpressionGraph& graph, std::size_t base = 0)
        : text_(text), graph_(graph), base_(base)
    {}

    int parse_all()
    {
        skip_ws();
        if (pos_ >= text_.size())
            fail("empty expression");
        const int root = parse_sum();
        skip_ws();
        if (pos_ < text_.size())
            fail(std::string("unexpected '") + text_[pos_] + "'");
        return root;
    }

    /// Resolve identifiers against names bound earlier in a program before symbols.
    std::unordered_map<std::string, int>* locals = nullptr;

private:
    [[noreturn]] void fail(const std::string& what) const
    {
        throw ParseError("syntax error: " + what, base_ + pos_);
    }

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int binary(Op op, int a, int b) { return graph_.add_node(Node{op, 0.0, -1, {a, b}}); }

    int parse_sum()
    {
        int lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = binary(Op::Add, lhs, parse_term());
            else if (accept('-'))
                lhs = binary(Op::Sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    int parse_term()
    {
        int lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = binary(Op::Mul, lhs, parse_unary());
            else if (accept('/'))
                lhs = binary(Op::Div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    int parse_unary()
    {
        if (accept('-'))
            return graph_.add_node(Node{Op::Neg, 0.0, -1, {parse_unary(), -1}});
        if (accept('+'))
            return parse_unary();
        return parse_power();
    }

    int parse_power()
    {
        const int base = parse_primary();
        if (accept('^'))
            return binary(Op::Pow, base, parse_unary());
        return base;
    }

    int parse_primary()
    {
        skip_ws();
        if (pos_ >= text_.size())
            fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            const int inner = parse_sum();
            if (!accept(')'))
                fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return parse_name();
        fail(std::string("unexpected '") + c + "'");
    }

    int parse_number()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-'))
                ++p;
            if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                pos_ = p;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            }
        }
        double value = 0.0;
        const auto* first = text_.data() + start;
        const auto* last = text_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) {
            pos_ = start;
            fail("malformed number");
        }
        return graph_.add_node(Node{Op::Const, value});
    }

    int parse_name()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));

        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            const auto fn = function_from_name(name);
            if (!fn) {
                pos_ = start;
                fail("unknown function '" + name + "'");
            }
            ++pos_;
            std::vector<int> args;
            skip_ws();
            if (!accept(')')) {
                args.push_back(parse_sum());
                while (accept(','))
                    args.push_back(parse_sum());
                if (!accept(')'))
                    fail("expected ')' or ','");
            }
            if (static_cast<int>(args.size()) != arity(*fn)) {
                pos_ = start;
                fail("function '" + name + "' takes " + std::to_string(arity(*fn)) + " argument(s), got " +
                     std::to_string(args.size()));
            }
            return graph_.add_node(Node{*fn, 0.0, -1, {args[0], args.size() > 1 ? args[1] : -1}});
        }

        if (locals) {
            if (auto it = locals->find(name); it != locals->end())
                return it->second;
        }
        if (name == "pi")
            return graph_.add_node(Node{Op::Const, std::numbers::pi});
        const auto id = graph_.symbols.find(name);
        if (!id) {
            pos_ = start;
            throw ParseError("unknown symbol '" + name + "'", base_ + start);
        }
        return graph_.add_node(Node{Op::Symbol, 0.0, *id});
    }

    std::string_view text_;
    ExpressionGraph& graph_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

} // namespace

ExpressionGraph parse_expression(std::string_view text, const SymbolTable& symbols)
{
    ExpressionGraph graph;
    graph.symbols = symbols;
    parse_into(graph, text);
    return graph;
}

int parse_into(ExpressionGraph& graph, std::string_view text)
{
    Parser parser(text, graph);
    const int root = parser.parse_all();
    graph.roots.push_back(root);
    return root;
}

ExpressionGraph parse_program(std::string_view text, const SymbolTable& symbols, std::string_view output_prefix)
{
    ExpressionGraph graph;
    graph.symbols = symbols;
    std::unordered_map<std::string, int> locals;
    std::vector<std::pair<int, int>> outputs; // (index, node)

    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = text.find(';', pos);
        std::string_view stmt = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
        const std::size_t stmt_begin = pos;
        pos = end == std::string_view::npos ? text.size() : end + 1;

        std::size_t first = 0;
        while (first < stmt.size() && std::isspace(static_cast<unsigned char>(stmt[first])))
            ++first;
        if (first == stmt.size()) {
            if (end == std::string_view::npos)
                break;
            throw ParseError("syntax error: empty statement", stmt_begin + first);
        }
        if (end == std::string_view::npos)
            throw ParseError("syntax error: missing ';'", text.size());
        const std::size_t eq = stmt.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("syntax error: expected '='", stmt_begin + first);
        std::string_view lhs = stmt.substr(first, eq - first);
        while (!lhs.empty() && std::isspace(static_cast<unsigned char>(lhs.back())))
            lhs.remove_suffix(1);
        if (lhs.empty())
            throw ParseError("syntax error: missing assignment target", stmt_begin + first);

        Parser parser(stmt.substr(eq + 1), graph, stmt_begin + eq + 1);
        parser.locals = &locals;
        const int node = parser.parse_all();
        const std::string target(lhs);
        locals[target] = node;

        if (target.starts_with(output_prefix) && target.size() > output_prefix.size()) {
            int index = 0;
            const auto digits = std::string_view(target).substr(output_prefix.size());
            auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
            if (ec == std::errc() && ptr == digits.data() + digits.size())
                outputs.emplace_back(index, node);
        }
    }

    std::sort(outputs.begin(), outputs.end());
    for (std::size_t k = 0; k < outputs.size(); ++k) {
        if (outputs[k].first != static_cast<int>(k))
            throw ParseError("outputs are not numbered consecutively from 0", 0);
        graph.roots.push_back(outputs[k].second);
    }
    return graph;
}

} // namespace ldg::expr

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ldg::expr {

enum class Op : std::uint8_t
{
    Const,
    Symbol,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
    Min,
    Max,
};

/// Number of operands taken by an op (0 for leaves).
int arity(Op op) noexcept;
bool is_commutative(Op op) noexcept;
/// Name used in source text for call-style ops ("sin", "pow", ...); empty for operators.
std::string_view function_name(Op op) noexcept;
std::optional<Op> function_from_name(std::string_view name) noexcept;

/// Ordered list of symbol names an expression may reference.
class SymbolTable
{
public:
    SymbolTable() = default;
    explicit SymbolTable(std::vector<std::string> names);

    int add(const std::string& name);
    std::optional<int> find(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name).has_value(); }

    const std::string& name(int index) const { return names_.at(static_cast<std::size_t>(index)); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    int size() const noexcept { return static_cast<int>(names_.size()); }

    friend bool operator==(const SymbolTable& a, const SymbolTable& b) { return a.names_ == b.names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
};

struct Node
{
    Op op = Op::Const;
    double value = 0.0; // Const
    int symbol = -1;    // Symbol
    std::array<int, 2> args{-1, -1};

    friend bool operator==(const Node&, const Node&) = default;
};

/// DAG of scalar expressions; children always precede their parents.
struct ExpressionGraph
{
    SymbolTable symbols;
    std::vector<Node> nodes;
    std::vector<int> roots;

    int add_node(const Node& node);
    /// True when both graphs have the same symbols, nodes and roots.
    bool structurally_equal(const ExpressionGraph& other) const;
    /// Indices of symbols referenced by any node.
    std::vector<int> used_symbols() const;
};

/// Apply a primitive to scalar operands.
double apply_op(Op op, double a, double b) noexcept;

} // namespace ldg::expr

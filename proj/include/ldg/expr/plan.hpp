#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ldg/expr/graph.hpp"

namespace ldg::expr {

struct Instruction
{
    Op op = Op::Const;
    double value = 0.0;
    int symbol = -1;
    int a = -1;
    int b = -1;

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

/// Straight-line program compiled from one or more expression graphs.
/// Instructions only reference earlier instructions. Immutable once built;
/// evaluation keeps its scratch space on the caller's stack.
class KernelPlan
{
public:
    KernelPlan() = default;
    KernelPlan(SymbolTable symbols, std::vector<Instruction> code, std::vector<int> outputs);

    const SymbolTable& symbols() const noexcept { return symbols_; }
    const std::vector<Instruction>& instructions() const noexcept { return code_; }
    const std::vector<int>& outputs() const noexcept { return outputs_; }
    int num_outputs() const noexcept { return static_cast<int>(outputs_.size()); }
    int num_inputs() const noexcept { return symbols_.size(); }
    /// Count of instructions that are not loads or constants.
    int num_operations() const noexcept;
    bool uses_symbol(int index) const;

    /// Re-express the plan as a graph (one root per output).
    ExpressionGraph to_graph() const;

private:
    SymbolTable symbols_;
    std::vector<Instruction> code_;
    std::vector<int> outputs_;
    std::vector<bool> used_;
};

/// Constant folding, integer-power strength reduction (exponents 0..4) and
/// hash-consing CSE over all graphs, followed by dead-code removal.
/// Throws ValidationError when graphs disagree on their symbol tables.
KernelPlan compile_with_cse(std::span<const ExpressionGraph> graphs);
KernelPlan compile_with_cse(const ExpressionGraph& graph);

struct Evaluation
{
    Eigen::ArrayXXd values; ///< batch × outputs
    bool non_finite = false;
};

struct TangentEvaluation
{
    Eigen::ArrayXXd values;   ///< batch × outputs
    Eigen::ArrayXXd tangents; ///< batch × outputs
    bool non_finite = false;
};

/// `inputs` holds one column per plan symbol (plan symbol order), one row per point.
Evaluation evaluate(const KernelPlan& plan, const Eigen::Ref<const Eigen::ArrayXXd>& inputs);

/// Forward-mode directional derivative with `seeds` shaped like `inputs`.
/// abs'(0) = 0; min/max ties follow the left operand.
TangentEvaluation evaluate_with_tangent(const KernelPlan& plan,
                                        const Eigen::Ref<const Eigen::ArrayXXd>& inputs,
                                        const Eigen::Ref<const Eigen::ArrayXXd>& seeds);

using Bindings = std::map<std::string, Eigen::ArrayXd>;

/// Name-based front end. Every symbol the plan uses must be bound and all
/// bound arrays must share one length.
Evaluation evaluate(const KernelPlan& plan, const Bindings& bindings);
TangentEvaluation evaluate_with_tangent(const KernelPlan& plan, const Bindings& bindings,
                                        const Bindings& seeds);

struct EmitOptions
{
    std::string temp_prefix = "t";
    std::string output_prefix = "out";
};

/// One `name = expr;` statement per line; see docs/kernel-source-format.md.
std::string emit_source(const KernelPlan& plan, const EmitOptions& options = {});

} // namespace ldg::expr

#include "ldg/expr/plan.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

#include "ldg/error.hpp"

namespace ldg::expr {

KernelPlan::KernelPlan(SymbolTable symbols, std::vector<Instruction> code, std::vector<int> outputs)
    : symbols_(std::move(symbols)), code_(std::move(code)), outputs_(std::move(outputs)),
      used_(static_cast<std::size_t>(symbols_.size()), false)
{
    for (const auto& ins : code_)
        if (ins.op == Op::Symbol)
            used_.at(static_cast<std::size_t>(ins.symbol)) = true;
}

int KernelPlan::num_operations() const noexcept
{
    return static_cast<int>(std::count_if(code_.begin(), code_.end(), [](const Instruction& i) {
        return i.op != Op::Const && i.op != Op::Symbol;
    }));
}

bool KernelPlan::uses_symbol(int index) const
{
    return used_.at(static_cast<std::size_t>(index));
}

ExpressionGraph KernelPlan::to_graph() const
{
    ExpressionGraph g;
    g.symbols = symbols_;
    g.nodes.reserve(code_.size());
    for (const auto& ins : code_)
        g.nodes.push_back(Node{ins.op, ins.value, ins.symbol, {ins.a, ins.b}});
    g.roots = outputs_;
    return g;
}

namespace {

struct Key
{
    Op op;
    std::uint64_t bits;
    int symbol, a, b;
    bool operator==(const Key&) const = default;
};

struct KeyHash
{
    std::size_t operator()(const Key& k) const noexcept
    {
        std::size_t h = static_cast<std::size_t>(k.op);
        auto mix = [&h](std::uint64_t v) { h ^= std::hash<std::uint64_t>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
        mix(k.bits);
        mix(static_cast<std::uint64_t>(k.symbol + 1));
        mix(static_cast<std::uint64_t>(k.a + 1));
        mix(static_cast<std::uint64_t>(k.b + 1));
        return h;
    }
};

class Builder
{
public:
    std::vector<Instruction> code;

    int constant(double v) { return intern(Instruction{Op::Const, v}); }
    int symbol(int s) { return intern(Instruction{Op::Symbol, 0.0, s}); }

    int operation(Op op, int a, int b)
    {
        if (op == Op::Pow && code[static_cast<std::size_t>(b)].op == Op::Const) {
            const double e = code[static_cast<std::size_t>(b)].value;
            if (e == std::floor(e) && e >= 0.0 && e <= 4.0) {
                switch (static_cast<int>(e)) {
                case 0: return constant(1.0);
                case 1: return a;
                case 2: return operation(Op::Mul, a, a);
                case 3: return operation(Op::Mul, operation(Op::Mul, a, a), a);
                default: {
                    const int sq = operation(Op::Mul, a, a);
                    return operation(Op::Mul, sq, sq);
                }
                }
            }
        }
        const bool a_const = code[static_cast<std::size_t>(a)].op == Op::Const;
        if (arity(op) == 1) {
            if (a_const)
                return constant(apply_op(op, code[static_cast<std::size_t>(a)].value, 0.0));
            return intern(Instruction{op, 0.0, -1, a, -1});
        }
        if (a_const && code[static_cast<std::size_t>(b)].op == Op::Const)
            return constant(apply_op(op, code[static_cast<std::size_t>(a)].value,
                                     code[static_cast<std::size_t>(b)].value));
        // min/max keep operand order: ties resolve to the left operand
        if ((op == Op::Add || op == Op::Mul) && b < a)
            std::swap(a, b);
        return intern(Instruction{op, 0.0, -1, a, b});
    }

private:
    int intern(const Instruction& ins)
    {
        const Key key{ins.op, ins.op == Op::Const ? std::bit_cast<std::uint64_t>(ins.value) : 0, ins.symbol, ins.a, ins.b};
        auto [it, inserted] = table_.try_emplace(key, static_cast<int>(code.size()));
        if (inserted)
            code.push_back(ins);
        return it->second;
    }

    std::unordered_map<Key, int, KeyHash> table_;
};

} // namespace

KernelPlan compile_with_cse(std::span<const ExpressionGraph> graphs)
{
    SymbolTable symbols = graphs.empty() ? SymbolTable{} : graphs.front().symbols;
    Builder builder;
    std::vector<int> outputs;

    for (const auto& graph : graphs) {
        if (!(graph.symbols == symbols))
            throw ValidationError("compile_with_cse: graphs do not share one symbol table");
        std::vector<int> map(graph.nodes.size(), -1);
        auto child = [&](int id) {
            if (id < 0 || static_cast<std::size_t>(id) >= graph.nodes.size() || map[static_cast<std::size_t>(id)] < 0)
                throw ValidationError("compile_with_cse: unresolved child reference");
            return map[static_cast<std::size_t>(id)];
        };
        for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
            const Node& n = graph.nodes[i];
            switch (n.op) {
            case Op::Const: map[i] = builder.constant(n.value); break;
            case Op::Symbol:
                if (n.symbol < 0 || n.symbol >= symbols.size())
                    throw ValidationError("compile_with_cse: symbol index out of range");
                map[i] = builder.symbol(n.symbol);
                break;
            default:
                map[i] = arity(n.op) == 1 ? builder.operation(n.op, child(n.args[0]), -1)
                                          : builder.operation(n.op, child(n.args[0]), child(n.args[1]));
            }
        }
        for (int r : graph.roots)
            outputs.push_back(child(r));
    }

    // dead-code removal and renumbering
    std::vector<char> live(builder.code.size(), 0);
    for (int o : outputs)
        live[static_cast<std::size_t>(o)] = 1;
    for (std::size_t i = builder.code.size(); i-- > 0;) {
        if (!live[i])
            continue;
        const auto& ins = builder.code[i];
        if (ins.a >= 0)
            live[static_cast<std::size_t>(ins.a)] = 1;
        if (ins.b >= 0)
            live[static_cast<std::size_t>(ins.b)] = 1;
    }
    std::vector<int> renumber(builder.code.size(), -1);
    std::vector<Instruction> code;
    for (std::size_t i = 0; i < builder.code.size(); ++i) {
        if (!live[i])
            continue;
        Instruction ins = builder.code[i];
        if (ins.a >= 0)
            ins.a = renumber[static_cast<std::size_t>(ins.a)];
        if (ins.b >= 0)
            ins.b = renumber[static_cast<std::size_t>(ins.b)];
        renumber[i] = static_cast<int>(code.size());
        code.push_back(ins);
    }
    for (int& o : outputs)
        o = renumber[static_cast<std::size_t>(o)];
    return KernelPlan(std::move(symbols), std::move(code), std::move(outputs));
}

KernelPlan compile_with_cse(const ExpressionGraph& graph)
{
    return compile_with_cse(std::span<const ExpressionGraph>(&graph, 1));
}

namespace {

constexpr Eigen::Index chunk_rows = 256;

void check_inputs(const KernelPlan& plan, const Eigen::Ref<const Eigen::ArrayXXd>& inputs)
{
    if (inputs.cols() != plan.num_inputs())
        throw Error("evaluate: expected " + std::to_string(plan.num_inputs()) + " input columns, got " +
                    std::to_string(inputs.cols()));
}

template <bool WithTangent>
void run(const KernelPlan& plan, const Eigen::Ref<const Eigen::ArrayXXd>& in,
         const Eigen::Ref<const Eigen::ArrayXXd>* seeds, Eigen::ArrayXXd& values, Eigen::ArrayXXd* tangents)
{
    const auto& code = plan.instructions();
    const auto& outs = plan.outputs();
    const Eigen::Index rows = in.rows();
    const Eigen::Index nins = static_cast<Eigen::Index>(code.size());
    values.resize(rows, plan.num_outputs());
    if constexpr (WithTangent)
        tangents->resize(rows, plan.num_outputs());

    Eigen::ArrayXXd r(std::min(rows, chunk_rows), nins);
    Eigen::ArrayXXd d;
    if constexpr (WithTangent)
        d.resize(r.rows(), nins);

    for (Eigen::Index r0 = 0; r0 < rows; r0 += chunk_rows) {
        const Eigen::Index len = std::min(chunk_rows, rows - r0);
        for (Eigen::Index k = 0; k < nins; ++k) {
            const auto& ins = code[static_cast<std::size_t>(k)];
            auto v = r.col(k).head(len);
            auto a = r.col(std::max(ins.a, 0)).head(len);
            auto b = r.col(std::max(ins.b, 0)).head(len);
            switch (ins.op) {
            case Op::Const: v.setConstant(ins.value); break;
            case Op::Symbol: v = in.col(ins.symbol).segment(r0, len); break;
            case Op::Neg: v = -a; break;
            case Op::Add: v = a + b; break;
            case Op::Sub: v = a - b; break;
            case Op::Mul: v = a * b; break;
            case Op::Div: v = a / b; break;
            case Op::Pow: v = a.binaryExpr(b, [](double x, double y) { return std::pow(x, y); }); break;
            case Op::Sin: v = a.sin(); break;
            case Op::Cos: v = a.cos(); break;
            case Op::Tan: v = a.tan(); break;
            case Op::Exp: v = a.exp(); break;
            case Op::Log: v = a.log(); break;
            case Op::Sqrt: v = a.sqrt(); break;
            case Op::Abs: v = a.abs(); break;
            case Op::Tanh: v = a.tanh(); break;
            case Op::Min: v = (b < a).select(b, a); break;
            case Op::Max: v = (b > a).select(b, a); break;
            }
            if constexpr (WithTangent) {
                auto dv = d.col(k).head(len);
                auto da = d.col(std::max(ins.a, 0)).head(len);
                auto db = d.col(std::max(ins.b, 0)).head(len);
                switch (ins.op) {
                case Op::Const: dv.setZero(); break;
                case Op::Symbol: dv = (*seeds).col(ins.symbol).segment(r0, len); break;
                case Op::Neg: dv = -da; break;
                case Op::Add: dv = da + db; break;
                case Op::Sub: dv = da - db; break;
                case Op::Mul: dv = da * b + a * db; break;
                case Op::Div: dv = (da - v * db) / b; break;
                case Op::Pow:
                    for (Eigen::Index i = 0; i < len; ++i) {
                        double t = da(i) == 0.0 ? 0.0 : b(i) * std::pow(a(i), b(i) - 1.0) * da(i);
                        if (db(i) != 0.0)
                            t += v(i) * std::log(a(i)) * db(i);
                        dv(i) = t;
                    }
                    break;
                case Op::Sin: dv = a.cos() * da; break;
                case Op::Cos: dv = -a.sin() * da; break;
                case Op::Tan: dv = (1.0 + v * v) * da; break;
                case Op::Exp: dv = v * da; break;
                case Op::Log: dv = da / a; break;
                case Op::Sqrt: dv = 0.5 * da / v; break;
                case Op::Abs: dv = (a > 0.0).select(da, (a < 0.0).select(-da, 0.0)); break;
                case Op::Tanh: dv = (1.0 - v * v) * da; break;
                case Op::Min: dv = (b < a).select(db, da); break;
                case Op::Max: dv = (b > a).select(db, da); break;
                }
            }
        }
        for (std::size_t o = 0; o < outs.size(); ++o) {
            values.col(static_cast<Eigen::Index>(o)).segment(r0, len) = r.col(outs[o]).head(len);
            if constexpr (WithTangent)
                tangents->col(static_cast<Eigen::Index>(o)).segment(r0, len) = d.col(outs[o]).head(len);
        }
    }
}

Eigen::ArrayXXd gather(const KernelPlan& plan, const Bindings& bindings, const char* what)
{
    Eigen::Index rows = -1;
    for (const auto& [name, arr] : bindings) {
        if (!plan.symbols().contains(name))
            continue;
        if (rows < 0)
            rows = arr.size();
        else if (arr.size() != rows)
            throw Error(std::string(what) + ": length mismatch for '" + name + "'");
    }
    if (rows < 0)
        rows = 1;
    Eigen::ArrayXXd in = Eigen::ArrayXXd::Zero(rows, plan.num_inputs());
    for (int s = 0; s < plan.num_inputs(); ++s) {
        auto it = bindings.find(plan.symbols().name(s));
        if (it == bindings.end()) {
            if (plan.uses_symbol(s))
                throw Error(std::string(what) + ": missing binding for '" + plan.symbols().name(s) + "'");
            continue;
        }
        in.col(s) = it->second;
    }
    return in;
}

} // namespace

Evaluation evaluate(const KernelPlan& plan, const Eigen::Ref<const Eigen::ArrayXXd>& inputs)
{
    check_inputs(plan, inputs);
    Evaluation out;
    run<false>(plan, inputs, nullptr, out.values, nullptr);
    out.non_finite = !out.values.isFinite().all();
    return out;
}

TangentEvaluation evaluate_with_tangent(const KernelPlan& plan, const Eigen::Ref<const Eigen::ArrayXXd>& inputs,
                                        const Eigen::Ref<const Eigen::ArrayXXd>& seeds)
{
    check_inputs(plan, inputs);
    if (seeds.rows() != inputs.rows() || seeds.cols() != inputs.cols())
        throw Error("evaluate_with_tangent: seed shape does not match inputs");
    TangentEvaluation out;
    run<true>(plan, inputs, &seeds, out.values, &out.tangents);
    out.non_finite = !out.values.isFinite().all() || !out.tangents.isFinite().all();
    return out;
}

Evaluation evaluate(const KernelPlan& plan, const Bindings& bindings)
{
    return evaluate(plan, gather(plan, bindings, "evaluate"));
}

TangentEvaluation evaluate_with_tangent(const KernelPlan& plan, const Bindings& bindings, const Bindings& seeds)
{
    const Eigen::ArrayXXd in = gather(plan, bindings, "evaluate_with_tangent");
    Eigen::ArrayXXd sd = Eigen::ArrayXXd::Zero(in.rows(), in.cols());
    for (int s = 0; s < plan.num_inputs(); ++s) {
        auto it = seeds.find(plan.symbols().name(s));
        if (it == seeds.end())
            continue;
        if (it->second.size() != in.rows())
            throw Error("evaluate_with_tangent: seed length mismatch for '" + it->first + "'");
        sd.col(s) = it->second;
    }
    return evaluate_with_tangent(plan, in, sd);
}

} // namespace ldg::expr

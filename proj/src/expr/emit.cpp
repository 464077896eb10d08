#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ldg/expr/plan.hpp"

namespace ldg::expr {

namespace {

std::string literal(double v)
{
    if (std::isnan(v))
        return "(0/0)";
    if (std::isinf(v))
        return v > 0 ? "(1/0)" : "(-1/0)";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (v < 0 || std::signbit(v))
        return "(" + s + ")";
    return s;
}

} // namespace

std::string emit_source(const KernelPlan& plan, const EmitOptions& options)
{
    const auto& code = plan.instructions();
    const auto& outs = plan.outputs();
    std::vector<int> uses(code.size(), 0), root_refs(code.size(), 0);
    for (const auto& ins : code) {
        if (ins.a >= 0)
            ++uses[static_cast<std::size_t>(ins.a)];
        if (ins.b >= 0)
            ++uses[static_cast<std::size_t>(ins.b)];
    }
    for (int o : outs)
        ++root_refs[static_cast<std::size_t>(o)];

    std::vector<std::string> names(code.size());
    std::vector<bool> out_done(outs.size(), false);
    std::ostringstream os;
    int next_temp = 0;

    auto operand = [&](int id) -> const std::string& { return names[static_cast<std::size_t>(id)]; };

    for (std::size_t i = 0; i < code.size(); ++i) {
        const auto& ins = code[i];
        if (ins.op == Op::Const) {
            names[i] = literal(ins.value);
            continue;
        }
        if (ins.op == Op::Symbol) {
            names[i] = plan.symbols().name(ins.symbol);
            continue;
        }
        std::string rhs;
        switch (ins.op) {
        case Op::Neg: rhs = "-" + operand(ins.a); break;
        case Op::Add: rhs = operand(ins.a) + " + " + operand(ins.b); break;
        case Op::Sub: rhs = operand(ins.a) + " - " + operand(ins.b); break;
        case Op::Mul: rhs = operand(ins.a) + "*" + operand(ins.b); break;
        case Op::Div: rhs = operand(ins.a) + "/" + operand(ins.b); break;
        default:
            rhs = std::string(function_name(ins.op)) + "(" + operand(ins.a);
            if (arity(ins.op) == 2)
                rhs += ", " + operand(ins.b);
            rhs += ")";
        }

        if (uses[i] == 0 && root_refs[i] == 1) {
            const auto r = static_cast<std::size_t>(std::find(outs.begin(), outs.end(), static_cast<int>(i)) - outs.begin());
            names[i] = options.output_prefix + std::to_string(r);
            out_done[r] = true;
        } else {
            names[i] = options.temp_prefix + std::to_string(next_temp++);
        }
        os << names[i] << " = " << rhs << ";\n";
    }
    for (std::size_t r = 0; r < outs.size(); ++r)
        if (!out_done[r])
            os << options.output_prefix << r << " = " << operand(outs[r]) << ";\n";
    return os.str();
}

} // namespace ldg::expr

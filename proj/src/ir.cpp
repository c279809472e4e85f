#include "rtlcse/ir.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <set>
#include <sstream>

namespace rtlcse::ir {

namespace {

struct OpInfo {
  OpCode code;
  const char *name;
  int arity;
  bool imm;
};

constexpr std::array<OpInfo, 18> kOps = {{
    {OpCode::Move, "move", 1, false},
    {OpCode::Const32, "const32", 0, true},
    {OpCode::Const64, "const64", 0, true},
    {OpCode::Add32, "add32", 2, false},
    {OpCode::Add64, "add64", 2, false},
    {OpCode::Sub32, "sub32", 2, false},
    {OpCode::Sub64, "sub64", 2, false},
    {OpCode::Mul32, "mul32", 2, false},
    {OpCode::Mul64, "mul64", 2, false},
    {OpCode::Shl32, "shl32", 1, true},
    {OpCode::Shl64, "shl64", 1, true},
    {OpCode::Sext32to64, "sext32to64", 1, false},
    {OpCode::AddImm32, "addimm32", 1, true},
    {OpCode::AddImm64, "addimm64", 1, true},
    {OpCode::MulImm32, "mulimm32", 1, true},
    {OpCode::MulImm64, "mulimm64", 1, true},
    {OpCode::FAdd64, "fadd64", 2, false},
    {OpCode::FMul64, "fmul64", 2, false},
}};

const OpInfo &info(OpCode c) { return kOps[static_cast<std::size_t>(c)]; }

constexpr std::array<const char *, 6> kChunkNames = {"int8", "int16", "int32",
                                                     "int64", "float32", "float64"};
constexpr std::array<const char *, 6> kCondNames = {"eq", "ne", "lt", "le", "gt", "ge"};

template <class... Ts> struct overloaded : Ts... {
  using Ts::operator()...;
};

} // namespace

int arity(OpCode code) { return info(code).arity; }
bool has_imm(OpCode code) { return info(code).imm; }
const char *name(OpCode code) { return info(code).name; }

std::optional<OpCode> opcode_from_name(const std::string &n) {
  for (const auto &o : kOps)
    if (n == o.name)
      return o.code;
  return std::nullopt;
}

int size_of(Chunk c) {
  switch (c) {
  case Chunk::Int8:
    return 1;
  case Chunk::Int16:
    return 2;
  case Chunk::Int32:
  case Chunk::Float32:
    return 4;
  case Chunk::Int64:
  case Chunk::Float64:
    return 8;
  }
  return 8;
}

const char *name(Chunk c) { return kChunkNames[static_cast<std::size_t>(c)]; }

std::optional<Chunk> chunk_from_name(const std::string &n) {
  for (std::size_t i = 0; i < kChunkNames.size(); ++i)
    if (n == kChunkNames[i])
      return static_cast<Chunk>(i);
  return std::nullopt;
}

int arity(const AddrMode &mode) {
  switch (mode.kind) {
  case AddrMode::Kind::Based:
    return 1;
  case AddrMode::Kind::Indexed:
    return 2;
  case AddrMode::Kind::Global:
    return 0;
  }
  return 0;
}

std::string name(Condition c) {
  return std::string(kCondNames[static_cast<std::size_t>(c.op)]) +
         (c.width == Width::W32 ? "32" : "64");
}

std::optional<Condition> condition_from_name(const std::string &n) {
  if (n.size() < 4)
    return std::nullopt;
  std::string stem = n.substr(0, n.size() - 2);
  std::string width = n.substr(n.size() - 2);
  Condition c;
  if (width == "32")
    c.width = Width::W32;
  else if (width == "64")
    c.width = Width::W64;
  else
    return std::nullopt;
  for (std::size_t i = 0; i < kCondNames.size(); ++i) {
    if (stem == kCondNames[i]) {
      c.op = static_cast<CondOp>(i);
      return c;
    }
  }
  return std::nullopt;
}

std::vector<NodeId> successors(const Instruction &i) {
  return std::visit(overloaded{
                        [](const Icond &c) { return std::vector<NodeId>{c.ifso, c.ifnot}; },
                        [](const Ireturn &) { return std::vector<NodeId>{}; },
                        [](const auto &x) { return std::vector<NodeId>{x.succ}; },
                    },
                    i);
}

Instruction map_successors(const Instruction &i, const std::function<NodeId(NodeId)> &f) {
  return std::visit(overloaded{
                        [&](Icond c) -> Instruction {
                          c.ifso = f(c.ifso);
                          c.ifnot = f(c.ifnot);
                          return c;
                        },
                        [&](Ireturn r) -> Instruction { return r; },
                        [&](auto x) -> Instruction {
                          x.succ = f(x.succ);
                          return x;
                        },
                    },
                    i);
}

bool same_except_successors(const Instruction &a, const Instruction &b) {
  if (a.index() != b.index())
    return false;
  auto zero = [](NodeId) { return NodeId{0}; };
  return map_successors(a, zero) == map_successors(b, zero);
}

std::vector<Reg> uses(const Instruction &i) {
  return std::visit(overloaded{
                        [](const Istore &s) {
                          std::vector<Reg> r = s.args;
                          r.push_back(s.src);
                          return r;
                        },
                        [](const Ireturn &r) {
                          return r.value ? std::vector<Reg>{*r.value} : std::vector<Reg>{};
                        },
                        [](const Inop &) { return std::vector<Reg>{}; },
                        [](const auto &x) { return x.args; },
                    },
                    i);
}

std::optional<Reg> def(const Instruction &i) {
  return std::visit(overloaded{
                        [](const Iop &x) -> std::optional<Reg> { return x.dest; },
                        [](const Iload &x) -> std::optional<Reg> { return x.dest; },
                        [](const Icall &x) -> std::optional<Reg> { return x.dest; },
                        [](const auto &) -> std::optional<Reg> { return std::nullopt; },
                    },
                    i);
}

const Instruction &Function::at(NodeId n) const {
  auto it = code.find(n);
  if (it == code.end())
    throw std::out_of_range("no node " + std::to_string(n.id) + " in " + name);
  return it->second;
}

NodeId Function::max_node() const { return code.empty() ? NodeId{0} : code.rbegin()->first; }

std::uint32_t Function::max_reg() const {
  std::uint32_t m = 0;
  for (Reg r : params)
    m = std::max(m, r.id);
  for (const auto &[n, i] : code) {
    for (Reg r : uses(i))
      m = std::max(m, r.id);
    if (auto d = def(i))
      m = std::max(m, d->id);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Printing

std::string print(Reg r) { return "r" + std::to_string(r.id); }

static std::string join_regs(const std::vector<Reg> &regs) {
  std::string out;
  for (std::size_t i = 0; i < regs.size(); ++i) {
    if (i)
      out += ", ";
    out += print(regs[i]);
  }
  return out;
}

std::string print(const AddrMode &mode, const std::vector<Reg> &args) {
  std::ostringstream os;
  os << '[';
  switch (mode.kind) {
  case AddrMode::Kind::Based:
    os << (args.size() > 0 ? print(args[0]) : "?") << " + " << mode.offset;
    break;
  case AddrMode::Kind::Indexed:
    os << (args.size() > 0 ? print(args[0]) : "?") << " + "
       << (args.size() > 1 ? print(args[1]) : "?") << " * " << mode.scale << " + "
       << mode.offset;
    break;
  case AddrMode::Kind::Global:
    os << "global \"" << mode.symbol << "\" + " << mode.offset;
    break;
  }
  os << ']';
  return os.str();
}

std::string print(const Instruction &i) {
  return std::visit(
      overloaded{
          [](const Iop &x) {
            std::string s = print(x.dest) + " = " + name(x.op.code);
            std::string operands;
            if (has_imm(x.op.code))
              operands = std::to_string(x.op.imm);
            if (!x.args.empty())
              operands += (operands.empty() ? "" : ", ") + join_regs(x.args);
            if (!operands.empty())
              s += " " + operands;
            return s + " -> " + std::to_string(x.succ.id);
          },
          [](const Iload &x) {
            return print(x.dest) + " = load " + name(x.chunk) + " " + print(x.mode, x.args) +
                   " -> " + std::to_string(x.succ.id);
          },
          [](const Istore &x) {
            return "store " + std::string(name(x.chunk)) + " " + print(x.mode, x.args) + " " +
                   print(x.src) + " -> " + std::to_string(x.succ.id);
          },
          [](const Icond &x) {
            return "if " + name(x.cond) + " " + join_regs(x.args) + " then " +
                   std::to_string(x.ifso.id) + " else " + std::to_string(x.ifnot.id);
          },
          [](const Icall &x) {
            return print(x.dest) + " = call \"" + x.callee + "\" (" + join_regs(x.args) +
                   ") -> " + std::to_string(x.succ.id);
          },
          [](const Inop &x) { return "nop -> " + std::to_string(x.succ.id); },
          [](const Ireturn &x) {
            return x.value ? "return " + print(*x.value) : std::string("return");
          },
      },
      i);
}

std::string print(const Function &f, PrintOptions opts) {
  // With `compact`, edges skip over nop chains; a nop cycle is left as is.
  auto skip = [&](NodeId n) {
    if (!opts.compact)
      return n;
    std::set<NodeId> seen;
    while (true) {
      auto it = f.code.find(n);
      if (it == f.code.end() || !std::holds_alternative<Inop>(it->second) ||
          !seen.insert(n).second)
        return n;
      n = std::get<Inop>(it->second).succ;
    }
  };
  std::ostringstream os;
  os << "function " << f.name << "(" << join_regs(f.params) << ") stack " << f.stacksize
     << " {\n";
  os << "  entry " << skip(f.entry).id << "\n";
  for (const auto &[n, i] : f.code) {
    if (opts.compact && std::holds_alternative<Inop>(i) && skip(n) != n)
      continue;
    os << "  " << n.id << ": " << print(map_successors(i, skip)) << "\n";
  }
  os << "}\n";
  return os.str();
}

std::string print(const Program &p, PrintOptions opts) {
  std::ostringstream os;
  for (const auto &[sym, size] : p.globals)
    os << "global \"" << sym << "\" size " << size << "\n";
  os << "main \"" << p.main << "\"\n";
  for (const auto &[n, f] : p.functions)
    os << "\n" << print(f, opts);
  return os.str();
}

// ---------------------------------------------------------------------------
// Validation

std::vector<std::string> validate(const Function &f, const Program *context) {
  std::vector<std::string> errs;
  auto err = [&](NodeId n, const std::string &msg) {
    errs.push_back(f.name + ": node " + std::to_string(n.id) + ": " + msg);
  };
  if (f.stacksize < 0)
    errs.push_back(f.name + ": negative stack size");
  if (!f.code.count(f.entry))
    errs.push_back(f.name + ": entry node " + std::to_string(f.entry.id) + " does not exist");
  std::set<Reg> params;
  for (Reg r : f.params) {
    if (r.id == 0)
      errs.push_back(f.name + ": register r0 is not allowed");
    if (!params.insert(r).second)
      errs.push_back(f.name + ": duplicate parameter " + print(r));
  }
  for (const auto &[n, i] : f.code) {
    if (n.id == 0)
      err(n, "node 0 is not allowed");
    for (NodeId s : successors(i))
      if (!f.code.count(s))
        err(n, "dangling successor " + std::to_string(s.id));
    for (Reg r : uses(i))
      if (r.id == 0)
        err(n, "register r0 is not allowed");
    if (auto d = def(i); d && d->id == 0)
      err(n, "register r0 is not allowed");

    auto check_mode = [&](const AddrMode &mode, std::size_t nargs) {
      if (static_cast<std::size_t>(arity(mode)) != nargs)
        err(n, "addressing mode expects " + std::to_string(arity(mode)) + " argument(s), got " +
                   std::to_string(nargs));
      if (mode.kind == AddrMode::Kind::Indexed && mode.scale != 1 && mode.scale != 2 &&
          mode.scale != 4 && mode.scale != 8)
        err(n, "invalid scale " + std::to_string(mode.scale));
      if (mode.kind == AddrMode::Kind::Global && context && !context->globals.count(mode.symbol))
        err(n, "unknown global \"" + mode.symbol + "\"");
    };

    if (const auto *op = std::get_if<Iop>(&i)) {
      if (static_cast<std::size_t>(arity(op->op.code)) != op->args.size())
        err(n, std::string(name(op->op.code)) + " expects " + std::to_string(arity(op->op.code)) +
                   " argument(s), got " + std::to_string(op->args.size()));
      const std::int64_t imm = op->op.imm;
      switch (op->op.code) {
      case OpCode::Const32:
      case OpCode::AddImm32:
      case OpCode::MulImm32:
        if (imm < std::numeric_limits<std::int32_t>::min() ||
            imm > std::numeric_limits<std::int32_t>::max())
          err(n, "32-bit immediate out of range");
        break;
      case OpCode::Shl32:
        if (imm < 0 || imm > 31)
          err(n, "shift amount out of range");
        break;
      case OpCode::Shl64:
        if (imm < 0 || imm > 63)
          err(n, "shift amount out of range");
        break;
      default:
        if (!has_imm(op->op.code) && imm != 0)
          err(n, "operation takes no immediate");
      }
    } else if (const auto *ld = std::get_if<Iload>(&i)) {
      check_mode(ld->mode, ld->args.size());
    } else if (const auto *st = std::get_if<Istore>(&i)) {
      check_mode(st->mode, st->args.size());
    } else if (const auto *c = std::get_if<Icond>(&i)) {
      if (c->args.size() != 2)
        err(n, "condition expects 2 arguments");
    } else if (const auto *call = std::get_if<Icall>(&i)) {
      if (context) {
        if (context->globals.count(call->callee))
          err(n, "call to data symbol \"" + call->callee + "\"");
        auto it = context->functions.find(call->callee);
        if (it != context->functions.end() && it->second.params.size() != call->args.size())
          err(n, "call to \"" + call->callee + "\" with wrong number of arguments");
      }
    }
  }
  return errs;
}

std::vector<std::string> validate(const Program &p) {
  std::vector<std::string> errs;
  if (!p.functions.count(p.main))
    errs.push_back("main function \"" + p.main + "\" is not defined");
  for (const auto &[sym, size] : p.globals) {
    if (p.functions.count(sym))
      errs.push_back("symbol \"" + sym + "\" is both a function and a global");
    if (size <= 0)
      errs.push_back("global \"" + sym + "\" has non-positive size");
  }
  for (const auto &[sym, f] : p.functions) {
    if (sym != f.name)
      errs.push_back("function key \"" + sym + "\" does not match its name \"" + f.name + "\"");
    auto fe = validate(f, &p);
    errs.insert(errs.end(), fe.begin(), fe.end());
  }
  return errs;
}

} // namespace rtlcse::ir

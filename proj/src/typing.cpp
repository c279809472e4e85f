#include "rtlcse/typing.hpp"

#include <numeric>
#include <set>
#include <vector>

namespace rtlcse::typing {

using ir::Chunk;
using ir::OpCode;
using ir::Reg;

namespace {

using Mask = std::uint8_t;

constexpr Mask bit(Ty t) { return static_cast<Mask>(1u << static_cast<unsigned>(t)); }
constexpr Mask kI32 = bit(Ty::T32);
constexpr Mask kI64 = bit(Ty::T64);
constexpr Mask kF32 = bit(Ty::TF32);
constexpr Mask kF64 = bit(Ty::TF64);
constexpr Mask kPtr = bit(Ty::TPtr);
constexpr Mask kAll = kI32 | kI64 | kF32 | kF64 | kPtr;

Mask chunk_mask(Chunk c) {
  switch (c) {
  case Chunk::Int8:
  case Chunk::Int16:
  case Chunk::Int32:
    return kI32;
  case Chunk::Int64:
    return kI64 | kPtr;
  case Chunk::Float32:
    return kF32;
  case Chunk::Float64:
    return kF64;
  }
  return kAll;
}

struct ConflictAt {
  Reg reg;
};

class Solver {
public:
  explicit Solver(std::uint32_t max_reg) : parent_(max_reg + 1), mask_(max_reg + 1, kAll) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  void restrict(Reg r, Mask m) {
    std::uint32_t c = find(r.id);
    mask_[c] &= m;
    if (mask_[c] == 0)
      throw ConflictAt{r};
  }

  void unify(Reg a, Reg b) {
    std::uint32_t ca = find(a.id), cb = find(b.id);
    if (ca == cb)
      return;
    parent_[cb] = ca;
    mask_[ca] &= mask_[cb];
    if (mask_[ca] == 0)
      throw ConflictAt{b};
  }

  Ty choose(Reg r) {
    Mask m = mask_[find(r.id)];
    if (m & kI64)
      return Ty::T64;
    for (unsigned t = 0; t < 5; ++t)
      if (m & (1u << t))
        return static_cast<Ty>(t);
    return Ty::T64;
  }

private:
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  std::vector<std::uint32_t> parent_;
  std::vector<Mask> mask_;
};

void constrain_op(Solver &s, const ir::Iop &i) {
  const auto &a = i.args;
  switch (i.op.code) {
  case OpCode::Move:
    s.unify(i.dest, a[0]);
    break;
  case OpCode::Const32:
    s.restrict(i.dest, kI32);
    break;
  case OpCode::Const64:
    s.restrict(i.dest, kI64);
    break;
  case OpCode::Add32:
  case OpCode::Sub32:
  case OpCode::Mul32:
    s.restrict(a[0], kI32);
    s.restrict(a[1], kI32);
    s.restrict(i.dest, kI32);
    break;
  case OpCode::Add64:
  case OpCode::Sub64:
    s.restrict(a[0], kI64 | kPtr);
    s.restrict(a[1], kI64);
    s.unify(i.dest, a[0]);
    break;
  case OpCode::Mul64:
    s.restrict(a[0], kI64);
    s.restrict(a[1], kI64);
    s.restrict(i.dest, kI64);
    break;
  case OpCode::Shl32:
  case OpCode::AddImm32:
  case OpCode::MulImm32:
    s.restrict(a[0], kI32);
    s.restrict(i.dest, kI32);
    break;
  case OpCode::Shl64:
  case OpCode::MulImm64:
    s.restrict(a[0], kI64);
    s.restrict(i.dest, kI64);
    break;
  case OpCode::AddImm64:
    s.restrict(a[0], kI64 | kPtr);
    s.unify(i.dest, a[0]);
    break;
  case OpCode::Sext32to64:
    s.restrict(a[0], kI32);
    s.restrict(i.dest, kI64);
    break;
  case OpCode::FAdd64:
  case OpCode::FMul64:
    s.restrict(a[0], kF64);
    s.restrict(a[1], kF64);
    s.restrict(i.dest, kF64);
    break;
  }
}

void constrain_addr(Solver &s, const ir::AddrMode &mode, const std::vector<Reg> &args) {
  if (mode.kind == ir::AddrMode::Kind::Global)
    return;
  s.restrict(args.at(0), kPtr);
  if (mode.kind == ir::AddrMode::Kind::Indexed)
    s.restrict(args.at(1), kI64);
}

void constrain(Solver &s, const ir::Instruction &ins) {
  if (const auto *op = std::get_if<ir::Iop>(&ins)) {
    constrain_op(s, *op);
  } else if (const auto *ld = std::get_if<ir::Iload>(&ins)) {
    constrain_addr(s, ld->mode, ld->args);
    s.restrict(ld->dest, chunk_mask(ld->chunk));
  } else if (const auto *st = std::get_if<ir::Istore>(&ins)) {
    constrain_addr(s, st->mode, st->args);
    s.restrict(st->src, chunk_mask(st->chunk));
  } else if (const auto *c = std::get_if<ir::Icond>(&ins)) {
    Mask m = c->cond.width == ir::Width::W32 ? kI32 : kI64;
    for (Reg r : c->args)
      s.restrict(r, m);
  } else if (const auto *call = std::get_if<ir::Icall>(&ins)) {
    s.restrict(call->dest, kI64);
  }
}

} // namespace

const char *name(Ty t) {
  switch (t) {
  case Ty::T32:
    return "int32";
  case Ty::T64:
    return "int64";
  case Ty::TF32:
    return "float32";
  case Ty::TF64:
    return "float64";
  case Ty::TPtr:
    return "ptr";
  }
  return "?";
}

Ty TypeEnv::of(Reg r) const {
  auto it = types.find(r);
  return it == types.end() ? Ty::T64 : it->second;
}

Inference infer(const ir::Function &f) {
  Inference out;
  std::set<Reg> regs(f.params.begin(), f.params.end());
  for (const auto &[n, ins] : f.code) {
    for (Reg r : ir::uses(ins))
      regs.insert(r);
    if (auto d = ir::def(ins))
      regs.insert(*d);
  }
  std::uint32_t max_reg = regs.empty() ? 0 : regs.rbegin()->id;
  Solver s(max_reg);
  for (const auto &[n, ins] : f.code) {
    try {
      constrain(s, ins);
    } catch (const ConflictAt &c) {
      out.error = IllTyped{c.reg, n,
                           "register " + ir::print(c.reg) + " used at conflicting types at node " +
                               std::to_string(n.id)};
      return out;
    }
  }
  for (Reg r : regs)
    out.env.types[r] = s.choose(r);
  return out;
}

bool chunk_matches(Chunk c, Ty t) {
  switch (c) {
  case Chunk::Int32:
    return t == Ty::T32;
  case Chunk::Int64:
    return t == Ty::T64 || t == Ty::TPtr;
  case Chunk::Float32:
    return t == Ty::TF32;
  case Chunk::Float64:
    return t == Ty::TF64;
  case Chunk::Int8:
  case Chunk::Int16:
    return false;
  }
  return false;
}

std::string print(const TypeEnv &env) {
  std::string out;
  for (const auto &[r, t] : env.types)
    out += ir::print(r) + ": " + name(t) + "\n";
  return out;
}

} // namespace rtlcse::typing

#include "rtlcse/gen.hpp"

#include "rtlcse/typing.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <set>

namespace rtlcse::gen {

using ir::AddrMode;
using ir::Chunk;
using ir::Instruction;
using ir::NodeId;
using ir::OpCode;
using ir::Reg;

std::uint64_t Rng::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::int64_t Rng::range(std::int64_t lo, std::int64_t hi) {
  if (hi <= lo)
    return lo;
  std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(next() % span);
}

bool Rng::chance(double p) { return static_cast<double>(next() >> 11) * 0x1.0p-53 < p; }

namespace {

enum class K { I32, I64, F32, F64, Ptr };

constexpr std::int64_t kMaxPtrOffset = 128;

K kind_of(Chunk c) {
  switch (c) {
  case Chunk::Int8:
  case Chunk::Int16:
  case Chunk::Int32:
    return K::I32;
  case Chunk::Int64:
    return K::I64;
  case Chunk::Float32:
    return K::F32;
  case Chunk::Float64:
    return K::F64;
  }
  return K::I64;
}

void set_succ(Instruction &ins, int slot, NodeId target) {
  std::visit(
      [&](auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ir::Icond>) {
          (slot == 0 ? x.ifso : x.ifnot) = target;
        } else if constexpr (!std::is_same_v<T, ir::Ireturn>) {
          x.succ = target;
        }
      },
      ins);
}

/// Structured code generator: statements are appended in order and dangling
/// successor slots are patched to whatever node is emitted next.
class FnGen {
public:
  FnGen(Rng &rng, const GenConfig &cfg, std::string name, bool calls_helper)
      : rng_(rng), cfg_(cfg), calls_helper_(calls_helper) {
    f_.name = std::move(name);
  }

  Reg param(K k, std::int64_t ptr_off = 0) {
    Reg r = fresh(k);
    f_.params.push_back(r);
    if (k == K::Ptr)
      ptr_off_[r] = ptr_off;
    return r;
  }

  /// Gives every parameter a use that pins down its type.
  void use_params() {
    for (Reg r : std::vector<Reg>(f_.params)) {
      switch (kind_.at(r)) {
      case K::Ptr: {
        AddrMode m;
        m.kind = AddrMode::Kind::Based;
        emit(ir::Iload{Chunk::Int64, m, {r}, fresh(K::I64), {}});
        break;
      }
      case K::I32:
        emit(ir::Iop{{OpCode::Add32, 0}, {r, r}, fresh(K::I32), {}});
        break;
      case K::I64:
        emit(ir::Iop{{OpCode::Add64, 0}, {r, r}, fresh(K::I64), {}});
        break;
      case K::F64:
        emit(ir::Iop{{OpCode::FAdd64, 0}, {r, r}, fresh(K::F64), {}});
        break;
      case K::F32:
        break;
      }
    }
  }

  void body(int depth_limit) {
    depth_limit_ = depth_limit;
    block(static_cast<int>(rng_.range(cfg_.min_stmts, cfg_.max_stmts)));
    if (cfg_.target_nodes > 0)
      while (f_.code.size() < cfg_.target_nodes)
        stmt();
  }

  /// Folds some live values and global memory into one int64 and returns it.
  void checksum_return(const std::vector<std::pair<std::string, std::int64_t>> &globals) {
    if (!avail_[K::F64].empty() && !globals.empty()) {
      const auto &[sym, size] = rng_.pick(globals);
      emit(ir::Istore{Chunk::Float64, global(sym, rng_.range(0, (size - 8) / 8) * 8), {},
                      rng_.pick(avail_[K::F64]), {}});
    }
    Reg acc = fresh(K::I64);
    emit(ir::Iop{{OpCode::Const64, 0}, {}, acc, {}});
    for (const auto &[sym, size] : globals) {
      for (int i = 0; i < 2; ++i) {
        Reg t = fresh(K::I64);
        emit(ir::Iload{Chunk::Int64, global(sym, rng_.range(0, (size - 8) / 8) * 8), {}, t, {}});
        emit(ir::Iop{{OpCode::Add64, 0}, {acc, t}, acc, {}});
      }
    }
    for (int i = 0; i < 2 && !avail_[K::I64].empty(); ++i)
      emit(ir::Iop{{OpCode::Add64, 0}, {acc, rng_.pick(avail_[K::I64])}, acc, {}});
    if (!avail_[K::I32].empty()) {
      Reg t = fresh(K::I64);
      emit(ir::Iop{{OpCode::Sext32to64, 0}, {rng_.pick(avail_[K::I32])}, t, {}});
      emit(ir::Iop{{OpCode::Add64, 0}, {acc, t}, acc, {}});
    }
    emit(ir::Ireturn{acc});
  }

  ir::Function finish() {
    f_.entry = NodeId{1};
    f_.stacksize = 0;
    return std::move(f_);
  }

private:
  Reg fresh(K k) {
    Reg r{next_reg_++};
    kind_[r] = k;
    avail_[k].push_back(r);
    return r;
  }

  NodeId emit(Instruction ins) {
    NodeId n{next_node_++};
    for (auto [m, slot] : open_)
      set_succ(f_.code.at(m), slot, n);
    open_.clear();
    bool branch = std::holds_alternative<ir::Icond>(ins);
    bool ret = std::holds_alternative<ir::Ireturn>(ins);
    f_.code.emplace(n, std::move(ins));
    if (!branch && !ret)
      open_.push_back({n, 0});
    return n;
  }

  void patch_open(NodeId target) {
    for (auto [m, slot] : open_)
      set_succ(f_.code.at(m), slot, target);
    open_.clear();
  }

  AddrMode global(const std::string &sym, std::int64_t off) {
    AddrMode m;
    m.kind = AddrMode::Kind::Global;
    m.symbol = sym;
    m.offset = off;
    return m;
  }

  std::vector<Reg> writable(K k) {
    std::vector<Reg> out;
    for (Reg r : avail_[k])
      if (!fixed_.count(r))
        out.push_back(r);
    return out;
  }

  Reg dest(K k) {
    if (k != K::Ptr && rng_.chance(0.3)) {
      auto w = writable(k);
      if (!w.empty()) {
        Reg r = rng_.pick(w);
        index_bound_.erase(r);
        return r;
      }
    }
    return fresh(k);
  }

  bool has(K k, std::size_t n = 1) { return avail_[k].size() >= n; }
  Reg any(K k) { return rng_.pick(avail_[k]); }

  int block_len() {
    int hi = std::max(1, cfg_.max_stmts >> (depth_ + branch_depth_));
    return static_cast<int>(rng_.range(1, hi));
  }

  void block(int n) {
    for (int i = 0; i < n; ++i)
      stmt();
  }

  void stmt() {
    const Weights &w = cfg_.weights;
    int loop_w = depth_ < depth_limit_ ? w.loop : 0;
    int branch_w = branch_depth_ < 2 ? w.branch : 0;
    int total = w.arith + w.repeat + w.load + w.store + loop_w + branch_w + w.call;
    std::int64_t x = rng_.range(0, total - 1);
    if ((x -= w.arith) < 0)
      return arith();
    if ((x -= w.repeat) < 0)
      return repeat();
    if ((x -= w.load) < 0)
      return load();
    if ((x -= w.store) < 0)
      return store();
    if ((x -= loop_w) < 0)
      return loop();
    if ((x -= branch_w) < 0)
      return branch();
    return call();
  }

  void record(const Instruction &ins) {
    if (exprs_.size() >= 64)
      exprs_.erase(exprs_.begin());
    exprs_.push_back(ins);
  }

  void arith() {
    static const std::vector<K> kinds = {K::I32, K::I32, K::I64, K::I64, K::I64, K::F64, K::Ptr};
    K k = rng_.pick(kinds);
    ir::Iop op;
    switch (k) {
    case K::I32: {
      static const std::vector<OpCode> codes = {OpCode::Add32,    OpCode::Sub32,    OpCode::Mul32,
                                                OpCode::Shl32,    OpCode::AddImm32, OpCode::MulImm32,
                                                OpCode::Const32,  OpCode::Move};
      op.op.code = has(K::I32) ? rng_.pick(codes) : OpCode::Const32;
      break;
    }
    case K::I64: {
      static const std::vector<OpCode> codes = {OpCode::Add64,    OpCode::Sub64,      OpCode::Mul64,
                                                OpCode::Shl64,    OpCode::AddImm64,   OpCode::MulImm64,
                                                OpCode::Const64,  OpCode::Sext32to64, OpCode::Move};
      op.op.code = rng_.pick(codes);
      if (op.op.code == OpCode::Sext32to64 ? !has(K::I32) : (op.op.code != OpCode::Const64 && !has(K::I64)))
        op.op.code = OpCode::Const64;
      break;
    }
    case K::F64: {
      if (!has(K::F64))
        return load();
      static const std::vector<OpCode> codes = {OpCode::FAdd64, OpCode::FMul64, OpCode::Move};
      op.op.code = rng_.pick(codes);
      break;
    }
    case K::Ptr:
      return derive_pointer();
    case K::F32:
      return;
    }
    switch (op.op.code) {
    case OpCode::Const32:
    case OpCode::Const64:
      op.op.imm = rng_.range(-100, 100);
      break;
    case OpCode::Shl32:
    case OpCode::Shl64:
      op.op.imm = rng_.range(0, 5);
      break;
    case OpCode::AddImm32:
    case OpCode::AddImm64:
      op.op.imm = rng_.range(-16, 16);
      break;
    case OpCode::MulImm32:
    case OpCode::MulImm64:
      op.op.imm = rng_.range(-8, 8);
      break;
    default:
      break;
    }
    K arg_kind = op.op.code == OpCode::Sext32to64 ? K::I32 : k;
    for (int i = 0; i < ir::arity(op.op.code); ++i)
      op.args.push_back(any(arg_kind));
    op.dest = dest(k);
    if (op.op.code == OpCode::Move && op.args[0] == op.dest)
      op.dest = fresh(k);
    record(op);
    emit(op);
  }

  void derive_pointer() {
    std::vector<Reg> bases;
    for (Reg r : avail_[K::Ptr])
      if (ptr_off_.at(r) <= kMaxPtrOffset - 32)
        bases.push_back(r);
    if (bases.empty())
      return;
    Reg p = rng_.pick(bases);
    std::vector<Reg> idx;
    for (Reg r : avail_[K::I64])
      if (index_bound_.count(r) && ptr_off_.at(p) + index_bound_.at(r) <= kMaxPtrOffset)
        idx.push_back(r);
    ir::Iop op;
    std::int64_t off = ptr_off_.at(p);
    if (!idx.empty() && rng_.chance(0.6)) {
      Reg i = rng_.pick(idx);
      op.op = {OpCode::Add64, 0};
      op.args = {p, i};
      off += index_bound_.at(i);
    } else {
      op.op = {OpCode::AddImm64, rng_.range(1, 4) * 8};
      op.args = {p};
      off += op.op.imm;
    }
    op.dest = fresh(K::Ptr);
    ptr_off_[op.dest] = off;
    record(op);
    emit(op);
  }

  void repeat() {
    std::vector<const Instruction *> usable;
    for (const Instruction &ins : exprs_) {
      auto u = ir::uses(ins);
      bool ok = std::all_of(u.begin(), u.end(), [&](Reg r) {
        const auto &v = avail_[kind_.at(r)];
        return std::find(v.begin(), v.end(), r) != v.end();
      });
      if (ok)
        usable.push_back(&ins);
    }
    if (usable.empty())
      return arith();
    Instruction ins = *rng_.pick(usable);
    if (auto *op = std::get_if<ir::Iop>(&ins)) {
      K k = kind_.at(op->dest);
      op->dest = k == K::Ptr ? fresh(k) : dest(k);
      if (k == K::Ptr)
        ptr_off_[op->dest] = derived_offset(*op);
      if (op->op.code == OpCode::Move && op->args[0] == op->dest)
        op->dest = fresh(k);
    } else if (auto *ld = std::get_if<ir::Iload>(&ins)) {
      ld->dest = dest(kind_of(ld->chunk));
    }
    emit(ins);
  }

  std::int64_t derived_offset(const ir::Iop &op) const {
    std::int64_t off = ptr_off_.at(op.args[0]);
    if (op.op.code == OpCode::AddImm64)
      return off + op.op.imm;
    if (op.op.code == OpCode::Add64)
      return off + (index_bound_.count(op.args[1]) ? index_bound_.at(op.args[1]) : kMaxPtrOffset);
    return off;
  }

  Chunk random_chunk() {
    static const std::vector<Chunk> chunks = {Chunk::Int32, Chunk::Int32,   Chunk::Int64,
                                              Chunk::Int64, Chunk::Float64, Chunk::Float64,
                                              Chunk::Int8,  Chunk::Int16,   Chunk::Float32};
    return rng_.pick(chunks);
  }

  /// An in-bounds address for the chunk most of the time.
  std::pair<AddrMode, std::vector<Reg>> address(Chunk c) {
    int size = ir::size_of(c);
    std::vector<Reg> ptrs = avail_[K::Ptr];
    int choice = static_cast<int>(rng_.range(0, 2));
    if (ptrs.empty() || choice == 0) {
      const auto &[sym, gsize] = rng_.pick(cfg_.globals);
      return {global(sym, rng_.range(0, (gsize - size) / size) * size), {}};
    }
    Reg base = rng_.pick(ptrs);
    std::int64_t room = 256 - ptr_off_.at(base) - size;
    std::vector<Reg> idx;
    for (Reg r : avail_[K::I64])
      if (index_bound_.count(r))
        idx.push_back(r);
    AddrMode m;
    if (choice == 2 && !idx.empty()) {
      Reg i = rng_.pick(idx);
      std::int64_t span = index_bound_.at(i);
      std::int32_t scale = 8;
      while (scale > 1 && span * scale > room)
        scale /= 2;
      m.kind = AddrMode::Kind::Indexed;
      m.scale = scale;
      m.offset = rng_.range(0, std::max<std::int64_t>(0, std::min<std::int64_t>(32, room - span * scale)) / 4) * 4;
      return {m, {base, i}};
    }
    m.kind = AddrMode::Kind::Based;
    m.offset = rng_.range(0, std::min<std::int64_t>(56, room) / 4) * 4;
    if (rng_.chance(0.01))
      m.offset = -8;
    return {m, {base}};
  }

  void load() {
    Chunk c = random_chunk();
    auto [mode, args] = address(c);
    ir::Iload ld{c, mode, args, dest(kind_of(c)), {}};
    record(ld);
    emit(ld);
  }

  void store() {
    Chunk c = random_chunk();
    K k = kind_of(c);
    if (!has(k))
      return load();
    auto [mode, args] = address(c);
    emit(ir::Istore{c, mode, args, any(k), {}});
  }

  void loop() {
    Reg bound;
    if (!bounds_.empty() && rng_.chance(0.4)) {
      bound = rng_.pick(bounds_);
    } else {
      bound = Reg{next_reg_++};
      kind_[bound] = K::I32;
      emit(ir::Iop{{OpCode::Const32, rng_.range(0, cfg_.max_loop_bound)}, {}, bound, {}});
    }
    Reg i{next_reg_++};
    kind_[i] = K::I32;
    fixed_.insert(i);
    fixed_.insert(bound);
    emit(ir::Iop{{OpCode::Const32, 0}, {}, i, {}});

    auto saved = avail_;
    auto saved_index = index_bound_;
    ++depth_;
    NodeId header{next_node_};
    if (rng_.chance(0.3))
      for (int n = static_cast<int>(rng_.range(1, 2)); n > 0; --n)
        arith();
    NodeId cond = emit(ir::Icond{{ir::CondOp::Lt, ir::Width::W32}, {i, bound}, {}, {}});
    open_ = {{cond, 0}};
    avail_[K::I32].push_back(i);
    if (rng_.chance(0.8)) {
      Reg x = fresh(K::I64);
      emit(ir::Iop{{OpCode::Sext32to64, 0}, {i}, x, {}});
      index_bound_[x] = std::max(cfg_.max_loop_bound, 8);
      if (rng_.chance(0.4)) {
        Reg y = fresh(K::I64);
        emit(ir::Iop{{OpCode::Shl64, 3}, {x}, y, {}});
        index_bound_[y] = index_bound_[x] * 8;
      }
    }
    block(block_len());
    emit(ir::Iop{{OpCode::AddImm32, 1}, {i}, i, {}});
    patch_open(header);
    open_ = {{cond, 1}};
    --depth_;
    avail_ = std::move(saved);
    forget_new_indices(saved_index);
  }

  /// Keeps only the index bounds that held before the construct and still hold.
  void forget_new_indices(const std::map<Reg, std::int64_t> &before) {
    for (auto it = index_bound_.begin(); it != index_bound_.end();)
      it = before.count(it->first) ? std::next(it) : index_bound_.erase(it);
  }

  void branch() {
    bool wide = has(K::I64, 1) && rng_.chance(0.4);
    K k = wide ? K::I64 : K::I32;
    if (!has(k))
      return arith();
    static const std::vector<ir::CondOp> ops = {ir::CondOp::Eq, ir::CondOp::Ne, ir::CondOp::Lt,
                                                ir::CondOp::Le, ir::CondOp::Gt, ir::CondOp::Ge};
    ir::Condition cond{rng_.pick(ops), wide ? ir::Width::W64 : ir::Width::W32};
    NodeId c = emit(ir::Icond{cond, {any(k), any(k)}, {}, {}});
    auto saved = avail_;
    auto saved_index = index_bound_;
    ++branch_depth_;
    open_ = {{c, 0}};
    block(block_len());
    auto then_open = open_;
    avail_ = saved;
    open_ = {{c, 1}};
    if (rng_.chance(0.7))
      block(block_len());
    open_.insert(open_.end(), then_open.begin(), then_open.end());
    --branch_depth_;
    avail_ = std::move(saved);
    forget_new_indices(saved_index);
  }

  void call() {
    std::vector<Reg> ptrs;
    for (Reg r : avail_[K::Ptr])
      if (ptr_off_.at(r) <= kMaxPtrOffset)
        ptrs.push_back(r);
    if (calls_helper_ && !ptrs.empty() && has(K::I64) && rng_.chance(0.5)) {
      emit(ir::Icall{"helper", {rng_.pick(ptrs), any(K::I64)}, dest(K::I64), {}});
      return;
    }
    std::vector<Reg> args;
    int n = static_cast<int>(rng_.range(0, 2));
    for (int i = 0; i < n; ++i) {
      K k = rng_.chance(0.5) ? K::I32 : K::I64;
      if (has(k))
        args.push_back(any(k));
    }
    emit(ir::Icall{"ext" + std::to_string(rng_.range(0, 2)), args, dest(K::I64), {}});
  }

public:
  /// Registers a loop bound that is never reassigned.
  void add_bound(Reg r) {
    bounds_.push_back(r);
    fixed_.insert(r);
  }

private:
  std::vector<Reg> bounds_;
  Rng &rng_;
  const GenConfig &cfg_;
  bool calls_helper_;
  ir::Function f_;
  std::uint32_t next_node_ = 1;
  std::uint32_t next_reg_ = 1;
  std::vector<std::pair<NodeId, int>> open_;
  std::map<K, std::vector<Reg>> avail_;
  std::map<Reg, K> kind_;
  std::map<Reg, std::int64_t> ptr_off_;
  std::map<Reg, std::int64_t> index_bound_;  // exclusive upper bound of a nonnegative value
  std::set<Reg> fixed_;
  std::vector<Instruction> exprs_;
  int depth_ = 0;
  int depth_limit_ = 0;
  int branch_depth_ = 0;
};

} // namespace

ir::Program generate(const GenConfig &cfg, std::uint64_t index) {
  Rng rng(interp::mix64(cfg.seed) ^ interp::mix64(index + 0x5851F42D4C957F2DULL));
  ir::Program p;
  for (const auto &[sym, size] : cfg.globals)
    p.globals[sym] = size;
  bool helper = cfg.helper && rng.chance(0.5);
  if (helper) {
    GenConfig small = cfg;
    small.max_stmts = std::max(2, cfg.max_stmts / 2);
    small.min_stmts = std::min(small.min_stmts, small.max_stmts);
    small.target_nodes = 0;
    FnGen g(rng, small, "helper", false);
    g.param(K::Ptr, kMaxPtrOffset);
    g.param(K::I64);
    g.use_params();
    g.body(1);
    g.checksum_return({});
    p.functions["helper"] = g.finish();
  }
  FnGen g(rng, cfg, "main", helper);
  g.param(K::Ptr);
  g.param(K::Ptr);
  g.add_bound(g.param(K::I32));
  g.param(K::I64);
  g.param(K::F64);
  g.use_params();
  g.body(cfg.max_depth);
  g.checksum_return(cfg.globals);
  p.functions["main"] = g.finish();
  p.main = "main";
  return p;
}

std::vector<interp::Value> random_args(const ir::Program &p, const GenConfig &cfg, std::uint64_t seed) {
  using interp::Value;
  Rng rng(interp::mix64(seed ^ 0xA0761D6478BD642FULL));
  const ir::Function &main = p.functions.at(p.main);
  typing::TypeEnv env = typing::infer(main).env;
  interp::Memory mem = interp::Memory::for_program(p, 0);
  std::vector<std::string> targets;
  for (const auto &[sym, size] : p.globals)
    if (size >= 256)
      targets.push_back(sym);
  std::vector<Value> args;
  for (Reg r : main.params) {
    if (rng.chance(cfg.undef_arg_probability)) {
      args.push_back(Value::undef());
      continue;
    }
    switch (env.of(r)) {
    case typing::Ty::T32:
      args.push_back(Value::i32(static_cast<std::int32_t>(rng.range(0, cfg.max_loop_bound + 2))));
      break;
    case typing::Ty::T64:
      args.push_back(Value::i64(rng.range(-50, 50)));
      break;
    case typing::Ty::TF32:
      args.push_back(Value::f32_bits(std::bit_cast<std::uint32_t>(static_cast<float>(rng.range(-100, 100)) / 8)));
      break;
    case typing::Ty::TF64:
      args.push_back(Value::f64(static_cast<double>(rng.range(-1000, 1000)) / 16));
      break;
    case typing::Ty::TPtr:
      if (targets.empty())
        args.push_back(Value::undef());
      else
        args.push_back(Value::ptr(*mem.global_block(rng.pick(targets)), 0));
      break;
    }
  }
  return args;
}

} // namespace rtlcse::gen

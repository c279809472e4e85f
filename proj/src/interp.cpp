#include "rtlcse/interp.hpp"

#include <bit>
#include <cstring>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace rtlcse::interp {

using ir::AddrMode;
using ir::Chunk;
using ir::OpCode;

namespace {

constexpr std::size_t kMaxCallDepth = 4096;

std::uint64_t hash_string(const std::string &s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool both(const std::vector<Value> &a, Value::Kind k) {
  return a.size() == 2 && a[0].kind == k && a[1].kind == k;
}

bool one(const std::vector<Value> &a, Value::Kind k) { return a.size() == 1 && a[0].kind == k; }

std::uint32_t u32(const Value &v) { return static_cast<std::uint32_t>(v.bits); }

} // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Value Value::f64(double d) { return f64_bits(std::bit_cast<std::uint64_t>(d)); }
double Value::as_f64() const { return std::bit_cast<double>(bits); }

bool RegFile::operator==(const RegFile &o) const {
  std::size_t n = std::max(regs_.size(), o.regs_.size());
  for (std::size_t i = 0; i < n; ++i)
    if (get(ir::Reg{static_cast<std::uint32_t>(i)}) != o.get(ir::Reg{static_cast<std::uint32_t>(i)}))
      return false;
  return true;
}

// ---------------------------------------------------------------------------
// Memory

Memory Memory::for_program(const ir::Program &p, std::uint64_t seed) {
  Memory m;
  for (const auto &[sym, size] : p.globals) {
    std::uint32_t b = m.alloc(size, sym);
    std::uint64_t base = mix64(seed ^ hash_string(sym));
    auto &bytes = m.blocks_[b].bytes;
    for (std::size_t i = 0; i < bytes.size(); ++i)
      bytes[i] = MemByte{MemByte::Kind::Byte, static_cast<std::uint8_t>(mix64(base + i) >> 24), 0, 0};
  }
  return m;
}

std::uint32_t Memory::alloc(std::int64_t size, std::string name) {
  Block b;
  b.name = std::move(name);
  b.bytes.resize(static_cast<std::size_t>(std::max<std::int64_t>(size, 0)));
  blocks_.push_back(std::move(b));
  return static_cast<std::uint32_t>(blocks_.size() - 1);
}

void Memory::free(std::uint32_t block) {
  if (block > 0 && block < blocks_.size()) {
    blocks_[block].live = false;
    blocks_[block].bytes.clear();
    blocks_[block].bytes.shrink_to_fit();
  }
}

std::optional<std::uint32_t> Memory::global_block(const std::string &sym) const {
  for (std::uint32_t b = 1; b < blocks_.size(); ++b)
    if (blocks_[b].name == sym)
      return b;
  return std::nullopt;
}

bool Memory::valid(Chunk chunk, const Value &addr) const {
  if (addr.kind != Value::Kind::Ptr || addr.block == 0 || addr.block >= blocks_.size())
    return false;
  const Block &b = blocks_[addr.block];
  if (!b.live)
    return false;
  std::int64_t off = addr.offset();
  return off >= 0 && off <= static_cast<std::int64_t>(b.bytes.size()) - ir::size_of(chunk);
}

std::optional<Value> Memory::load(Chunk chunk, const Value &addr) const {
  if (!valid(chunk, addr))
    return std::nullopt;
  const auto &bytes = blocks_[addr.block].bytes;
  const std::size_t off = static_cast<std::size_t>(addr.offset());
  const int n = ir::size_of(chunk);

  if (chunk == Chunk::Int64 && bytes[off].kind == MemByte::Kind::PtrFrag) {
    const MemByte &first = bytes[off];
    for (int i = 0; i < 8; ++i) {
      const MemByte &b = bytes[off + i];
      if (b.kind != MemByte::Kind::PtrFrag || b.byte != i || b.block != first.block ||
          b.offset != first.offset)
        return Value::undef();
    }
    return Value::ptr(first.block, first.offset);
  }
  std::uint64_t raw = 0;
  for (int i = 0; i < n; ++i) {
    const MemByte &b = bytes[off + i];
    if (b.kind != MemByte::Kind::Byte)
      return Value::undef();
    raw |= static_cast<std::uint64_t>(b.byte) << (8 * i);
  }
  switch (chunk) {
  case Chunk::Int8:
    return Value::i32(static_cast<std::int8_t>(raw));
  case Chunk::Int16:
    return Value::i32(static_cast<std::int16_t>(raw));
  case Chunk::Int32:
    return Value::i32(static_cast<std::int32_t>(raw));
  case Chunk::Int64:
    return Value::i64(static_cast<std::int64_t>(raw));
  case Chunk::Float32:
    return Value::f32_bits(static_cast<std::uint32_t>(raw));
  case Chunk::Float64:
    return Value::f64_bits(raw);
  }
  return Value::undef();
}

bool Memory::store(Chunk chunk, const Value &addr, const Value &v) {
  if (!valid(chunk, addr))
    return false;
  auto &bytes = blocks_[addr.block].bytes;
  const std::size_t off = static_cast<std::size_t>(addr.offset());
  const int n = ir::size_of(chunk);

  if (chunk == Chunk::Int64 && v.kind == Value::Kind::Ptr) {
    for (int i = 0; i < 8; ++i)
      bytes[off + i] = MemByte{MemByte::Kind::PtrFrag, static_cast<std::uint8_t>(i), v.block, v.offset()};
    return true;
  }
  bool matches = false;
  switch (chunk) {
  case Chunk::Int8:
  case Chunk::Int16:
  case Chunk::Int32:
    matches = v.kind == Value::Kind::I32;
    break;
  case Chunk::Int64:
    matches = v.kind == Value::Kind::I64;
    break;
  case Chunk::Float32:
    matches = v.kind == Value::Kind::F32;
    break;
  case Chunk::Float64:
    matches = v.kind == Value::Kind::F64;
    break;
  }
  for (int i = 0; i < n; ++i) {
    if (matches)
      bytes[off + i] = MemByte{MemByte::Kind::Byte, static_cast<std::uint8_t>(v.bits >> (8 * i)), 0, 0};
    else
      bytes[off + i] = MemByte{};
  }
  return true;
}

// ---------------------------------------------------------------------------
// Evaluation

Value eval_op(const ir::Operation &op, const std::vector<Value> &a) {
  using K = Value::Kind;
  const std::int64_t imm = op.imm;
  switch (op.code) {
  case OpCode::Move:
    return a.size() == 1 ? a[0] : Value::undef();
  case OpCode::Const32:
    return Value::i32(static_cast<std::int32_t>(imm));
  case OpCode::Const64:
    return Value::i64(imm);
  case OpCode::Add32:
    if (both(a, K::I32))
      return Value::i32(static_cast<std::int32_t>(u32(a[0]) + u32(a[1])));
    break;
  case OpCode::Sub32:
    if (both(a, K::I32))
      return Value::i32(static_cast<std::int32_t>(u32(a[0]) - u32(a[1])));
    break;
  case OpCode::Mul32:
    if (both(a, K::I32))
      return Value::i32(static_cast<std::int32_t>(u32(a[0]) * u32(a[1])));
    break;
  case OpCode::Add64:
    if (both(a, K::I64))
      return Value::i64(static_cast<std::int64_t>(a[0].bits + a[1].bits));
    if (a.size() == 2 && a[0].kind == K::Ptr && a[1].kind == K::I64)
      return Value::ptr(a[0].block, static_cast<std::int64_t>(a[0].bits + a[1].bits));
    break;
  case OpCode::Sub64:
    if (both(a, K::I64))
      return Value::i64(static_cast<std::int64_t>(a[0].bits - a[1].bits));
    if (a.size() == 2 && a[0].kind == K::Ptr && a[1].kind == K::I64)
      return Value::ptr(a[0].block, static_cast<std::int64_t>(a[0].bits - a[1].bits));
    break;
  case OpCode::Mul64:
    if (both(a, K::I64))
      return Value::i64(static_cast<std::int64_t>(a[0].bits * a[1].bits));
    break;
  case OpCode::Shl32:
    if (one(a, K::I32))
      return Value::i32(static_cast<std::int32_t>(u32(a[0]) << (imm & 31)));
    break;
  case OpCode::Shl64:
    if (one(a, K::I64))
      return Value::i64(static_cast<std::int64_t>(a[0].bits << (imm & 63)));
    break;
  case OpCode::Sext32to64:
    if (one(a, K::I32))
      return Value::i64(a[0].as_i32());
    break;
  case OpCode::AddImm32:
    if (one(a, K::I32))
      return Value::i32(static_cast<std::int32_t>(u32(a[0]) + static_cast<std::uint32_t>(imm)));
    break;
  case OpCode::AddImm64:
    if (one(a, K::I64))
      return Value::i64(static_cast<std::int64_t>(a[0].bits + static_cast<std::uint64_t>(imm)));
    if (one(a, K::Ptr))
      return Value::ptr(a[0].block, static_cast<std::int64_t>(a[0].bits + static_cast<std::uint64_t>(imm)));
    break;
  case OpCode::MulImm32:
    if (one(a, K::I32))
      return Value::i32(static_cast<std::int32_t>(u32(a[0]) * static_cast<std::uint32_t>(imm)));
    break;
  case OpCode::MulImm64:
    if (one(a, K::I64))
      return Value::i64(static_cast<std::int64_t>(a[0].bits * static_cast<std::uint64_t>(imm)));
    break;
  case OpCode::FAdd64:
    if (both(a, K::F64))
      return Value::f64(a[0].as_f64() + a[1].as_f64());
    break;
  case OpCode::FMul64:
    if (both(a, K::F64))
      return Value::f64(a[0].as_f64() * a[1].as_f64());
    break;
  }
  return Value::undef();
}

Value eval_addr(const AddrMode &mode, const std::vector<Value> &args, const Memory &mem) {
  switch (mode.kind) {
  case AddrMode::Kind::Based:
    if (args.size() == 1 && args[0].kind == Value::Kind::Ptr)
      return Value::ptr(args[0].block,
                        static_cast<std::int64_t>(args[0].bits + static_cast<std::uint64_t>(mode.offset)));
    break;
  case AddrMode::Kind::Indexed:
    if (args.size() == 2 && args[0].kind == Value::Kind::Ptr && args[1].kind == Value::Kind::I64)
      return Value::ptr(args[0].block,
                        static_cast<std::int64_t>(args[0].bits +
                                                  args[1].bits * static_cast<std::uint64_t>(mode.scale) +
                                                  static_cast<std::uint64_t>(mode.offset)));
    break;
  case AddrMode::Kind::Global:
    if (args.empty())
      if (auto b = mem.global_block(mode.symbol))
        return Value::ptr(*b, mode.offset);
    break;
  }
  return Value::undef();
}

Value external_result(std::uint64_t seed, const std::string &symbol, const std::vector<Value> &args) {
  std::uint64_t h = mix64(seed ^ hash_string(symbol));
  for (const Value &v : args) {
    if (v.is_undef())
      return Value::undef();
    h = mix64(h ^ (static_cast<std::uint64_t>(v.kind) << 56) ^ v.bits);
    h = mix64(h ^ v.block);
  }
  return Value::i64(static_cast<std::int64_t>(h));
}

namespace {

std::vector<Value> read_regs(const RegFile &regs, const std::vector<ir::Reg> &rs) {
  std::vector<Value> out;
  out.reserve(rs.size());
  for (ir::Reg r : rs)
    out.push_back(regs.get(r));
  return out;
}

StepResult trap(std::string reason) {
  StepResult r;
  r.kind = StepResult::Kind::Trapped;
  r.reason = std::move(reason);
  return r;
}

std::optional<bool> eval_cond(ir::Condition c, const Value &a, const Value &b) {
  std::int64_t x = 0, y = 0;
  if (c.width == ir::Width::W32) {
    if (a.kind != Value::Kind::I32 || b.kind != Value::Kind::I32)
      return std::nullopt;
    x = a.as_i32();
    y = b.as_i32();
  } else {
    if (a.kind != Value::Kind::I64 || b.kind != Value::Kind::I64)
      return std::nullopt;
    x = a.as_i64();
    y = b.as_i64();
  }
  switch (c.op) {
  case ir::CondOp::Eq:
    return x == y;
  case ir::CondOp::Ne:
    return x != y;
  case ir::CondOp::Lt:
    return x < y;
  case ir::CondOp::Le:
    return x <= y;
  case ir::CondOp::Gt:
    return x > y;
  case ir::CondOp::Ge:
    return x >= y;
  }
  return std::nullopt;
}

} // namespace

StepResult step(State &s) {
  auto it = s.fn->code.find(s.pc);
  if (it == s.fn->code.end())
    return trap("no instruction at node " + std::to_string(s.pc.id));
  const ir::Instruction &ins = it->second;

  if (const auto *op = std::get_if<ir::Iop>(&ins)) {
    s.regs.set(op->dest, eval_op(op->op, read_regs(s.regs, op->args)));
    s.pc = op->succ;
    return {};
  }
  if (const auto *ld = std::get_if<ir::Iload>(&ins)) {
    Value addr = eval_addr(ld->mode, read_regs(s.regs, ld->args), s.mem);
    auto v = s.mem.load(ld->chunk, addr);
    if (!v)
      return trap("invalid load address " + print(addr, &s.mem));
    s.regs.set(ld->dest, *v);
    s.pc = ld->succ;
    return {};
  }
  if (const auto *st = std::get_if<ir::Istore>(&ins)) {
    Value addr = eval_addr(st->mode, read_regs(s.regs, st->args), s.mem);
    if (!s.mem.store(st->chunk, addr, s.regs.get(st->src)))
      return trap("invalid store address " + print(addr, &s.mem));
    s.pc = st->succ;
    return {};
  }
  if (const auto *c = std::get_if<ir::Icond>(&ins)) {
    auto taken = eval_cond(c->cond, s.regs.get(c->args.at(0)), s.regs.get(c->args.at(1)));
    if (!taken)
      return trap("branch on undefined or ill-kinded value");
    s.pc = *taken ? c->ifso : c->ifnot;
    return {};
  }
  if (const auto *call = std::get_if<ir::Icall>(&ins)) {
    std::vector<Value> args = read_regs(s.regs, call->args);
    auto callee = s.program->functions.find(call->callee);
    if (callee == s.program->functions.end()) {
      Value result = external_result(s.seed, call->callee, args);
      s.regs.set(call->dest, result);
      s.pc = call->succ;
      StepResult r;
      r.event = Event{call->callee, std::move(args), result};
      return r;
    }
    const ir::Function &f = callee->second;
    if (f.params.size() != args.size())
      return trap("call to " + f.name + " with wrong number of arguments");
    if (s.callers.size() >= kMaxCallDepth)
      return trap("call stack overflow");
    s.callers.push_back(Frame{s.fn, call->succ, call->dest, std::move(s.regs), s.stack_block});
    s.regs = RegFile{};
    for (std::size_t i = 0; i < args.size(); ++i)
      s.regs.set(f.params[i], args[i]);
    s.stack_block = s.mem.alloc(f.stacksize);
    s.fn = &f;
    s.pc = f.entry;
    return {};
  }
  if (const auto *nop = std::get_if<ir::Inop>(&ins)) {
    s.pc = nop->succ;
    return {};
  }
  const auto &ret = std::get<ir::Ireturn>(ins);
  Value v = ret.value ? s.regs.get(*ret.value) : Value::undef();
  s.mem.free(s.stack_block);
  if (s.callers.empty()) {
    StepResult r;
    r.kind = StepResult::Kind::Returned;
    r.value = v;
    return r;
  }
  Frame fr = std::move(s.callers.back());
  s.callers.pop_back();
  s.fn = fr.fn;
  s.regs = std::move(fr.regs);
  s.stack_block = fr.stack_block;
  s.regs.set(fr.dest, v);
  s.pc = fr.return_pc;
  return {};
}

State initial_state(const ir::Program &p, const std::string &fn, const std::vector<Value> &args,
                    std::uint64_t seed) {
  State s;
  s.program = &p;
  s.fn = &p.functions.at(fn);
  s.pc = s.fn->entry;
  s.mem = Memory::for_program(p, seed);
  s.seed = seed;
  for (std::size_t i = 0; i < s.fn->params.size(); ++i)
    s.regs.set(s.fn->params[i], i < args.size() ? args[i] : Value::undef());
  s.stack_block = s.mem.alloc(s.fn->stacksize);
  return s;
}

Outcome run_from(State s, std::uint64_t fuel, const Observer &observe) {
  Outcome out;
  for (std::uint64_t n = 0; n < fuel; ++n) {
    if (observe)
      observe(s);
    StepResult r = step(s);
    if (r.event)
      out.trace.push_back(std::move(*r.event));
    if (r.kind == StepResult::Kind::Returned) {
      out.status = Outcome::Status::Returned;
      out.value = r.value;
      return out;
    }
    if (r.kind == StepResult::Kind::Trapped) {
      out.status = Outcome::Status::Trapped;
      out.reason = std::move(r.reason);
      return out;
    }
  }
  out.status = Outcome::Status::OutOfFuel;
  return out;
}

Outcome run(const ir::Program &p, const std::vector<Value> &args, std::uint64_t fuel,
            std::uint64_t seed, const Observer &observe) {
  return run_from(initial_state(p, p.main, args, seed), fuel, observe);
}

// ---------------------------------------------------------------------------
// Refinement

bool value_refines(const Value &orig, const Value &transformed) {
  return orig.is_undef() || orig == transformed;
}

bool event_refines(const Event &orig, const Event &transformed) {
  if (orig.symbol != transformed.symbol || orig.args.size() != transformed.args.size())
    return false;
  for (std::size_t i = 0; i < orig.args.size(); ++i)
    if (!value_refines(orig.args[i], transformed.args[i]))
      return false;
  return value_refines(orig.result, transformed.result);
}

static bool prefix_refines(const std::vector<Event> &orig, const std::vector<Event> &transformed,
                           std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!event_refines(orig[i], transformed[i]))
      return false;
  return true;
}

bool outcome_refines(const Outcome &orig, const Outcome &transformed) {
  switch (orig.status) {
  case Outcome::Status::Returned:
    return transformed.status == Outcome::Status::Returned &&
           orig.trace.size() == transformed.trace.size() &&
           prefix_refines(orig.trace, transformed.trace, orig.trace.size()) &&
           value_refines(orig.value, transformed.value);
  case Outcome::Status::Trapped:
    return transformed.trace.size() >= orig.trace.size() &&
           prefix_refines(orig.trace, transformed.trace, orig.trace.size());
  case Outcome::Status::OutOfFuel:
    return prefix_refines(orig.trace, transformed.trace,
                          std::min(orig.trace.size(), transformed.trace.size()));
  }
  return false;
}

// ---------------------------------------------------------------------------
// Text

std::string print(const Value &v, const Memory *mem) {
  std::ostringstream os;
  switch (v.kind) {
  case Value::Kind::Undef:
    return "undef";
  case Value::Kind::I32:
    return "i32:" + std::to_string(v.as_i32());
  case Value::Kind::I64:
    return "i64:" + std::to_string(v.as_i64());
  case Value::Kind::F32:
    os << "f32:0x" << std::hex << std::setw(8) << std::setfill('0') << (v.bits & 0xFFFFFFFFu);
    return os.str();
  case Value::Kind::F64:
    os << "f64:0x" << std::hex << std::setw(16) << std::setfill('0') << v.bits;
    return os.str();
  case Value::Kind::Ptr: {
    std::string base = "#" + std::to_string(v.block);
    if (mem && v.block < mem->blocks().size() && !mem->blocks()[v.block].name.empty())
      base = mem->blocks()[v.block].name;
    std::int64_t off = v.offset();
    return "ptr:" + base + (off < 0 ? "-" : "+") + std::to_string(off < 0 ? -off : off);
  }
  }
  return "?";
}

std::string print(const Event &e, const Memory *mem) {
  std::string out = "call " + e.symbol + "(";
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    if (i)
      out += ", ";
    out += print(e.args[i], mem);
  }
  return out + ") = " + print(e.result, mem);
}

std::string print(const Outcome &o, const Memory *mem) {
  std::string out;
  for (const Event &e : o.trace)
    out += print(e, mem) + "\n";
  switch (o.status) {
  case Outcome::Status::Returned:
    out += "returned " + print(o.value, mem) + "\n";
    break;
  case Outcome::Status::Trapped:
    out += "trapped: " + o.reason + "\n";
    break;
  case Outcome::Status::OutOfFuel:
    out += "out of fuel\n";
    break;
  }
  return out;
}

Value parse_value(const std::string &text, const Memory &mem) {
  if (text == "undef")
    return Value::undef();
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("malformed value '" + text + "'");
  std::string kind = text.substr(0, colon);
  std::string body = text.substr(colon + 1);
  try {
    if (kind == "i32")
      return Value::i32(static_cast<std::int32_t>(std::stol(body, nullptr, 0)));
    if (kind == "i64")
      return Value::i64(std::stoll(body, nullptr, 0));
    if (kind == "f32")
      return Value::f32_bits(static_cast<std::uint32_t>(std::stoul(body, nullptr, 16)));
    if (kind == "f64")
      return Value::f64_bits(std::stoull(body, nullptr, 16));
    if (kind == "ptr") {
      auto sign = body.find_first_of("+-");
      std::string sym = body.substr(0, sign);
      std::int64_t off = sign == std::string::npos ? 0 : std::stoll(body.substr(sign), nullptr, 0);
      auto b = mem.global_block(sym);
      if (!b)
        throw std::invalid_argument("unknown global '" + sym + "'");
      return Value::ptr(*b, off);
    }
  } catch (const std::logic_error &e) {
    if (dynamic_cast<const std::invalid_argument *>(&e) &&
        std::string(e.what()).rfind("unknown global", 0) == 0)
      throw;
    throw std::invalid_argument("malformed value '" + text + "'");
  }
  throw std::invalid_argument("unknown value kind '" + kind + "'");
}

} // namespace rtlcse::interp

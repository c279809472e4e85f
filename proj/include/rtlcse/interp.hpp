// Deterministic small-step reference interpreter for the RTL, plus the
// refinement relation used to compare runs of a program before and after a
// transformation.
#pragma once

#include "rtlcse/ir.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rtlcse::interp {

struct Value {
  enum class Kind : std::uint8_t { Undef, I32, I64, F32, F64, Ptr };
  Kind kind = Kind::Undef;
  std::uint64_t bits = 0;   // payload; pointer offset for Ptr
  std::uint32_t block = 0;  // Ptr only

  static Value undef() { return {}; }
  static Value i32(std::int32_t v) { return {Kind::I32, static_cast<std::uint32_t>(v), 0}; }
  static Value i64(std::int64_t v) { return {Kind::I64, static_cast<std::uint64_t>(v), 0}; }
  static Value f32_bits(std::uint32_t b) { return {Kind::F32, b, 0}; }
  static Value f64_bits(std::uint64_t b) { return {Kind::F64, b, 0}; }
  static Value f64(double d);
  static Value ptr(std::uint32_t block, std::int64_t offset) {
    return {Kind::Ptr, static_cast<std::uint64_t>(offset), block};
  }

  bool is_undef() const { return kind == Kind::Undef; }
  std::int32_t as_i32() const { return static_cast<std::int32_t>(static_cast<std::uint32_t>(bits)); }
  std::int64_t as_i64() const { return static_cast<std::int64_t>(bits); }
  std::int64_t offset() const { return static_cast<std::int64_t>(bits); }
  double as_f64() const;

  bool operator==(const Value &) const = default;
};

struct MemByte {
  enum class Kind : std::uint8_t { Undef, Byte, PtrFrag };
  Kind kind = Kind::Undef;
  std::uint8_t byte = 0;   // Byte value, or fragment index for PtrFrag
  std::uint32_t block = 0;
  std::int64_t offset = 0;
  bool operator==(const MemByte &) const = default;
};

struct Block {
  std::string name;  // global symbol, or empty for stack blocks
  std::vector<MemByte> bytes;
  bool live = true;
  bool operator==(const Block &) const = default;
};

/// Block 0 is never allocated; globals occupy blocks 1..n in symbol order.
class Memory {
public:
  Memory() : blocks_(1) {}

  /// Globals filled with bytes derived from (seed, symbol).
  static Memory for_program(const ir::Program &p, std::uint64_t seed);

  std::uint32_t alloc(std::int64_t size, std::string name = {});
  void free(std::uint32_t block);
  std::optional<std::uint32_t> global_block(const std::string &sym) const;

  bool valid(ir::Chunk chunk, const Value &addr) const;
  /// Nullopt when the address is invalid.
  std::optional<Value> load(ir::Chunk chunk, const Value &addr) const;
  bool store(ir::Chunk chunk, const Value &addr, const Value &v);

  const std::vector<Block> &blocks() const { return blocks_; }
  bool operator==(const Memory &) const = default;

private:
  std::vector<Block> blocks_;
};

class RegFile {
public:
  Value get(ir::Reg r) const { return r.id < regs_.size() ? regs_[r.id] : Value{}; }
  void set(ir::Reg r, Value v) {
    if (r.id >= regs_.size())
      regs_.resize(r.id + 1);
    regs_[r.id] = v;
  }
  bool operator==(const RegFile &o) const;

private:
  std::vector<Value> regs_;
};

struct Event {
  std::string symbol;
  std::vector<Value> args;
  Value result;
  bool operator==(const Event &) const = default;
};

struct Frame {
  const ir::Function *fn = nullptr;
  ir::NodeId return_pc;
  ir::Reg dest;
  RegFile regs;
  std::uint32_t stack_block = 0;
};

struct State {
  const ir::Program *program = nullptr;
  const ir::Function *fn = nullptr;
  ir::NodeId pc;
  RegFile regs;
  Memory mem;
  std::vector<Frame> callers;
  std::uint32_t stack_block = 0;
  std::uint64_t seed = 0;
};

struct StepResult {
  enum class Kind { Continue, Returned, Trapped };
  Kind kind = Kind::Continue;
  std::optional<Event> event;
  Value value;         // Returned
  std::string reason;  // Trapped
};

Value eval_op(const ir::Operation &op, const std::vector<Value> &args);
Value eval_addr(const ir::AddrMode &mode, const std::vector<Value> &args, const Memory &mem);
/// Stub result of an external call: Undef if any argument is Undef, otherwise
/// an I64 hash of (seed, symbol, args).
Value external_result(std::uint64_t seed, const std::string &symbol, const std::vector<Value> &args);

/// Executes the instruction at `s.pc`. Traps are reported in the result; the
/// state is then left unspecified.
StepResult step(State &s);

/// Initial state for calling `fn` with `args` (missing arguments are Undef).
State initial_state(const ir::Program &p, const std::string &fn, const std::vector<Value> &args,
                    std::uint64_t seed);

struct Outcome {
  enum class Status { Returned, Trapped, OutOfFuel };
  std::vector<Event> trace;
  Status status = Status::OutOfFuel;
  Value value;
  std::string reason;
};

/// Called before every step with the state about to execute.
using Observer = std::function<void(const State &)>;

Outcome run(const ir::Program &p, const std::vector<Value> &args, std::uint64_t fuel,
            std::uint64_t seed, const Observer &observe = {});
Outcome run_from(State s, std::uint64_t fuel, const Observer &observe = {});

bool value_refines(const Value &orig, const Value &transformed);
bool event_refines(const Event &orig, const Event &transformed);
bool outcome_refines(const Outcome &orig, const Outcome &transformed);

std::string print(const Value &v, const Memory *mem = nullptr);
std::string print(const Event &e, const Memory *mem = nullptr);
std::string print(const Outcome &o, const Memory *mem = nullptr);

/// Parses `undef`, `i32:N`, `i64:N`, `f32:0xBITS`, `f64:0xBITS` and
/// `ptr:SYM+OFF`. Throws std::invalid_argument.
Value parse_value(const std::string &text, const Memory &mem);

std::uint64_t mix64(std::uint64_t x);

} // namespace rtlcse::interp

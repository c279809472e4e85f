// The miniature RTL: functions are control-flow graphs of numbered nodes, each
// holding one instruction with explicit successors.
#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace rtlcse::ir {

struct Reg {
  std::uint32_t id = 0;
  auto operator<=>(const Reg &) const = default;
};

struct NodeId {
  std::uint32_t id = 0;
  auto operator<=>(const NodeId &) const = default;
};

enum class OpCode : std::uint8_t {
  Move,
  Const32,
  Const64,
  Add32,
  Add64,
  Sub32,
  Sub64,
  Mul32,
  Mul64,
  Shl32,
  Shl64,
  Sext32to64,
  AddImm32,
  AddImm64,
  MulImm32,
  MulImm64,
  FAdd64,
  FMul64,
};

/// An operation together with its immediate, if it has one.
struct Operation {
  OpCode code = OpCode::Move;
  std::int64_t imm = 0;
  auto operator<=>(const Operation &) const = default;
};

int arity(OpCode code);
bool has_imm(OpCode code);
const char *name(OpCode code);
std::optional<OpCode> opcode_from_name(const std::string &name);

enum class Chunk : std::uint8_t { Int8, Int16, Int32, Int64, Float32, Float64 };

int size_of(Chunk c);
const char *name(Chunk c);
std::optional<Chunk> chunk_from_name(const std::string &name);

struct AddrMode {
  enum class Kind : std::uint8_t { Based, Indexed, Global };
  Kind kind = Kind::Based;
  std::int64_t offset = 0;
  std::int32_t scale = 1;  // Indexed only
  std::string symbol;      // Global only
  auto operator<=>(const AddrMode &) const = default;
};

int arity(const AddrMode &mode);

enum class CondOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };
enum class Width : std::uint8_t { W32, W64 };

struct Condition {
  CondOp op = CondOp::Eq;
  Width width = Width::W32;
  auto operator<=>(const Condition &) const = default;
};

std::string name(Condition c);
std::optional<Condition> condition_from_name(const std::string &name);

struct Iop {
  Operation op;
  std::vector<Reg> args;
  Reg dest;
  NodeId succ;
  bool operator==(const Iop &) const = default;
};

struct Iload {
  Chunk chunk = Chunk::Int32;
  AddrMode mode;
  std::vector<Reg> args;
  Reg dest;
  NodeId succ;
  bool operator==(const Iload &) const = default;
};

struct Istore {
  Chunk chunk = Chunk::Int32;
  AddrMode mode;
  std::vector<Reg> args;
  Reg src;
  NodeId succ;
  bool operator==(const Istore &) const = default;
};

struct Icond {
  Condition cond;
  std::vector<Reg> args;
  NodeId ifso;
  NodeId ifnot;
  bool operator==(const Icond &) const = default;
};

struct Icall {
  std::string callee;
  std::vector<Reg> args;
  Reg dest;
  NodeId succ;
  bool operator==(const Icall &) const = default;
};

struct Inop {
  NodeId succ;
  bool operator==(const Inop &) const = default;
};

struct Ireturn {
  std::optional<Reg> value;
  bool operator==(const Ireturn &) const = default;
};

using Instruction = std::variant<Iop, Iload, Istore, Icond, Icall, Inop, Ireturn>;

/// Successors in positional order (true branch first for conditionals).
std::vector<NodeId> successors(const Instruction &i);
/// Rewrites every successor through `f`, keeping all other fields.
Instruction map_successors(const Instruction &i, const std::function<NodeId(NodeId)> &f);
/// Equality on every field except successors.
bool same_except_successors(const Instruction &a, const Instruction &b);
/// Registers read by the instruction.
std::vector<Reg> uses(const Instruction &i);
/// Register written by the instruction, if any.
std::optional<Reg> def(const Instruction &i);

struct Function {
  std::string name;
  std::vector<Reg> params;
  NodeId entry;
  std::map<NodeId, Instruction> code;
  std::int64_t stacksize = 0;

  bool operator==(const Function &) const = default;
  const Instruction &at(NodeId n) const;
  NodeId max_node() const;
  std::uint32_t max_reg() const;
};

struct Program {
  std::map<std::string, Function> functions;
  std::map<std::string, std::int64_t> globals;
  std::string main;

  bool operator==(const Program &) const = default;
};

class ParseError : public std::runtime_error {
public:
  ParseError(int line, const std::string &what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

/// Parses and validates. Throws ParseError.
Program parse(const std::string &text);

struct PrintOptions {
  /// Hide nop chains: edges are redirected past Inop nodes. Display only.
  bool compact = false;
};

std::string print(const Program &p, PrintOptions opts = {});
std::string print(const Function &f, PrintOptions opts = {});
std::string print(const Instruction &i);
std::string print(const AddrMode &mode, const std::vector<Reg> &args);
std::string print(Reg r);

/// One message per violated invariant; empty when well-formed.
std::vector<std::string> validate(const Program &p);
std::vector<std::string> validate(const Function &f, const Program *context = nullptr);

} // namespace rtlcse::ir

template <> struct std::hash<rtlcse::ir::Reg> {
  std::size_t operator()(rtlcse::ir::Reg r) const noexcept { return r.id; }
};
template <> struct std::hash<rtlcse::ir::NodeId> {
  std::size_t operator()(rtlcse::ir::NodeId n) const noexcept { return n.id; }
};

// Global common subexpression elimination over a catalog of equations
// `r = rhs`. The analysis computes, for every node, the set of equation ids
// known to hold before it; an independent checker re-verifies those sets
// from the catalog alone before the rewrite is allowed to use them.
#pragma once

#include "rtlcse/hset.hpp"
#include "rtlcse/interp.hpp"
#include "rtlcse/ir.hpp"
#include "rtlcse/typing.hpp"

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtlcse::cse3 {

using ir::Reg;
using ir::NodeId;

struct Rhs {
  enum class Kind : std::uint8_t { Op, Load };
  Kind kind = Kind::Op;
  ir::Operation op;                    // Op
  ir::Chunk chunk = ir::Chunk::Int32;  // Load
  ir::AddrMode mode;                   // Load
  std::vector<Reg> args;

  static Rhs make_op(ir::Operation op, std::vector<Reg> args);
  static Rhs make_load(ir::Chunk chunk, ir::AddrMode mode, std::vector<Reg> args);
  bool is_move() const { return kind == Kind::Op && op.code == ir::OpCode::Move; }
  auto operator<=>(const Rhs &) const = default;
};

struct Equation {
  Reg lhs;
  Rhs rhs;
  auto operator<=>(const Equation &) const = default;
};

using EqId = std::uint32_t;

/// Equations numbered densely from 1.
class Catalog {
public:
  EqId push(Equation e) {
    eqs_.push_back(std::move(e));
    return static_cast<EqId>(eqs_.size());
  }
  bool contains(EqId id) const { return id >= 1 && id <= eqs_.size(); }
  const Equation &at(EqId id) const { return eqs_.at(id - 1); }
  std::size_t size() const { return eqs_.size(); }
  const std::vector<Equation> &equations() const { return eqs_; }
  bool operator==(const Catalog &) const = default;

private:
  std::vector<Equation> eqs_;
};

using InternPtr = std::shared_ptr<hset::InternTable>;

struct Tables {
  explicit Tables(InternPtr t = std::make_shared<hset::InternTable>()) : intern(std::move(t)) {}

  InternPtr intern;
  Catalog catalog;
  std::map<Equation, EqId> eq_to_id;
  std::map<Rhs, hset::Set> rhs_to_ids;
  std::map<Reg, hset::Set> reg_to_ids;    // equations mentioning the register
  std::map<Reg, hset::Set> reg_to_moves;  // move equations with the register as lhs
  hset::Set mem_ids;                      // equations with a load rhs
  /// When set, intern_equation only looks up existing equations.
  bool frozen = false;

  hset::Set ids_of_rhs(const Rhs &r) const;
  hset::Set ids_of_reg(Reg r) const;
  hset::Set moves_of_reg(Reg r) const;
};

struct AbstractState {
  bool bot = true;
  hset::Set ids;

  static AbstractState Bot() { return {}; }
  static AbstractState Known(hset::Set s) { return {false, s}; }
  bool operator==(const AbstractState &o) const { return bot == o.bot && (bot || ids == o.ids); }
};

/// Per-node states; the sets belong to `intern`.
struct Invariants {
  InternPtr intern;
  std::map<NodeId, AbstractState> at;
};

enum class CallMode { ForgetAll, ForgetMemOnly };

struct Options {
  CallMode across_calls = CallMode::ForgetAll;
  /// Also record `d = r'` when `d := rhs` recomputes an available `r' = rhs`.
  bool glb_moves = true;
  /// Treat constants as too cheap to replace by moves.
  bool trivial_consts = true;
};

class AnalysisError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Existing id, or a fresh one. Returns 0 when the lhs occurs in the rhs, or
/// when the tables are frozen and the equation is unknown.
EqId intern_equation(Tables &t, const Equation &e);

Reg forward_move(const Tables &t, const AbstractState &s, Reg r);
AbstractState kill_reg(Tables &t, const AbstractState &s, Reg r);

struct MemRef {
  ir::AddrMode mode;
  std::vector<Reg> args;
  ir::Chunk chunk;
};
bool may_overlap(const MemRef &a, const MemRef &b);

std::optional<Reg> find_computed(Tables &t, const AbstractState &s, const Rhs &rhs);

AbstractState transfer(Tables &t, const AbstractState &s, const ir::Instruction &i,
                       const typing::TypeEnv &env, const Options &opts);

AbstractState join(Tables &t, const AbstractState &a, const AbstractState &b);
/// Lattice order: Bot below everything, Known(A) below Known(B) iff B ⊆ A.
bool leq(const AbstractState &a, const AbstractState &b);

struct AnalysisStats {
  std::uint64_t updates = 0;
  std::uint64_t equality_checks = 0;
  std::uint64_t equality_descents = 0;
};

struct Analysis {
  Tables tables;
  Invariants inv;
  AnalysisStats stats;
};

/// Forward fixed point. Throws AnalysisError when the iteration bound is hit.
Analysis analyze(const ir::Function &f, const typing::TypeEnv &env, const Options &opts);

/// Index tables recomputed from the catalog alone.
Tables rebuild_tables(const Catalog &c, InternPtr intern = std::make_shared<hset::InternTable>());

struct CheckVerdict {
  bool accepted = true;
  NodeId from;  // violating edge; `to` is 0 for per-node failures
  NodeId to;
  std::string reason;
};

CheckVerdict check_inductive(const ir::Function &f, const typing::TypeEnv &env, const Options &opts,
                             const Catalog &c, const Invariants &inv);

/// Replaces recomputations by moves and forwards moves into operands.
ir::Function rewrite(const ir::Function &f, Tables &t, const Invariants &inv, const Options &opts);

bool is_trivial(const ir::Operation &op, const Options &opts);

/// Whether the equation holds in the given registers and memory. A load from
/// an invalid address makes the equation hold vacuously.
bool eq_holds(const interp::RegFile &regs, const interp::Memory &mem, const Equation &e);
interp::Value eval_rhs(const interp::RegFile &regs, const interp::Memory &mem, const Rhs &rhs);

std::string print(const Rhs &r);
std::string print(const Equation &e);
/// `p: {eq, ...}` or `p: bot`, one line per node.
std::string dump_invariants(const ir::Function &f, const Catalog &c, const Invariants &inv);
std::string catalog_to_json(const Catalog &c);

} // namespace rtlcse::cse3

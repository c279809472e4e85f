// Flow-insensitive register type inference by unification.
#pragma once

#include "rtlcse/ir.hpp"

#include <map>
#include <optional>
#include <string>

namespace rtlcse::typing {

enum class Ty : std::uint8_t { T32, T64, TF32, TF64, TPtr };

const char *name(Ty t);

struct TypeEnv {
  std::map<ir::Reg, Ty> types;

  /// Registers absent from the map are reported as T64.
  Ty of(ir::Reg r) const;
  bool operator==(const TypeEnv &) const = default;
};

struct IllTyped {
  ir::Reg reg;
  ir::NodeId node;  // 0 when the conflict is not tied to a node
  std::string message;
};

struct Inference {
  TypeEnv env;
  std::optional<IllTyped> error;
  bool ok() const { return !error; }
};

Inference infer(const ir::Function &f);

/// Whether a store of `c` from a register of type `t` can be read back
/// unchanged by a load of `c`.
bool chunk_matches(ir::Chunk c, Ty t);

/// One `rN: ty` line per register, ascending.
std::string print(const TypeEnv &env);

} // namespace rtlcse::typing

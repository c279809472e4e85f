// Removal of self-moves and of dead register assignments.
#pragma once

#include "rtlcse/ir.hpp"

#include <map>
#include <set>

namespace rtlcse::cleanup {

/// `rX = move rX -> s` becomes `nop -> s`.
ir::Function elim_self_moves(const ir::Function &f);

struct LiveSet {
  std::map<ir::NodeId, std::set<ir::Reg>> live_in;
  std::map<ir::NodeId, std::set<ir::Reg>> live_out;
};

LiveSet liveness(const ir::Function &f);

/// Ops and loads whose destination is dead become nops; repeated until
/// nothing changes.
ir::Function dce(const ir::Function &f);

} // namespace rtlcse::cleanup

// Code duplication (first-iteration unrolling, loop rotation) and the
// reverse-mapping verifier that validates any duplication after the fact.
#pragma once

#include "rtlcse/ir.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rtlcse::dup {

using ir::Function;
using ir::NodeId;

/// Maps every node of a transformed function to the node it was copied from.
using RevMap = std::map<NodeId, NodeId>;

struct NaturalLoop {
  NodeId header;
  std::set<NodeId> body;  // includes the header
  std::set<NodeId> back_edge_sources;
  bool innermost = false;
  bool operator==(const NaturalLoop &) const = default;
};

/// Immediate dominators of the nodes reachable from the entry; the entry maps
/// to itself.
std::map<NodeId, NodeId> immediate_dominators(const Function &f);
bool dominates(const std::map<NodeId, NodeId> &idom, NodeId a, NodeId b);

/// One loop per header, ordered by header.
std::vector<NaturalLoop> find_loops(const Function &f);

struct Duplicated {
  Function fn;
  RevMap map;
};

struct DupResult {
  std::optional<Duplicated> out;
  std::string skipped;  // reason, when `out` is empty
};

DupResult unroll_first(const Function &f, const NaturalLoop &loop, std::size_t max_body = 30);
DupResult rotate(const Function &f, const NaturalLoop &loop);

/// Applies the transformation to every innermost loop in turn.
struct PassResult {
  Function fn;
  RevMap map;
  int applied = 0;
  int skipped = 0;
};
PassResult unroll_all(const Function &f, std::size_t max_body = 30);
PassResult rotate_all(const Function &f);

RevMap identity_map(const Function &f);
/// The map of applying `first` then `second`.
RevMap compose(const RevMap &first, const RevMap &second);

struct Verdict {
  bool accepted = true;
  NodeId node;  // first failing node; 0 for function-level mismatches
  std::string reason;
};

Verdict verify_dup(const Function &orig, const Function &transf, const RevMap &f);

/// `{"p'": p, ...}`.
std::string to_json(const RevMap &m);
/// Throws std::invalid_argument on malformed input.
RevMap revmap_from_json(const std::string &text);

} // namespace rtlcse::dup

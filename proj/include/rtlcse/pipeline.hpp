// Pass composition with the checkers wired in: duplication passes are
// validated by verify_dup, the CSE rewrite only runs on invariants accepted by
// check_inductive.
#pragma once

#include "rtlcse/cse3.hpp"
#include "rtlcse/ir.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtlcse::pipeline {

enum class Pass { Unroll, Rotate, Cse3, SelfMove, Dce };

const char *name(Pass p);
std::optional<Pass> pass_from_name(const std::string &s);
/// Comma-separated pass names; throws std::invalid_argument.
std::vector<Pass> parse_passes(const std::string &csv);

struct Config {
  std::vector<Pass> passes;
  std::size_t unroll_threshold = 30;
  cse3::Options cse3;
};

class PipelineError : public std::runtime_error {
public:
  enum class Kind { IllTyped, DupRejected, NotInductive, Analysis, Malformed };
  PipelineError(Kind k, const std::string &what) : std::runtime_error(what), kind_(k) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

struct LoopStat {
  ir::NodeId header;
  std::size_t body_nodes = 0;
  std::size_t ops_and_loads = 0;  // Iop and Iload nodes in the body
};

struct FunctionReport {
  std::string name;
  std::size_t nodes_before = 0, nodes_after = 0;
  std::size_t ops_before = 0, loads_before = 0;
  std::size_t ops_after = 0, loads_after = 0;
  std::vector<LoopStat> loops_before, loops_after;
  std::size_t catalog_size = 0;
  std::uint64_t analysis_updates = 0;
  int unrolled = 0, rotated = 0;
  double wall_ms = 0;
};

struct Result {
  ir::Program program;
  std::vector<FunctionReport> reports;
  std::string invariants;  // filled when requested
};

/// Throws PipelineError.
Result run(const ir::Program &p, const Config &cfg, bool dump_invariants = false);

std::vector<LoopStat> loop_stats(const ir::Function &f);
/// Wall time is omitted when `timing` is false, making the text reproducible.
std::string format_stats(const Result &r, bool timing = true);

} // namespace rtlcse::pipeline

// Random well-typed programs with array-style loops, for differential testing.
#pragma once

#include "rtlcse/interp.hpp"
#include "rtlcse/ir.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rtlcse::gen {

/// splitmix64 stream; the same seed gives the same sequence on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform in [lo, hi].
  std::int64_t range(std::int64_t lo, std::int64_t hi);
  bool chance(double p);
  template <typename T> const T &pick(const std::vector<T> &v) { return v[range(0, v.size() - 1)]; }

private:
  std::uint64_t state_;
};

struct Weights {
  int arith = 8;
  int repeat = 5;
  int load = 5;
  int store = 3;
  int loop = 3;
  int branch = 2;
  int call = 1;
};

struct GenConfig {
  std::uint64_t seed = 1;
  int min_stmts = 6;
  int max_stmts = 14;
  int max_depth = 3;  // loop nesting
  int max_loop_bound = 6;
  /// Data globals; pointer arguments point to the start of one of them.
  std::vector<std::pair<std::string, std::int64_t>> globals = {{"A", 256}, {"B", 256}, {"C", 256}};
  Weights weights;
  bool helper = true;
  double undef_arg_probability = 0.03;
  /// When nonzero, top-level statements are added to main until it has at
  /// least this many nodes.
  std::size_t target_nodes = 0;
};

/// Program number `index` of the stream defined by `cfg.seed`.
ir::Program generate(const GenConfig &cfg, std::uint64_t index);

/// Arguments for `p.main` consistent with its inferred parameter types.
std::vector<interp::Value> random_args(const ir::Program &p, const GenConfig &cfg, std::uint64_t seed);

} // namespace rtlcse::gen

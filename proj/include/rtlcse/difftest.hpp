// Differential testing: generated programs are run before and after a
// pipeline and the outcomes compared under the refinement relation.
#pragma once

#include "rtlcse/gen.hpp"
#include "rtlcse/pipeline.hpp"

#include <optional>
#include <string>

namespace rtlcse::difftest {

struct Config {
  gen::GenConfig gen;
  std::size_t programs = 100;
  std::size_t inputs = 20;
  std::uint64_t fuel = 1000000;
};

struct Counterexample {
  std::size_t program_index = 0;
  std::string program;
  std::string optimized;
  std::string args;
  std::string original_outcome;
  std::string optimized_outcome;
  std::string error;  // pipeline failure, if that is what went wrong
};

struct Report {
  std::size_t programs = 0;
  std::size_t runs = 0;
  std::size_t violations = 0;
  std::size_t pipeline_failures = 0;
  std::size_t returned = 0;
  std::size_t trapped = 0;
  std::size_t out_of_fuel = 0;
  std::optional<Counterexample> first;

  bool ok() const { return violations == 0 && pipeline_failures == 0; }
};

Report run(const Config &cfg, const pipeline::Config &pipe);

/// Deterministic text rendering of the report.
std::string format(const Report &r);

} // namespace rtlcse::difftest

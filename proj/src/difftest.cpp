#include "rtlcse/difftest.hpp"

#include <sstream>

namespace rtlcse::difftest {

namespace {

std::string format_args(const std::vector<interp::Value> &args, const interp::Memory &mem) {
  std::string out;
  for (std::size_t i = 0; i < args.size(); ++i)
    out += (i ? " " : "") + interp::print(args[i], &mem);
  return out;
}

} // namespace

Report run(const Config &cfg, const pipeline::Config &pipe) {
  Report rep;
  for (std::size_t i = 0; i < cfg.programs; ++i) {
    ir::Program p = gen::generate(cfg.gen, i);
    ++rep.programs;
    ir::Program q;
    try {
      q = pipeline::run(p, pipe).program;
    } catch (const std::exception &e) {
      ++rep.pipeline_failures;
      if (!rep.first)
        rep.first = Counterexample{i, ir::print(p), {}, {}, {}, {}, e.what()};
      continue;
    }
    for (std::size_t k = 0; k < cfg.inputs; ++k) {
      std::uint64_t seed = interp::mix64(cfg.gen.seed * 1000003 + i * 1009 + k);
      auto args = gen::random_args(p, cfg.gen, seed);
      interp::Outcome a = interp::run(p, args, cfg.fuel, seed);
      interp::Outcome b = interp::run(q, args, cfg.fuel, seed);
      ++rep.runs;
      switch (a.status) {
      case interp::Outcome::Status::Returned:
        ++rep.returned;
        break;
      case interp::Outcome::Status::Trapped:
        ++rep.trapped;
        break;
      case interp::Outcome::Status::OutOfFuel:
        ++rep.out_of_fuel;
        break;
      }
      if (interp::outcome_refines(a, b))
        continue;
      ++rep.violations;
      if (!rep.first) {
        interp::Memory mem = interp::Memory::for_program(p, seed);
        rep.first = Counterexample{i,
                                   ir::print(p),
                                   ir::print(q),
                                   format_args(args, mem),
                                   interp::print(a, &mem),
                                   interp::print(b, &mem),
                                   {}};
      }
    }
  }
  return rep;
}

std::string format(const Report &r) {
  std::ostringstream os;
  os << "programs: " << r.programs << "\n";
  os << "runs: " << r.runs << "\n";
  os << "original returned: " << r.returned << "\n";
  os << "original trapped: " << r.trapped << "\n";
  os << "original out of fuel: " << r.out_of_fuel << "\n";
  os << "pipeline failures: " << r.pipeline_failures << "\n";
  os << "violations: " << r.violations << "\n";
  if (r.first) {
    const Counterexample &c = *r.first;
    os << "first counterexample: program " << c.program_index << "\n";
    if (!c.error.empty()) {
      os << "error: " << c.error << "\n";
    } else {
      os << "arguments: " << c.args << "\n";
      os << "original outcome:\n" << c.original_outcome;
      os << "optimized outcome:\n" << c.optimized_outcome;
    }
    os << "program:\n" << c.program;
    if (!c.optimized.empty())
      os << "optimized:\n" << c.optimized;
  }
  return os.str();
}

} // namespace rtlcse::difftest

// Command-line driver over the rtlcse C interface.
#include "rtlcse/rtlcse.h"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum Exit { kOk = 0, kUsage = 1, kRejected = 2, kViolation = 3 };

struct ProgramDeleter {
  void operator()(rtlcse_program *p) const { rtlcse_program_free(p); }
};
using ProgramPtr = std::unique_ptr<rtlcse_program, ProgramDeleter>;

struct StringDeleter {
  void operator()(char *s) const { rtlcse_string_free(s); }
};
using CString = std::unique_ptr<char, StringDeleter>;

struct Failure {
  int code;
};

int exit_code(rtlcse_status s) {
  switch (s) {
  case RTLCSE_OK:
    return kOk;
  case RTLCSE_ERR_REJECTED:
    return kRejected;
  case RTLCSE_ERR_VIOLATION:
    return kViolation;
  default:
    return kUsage;
  }
}

void check(rtlcse_status s, const std::string &context) {
  if (s == RTLCSE_OK)
    return;
  std::cerr << "rtlcse: " << context << ": " << rtlcse_last_error() << "\n";
  throw Failure{exit_code(s)};
}

std::string read_file(const std::string &path) {
  if (path == "-") {
    std::ostringstream os;
    os << std::cin.rdbuf();
    return os.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "rtlcse: cannot read " << path << "\n";
    throw Failure{kUsage};
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_output(const std::string &path, const std::string &text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) {
    std::cerr << "rtlcse: cannot write " << path << "\n";
    throw Failure{kUsage};
  }
}

ProgramPtr load(const std::string &path) {
  std::string text = read_file(path);
  rtlcse_program *p = nullptr;
  check(rtlcse_program_parse(text.c_str(), &p), path);
  return ProgramPtr(p);
}

struct PipelineFlags {
  std::string passes;
  std::size_t unroll_threshold = 30;
  bool across_calls = false;
  bool no_glb_moves = false;
  bool no_trivial_consts = false;

  void add_to(CLI::App *cmd, const std::string &default_passes) {
    passes = default_passes;
    cmd->add_option("--passes", passes, "Comma-separated passes: unroll,rotate,cse3,selfmove,dce")
        ->capture_default_str();
    cmd->add_option("--unroll-threshold", unroll_threshold, "Largest loop body unrolled, in nodes")
        ->capture_default_str();
    cmd->add_flag("--cse3-across-calls", across_calls, "Keep register equations across calls");
    cmd->add_flag("--no-cse3-glb-moves", no_glb_moves, "Do not record r = r' for recomputations");
    cmd->add_flag("--no-trivial-consts", no_trivial_consts, "Allow constants to be replaced by moves");
  }

  rtlcse_pipeline_options options() const {
    rtlcse_pipeline_options o;
    rtlcse_pipeline_options_init(&o);
    o.passes = passes.c_str();
    o.unroll_threshold = unroll_threshold;
    o.cse3_across_calls = across_calls;
    o.cse3_glb_moves = !no_glb_moves;
    o.trivial_consts = !no_trivial_consts;
    return o;
  }
};

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Global CSE and loop-invariant code motion for a small RTL"};
  app.require_subcommand(1);

  // opt
  auto *opt = app.add_subcommand("opt", "Optimize a program and print the result");
  std::string opt_file, opt_out;
  bool dump_invariants = false, compact = false;
  PipelineFlags opt_flags;
  opt->add_option("file", opt_file, "Input program (- for stdin)")->required();
  opt_flags.add_to(opt, "");
  opt->add_flag("--dump-invariants", dump_invariants, "Print the invariants computed by cse3");
  opt->add_flag("--compact", compact, "Print edges past nop chains");
  opt->add_option("-o", opt_out, "Output file");

  // run
  auto *run = app.add_subcommand("run", "Interpret a program");
  std::string run_file;
  std::vector<std::string> run_args;
  std::uint64_t fuel = 1000000, seed = 0;
  run->add_option("file", run_file, "Input program (- for stdin)")->required();
  run->add_option("args", run_args, "Arguments: undef, i32:N, i64:N, f32:0xBITS, f64:0xBITS, ptr:SYM+OFF");
  run->add_option("--fuel", fuel, "Step limit")->capture_default_str();
  run->add_option("--seed", seed, "Seed for global memory and external calls")->capture_default_str();

  // typecheck
  auto *tc = app.add_subcommand("typecheck", "Print inferred register types");
  std::string tc_file;
  tc->add_option("file", tc_file, "Input program (- for stdin)")->required();

  // check-dup
  auto *cd = app.add_subcommand("check-dup", "Validate a duplication against its reverse mapping");
  std::string cd_orig, cd_transf, cd_map;
  cd->add_option("orig", cd_orig, "Original program")->required();
  cd->add_option("transf", cd_transf, "Transformed program")->required();
  cd->add_option("map", cd_map, "Reverse mapping as JSON")->required();

  // difftest
  auto *dt = app.add_subcommand("difftest", "Compare random programs before and after a pipeline");
  rtlcse_difftest_options dopts;
  rtlcse_difftest_options_init(&dopts);
  PipelineFlags dt_flags;
  dt_flags.add_to(dt, "unroll,cse3,selfmove,dce");
  dt->add_option("--programs", dopts.programs, "Number of programs")->capture_default_str();
  dt->add_option("--inputs", dopts.inputs, "Input vectors per program")->capture_default_str();
  dt->add_option("--seed", dopts.seed, "Generator seed")->capture_default_str();
  dt->add_option("--fuel", dopts.fuel, "Step limit per run")->capture_default_str();

  // stats
  auto *st = app.add_subcommand("stats", "Report instruction counts before and after a pipeline");
  std::string st_file;
  bool no_timing = false;
  PipelineFlags st_flags;
  st->add_option("file", st_file, "Input program (- for stdin)")->required();
  st_flags.add_to(st, "unroll,cse3,selfmove,dce");
  st->add_flag("--no-timing", no_timing, "Omit wall time");

  // generate
  auto *gn = app.add_subcommand("generate", "Print a random program");
  std::uint64_t gen_seed = 1, gen_index = 0;
  gn->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  gn->add_option("--index", gen_index, "Program index in the seeded stream")->capture_default_str();

  // hset-audit
  auto *ha = app.add_subcommand("hset-audit", "Check hash-consed sets against a naive model");
  std::uint64_t audit_seed = 1;
  std::size_t audit_ops = 100000;
  ha->add_option("--seed", audit_seed, "Random seed")->capture_default_str();
  ha->add_option("--ops", audit_ops, "Number of operations")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*opt) {
      ProgramPtr p = load(opt_file);
      auto o = opt_flags.options();
      rtlcse_program *out = nullptr;
      char *inv = nullptr;
      check(rtlcse_optimize(p.get(), &o, &out, dump_invariants ? &inv : nullptr), opt_file);
      ProgramPtr result(out);
      CString inv_text(inv);
      char *text = nullptr;
      check(rtlcse_program_print(result.get(), compact, &text), "print");
      CString program_text(text);
      if (inv_text)
        std::cout << inv_text.get();
      write_output(opt_out, program_text.get());
    } else if (*run) {
      ProgramPtr p = load(run_file);
      std::vector<const char *> argv_values;
      for (const auto &a : run_args)
        argv_values.push_back(a.c_str());
      char *text = nullptr;
      check(rtlcse_run(p.get(), argv_values.data(), argv_values.size(), fuel, seed, nullptr, &text), run_file);
      CString out(text);
      std::cout << out.get();
    } else if (*tc) {
      ProgramPtr p = load(tc_file);
      char *text = nullptr;
      check(rtlcse_typecheck(p.get(), &text), tc_file);
      CString out(text);
      std::cout << out.get();
    } else if (*cd) {
      ProgramPtr a = load(cd_orig), b = load(cd_transf);
      std::string map = read_file(cd_map);
      char *text = nullptr;
      rtlcse_status s = rtlcse_check_dup(a.get(), b.get(), map.c_str(), &text);
      CString out(text);
      if (out)
        std::cout << out.get();
      if (s != RTLCSE_OK && !out)
        check(s, "check-dup");
      return exit_code(s);
    } else if (*dt) {
      auto o = dt_flags.options();
      char *text = nullptr;
      rtlcse_status s = rtlcse_difftest(&dopts, &o, &text);
      CString out(text);
      if (out)
        std::cout << out.get();
      else
        check(s, "difftest");
      return exit_code(s);
    } else if (*st) {
      ProgramPtr p = load(st_file);
      auto o = st_flags.options();
      char *text = nullptr;
      check(rtlcse_stats(p.get(), &o, !no_timing, &text), st_file);
      CString out(text);
      std::cout << out.get();
    } else if (*gn) {
      rtlcse_program *p = nullptr;
      check(rtlcse_program_generate(gen_seed, gen_index, &p), "generate");
      ProgramPtr prog(p);
      char *text = nullptr;
      check(rtlcse_program_print(prog.get(), 0, &text), "print");
      CString out(text);
      std::cout << out.get();
    } else if (*ha) {
      char *text = nullptr;
      rtlcse_status s = rtlcse_hset_audit(audit_seed, audit_ops, &text);
      CString out(text);
      if (out)
        std::cout << out.get();
      else
        check(s, "hset-audit");
      return exit_code(s);
    }
  } catch (const Failure &f) {
    return f.code;
  }
  return kOk;
}

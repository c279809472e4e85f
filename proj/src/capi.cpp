#include "rtlcse/rtlcse.h"

#include "rtlcse/difftest.hpp"
#include "rtlcse/dup.hpp"
#include "rtlcse/gen.hpp"
#include "rtlcse/hset.hpp"
#include "rtlcse/interp.hpp"
#include "rtlcse/ir.hpp"
#include "rtlcse/pipeline.hpp"
#include "rtlcse/typing.hpp"

#include <cstring>
#include <new>
#include <string>

struct rtlcse_program {
  rtlcse::ir::Program program;
};

namespace {

thread_local std::string last_error;

rtlcse_status fail(rtlcse_status s, std::string msg) {
  last_error = std::move(msg);
  return s;
}

char *dup_string(const std::string &s) {
  char *out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

rtlcse::pipeline::Config to_config(const rtlcse_pipeline_options *o) {
  rtlcse::pipeline::Config cfg;
  if (o == nullptr)
    return cfg;
  if (o->passes)
    cfg.passes = rtlcse::pipeline::parse_passes(o->passes);
  cfg.unroll_threshold = o->unroll_threshold;
  cfg.cse3.across_calls =
      o->cse3_across_calls ? rtlcse::cse3::CallMode::ForgetMemOnly : rtlcse::cse3::CallMode::ForgetAll;
  cfg.cse3.glb_moves = o->cse3_glb_moves != 0;
  cfg.cse3.trivial_consts = o->trivial_consts != 0;
  return cfg;
}

rtlcse_status pipeline_status(const rtlcse::pipeline::PipelineError &e) {
  using K = rtlcse::pipeline::PipelineError::Kind;
  switch (e.kind()) {
  case K::IllTyped:
    return RTLCSE_ERR_TYPING;
  case K::DupRejected:
  case K::NotInductive:
    return RTLCSE_ERR_REJECTED;
  case K::Analysis:
  case K::Malformed:
    return RTLCSE_ERR_INTERNAL;
  }
  return RTLCSE_ERR_INTERNAL;
}

/// Runs `body`, mapping exceptions to status codes.
template <typename F> rtlcse_status guarded(F &&body) {
  try {
    last_error.clear();
    return body();
  } catch (const rtlcse::ir::ParseError &e) {
    return fail(RTLCSE_ERR_PARSE, e.what());
  } catch (const rtlcse::pipeline::PipelineError &e) {
    return fail(pipeline_status(e), e.what());
  } catch (const std::invalid_argument &e) {
    return fail(RTLCSE_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc &) {
    return fail(RTLCSE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception &e) {
    return fail(RTLCSE_ERR_INTERNAL, e.what());
  }
}

} // namespace

extern "C" {

const char *rtlcse_last_error(void) { return last_error.c_str(); }

const char *rtlcse_status_name(rtlcse_status s) {
  switch (s) {
  case RTLCSE_OK:
    return "ok";
  case RTLCSE_ERR_INVALID_ARGUMENT:
    return "invalid argument";
  case RTLCSE_ERR_PARSE:
    return "parse error";
  case RTLCSE_ERR_TYPING:
    return "typing error";
  case RTLCSE_ERR_REJECTED:
    return "rejected by checker";
  case RTLCSE_ERR_VIOLATION:
    return "refinement violation";
  case RTLCSE_ERR_INTERNAL:
    return "internal error";
  }
  return "unknown status";
}

void rtlcse_string_free(char *s) { delete[] s; }

rtlcse_status rtlcse_program_parse(const char *text, rtlcse_program **out) {
  if (!text || !out)
    return fail(RTLCSE_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new rtlcse_program{rtlcse::ir::parse(text)};
    return RTLCSE_OK;
  });
}

rtlcse_status rtlcse_program_generate(uint64_t seed, uint64_t index, rtlcse_program **out) {
  if (!out)
    return fail(RTLCSE_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    rtlcse::gen::GenConfig cfg;
    cfg.seed = seed;
    *out = new rtlcse_program{rtlcse::gen::generate(cfg, index)};
    return RTLCSE_OK;
  });
}

void rtlcse_program_free(rtlcse_program *p) { delete p; }

rtlcse_status rtlcse_program_print(const rtlcse_program *p, int compact, char **out) {
  if (!p || !out)
    return fail(RTLCSE_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = dup_string(rtlcse::ir::print(p->program, {compact != 0}));
    return RTLCSE_OK;
  });
}

void rtlcse_pipeline_options_init(rtlcse_pipeline_options *o) {
  if (!o)
    return;
  o->passes = "";
  o->unroll_threshold = 30;
  o->cse3_across_calls = 0;
  o->cse3_glb_moves = 1;
  o->trivial_consts = 1;
}

void rtlcse_difftest_options_init(rtlcse_difftest_options *o) {
  if (!o)
    return;
  o->seed = 1;
  o->programs = 100;
  o->inputs = 20;
  o->fuel = 1000000;
}

rtlcse_status rtlcse_optimize(const rtlcse_program *in, const rtlcse_pipeline_options *o,
                              rtlcse_program **out, char **invariants) {
  if (!in || !out)
    return fail(RTLCSE_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto res = rtlcse::pipeline::run(in->program, to_config(o), invariants != nullptr);
    *out = new rtlcse_program{std::move(res.program)};
    if (invariants)
      *invariants = dup_string(res.invariants);
    return RTLCSE_OK;
  });
}

rtlcse_status rtlcse_stats(const rtlcse_program *in, const rtlcse_pipeline_options *o, int timing,
                           char **report) {
  if (!in || !report)
    return fail(RTLCSE_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto res = rtlcse::pipeline::run(in->program, to_config(o));
    *report = dup_string(rtlcse::pipeline::format_stats(res, timing != 0));
    return RTLCSE_OK;
  });
}

rtlcse_status rtlcse_typecheck(const rtlcse_program *p, char **report) {
  if (!p || !report)
    return fail(RTLCSE_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::string out;
    for (const auto &[name, f] : p->program.functions) {
      auto ti = rtlcse::typing::infer(f);
      if (!ti.ok())
        return fail(RTLCSE_ERR_TYPING, name + ": " + ti.error->message);
      out += "function " + name + "\n" + rtlcse::typing::print(ti.env);
    }
    *report = dup_string(out);
    return RTLCSE_OK;
  });
}

rtlcse_status rtlcse_run(const rtlcse_program *p, const char *const *args, size_t nargs, uint64_t fuel,
                         uint64_t seed, rtlcse_run_status *status, char **outcome) {
  if (!p || (nargs && !args) || !outcome)
    return fail(RTLCSE_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto mem = rtlcse::interp::Memory::for_program(p->program, seed);
    std::vector<rtlcse::interp::Value> values;
    for (size_t i = 0; i < nargs; ++i)
      values.push_back(rtlcse::interp::parse_value(args[i] ? args[i] : "", mem));
    const auto &main = p->program.functions.at(p->program.main);
    if (values.size() != main.params.size())
      return fail(RTLCSE_ERR_INVALID_ARGUMENT, main.name + " expects " + std::to_string(main.params.size()) +
                                                   " argument(s), got " + std::to_string(values.size()));
    auto o = rtlcse::interp::run(p->program, values, fuel, seed);
    if (status)
      *status = static_cast<rtlcse_run_status>(static_cast<int>(o.status));
    *outcome = dup_string(rtlcse::interp::print(o, &mem));
    return RTLCSE_OK;
  });
}

rtlcse_status rtlcse_check_dup(const rtlcse_program *orig, const rtlcse_program *transf,
                               const char *map_json, char **report) {
  if (!orig || !transf || !map_json || !report)
    return fail(RTLCSE_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto map = rtlcse::dup::revmap_from_json(map_json);
    const auto &a = orig->program.functions;
    const auto &b = transf->program.functions;
    if (a.size() != 1 || b.size() != 1)
      return fail(RTLCSE_ERR_INVALID_ARGUMENT, "check-dup expects exactly one function per program");
    auto v = rtlcse::dup::verify_dup(a.begin()->second, b.begin()->second, map);
    if (v.accepted) {
      *report = dup_string("accepted\n");
      return RTLCSE_OK;
    }
    std::string msg = "rejected at node " + std::to_string(v.node.id) + ": " + v.reason;
    *report = dup_string(msg + "\n");
    return fail(RTLCSE_ERR_REJECTED, msg);
  });
}

rtlcse_status rtlcse_difftest(const rtlcse_difftest_options *d, const rtlcse_pipeline_options *o,
                              char **report) {
  if (!d || !report)
    return fail(RTLCSE_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    rtlcse::difftest::Config cfg;
    cfg.gen.seed = d->seed;
    cfg.programs = d->programs;
    cfg.inputs = d->inputs;
    cfg.fuel = d->fuel;
    auto rep = rtlcse::difftest::run(cfg, to_config(o));
    *report = dup_string(rtlcse::difftest::format(rep));
    if (!rep.ok())
      return fail(RTLCSE_ERR_VIOLATION, std::to_string(rep.violations) + " violation(s), " +
                                            std::to_string(rep.pipeline_failures) + " pipeline failure(s)");
    return RTLCSE_OK;
  });
}

rtlcse_status rtlcse_hset_audit(uint64_t seed, size_t ops, char **report) {
  if (!report)
    return fail(RTLCSE_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto r = rtlcse::hset::random_audit(seed, ops);
    std::string out = "operations: " + std::to_string(r.ops) + "\nqueries: " + std::to_string(r.queries) +
                      "\nmismatches: " + std::to_string(r.mismatches) +
                      "\nunreduced: " + std::to_string(r.unreduced) +
                      "\nshortcut descents: " + std::to_string(r.shortcut_descents) + "\n";
    if (!r.first_mismatch.empty())
      out += "first mismatch: " + r.first_mismatch + "\n";
    *report = dup_string(out);
    if (r.mismatches || r.unreduced || r.shortcut_descents)
      return fail(RTLCSE_ERR_VIOLATION, "hset audit failed");
    return RTLCSE_OK;
  });
}

} // extern "C"

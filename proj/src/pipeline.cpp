#include "rtlcse/pipeline.hpp"

#include "rtlcse/cleanup.hpp"
#include "rtlcse/dup.hpp"
#include "rtlcse/typing.hpp"

#include <chrono>
#include <sstream>

namespace rtlcse::pipeline {

using Kind = PipelineError::Kind;

const char *name(Pass p) {
  switch (p) {
  case Pass::Unroll:
    return "unroll";
  case Pass::Rotate:
    return "rotate";
  case Pass::Cse3:
    return "cse3";
  case Pass::SelfMove:
    return "selfmove";
  case Pass::Dce:
    return "dce";
  }
  return "?";
}

std::optional<Pass> pass_from_name(const std::string &s) {
  for (Pass p : {Pass::Unroll, Pass::Rotate, Pass::Cse3, Pass::SelfMove, Pass::Dce})
    if (s == name(p))
      return p;
  return std::nullopt;
}

std::vector<Pass> parse_passes(const std::string &csv) {
  std::vector<Pass> out;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty())
      continue;
    auto p = pass_from_name(item);
    if (!p)
      throw std::invalid_argument("unknown pass '" + item + "'");
    out.push_back(*p);
  }
  return out;
}

namespace {

void count(const ir::Function &f, std::size_t &ops, std::size_t &loads) {
  ops = loads = 0;
  for (const auto &[n, ins] : f.code) {
    ops += std::holds_alternative<ir::Iop>(ins);
    loads += std::holds_alternative<ir::Iload>(ins);
  }
}

void check_dup(const ir::Function &before, const dup::PassResult &r, const char *pass) {
  dup::Verdict v = dup::verify_dup(before, r.fn, r.map);
  if (!v.accepted)
    throw PipelineError(Kind::DupRejected, std::string(pass) + " on " + before.name +
                                               ": duplication rejected at node " +
                                               std::to_string(v.node.id) + ": " + v.reason);
}

ir::Function run_cse3(const ir::Function &f, const Config &cfg, FunctionReport &rep, std::string *dump) {
  typing::Inference ti = typing::infer(f);
  if (!ti.ok())
    throw PipelineError(Kind::IllTyped, f.name + ": " + ti.error->message);
  cse3::Analysis a;
  try {
    a = cse3::analyze(f, ti.env, cfg.cse3);
  } catch (const cse3::AnalysisError &e) {
    throw PipelineError(Kind::Analysis, f.name + ": " + e.what());
  }
  cse3::CheckVerdict v = cse3::check_inductive(f, ti.env, cfg.cse3, a.tables.catalog, a.inv);
  if (!v.accepted)
    throw PipelineError(Kind::NotInductive, f.name + ": invariants rejected at " +
                                                std::to_string(v.from.id) + "->" + std::to_string(v.to.id) +
                                                ": " + v.reason);
  rep.catalog_size = a.tables.catalog.size();
  rep.analysis_updates = a.stats.updates;
  if (dump)
    *dump += "function " + f.name + "\n" + cse3::dump_invariants(f, a.tables.catalog, a.inv);
  return cse3::rewrite(f, a.tables, a.inv, cfg.cse3);
}

} // namespace

std::vector<LoopStat> loop_stats(const ir::Function &f) {
  std::vector<LoopStat> out;
  for (const dup::NaturalLoop &l : dup::find_loops(f)) {
    LoopStat s{l.header, l.body.size(), 0};
    for (ir::NodeId n : l.body) {
      const ir::Instruction &i = f.at(n);
      s.ops_and_loads += std::holds_alternative<ir::Iop>(i) || std::holds_alternative<ir::Iload>(i);
    }
    out.push_back(s);
  }
  return out;
}

Result run(const ir::Program &p, const Config &cfg, bool dump_invariants) {
  Result res;
  res.program = p;
  for (auto &[fname, fn] : res.program.functions) {
    auto start = std::chrono::steady_clock::now();
    FunctionReport rep;
    rep.name = fname;
    rep.nodes_before = fn.code.size();
    count(fn, rep.ops_before, rep.loads_before);
    rep.loops_before = loop_stats(fn);
    for (Pass pass : cfg.passes) {
      switch (pass) {
      case Pass::Unroll: {
        dup::PassResult r = dup::unroll_all(fn, cfg.unroll_threshold);
        check_dup(fn, r, "unroll");
        rep.unrolled += r.applied;
        fn = std::move(r.fn);
        break;
      }
      case Pass::Rotate: {
        dup::PassResult r = dup::rotate_all(fn);
        check_dup(fn, r, "rotate");
        rep.rotated += r.applied;
        fn = std::move(r.fn);
        break;
      }
      case Pass::Cse3:
        fn = run_cse3(fn, cfg, rep, dump_invariants ? &res.invariants : nullptr);
        break;
      case Pass::SelfMove:
        fn = cleanup::elim_self_moves(fn);
        break;
      case Pass::Dce:
        fn = cleanup::dce(fn);
        break;
      }
      auto errs = ir::validate(fn, &p);
      if (!errs.empty())
        throw PipelineError(Kind::Malformed, std::string(name(pass)) + " produced an invalid function: " +
                                                 errs.front());
    }
    rep.nodes_after = fn.code.size();
    count(fn, rep.ops_after, rep.loads_after);
    rep.loops_after = loop_stats(fn);
    rep.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    res.reports.push_back(std::move(rep));
  }
  return res;
}

std::string format_stats(const Result &r, bool timing) {
  std::ostringstream os;
  auto loops = [&](const char *label, const std::vector<LoopStat> &ls) {
    for (const LoopStat &l : ls)
      os << "  loop " << label << " header " << l.header.id << ": " << l.body_nodes << " nodes, "
         << l.ops_and_loads << " ops+loads\n";
  };
  for (const FunctionReport &f : r.reports) {
    os << "function " << f.name << "\n";
    os << "  nodes: " << f.nodes_before << " -> " << f.nodes_after << "\n";
    os << "  ops: " << f.ops_before << " -> " << f.ops_after << "\n";
    os << "  loads: " << f.loads_before << " -> " << f.loads_after << "\n";
    loops("before", f.loops_before);
    loops("after", f.loops_after);
    os << "  unrolled loops: " << f.unrolled << "\n";
    os << "  rotated loops: " << f.rotated << "\n";
    os << "  catalog size: " << f.catalog_size << "\n";
    os << "  analysis updates: " << f.analysis_updates << "\n";
    if (timing)
      os << "  wall time: " << f.wall_ms << " ms\n";
  }
  return os.str();
}

} // namespace rtlcse::pipeline

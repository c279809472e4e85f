#include "doctest.h"
#include "support.hpp"

#include "rtlcse/cleanup.hpp"
#include "rtlcse/gen.hpp"
#include "rtlcse/interp.hpp"
#include "rtlcse/pipeline.hpp"

#include <map>
#include <set>

using namespace rtlcse::cleanup;
using rtlcse::ir::Function;
using rtlcse::ir::NodeId;
using rtlcse::ir::Reg;

namespace {

NodeId N(std::uint32_t id) { return NodeId{id}; }

std::string at(const Function &f, std::uint32_t n) { return rtlcse::ir::print(f.at(N(n))); }

/// Backward iteration to a fixpoint over explicit sets, recomputing every
/// node on every round.
LiveSet naive_liveness(const Function &f) {
  LiveSet s;
  for (const auto &[n, _] : f.code) {
    s.live_in[n];
    s.live_out[n];
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (auto it = f.code.rbegin(); it != f.code.rend(); ++it) {
      const auto &[n, ins] = *it;
      std::set<Reg> out;
      for (NodeId succ : rtlcse::ir::successors(ins)) {
        auto found = s.live_in.find(succ);
        if (found != s.live_in.end())
          out.insert(found->second.begin(), found->second.end());
      }
      std::set<Reg> in = out;
      if (auto d = rtlcse::ir::def(ins))
        in.erase(*d);
      for (Reg r : rtlcse::ir::uses(ins))
        in.insert(r);
      if (in != s.live_in[n] || out != s.live_out[n]) {
        s.live_in[n] = in;
        s.live_out[n] = out;
        changed = true;
      }
    }
  }
  return s;
}

/// Random CFG of at most 10 nodes over r1..r5.
Function random_cfg(rtlcse::gen::Rng &rng) {
  using namespace rtlcse::ir;
  Function f;
  f.name = "f";
  f.params = {Reg{1}, Reg{2}};
  f.entry = N(1);
  const auto n = static_cast<std::uint32_t>(rng.range(2, 10));
  auto reg = [&] { return Reg{static_cast<std::uint32_t>(rng.range(1, 5))}; };
  auto node = [&] { return N(static_cast<std::uint32_t>(rng.range(1, n))); };
  for (std::uint32_t i = 1; i < n; ++i) {
    switch (rng.range(0, 3)) {
    case 0:
      f.code[N(i)] = Icond{{CondOp::Lt, Width::W32}, {reg(), reg()}, node(), N(i + 1)};
      break;
    case 1:
      f.code[N(i)] = Iop{{OpCode::Move, 0}, {reg()}, reg(), N(i + 1)};
      break;
    case 2:
      f.code[N(i)] = Icall{"ext", {reg()}, reg(), N(i + 1)};
      break;
    default:
      f.code[N(i)] = Iop{{OpCode::Add32, 0}, {reg(), reg()}, reg(), N(i + 1)};
      break;
    }
  }
  f.code[N(n)] = Ireturn{reg()};
  return f;
}

std::size_t self_moves(const Function &f) {
  std::size_t k = 0;
  for (const auto &[n, ins] : f.code)
    if (const auto *o = std::get_if<rtlcse::ir::Iop>(&ins))
      if (o->op.code == rtlcse::ir::OpCode::Move && o->args[0] == o->dest)
        ++k;
  return k;
}

} // namespace

TEST_CASE("self-moves become nops") {
  auto f = testsupport::function("function f(r1, r2) stack 0 {\n entry 1\n"
                                 " 1: r1 = move r1 -> 2\n"
                                 " 2: r3 = move r2 -> 3\n"
                                 " 3: r2 = move r2 -> 4\n"
                                 " 4: return r3\n}\n");
  Function g = elim_self_moves(f);
  CHECK(at(g, 1) == "nop -> 2");
  CHECK(at(g, 2) == "r3 = move r2 -> 3");
  CHECK(at(g, 3) == "nop -> 4");
  CHECK(at(g, 4) == "return r3");
  CHECK(elim_self_moves(g) == g);
}

TEST_CASE("liveness on a loop") {
  auto f = testsupport::function("function f(r1, r2) stack 0 {\n entry 1\n"
                                 " 1: r3 = const32 0 -> 2\n"
                                 " 2: if lt32 r3, r1 then 3 else 5\n"
                                 " 3: r4 = add32 r3, r2 -> 4\n"
                                 " 4: r3 = addimm32 1, r3 -> 2\n"
                                 " 5: return r3\n}\n");
  LiveSet s = liveness(f);
  CHECK(s.live_in.at(N(1)) == std::set<Reg>{Reg{1}, Reg{2}});
  CHECK(s.live_in.at(N(2)) == std::set<Reg>{Reg{1}, Reg{2}, Reg{3}});
  CHECK(s.live_out.at(N(3)) == std::set<Reg>{Reg{1}, Reg{2}, Reg{3}});
  CHECK(s.live_in.at(N(4)) == std::set<Reg>{Reg{1}, Reg{2}, Reg{3}});
  CHECK(s.live_in.at(N(5)) == std::set<Reg>{Reg{3}});
  CHECK(s.live_out.at(N(5)).empty());
}

TEST_CASE("liveness agrees with a naive fixpoint on small CFGs") {
  rtlcse::gen::Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    Function f = random_cfg(rng);
    LiveSet got = liveness(f), want = naive_liveness(f);
    CHECK(got.live_in == want.live_in);
    CHECK(got.live_out == want.live_out);
  }
}

TEST_CASE("dce removes dead chains and keeps side effects") {
  auto f = testsupport::function("function f(r1, r2) stack 0 {\n entry 1\n"
                                 " 1: r3 = add64 r1, r2 -> 2\n"
                                 " 2: r4 = add64 r3, r3 -> 3\n"
                                 " 3: r5 = load int64 [r1 + 0] -> 4\n"
                                 " 4: store int64 [r1 + 8] r2 -> 5\n"
                                 " 5: r6 = call \"ext\" (r2) -> 6\n"
                                 " 6: r7 = move r2 -> 7\n"
                                 " 7: return r7\n}\n");
  Function g = dce(f);
  CHECK(at(g, 1) == "nop -> 2");
  CHECK(at(g, 2) == "nop -> 3");
  CHECK(at(g, 3) == "nop -> 4");
  CHECK(at(g, 4) == "store int64 [r1 + 8] r2 -> 5");
  CHECK(at(g, 5) == "r6 = call \"ext\" (r2) -> 6");
  CHECK(at(g, 6) == "r7 = move r2 -> 7");
  CHECK(dce(g) == g);
}

TEST_CASE("dce keeps values needed around a loop") {
  auto f = testsupport::function("function f(r1) stack 0 {\n entry 1\n"
                                 " 1: r2 = const32 0 -> 2\n"
                                 " 2: if lt32 r2, r1 then 3 else 4\n"
                                 " 3: r2 = addimm32 1, r2 -> 2\n"
                                 " 4: return\n}\n");
  CHECK(dce(f) == f);
}

TEST_CASE("cleanup passes preserve behaviour on generated programs") {
  rtlcse::gen::GenConfig cfg;
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto p = rtlcse::gen::generate(cfg, 9000 + i);
    auto q = p, r = p;
    for (auto &[name, f] : q.functions) {
      f = dce(f);
      CHECK(dce(f) == f);
    }
    for (auto &[name, f] : r.functions) {
      f = elim_self_moves(f);
      CHECK(elim_self_moves(f) == f);
    }
    for (std::uint64_t k = 0; k < 3; ++k) {
      auto args = rtlcse::gen::random_args(p, cfg, i * 3 + k);
      auto a = rtlcse::interp::run(p, args, 100000, k);
      CHECK(rtlcse::interp::outcome_refines(a, rtlcse::interp::run(q, args, 100000, k)));
      CHECK(rtlcse::interp::print(a) == rtlcse::interp::print(rtlcse::interp::run(r, args, 100000, k)));
    }
  }
}

TEST_CASE("the full pipeline leaves no self-moves") {
  rtlcse::pipeline::Config pc;
  pc.passes = rtlcse::pipeline::parse_passes("unroll,cse3,selfmove,dce");
  rtlcse::gen::GenConfig cfg;
  for (std::uint64_t i = 0; i < 50; ++i) {
    auto out = rtlcse::pipeline::run(rtlcse::gen::generate(cfg, i), pc).program;
    for (const auto &[name, f] : out.functions)
      CHECK(self_moves(f) == 0);
  }
  auto syrk = rtlcse::pipeline::run(testsupport::fixture_program("syrk.rtl"), pc).program;
  for (const auto &[name, f] : syrk.functions)
    CHECK(self_moves(f) == 0);
}

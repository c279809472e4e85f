#include "doctest.h"
#include "support.hpp"

#include "rtlcse/gen.hpp"
#include "rtlcse/interp.hpp"

#include <cstring>
#include <limits>

using namespace rtlcse::interp;
using rtlcse::ir::AddrMode;
using rtlcse::ir::Chunk;
using rtlcse::ir::NodeId;
using rtlcse::ir::OpCode;
using rtlcse::ir::Operation;

namespace {

AddrMode based(std::int64_t off) {
  AddrMode m;
  m.kind = AddrMode::Kind::Based;
  m.offset = off;
  return m;
}

AddrMode indexed(int scale, std::int64_t off) {
  AddrMode m;
  m.kind = AddrMode::Kind::Indexed;
  m.scale = scale;
  m.offset = off;
  return m;
}

Outcome returned(Value v, std::vector<Event> trace = {}) {
  Outcome o;
  o.status = Outcome::Status::Returned;
  o.value = v;
  o.trace = std::move(trace);
  return o;
}

Outcome trapped(std::vector<Event> trace = {}) {
  Outcome o;
  o.status = Outcome::Status::Trapped;
  o.reason = "x";
  o.trace = std::move(trace);
  return o;
}

Event ev(const std::string &sym, Value arg, Value res) { return Event{sym, {arg}, res}; }

} // namespace

TEST_CASE("eval_op arithmetic") {
  CHECK(eval_op({OpCode::MulImm32, 5}, {Value::i32(7)}) == Value::i32(35));
  CHECK(eval_op({OpCode::Add32, 0}, {Value::undef(), Value::i32(1)}).is_undef());
  CHECK(eval_op({OpCode::Add32, 0}, {Value::i32(std::numeric_limits<std::int32_t>::max()), Value::i32(1)}) ==
        Value::i32(std::numeric_limits<std::int32_t>::min()));
  CHECK(eval_op({OpCode::Add32, 0}, {Value::f64(1.0), Value::i32(1)}).is_undef());
  CHECK(eval_op({OpCode::Move, 0}, {Value::f64(2.5)}) == Value::f64(2.5));
  CHECK(eval_op({OpCode::AddImm64, 8}, {Value::ptr(3, 16)}) == Value::ptr(3, 24));
  CHECK(eval_op({OpCode::Add64, 0}, {Value::ptr(3, 16), Value::i64(-4)}) == Value::ptr(3, 12));
  CHECK(eval_op({OpCode::Sext32to64, 0}, {Value::i32(-3)}) == Value::i64(-3));
  CHECK(eval_op({OpCode::Shl64, 3}, {Value::i64(5)}) == Value::i64(40));
  CHECK(eval_op({OpCode::Const32, -9}, {}) == Value::i32(-9));
  CHECK(eval_op({OpCode::FAdd64, 0}, {Value::f64(1.5), Value::f64(2.25)}) == Value::f64(3.75));
  CHECK(eval_op({OpCode::FMul64, 0}, {Value::f64(1.5), Value::f64(2.0)}) == Value::f64(3.0));
  CHECK(eval_op({OpCode::Mul64, 0}, {Value::i64(1LL << 62), Value::i64(4)}) == Value::i64(0));
}

TEST_CASE("eval_addr") {
  Memory mem;
  std::uint32_t b = mem.alloc(64);
  std::uint32_t tab = mem.alloc(16, "tab");
  CHECK(eval_addr(indexed(8, 0), {Value::ptr(b, 16), Value::i64(3)}, mem) == Value::ptr(b, 40));
  AddrMode g;
  g.kind = AddrMode::Kind::Global;
  g.symbol = "tab";
  g.offset = 4;
  CHECK(mem.global_block("tab") == tab);
  CHECK(eval_addr(g, {}, mem) == Value::ptr(tab, 4));
  CHECK(eval_addr(based(8), {Value::undef()}, mem).is_undef());
  CHECK(eval_addr(based(8), {Value::i64(8)}, mem).is_undef());
}

TEST_CASE("step on a nop only moves the pc") {
  auto p = testsupport::program("function main(r1) stack 0 {\n entry 1\n 1: nop -> 2\n 2: return r1\n}\n");
  State s = initial_state(p, "main", {Value::i32(4)}, 0);
  Memory before = s.mem;
  StepResult r = step(s);
  CHECK(r.kind == StepResult::Kind::Continue);
  CHECK_FALSE(r.event.has_value());
  CHECK(s.pc == NodeId{2});
  CHECK(s.regs.get(rtlcse::ir::Reg{1}) == Value::i32(4));
  CHECK(s.mem == before);
}

TEST_CASE("loads are bounds-checked exactly") {
  Memory mem;
  std::uint32_t b = mem.alloc(16);
  CHECK(mem.valid(Chunk::Int32, Value::ptr(b, 12)));
  CHECK_FALSE(mem.valid(Chunk::Int32, Value::ptr(b, 14)));
  CHECK_FALSE(mem.valid(Chunk::Int8, Value::ptr(b, -1)));
  CHECK_FALSE(mem.valid(Chunk::Int8, Value::i64(0)));
  CHECK(mem.valid(Chunk::Int64, Value::ptr(b, 3)));

  auto p = testsupport::program(
      "function main(r1) stack 0 {\n entry 1\n 1: r2 = load int32 [r1 + 254] -> 2\n 2: return r2\n}\n");
  auto o = run(p, {Value::ptr(*Memory::for_program(p, 0).global_block("A"), 0)}, 100, 0);
  CHECK(o.status == Outcome::Status::Trapped);
  CHECK(o.reason.find("invalid load address") != std::string::npos);
}

TEST_CASE("store then load round-trips for every chunk") {
  Memory mem;
  std::uint32_t b = mem.alloc(32);
  Value at = Value::ptr(b, 5);
  REQUIRE(mem.store(Chunk::Int64, at, Value::i64(-123456789012345)));
  CHECK(mem.load(Chunk::Int64, at) == Value::i64(-123456789012345));
  REQUIRE(mem.store(Chunk::Int32, at, Value::i32(-7)));
  CHECK(mem.load(Chunk::Int32, at) == Value::i32(-7));
  REQUIRE(mem.store(Chunk::Float64, at, Value::f64(0.1)));
  CHECK(mem.load(Chunk::Float64, at) == Value::f64(0.1));
  REQUIRE(mem.store(Chunk::Float32, at, Value::f32_bits(0x3f800000)));
  CHECK(mem.load(Chunk::Float32, at) == Value::f32_bits(0x3f800000));
  REQUIRE(mem.store(Chunk::Int64, at, Value::ptr(b, 7)));
  CHECK(mem.load(Chunk::Int64, at) == Value::ptr(b, 7));
  CHECK(mem.load(Chunk::Int32, at)->is_undef());
  REQUIRE(mem.store(Chunk::Int16, at, Value::i32(0x12345)));
  CHECK(mem.load(Chunk::Int16, at) == Value::i32(0x2345));
  REQUIRE(mem.store(Chunk::Int8, at, Value::i32(0x1ff)));
  CHECK(mem.load(Chunk::Int8, at) == Value::i32(-1));
  REQUIRE(mem.store(Chunk::Int32, at, Value::f64(1.0)));
  CHECK(mem.load(Chunk::Int32, at)->is_undef());
  CHECK_FALSE(mem.store(Chunk::Int64, Value::ptr(b, 25), Value::i64(1)));
}

TEST_CASE("store/load round-trip on random values") {
  rtlcse::gen::Rng rng(5);
  Memory mem;
  std::uint32_t b = mem.alloc(64);
  for (int i = 0; i < 1000; ++i) {
    Value at = Value::ptr(b, rng.range(0, 56));
    std::int64_t raw = static_cast<std::int64_t>(rng.next());
    REQUIRE(mem.store(Chunk::Int64, at, Value::i64(raw)));
    CHECK(mem.load(Chunk::Int64, at) == Value::i64(raw));
    REQUIRE(mem.store(Chunk::Int32, at, Value::i32(static_cast<std::int32_t>(raw))));
    CHECK(mem.load(Chunk::Int32, at) == Value::i32(static_cast<std::int32_t>(raw)));
    REQUIRE(mem.store(Chunk::Int16, at, Value::i32(static_cast<std::int32_t>(raw))));
    CHECK(mem.load(Chunk::Int16, at) == Value::i32(static_cast<std::int16_t>(raw)));
    REQUIRE(mem.store(Chunk::Int8, at, Value::i32(static_cast<std::int32_t>(raw))));
    CHECK(mem.load(Chunk::Int8, at) == Value::i32(static_cast<std::int8_t>(raw)));
  }
}

TEST_CASE("run returns a constant with an empty trace") {
  auto p = testsupport::program("function main() stack 0 {\n entry 1\n 1: r1 = const32 42 -> 2\n 2: return r1\n}\n");
  auto o = run(p, {}, 100, 0);
  CHECK(o.status == Outcome::Status::Returned);
  CHECK(o.value == Value::i32(42));
  CHECK(o.trace.empty());
  CHECK(print(o) == "returned i32:42\n");
}

TEST_CASE("an infinite loop runs out of fuel") {
  auto p = testsupport::program("function main() stack 0 {\n entry 1\n 1: nop -> 1\n}\n");
  auto o = run(p, {}, 100, 0);
  CHECK(o.status == Outcome::Status::OutOfFuel);
  CHECK(print(o) == "out of fuel\n");
}

TEST_CASE("branching on undef traps") {
  auto p = testsupport::program(
      "function main(r1) stack 0 {\n entry 1\n 1: if lt32 r1, r1 then 2 else 2\n 2: return r1\n}\n");
  CHECK(run(p, {Value::undef()}, 100, 0).status == Outcome::Status::Trapped);
  CHECK(run(p, {Value::i64(1)}, 100, 0).status == Outcome::Status::Trapped);
  CHECK(run(p, {Value::i32(1)}, 100, 0).status == Outcome::Status::Returned);
}

TEST_CASE("external calls are recorded and deterministic") {
  auto p = testsupport::program("function main(r1) stack 0 {\n entry 1\n"
                                " 1: r2 = call \"ext\" (r1) -> 2\n"
                                " 2: r3 = call \"ext\" (r2, r1) -> 3\n"
                                " 3: return r3\n}\n");
  auto a = run(p, {Value::i64(3)}, 100, 9);
  auto b = run(p, {Value::i64(3)}, 100, 9);
  REQUIRE(a.trace.size() == 2);
  CHECK(a.trace == b.trace);
  CHECK(a.value == b.value);
  CHECK(a.trace[0].symbol == "ext");
  CHECK(a.trace[0].result.kind == Value::Kind::I64);
  CHECK(a.trace[0].result == external_result(9, "ext", {Value::i64(3)}));
  CHECK(print(a).rfind("call ext(i64:3) = i64:", 0) == 0);
  CHECK(run(p, {Value::i64(3)}, 100, 10).value != a.value);
  CHECK(run(p, {Value::undef()}, 100, 9).value.is_undef());
}

TEST_CASE("internal calls pass arguments and return values") {
  auto p = testsupport::program("function inc(r1) stack 8 {\n entry 1\n 1: r2 = addimm32 1, r1 -> 2\n 2: return r2\n}\n"
                                "function main(r1) stack 0 {\n entry 1\n"
                                " 1: r2 = call \"inc\" (r1) -> 2\n"
                                " 2: r3 = call \"inc\" (r2) -> 3\n"
                                " 3: r4 = add32 r3, r1 -> 4\n"
                                " 4: return r4\n}\n");
  auto o = run(p, {Value::i32(5)}, 100, 0);
  CHECK(o.status == Outcome::Status::Returned);
  CHECK(o.value == Value::i32(12));
  CHECK(o.trace.empty());
}

TEST_CASE("unbounded recursion traps") {
  auto p = testsupport::program("function main(r1) stack 0 {\n entry 1\n 1: r2 = call \"main\" (r1) -> 2\n 2: return r2\n}\n");
  auto o = run(p, {Value::i32(0)}, 1000000, 0);
  CHECK(o.status == Outcome::Status::Trapped);
}

TEST_CASE("globals are seeded and identical across runs") {
  auto p = testsupport::program("function main() stack 0 {\n entry 1\n 1: r1 = load int64 [global \"B\" + 8] -> 2\n 2: return r1\n}\n");
  auto a = run(p, {}, 100, 1), b = run(p, {}, 100, 1), c = run(p, {}, 100, 2);
  CHECK(a.value == b.value);
  CHECK(a.value.kind == Value::Kind::I64);
  CHECK(a.value != c.value);
  Memory m = Memory::for_program(p, 1);
  CHECK(m.global_block("A") == 1u);
  CHECK(m.global_block("B") == 2u);
  CHECK(m.global_block("C") == 3u);
}

TEST_CASE("value_refines") {
  CHECK(value_refines(Value::undef(), Value::i32(5)));
  CHECK_FALSE(value_refines(Value::i32(5), Value::i32(6)));
  CHECK_FALSE(value_refines(Value::i32(5), Value::undef()));
  CHECK_FALSE(value_refines(Value::i32(5), Value::i64(5)));
  rtlcse::gen::Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    Value v;
    switch (rng.range(0, 4)) {
    case 0:
      v = Value::i32(static_cast<std::int32_t>(rng.next()));
      break;
    case 1:
      v = Value::i64(static_cast<std::int64_t>(rng.next()));
      break;
    case 2:
      v = Value::f64_bits(rng.next());
      break;
    case 3:
      v = Value::ptr(static_cast<std::uint32_t>(rng.range(1, 4)), rng.range(-8, 64));
      break;
    default:
      break;
    }
    CHECK(value_refines(v, v));
  }
}

TEST_CASE("outcome_refines") {
  Outcome r1 = returned(Value::i32(1)), r2 = returned(Value::i32(2));
  CHECK(outcome_refines(r1, r1));
  CHECK(outcome_refines(trapped(), r1));
  CHECK_FALSE(outcome_refines(r1, r2));
  CHECK(outcome_refines(returned(Value::undef()), r2));
  CHECK_FALSE(outcome_refines(r1, trapped()));

  Event e1 = ev("f", Value::i64(1), Value::i64(10));
  Event e1u = ev("f", Value::undef(), Value::i64(10));
  CHECK(outcome_refines(returned(Value::i32(1), {e1u}), returned(Value::i32(1), {e1})));
  CHECK_FALSE(outcome_refines(returned(Value::i32(1), {e1}), returned(Value::i32(1), {e1u})));
  CHECK_FALSE(outcome_refines(returned(Value::i32(1), {e1}), returned(Value::i32(1), {})));
  CHECK(outcome_refines(trapped({e1}), returned(Value::i32(3), {e1, e1})));
  CHECK_FALSE(outcome_refines(trapped({e1}), returned(Value::i32(3), {})));

  Outcome fuel;
  fuel.trace = {e1, e1};
  Outcome shorter;
  shorter.trace = {e1};
  CHECK(outcome_refines(fuel, shorter));
  CHECK(outcome_refines(shorter, fuel));
  Outcome other;
  other.trace = {ev("g", Value::i64(1), Value::i64(10))};
  CHECK_FALSE(outcome_refines(fuel, other));
}

TEST_CASE("outcome_refines is transitive on sampled chains") {
  Event a = ev("f", Value::undef(), Value::i64(1));
  Event b = ev("f", Value::i64(4), Value::i64(1));
  std::vector<Outcome> pool = {trapped(), trapped({a}), returned(Value::undef(), {a}), returned(Value::i32(2), {a}),
                               returned(Value::i32(2), {b}), returned(Value::i32(3), {b}), trapped({b}),
                               returned(Value::undef(), {b})};
  for (const auto &x : pool)
    for (const auto &y : pool)
      for (const auto &z : pool)
        if (outcome_refines(x, y) && outcome_refines(y, z))
          CHECK(outcome_refines(x, z));
}

TEST_CASE("run is deterministic on generated programs") {
  rtlcse::gen::GenConfig cfg;
  for (std::uint64_t i = 0; i < 30; ++i) {
    auto p = rtlcse::gen::generate(cfg, i);
    auto args = rtlcse::gen::random_args(p, cfg, i);
    auto a = run(p, args, 100000, i), b = run(p, args, 100000, i);
    CHECK(print(a) == print(b));
  }
}

TEST_CASE("value printing and parsing") {
  Memory mem;
  std::uint32_t b = mem.alloc(8, "G");
  CHECK(print(Value::undef()) == "undef");
  CHECK(print(Value::i32(-3)) == "i32:-3");
  CHECK(print(Value::i64(7)) == "i64:7");
  CHECK(print(Value::f64(1.0)) == "f64:0x3ff0000000000000");
  CHECK(print(Value::ptr(b, 4), &mem) == "ptr:G+4");
  CHECK(print(Value::ptr(b, -4), &mem) == "ptr:G-4");
  for (const char *s : {"undef", "i32:-3", "i64:7", "f64:0x3ff0000000000000", "ptr:G+4", "ptr:G-4"})
    CHECK(print(parse_value(s, mem), &mem) == s);
  CHECK_THROWS_AS(parse_value("ptr:H+0", mem), std::invalid_argument);
  CHECK_THROWS_AS(parse_value("q:1", mem), std::invalid_argument);
  CHECK_THROWS_AS(parse_value("i32:x", mem), std::invalid_argument);
}

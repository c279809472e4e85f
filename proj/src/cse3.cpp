#include "rtlcse/cse3.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

namespace rtlcse::cse3 {

using hset::Set;
using ir::Chunk;
using ir::OpCode;

Rhs Rhs::make_op(ir::Operation op, std::vector<Reg> args) {
  Rhs r;
  r.kind = Kind::Op;
  r.op = op;
  r.args = std::move(args);
  return r;
}

Rhs Rhs::make_load(ir::Chunk chunk, ir::AddrMode mode, std::vector<Reg> args) {
  Rhs r;
  r.kind = Kind::Load;
  r.chunk = chunk;
  r.mode = std::move(mode);
  r.args = std::move(args);
  return r;
}

namespace {

Set lookup(const std::map<Reg, Set> &m, Reg r) {
  auto it = m.find(r);
  return it == m.end() ? Set() : it->second;
}

bool mentions(const std::vector<Reg> &args, Reg r) {
  return std::find(args.begin(), args.end(), r) != args.end();
}

void index_equation(Tables &t, const Equation &e, EqId id) {
  hset::InternTable &h = *t.intern;
  t.rhs_to_ids[e.rhs] = h.add(t.rhs_to_ids[e.rhs], id);
  t.reg_to_ids[e.lhs] = h.add(t.reg_to_ids[e.lhs], id);
  for (Reg r : e.rhs.args)
    t.reg_to_ids[r] = h.add(t.reg_to_ids[r], id);
  if (e.rhs.is_move())
    t.reg_to_moves[e.lhs] = h.add(t.reg_to_moves[e.lhs], id);
  if (e.rhs.kind == Rhs::Kind::Load)
    t.mem_ids = h.add(t.mem_ids, id);
}

AbstractState with_equation(Tables &t, const AbstractState &s, const Equation &e) {
  EqId id = intern_equation(t, e);
  if (id == 0)
    return s;
  return AbstractState::Known(t.intern->add(s.ids, id));
}

std::vector<Reg> forward_all(const Tables &t, const AbstractState &s, const std::vector<Reg> &args) {
  std::vector<Reg> out;
  out.reserve(args.size());
  for (Reg r : args)
    out.push_back(forward_move(t, s, r));
  return out;
}

/// Shared rule for instructions `d := rhs(args)`.
AbstractState assign(Tables &t, const AbstractState &s, Reg d, const std::vector<Reg> &args, Rhs rhs,
                     const Options &opts) {
  rhs.args = forward_all(t, s, args);
  if (rhs.is_move() && rhs.args[0] == d)
    return s;
  if (mentions(args, d) || mentions(rhs.args, d))
    return kill_reg(t, s, d);
  if (rhs.is_move())
    return with_equation(t, kill_reg(t, s, d), Equation{d, rhs});
  std::optional<Reg> prev = find_computed(t, s, rhs);
  if (prev && *prev == d)
    return s;
  AbstractState out = with_equation(t, kill_reg(t, s, d), Equation{d, rhs});
  if (prev && opts.glb_moves)
    out = with_equation(t, out, Equation{d, Rhs::make_op({OpCode::Move, 0}, {*prev})});
  return out;
}

std::pair<std::int64_t, std::int64_t> range(const MemRef &m) {
  return {m.mode.offset, m.mode.offset + ir::size_of(m.chunk)};
}

bool disjoint(const MemRef &a, const MemRef &b) {
  auto [a0, a1] = range(a);
  auto [b0, b1] = range(b);
  return a1 <= b0 || b1 <= a0;
}

bool well_formed(const Equation &e) {
  if (mentions(e.rhs.args, e.lhs) || e.lhs.id == 0)
    return false;
  for (Reg r : e.rhs.args)
    if (r.id == 0)
      return false;
  if (e.rhs.kind == Rhs::Kind::Op)
    return static_cast<int>(e.rhs.args.size()) == ir::arity(e.rhs.op.code);
  return static_cast<int>(e.rhs.args.size()) == ir::arity(e.rhs.mode);
}

} // namespace

Set Tables::ids_of_rhs(const Rhs &r) const {
  auto it = rhs_to_ids.find(r);
  return it == rhs_to_ids.end() ? Set() : it->second;
}
Set Tables::ids_of_reg(Reg r) const { return lookup(reg_to_ids, r); }
Set Tables::moves_of_reg(Reg r) const { return lookup(reg_to_moves, r); }

EqId intern_equation(Tables &t, const Equation &e) {
  if (mentions(e.rhs.args, e.lhs))
    return 0;
  auto it = t.eq_to_id.find(e);
  if (it != t.eq_to_id.end())
    return it->second;
  if (t.frozen)
    return 0;
  EqId id = t.catalog.push(e);
  t.eq_to_id.emplace(e, id);
  index_equation(t, e, id);
  return id;
}

Reg forward_move(const Tables &t, const AbstractState &s, Reg r) {
  if (s.bot)
    return r;
  Set moves = t.moves_of_reg(r);
  if (moves.is_empty())
    return r;
  Set hits = t.intern->inter(s.ids, moves);
  if (hits.is_empty())
    return r;
  return t.catalog.at(static_cast<EqId>(hset::contents(hits).front())).rhs.args.at(0);
}

AbstractState kill_reg(Tables &t, const AbstractState &s, Reg r) {
  if (s.bot)
    return s;
  return AbstractState::Known(t.intern->diff(s.ids, t.ids_of_reg(r)));
}

bool may_overlap(const MemRef &a, const MemRef &b) {
  using K = ir::AddrMode::Kind;
  if (a.mode.kind == K::Global && b.mode.kind == K::Global)
    return a.mode.symbol == b.mode.symbol && !disjoint(a, b);
  if (a.mode.kind == K::Based && b.mode.kind == K::Based && a.args.at(0) == b.args.at(0))
    return !disjoint(a, b);
  return true;
}

std::optional<Reg> find_computed(Tables &t, const AbstractState &s, const Rhs &rhs) {
  if (s.bot)
    return std::nullopt;
  Set candidates = t.ids_of_rhs(rhs);
  if (candidates.is_empty())
    return std::nullopt;
  Set hits = t.intern->inter(s.ids, candidates);
  if (hits.is_empty())
    return std::nullopt;
  return t.catalog.at(static_cast<EqId>(hset::contents(hits).front())).lhs;
}

AbstractState transfer(Tables &t, const AbstractState &s, const ir::Instruction &i,
                       const typing::TypeEnv &env, const Options &opts) {
  if (s.bot)
    return s;
  if (const auto *op = std::get_if<ir::Iop>(&i))
    return assign(t, s, op->dest, op->args, Rhs::make_op(op->op, {}), opts);
  if (const auto *ld = std::get_if<ir::Iload>(&i))
    return assign(t, s, ld->dest, ld->args, Rhs::make_load(ld->chunk, ld->mode, {}), opts);
  if (const auto *st = std::get_if<ir::Istore>(&i)) {
    std::vector<Reg> args = forward_all(t, s, st->args);
    MemRef target{st->mode, args, st->chunk};
    Set killed;
    for (hset::Key k : hset::contents(t.intern->inter(s.ids, t.mem_ids))) {
      const Rhs &r = t.catalog.at(static_cast<EqId>(k)).rhs;
      if (may_overlap(MemRef{r.mode, r.args, r.chunk}, target))
        killed = t.intern->add(killed, k);
    }
    AbstractState out = AbstractState::Known(t.intern->diff(s.ids, killed));
    bool full_width = st->chunk != Chunk::Int8 && st->chunk != Chunk::Int16;
    if (full_width && typing::chunk_matches(st->chunk, env.of(st->src)) && !mentions(args, st->src))
      out = with_equation(t, out, Equation{st->src, Rhs::make_load(st->chunk, st->mode, args)});
    return out;
  }
  if (const auto *call = std::get_if<ir::Icall>(&i)) {
    if (opts.across_calls == CallMode::ForgetAll)
      return AbstractState::Known(Set());
    AbstractState out = AbstractState::Known(t.intern->diff(s.ids, t.mem_ids));
    return kill_reg(t, out, call->dest);
  }
  return s;
}

AbstractState join(Tables &t, const AbstractState &a, const AbstractState &b) {
  if (a.bot)
    return b;
  if (b.bot)
    return a;
  return AbstractState::Known(t.intern->inter(a.ids, b.ids));
}

bool leq(const AbstractState &a, const AbstractState &b) {
  if (a.bot)
    return true;
  if (b.bot)
    return false;
  return hset::subset(b.ids, a.ids);
}

Analysis analyze(const ir::Function &f, const typing::TypeEnv &env, const Options &opts) {
  Analysis a;
  a.inv.intern = a.tables.intern;
  for (const auto &[n, _] : f.code)
    a.inv.at[n] = AbstractState::Bot();
  if (!f.code.count(f.entry))
    throw AnalysisError("entry node missing");
  a.inv.at[f.entry] = AbstractState::Known(Set());

  // Visit in reverse postorder so that most predecessors come first.
  std::map<NodeId, std::size_t> order;
  {
    std::vector<NodeId> post;
    std::set<NodeId> seen{f.entry};
    std::vector<std::pair<NodeId, std::size_t>> stack{{f.entry, 0}};
    while (!stack.empty()) {
      auto &[n, k] = stack.back();
      auto succs = ir::successors(f.at(n));
      if (k < succs.size()) {
        NodeId s = succs[k++];
        if (seen.insert(s).second)
          stack.push_back({s, 0});
      } else {
        post.push_back(n);
        stack.pop_back();
      }
    }
    for (std::size_t i = 0; i < post.size(); ++i)
      order[post[i]] = post.size() - 1 - i;
  }

  std::set<std::pair<std::size_t, NodeId>> work{{order.at(f.entry), f.entry}};
  const std::uint64_t nodes = f.code.size();
  while (!work.empty()) {
    NodeId p = work.begin()->second;
    work.erase(work.begin());
    const ir::Instruction &ins = f.at(p);
    AbstractState out = transfer(a.tables, a.inv.at.at(p), ins, env, opts);
    for (NodeId s : ir::successors(ins)) {
      AbstractState &cur = a.inv.at.at(s);
      AbstractState next = join(a.tables, cur, out);
      std::uint64_t before = hset::descent_counter();
      bool same = cur.bot == next.bot && (cur.bot || hset::equal(cur.ids, next.ids));
      a.stats.equality_descents += hset::descent_counter() - before;
      ++a.stats.equality_checks;
      if (same)
        continue;
      cur = next;
      if (++a.stats.updates > nodes * (1 + a.tables.catalog.size()))
        throw AnalysisError("fixed-point iteration bound exceeded");
      work.insert({order.at(s), s});
    }
  }
  return a;
}

Tables rebuild_tables(const Catalog &c, InternPtr intern) {
  Tables t(std::move(intern));
  EqId id = 0;
  for (const Equation &e : c.equations()) {
    ++id;
    t.catalog.push(e);
    t.eq_to_id.emplace(e, id);
    index_equation(t, e, id);
  }
  return t;
}

CheckVerdict check_inductive(const ir::Function &f, const typing::TypeEnv &env, const Options &opts,
                             const Catalog &c, const Invariants &inv) {
  auto reject = [](NodeId from, NodeId to, std::string why) {
    return CheckVerdict{false, from, to, std::move(why)};
  };
  {
    std::set<Equation> seen;
    for (EqId id = 1; id <= c.size(); ++id) {
      if (!well_formed(c.at(id)))
        return reject({}, {}, "catalog equation " + std::to_string(id) + " is malformed");
      if (!seen.insert(c.at(id)).second)
        return reject({}, {}, "catalog equation " + std::to_string(id) + " is a duplicate");
    }
  }
  Tables t = rebuild_tables(c);
  t.frozen = true;

  std::map<NodeId, AbstractState> states;
  for (const auto &[n, _] : f.code) {
    auto it = inv.at.find(n);
    if (it == inv.at.end())
      return reject(n, {}, "no invariant for node");
    if (it->second.bot) {
      states[n] = AbstractState::Bot();
      continue;
    }
    std::vector<hset::Key> keys = hset::contents(it->second.ids);
    for (hset::Key k : keys)
      if (!c.contains(static_cast<EqId>(k)) || k > c.size())
        return reject(n, {}, "invariant mentions unknown equation " + std::to_string(k));
    states[n] = AbstractState::Known(t.intern->from_keys(keys));
  }
  if (!f.code.count(f.entry))
    return reject(f.entry, {}, "entry node missing");
  const AbstractState &entry = states.at(f.entry);
  if (entry.bot || !entry.ids.is_empty())
    return reject(f.entry, {}, "entry invariant is not empty");

  for (const auto &[p, ins] : f.code) {
    const AbstractState &sp = states.at(p);
    if (sp.bot)
      continue;
    AbstractState out = transfer(t, sp, ins, env, opts);
    for (NodeId s : ir::successors(ins)) {
      auto it = states.find(s);
      if (it == states.end())
        return reject(p, s, "successor has no invariant");
      if (!leq(out, it->second))
        return reject(p, s, "invariant is not implied by its predecessor");
    }
  }
  return {};
}

bool is_trivial(const ir::Operation &op, const Options &opts) {
  if (op.code == OpCode::Move)
    return true;
  return opts.trivial_consts && (op.code == OpCode::Const32 || op.code == OpCode::Const64);
}

ir::Function rewrite(const ir::Function &f, Tables &t, const Invariants &inv, const Options &opts) {
  ir::Function out = f;
  for (auto &[p, ins] : out.code) {
    auto it = inv.at.find(p);
    if (it == inv.at.end() || it->second.bot)
      continue;
    const AbstractState &s = it->second;
    auto replace = [&](const Rhs &rhs, Reg dest, NodeId succ) -> std::optional<ir::Instruction> {
      std::optional<Reg> prev = find_computed(t, s, rhs);
      if (!prev)
        return std::nullopt;
      EqId id = t.eq_to_id.at(Equation{*prev, rhs});
      if (t.catalog.at(id).rhs != rhs)
        return std::nullopt;
      return ir::Iop{{OpCode::Move, 0}, {*prev}, dest, succ};
    };
    if (auto *op = std::get_if<ir::Iop>(&ins)) {
      op->args = forward_all(t, s, op->args);
      if (!is_trivial(op->op, opts))
        if (auto r = replace(Rhs::make_op(op->op, op->args), op->dest, op->succ))
          ins = *r;
    } else if (auto *ld = std::get_if<ir::Iload>(&ins)) {
      ld->args = forward_all(t, s, ld->args);
      if (auto r = replace(Rhs::make_load(ld->chunk, ld->mode, ld->args), ld->dest, ld->succ))
        ins = *r;
    } else if (auto *st = std::get_if<ir::Istore>(&ins)) {
      st->args = forward_all(t, s, st->args);
      st->src = forward_move(t, s, st->src);
    }
  }
  return out;
}

interp::Value eval_rhs(const interp::RegFile &regs, const interp::Memory &mem, const Rhs &rhs) {
  std::vector<interp::Value> vals;
  for (Reg r : rhs.args)
    vals.push_back(regs.get(r));
  if (rhs.kind == Rhs::Kind::Op)
    return interp::eval_op(rhs.op, vals);
  auto v = mem.load(rhs.chunk, interp::eval_addr(rhs.mode, vals, mem));
  return v ? *v : interp::Value::undef();
}

bool eq_holds(const interp::RegFile &regs, const interp::Memory &mem, const Equation &e) {
  if (e.rhs.kind == Rhs::Kind::Load) {
    std::vector<interp::Value> vals;
    for (Reg r : e.rhs.args)
      vals.push_back(regs.get(r));
    if (!mem.valid(e.rhs.chunk, interp::eval_addr(e.rhs.mode, vals, mem)))
      return true;
  }
  return eval_rhs(regs, mem, e.rhs) == regs.get(e.lhs);
}

std::string print(const Rhs &r) {
  if (r.kind == Rhs::Kind::Load)
    return std::string(ir::name(r.chunk)) + ir::print(r.mode, r.args);
  std::string out = std::string(ir::name(r.op.code)) + "(";
  bool first = true;
  if (ir::has_imm(r.op.code)) {
    out += std::to_string(r.op.imm);
    first = false;
  }
  for (Reg a : r.args) {
    if (!first)
      out += ", ";
    out += ir::print(a);
    first = false;
  }
  return out + ")";
}

std::string print(const Equation &e) { return ir::print(e.lhs) + " = " + print(e.rhs); }

std::string dump_invariants(const ir::Function &f, const Catalog &c, const Invariants &inv) {
  std::string out;
  for (const auto &[n, _] : f.code) {
    out += std::to_string(n.id) + ": ";
    auto it = inv.at.find(n);
    if (it == inv.at.end() || it->second.bot) {
      out += "bot\n";
      continue;
    }
    out += "{";
    bool first = true;
    for (hset::Key k : hset::contents(it->second.ids)) {
      if (!first)
        out += ", ";
      out += c.contains(static_cast<EqId>(k)) ? print(c.at(static_cast<EqId>(k))) : "?" + std::to_string(k);
      first = false;
    }
    out += "}\n";
  }
  return out;
}

std::string catalog_to_json(const Catalog &c) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (EqId id = 1; id <= c.size(); ++id) {
    const Equation &e = c.at(id);
    nlohmann::ordered_json j;
    j["id"] = id;
    j["lhs"] = ir::print(e.lhs);
    j["kind"] = e.rhs.kind == Rhs::Kind::Op ? "op" : "load";
    j["rhs"] = print(e.rhs);
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

} // namespace rtlcse::cse3

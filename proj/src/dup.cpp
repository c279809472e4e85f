#include "rtlcse/dup.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

namespace rtlcse::dup {

namespace {

/// Reachable nodes in reverse postorder.
std::vector<NodeId> reverse_postorder(const Function &f) {
  std::vector<NodeId> post;
  std::set<NodeId> seen;
  std::vector<std::pair<NodeId, std::size_t>> stack;
  if (!f.code.count(f.entry))
    return post;
  stack.push_back({f.entry, 0});
  seen.insert(f.entry);
  while (!stack.empty()) {
    auto &[n, i] = stack.back();
    auto succs = ir::successors(f.at(n));
    if (i < succs.size()) {
      NodeId s = succs[i++];
      if (f.code.count(s) && seen.insert(s).second)
        stack.push_back({s, 0});
    } else {
      post.push_back(n);
      stack.pop_back();
    }
  }
  std::reverse(post.begin(), post.end());
  return post;
}

std::map<NodeId, std::vector<NodeId>> predecessors(const Function &f) {
  std::map<NodeId, std::vector<NodeId>> preds;
  for (const auto &[n, ins] : f.code)
    for (NodeId s : ir::successors(ins))
      preds[s].push_back(n);
  return preds;
}

/// Rechecks that `loop` is an innermost loop of `f` with one back edge.
std::optional<std::string> check_candidate(const Function &f, const NaturalLoop &loop) {
  for (const NaturalLoop &l : find_loops(f)) {
    if (l.header != loop.header)
      continue;
    if (l.body != loop.body)
      return "loop body does not match the natural loop of its header";
    if (!l.innermost)
      return "loop is not innermost";
    if (l.back_edge_sources.size() != 1)
      return "loop has several back edges";
    return std::nullopt;
  }
  return "no natural loop with header " + std::to_string(loop.header.id);
}

/// Copies `nodes` to fresh ids and redirects edges entering the header from
/// outside the loop to the copy of the header.
Duplicated duplicate(const Function &f, const NaturalLoop &loop, const std::vector<NodeId> &nodes,
                     const std::function<NodeId(NodeId, const std::map<NodeId, NodeId> &)> &copy_succ) {
  Duplicated d;
  d.fn = f;
  std::map<NodeId, NodeId> copy;
  std::uint32_t next = f.max_node().id + 1;
  for (NodeId n : nodes)
    copy[n] = NodeId{next++};
  for (NodeId n : nodes)
    d.fn.code[copy.at(n)] =
        ir::map_successors(f.at(n), [&](NodeId s) { return copy_succ(s, copy); });
  NodeId header_copy = copy.at(loop.header);
  for (auto &[n, ins] : d.fn.code) {
    if (loop.body.count(n) || n.id > f.max_node().id)
      continue;
    ins = ir::map_successors(ins, [&](NodeId s) { return s == loop.header ? header_copy : s; });
  }
  if (f.entry == loop.header)
    d.fn.entry = header_copy;
  d.map = identity_map(f);
  for (const auto &[orig, c] : copy)
    d.map[c] = orig;
  return d;
}

} // namespace

std::map<NodeId, NodeId> immediate_dominators(const Function &f) {
  std::vector<NodeId> rpo = reverse_postorder(f);
  std::map<NodeId, std::size_t> index;
  for (std::size_t i = 0; i < rpo.size(); ++i)
    index[rpo[i]] = i;
  auto preds = predecessors(f);
  std::vector<std::optional<std::size_t>> idom(rpo.size());
  if (rpo.empty())
    return {};
  idom[0] = 0;
  auto intersect = [&](std::size_t a, std::size_t b) {
    while (a != b) {
      while (a > b)
        a = *idom[a];
      while (b > a)
        b = *idom[b];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 1; i < rpo.size(); ++i) {
      std::optional<std::size_t> nd;
      for (NodeId p : preds[rpo[i]]) {
        auto it = index.find(p);
        if (it == index.end() || !idom[it->second])
          continue;
        nd = nd ? intersect(*nd, it->second) : it->second;
      }
      if (nd != idom[i]) {
        idom[i] = nd;
        changed = true;
      }
    }
  }
  std::map<NodeId, NodeId> out;
  for (std::size_t i = 0; i < rpo.size(); ++i)
    out[rpo[i]] = rpo[*idom[i]];
  return out;
}

bool dominates(const std::map<NodeId, NodeId> &idom, NodeId a, NodeId b) {
  auto it = idom.find(b);
  if (it == idom.end() || !idom.count(a))
    return false;
  while (true) {
    if (b == a)
      return true;
    NodeId up = idom.at(b);
    if (up == b)
      return false;
    b = up;
  }
}

std::vector<NaturalLoop> find_loops(const Function &f) {
  auto idom = immediate_dominators(f);
  auto preds = predecessors(f);
  std::map<NodeId, NaturalLoop> by_header;
  for (const auto &[n, _] : idom) {
    for (NodeId h : ir::successors(f.at(n))) {
      if (!dominates(idom, h, n))
        continue;
      NaturalLoop &l = by_header[h];
      l.header = h;
      l.back_edge_sources.insert(n);
      l.body.insert(h);
      std::vector<NodeId> work{n};
      while (!work.empty()) {
        NodeId m = work.back();
        work.pop_back();
        if (!l.body.insert(m).second)
          continue;
        for (NodeId p : preds[m])
          if (idom.count(p))
            work.push_back(p);
      }
    }
  }
  std::vector<NaturalLoop> loops;
  for (auto &[h, l] : by_header)
    loops.push_back(std::move(l));
  for (NaturalLoop &l : loops) {
    l.innermost = std::none_of(loops.begin(), loops.end(), [&](const NaturalLoop &o) {
      return o.header != l.header && o.body.size() < l.body.size() &&
             std::includes(l.body.begin(), l.body.end(), o.body.begin(), o.body.end());
    });
  }
  return loops;
}

DupResult unroll_first(const Function &f, const NaturalLoop &loop, std::size_t max_body) {
  if (auto why = check_candidate(f, loop))
    return {std::nullopt, *why};
  if (loop.body.size() > max_body)
    return {std::nullopt, "loop body has " + std::to_string(loop.body.size()) + " nodes, over the limit of " +
                              std::to_string(max_body)};
  std::vector<NodeId> nodes(loop.body.begin(), loop.body.end());
  auto succ = [&](NodeId s, const std::map<NodeId, NodeId> &copy) {
    if (s == loop.header || !copy.count(s))
      return s;
    return copy.at(s);
  };
  return {duplicate(f, loop, nodes, succ), {}};
}

DupResult rotate(const Function &f, const NaturalLoop &loop) {
  if (auto why = check_candidate(f, loop))
    return {std::nullopt, *why};
  std::vector<NodeId> prefix;
  std::set<NodeId> in_prefix;
  NodeId n = loop.header;
  while (true) {
    if (!loop.body.count(n) || !in_prefix.insert(n).second)
      return {std::nullopt, "no loop exit test reachable from the header"};
    prefix.push_back(n);
    const ir::Instruction &ins = f.at(n);
    if (const auto *c = std::get_if<ir::Icond>(&ins)) {
      bool so_in = loop.body.count(c->ifso) > 0, not_in = loop.body.count(c->ifnot) > 0;
      if (so_in == not_in)
        return {std::nullopt, "first conditional is not a loop exit test"};
      NodeId inside = so_in ? c->ifso : c->ifnot;
      if (in_prefix.count(inside))
        return {std::nullopt, "loop is already in rotated form"};
      break;
    }
    auto succs = ir::successors(ins);
    if (succs.size() != 1)
      return {std::nullopt, "no loop exit test reachable from the header"};
    n = succs[0];
  }
  auto succ = [&](NodeId s, const std::map<NodeId, NodeId> &copy) {
    if (s == loop.header || !copy.count(s))
      return s;
    return copy.at(s);
  };
  return {duplicate(f, loop, prefix, succ), {}};
}

namespace {

template <class Transform> PassResult apply_all(const Function &f, Transform transform) {
  PassResult r{f, identity_map(f), 0, 0};
  std::set<NodeId> done;
  while (true) {
    std::optional<NaturalLoop> next;
    for (const NaturalLoop &l : find_loops(r.fn))
      if (l.innermost && !done.count(l.header)) {
        next = l;
        break;
      }
    if (!next)
      return r;
    done.insert(next->header);
    DupResult d = transform(r.fn, *next);
    if (!d.out) {
      ++r.skipped;
      continue;
    }
    r.map = compose(r.map, d.out->map);
    r.fn = std::move(d.out->fn);
    ++r.applied;
  }
}

} // namespace

PassResult unroll_all(const Function &f, std::size_t max_body) {
  return apply_all(f, [&](const Function &g, const NaturalLoop &l) { return unroll_first(g, l, max_body); });
}

PassResult rotate_all(const Function &f) {
  return apply_all(f, [](const Function &g, const NaturalLoop &l) { return rotate(g, l); });
}

RevMap identity_map(const Function &f) {
  RevMap m;
  for (const auto &[n, _] : f.code)
    m[n] = n;
  return m;
}

RevMap compose(const RevMap &first, const RevMap &second) {
  RevMap m;
  for (const auto &[p2, p1] : second) {
    auto it = first.find(p1);
    if (it != first.end())
      m[p2] = it->second;
  }
  return m;
}

Verdict verify_dup(const Function &orig, const Function &transf, const RevMap &f) {
  auto reject = [](NodeId n, std::string why) { return Verdict{false, n, std::move(why)}; };
  if (orig.params != transf.params || orig.stacksize != transf.stacksize)
    return reject(NodeId{}, "function signature differs");
  auto image = [&](NodeId p) -> std::optional<NodeId> {
    auto it = f.find(p);
    if (it == f.end() || !orig.code.count(it->second))
      return std::nullopt;
    return it->second;
  };
  auto entry = image(transf.entry);
  if (!entry || *entry != orig.entry)
    return reject(transf.entry, "entry is not mapped to the original entry");
  for (const auto &[p, ins] : transf.code) {
    auto q = image(p);
    if (!q)
      return reject(p, "node is not mapped to an original node");
    const ir::Instruction &orig_ins = orig.at(*q);
    if (!ir::same_except_successors(ins, orig_ins))
      return reject(p, "instruction differs from node " + std::to_string(q->id));
    auto s1 = ir::successors(ins), s0 = ir::successors(orig_ins);
    if (s1.size() != s0.size())
      return reject(p, "successor count differs from node " + std::to_string(q->id));
    for (std::size_t i = 0; i < s1.size(); ++i) {
      auto si = image(s1[i]);
      if (!si || !transf.code.count(s1[i]) || *si != s0[i])
        return reject(p, "successor " + std::to_string(i + 1) + " is not mapped to the original successor");
    }
  }
  return {};
}

std::string to_json(const RevMap &m) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto &[p2, p] : m)
    j[std::to_string(p2.id)] = p.id;
  return j.dump();
}

RevMap revmap_from_json(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw std::invalid_argument(std::string("malformed map: ") + e.what());
  }
  if (!j.is_object())
    throw std::invalid_argument("map must be a JSON object");
  RevMap m;
  for (const auto &[k, v] : j.items()) {
    std::size_t used = 0;
    unsigned long key = 0;
    try {
      key = std::stoul(k, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != k.size() || key == 0 || key > 0xFFFFFFFFul)
      throw std::invalid_argument("invalid node id '" + k + "'");
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0 || v.get<std::uint64_t>() > 0xFFFFFFFFull)
      throw std::invalid_argument("invalid target for node " + k);
    m[NodeId{static_cast<std::uint32_t>(key)}] = NodeId{v.get<std::uint32_t>()};
  }
  return m;
}

} // namespace rtlcse::dup

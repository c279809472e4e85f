#include "rtlcse/cleanup.hpp"

#include <deque>

namespace rtlcse::cleanup {

using ir::NodeId;
using ir::Reg;

ir::Function elim_self_moves(const ir::Function &f) {
  ir::Function out = f;
  for (auto &[n, ins] : out.code) {
    const auto *op = std::get_if<ir::Iop>(&ins);
    if (op && op->op.code == ir::OpCode::Move && op->args.size() == 1 && op->args[0] == op->dest)
      ins = ir::Inop{op->succ};
  }
  return out;
}

LiveSet liveness(const ir::Function &f) {
  LiveSet ls;
  std::map<NodeId, std::vector<NodeId>> preds;
  for (const auto &[n, ins] : f.code) {
    ls.live_in[n];
    ls.live_out[n];
    for (NodeId s : ir::successors(ins))
      preds[s].push_back(n);
  }
  std::deque<NodeId> work;
  std::set<NodeId> queued;
  for (auto it = f.code.rbegin(); it != f.code.rend(); ++it) {
    work.push_back(it->first);
    queued.insert(it->first);
  }
  while (!work.empty()) {
    NodeId n = work.front();
    work.pop_front();
    queued.erase(n);
    const ir::Instruction &ins = f.at(n);
    std::set<Reg> out;
    for (NodeId s : ir::successors(ins)) {
      auto it = ls.live_in.find(s);
      if (it != ls.live_in.end())
        out.insert(it->second.begin(), it->second.end());
    }
    std::set<Reg> in = out;
    if (auto d = ir::def(ins))
      in.erase(*d);
    for (Reg r : ir::uses(ins))
      in.insert(r);
    ls.live_out[n] = std::move(out);
    if (in != ls.live_in[n]) {
      ls.live_in[n] = std::move(in);
      for (NodeId p : preds[n])
        if (queued.insert(p).second)
          work.push_back(p);
    }
  }
  return ls;
}

ir::Function dce(const ir::Function &f) {
  ir::Function out = f;
  while (true) {
    LiveSet ls = liveness(out);
    bool changed = false;
    for (auto &[n, ins] : out.code) {
      std::optional<NodeId> succ;
      Reg dest;
      if (const auto *op = std::get_if<ir::Iop>(&ins)) {
        succ = op->succ;
        dest = op->dest;
      } else if (const auto *ld = std::get_if<ir::Iload>(&ins)) {
        succ = ld->succ;
        dest = ld->dest;
      }
      if (succ && !ls.live_out.at(n).count(dest)) {
        ins = ir::Inop{*succ};
        changed = true;
      }
    }
    if (!changed)
      return out;
  }
}

} // namespace rtlcse::cleanup

#include "rtlcse/hset.hpp"

#include <algorithm>
#include <iterator>
#include <set>

namespace rtlcse::hset {

namespace {

std::uint64_t splitmix(std::uint64_t &state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

using Model = std::set<Key>;

} // namespace

AuditReport random_audit(std::uint64_t seed, std::size_t ops, Key max_key) {
  constexpr std::size_t kSlots = 16;
  AuditReport rep;
  InternTable t;
  std::vector<Set> sets(kSlots);
  std::vector<Model> models(kSlots);
  std::unordered_set<std::uint64_t> verified;
  std::uint64_t state = seed;
  auto rnd = [&](std::uint64_t n) { return splitmix(state) % n; };
  auto key = [&] { return 1 + rnd(max_key); };

  auto mismatch = [&](const std::string &what) {
    if (rep.mismatches++ == 0)
      rep.first_mismatch = what + " after " + std::to_string(rep.ops) + " operations";
  };
  auto store = [&](std::size_t slot, Set s, Model m) {
    if (!audit_reduced(s, verified))
      ++rep.unreduced;
    if (contents(s) != std::vector<Key>(m.begin(), m.end()))
      mismatch("contents of slot " + std::to_string(slot));
    sets[slot] = s;
    models[slot] = std::move(m);
  };
  auto shortcut = [&](auto op) {
    std::uint64_t before = descent_counter();
    op();
    rep.shortcut_descents += descent_counter() - before;
  };

  for (std::size_t i = 0; i < ops; ++i, ++rep.ops) {
    std::size_t a = rnd(kSlots), b = rnd(kSlots), c = rnd(kSlots);
    std::uint64_t pick = rnd(100);
    if (pick < 35) {
      Key k = key();
      Model m = models[a];
      m.insert(k);
      store(c, t.add(sets[a], k), std::move(m));
    } else if (pick < 50) {
      Model m = models[a];
      Key k = m.empty() || rnd(2) ? key() : *std::next(m.begin(), rnd(std::min<std::size_t>(m.size(), 64)));
      m.erase(k);
      store(c, t.remove(sets[a], k), std::move(m));
    } else if (pick < 57) {
      Model m;
      std::set_union(models[a].begin(), models[a].end(), models[b].begin(), models[b].end(),
                     std::inserter(m, m.end()));
      store(c, t.unite(sets[a], sets[b]), std::move(m));
    } else if (pick < 64) {
      Model m;
      std::set_intersection(models[a].begin(), models[a].end(), models[b].begin(), models[b].end(),
                            std::inserter(m, m.end()));
      store(c, t.inter(sets[a], sets[b]), std::move(m));
    } else if (pick < 71) {
      Model m;
      std::set_difference(models[a].begin(), models[a].end(), models[b].begin(), models[b].end(),
                          std::inserter(m, m.end()));
      store(c, t.diff(sets[a], sets[b]), std::move(m));
    } else if (pick < 73) {
      store(c, t.empty(), {});
    } else if (pick < 80) {
      Set s = sets[a];
      Set r1, r2, r3;
      bool eq = false;
      shortcut([&] {
        r1 = t.unite(s, s);
        r2 = t.inter(s, s);
        r3 = t.diff(s, s);
        eq = equal(s, s) && subset(s, s);
      });
      ++rep.queries;
      if (!(r1 == s && r2 == s && r3.is_empty() && eq))
        mismatch("identity shortcut on slot " + std::to_string(a));
    } else {
      ++rep.queries;
      Key k = key();
      if (contains(sets[a], k) != (models[a].count(k) > 0))
        mismatch("contains");
      if (equal(sets[a], sets[b]) != (models[a] == models[b]))
        mismatch("equal");
      bool sub = std::includes(models[b].begin(), models[b].end(), models[a].begin(), models[a].end());
      if (subset(sets[a], sets[b]) != sub)
        mismatch("subset");
      if (size(sets[a]) != models[a].size())
        mismatch("size");
      if (is_empty(sets[a]) != models[a].empty())
        mismatch("is_empty");
    }
  }
  return rep;
}

} // namespace rtlcse::hset

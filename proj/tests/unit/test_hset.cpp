#include "doctest.h"

#include "rtlcse/gen.hpp"
#include "rtlcse/hset.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

using namespace rtlcse::hset;

namespace {

/// Digit path of a key: 0/1 per level, least significant first, excluding the
/// terminating 1.
std::vector<int> path_of(Key k) {
  std::vector<int> out;
  while (k > 1) {
    out.push_back(static_cast<int>(k & 1));
    k >>= 1;
  }
  return out;
}

/// Membership by walking the raw trie along the digit path.
bool walk_contains(Set s, Key k) {
  const Node *n = s.root();
  for (int d : path_of(k)) {
    if (!n)
      return false;
    n = d ? n->child1 : n->child0;
  }
  return n && n->flag;
}

std::vector<Key> sorted(const std::set<Key> &s) { return {s.begin(), s.end()}; }

Set build(InternTable &t, std::initializer_list<Key> keys) {
  Set s = t.empty();
  for (Key k : keys)
    s = t.add(s, k);
  return s;
}

} // namespace

TEST_CASE("empty set") {
  InternTable t;
  Set e = t.empty();
  for (Key k : {1ull, 2ull, 3ull, 1000000ull})
    CHECK_FALSE(contains(e, k));
  CHECK(equal(e, t.empty()));
  CHECK(contents(e).empty());
  CHECK(is_empty(e));
  CHECK(e.uid() == 0);
}

TEST_CASE("add builds reduced interned nodes") {
  InternTable t;
  Set one = t.add(t.empty(), 1);
  REQUIRE(one.root() != nullptr);
  CHECK(one.root()->flag);
  CHECK(one.root()->child0 == nullptr);
  CHECK(one.root()->child1 == nullptr);

  Set five = t.add(t.empty(), 5);
  CHECK(t.add(five, 5) == five);

  Set six = t.add(t.empty(), 6);
  CHECK(path_of(6) == std::vector<int>{0, 1});
  REQUIRE(six.root() != nullptr);
  CHECK_FALSE(six.root()->flag);
  CHECK(six.root()->child1 == nullptr);
  const Node *mid = six.root()->child0;
  REQUIRE(mid != nullptr);
  CHECK_FALSE(mid->flag);
  CHECK(mid->child0 == nullptr);
  REQUIRE(mid->child1 != nullptr);
  CHECK(mid->child1->flag);
  for (Key k = 1; k <= 64; ++k)
    CHECK(contains(six, k) == (k == 6));
  CHECK(audit_reduced(six));
}

TEST_CASE("remove re-reduces the spine") {
  InternTable t;
  Set s = t.remove(t.add(t.empty(), 7), 7);
  CHECK(s.root() == nullptr);
  CHECK(is_empty(s));
  CHECK_FALSE(contains(build(t, {2, 3}), 4));
  CHECK(t.remove(build(t, {2, 3}), 9) == build(t, {3, 2}));
}

TEST_CASE("remove over random keys matches a sorted-list model") {
  InternTable t;
  rtlcse::gen::Rng rng(42);
  std::set<Key> model;
  Set s = t.empty();
  std::vector<Key> keys;
  for (int i = 0; i < 10000; ++i) {
    Key k = static_cast<Key>(rng.range(1, 1000000));
    keys.push_back(k);
    s = t.add(s, k);
    model.insert(k);
  }
  for (int i = 0; i < 10000; ++i) {
    Key k = rng.chance(0.7) ? keys[rng.range(0, keys.size() - 1)] : static_cast<Key>(rng.range(1, 1000000));
    s = t.remove(s, k);
    model.erase(k);
  }
  CHECK(contents(s) == sorted(model));
  CHECK(size(s) == model.size());
  CHECK(audit_reduced(s));
  for (Key k : keys)
    CHECK(walk_contains(s, k) == (model.count(k) == 1));
}

TEST_CASE("set algebra on small sets") {
  InternTable t;
  CHECK(contents(t.unite(build(t, {1, 2}), build(t, {2, 6}))) == std::vector<Key>{1, 2, 6});
  CHECK(contents(t.diff(build(t, {1, 2, 6}), build(t, {2}))) == std::vector<Key>{1, 6});
  CHECK(contents(t.inter(build(t, {1, 2, 6}), build(t, {2, 6, 9}))) == std::vector<Key>{2, 6});
  CHECK(is_empty(t.inter(build(t, {1}), build(t, {2}))));
}

TEST_CASE("identity shortcuts perform no descents") {
  InternTable t;
  Set s = t.empty();
  for (Key k = 1; k < 500; k += 3)
    s = t.add(s, k * 7919 % 100000 + 1);
  auto &counter = descent_counter();
  counter = 0;
  CHECK(t.inter(s, s) == s);
  CHECK(t.unite(s, s) == s);
  CHECK(is_empty(t.diff(s, s)));
  CHECK(equal(s, s));
  CHECK(subset(s, s));
  CHECK(counter == 0);
}

TEST_CASE("equality ignores insertion order") {
  InternTable t;
  CHECK(equal(build(t, {3, 9}), build(t, {9, 3})));
  CHECK(build(t, {3, 9}).uid() == build(t, {9, 3}).uid());
  CHECK_FALSE(equal(build(t, {3, 9}), build(t, {3})));
}

TEST_CASE("subset") {
  InternTable t;
  CHECK(subset(build(t, {2}), build(t, {2, 6})));
  CHECK_FALSE(subset(build(t, {2, 6}), build(t, {2})));
  CHECK(subset(t.empty(), build(t, {2})));
  CHECK_FALSE(subset(build(t, {1}), t.empty()));
}

TEST_CASE("contents and fold") {
  InternTable t;
  Set s = build(t, {6, 1, 2});
  CHECK(contents(s) == std::vector<Key>{1, 2, 6});
  CHECK(fold<Key>(s, [](Key acc, Key k) { return acc + k; }, 0) == 9);
  CHECK(fold<std::vector<Key>>(
            s,
            [](std::vector<Key> acc, Key k) {
              acc.push_back(k);
              return acc;
            },
            {}) == contents(s));
  CHECK(dump(s) == "{1,2,6}");
  CHECK(dump(t.empty()) == "{}");
  CHECK(t.from_keys({9, 4, 4, 1}) == build(t, {1, 4, 9}));
}

TEST_CASE("random operations agree with a naive model") {
  InternTable t;
  rtlcse::gen::Rng rng(7);
  const int slots = 8;
  std::vector<Set> sets(slots, t.empty());
  std::vector<std::set<Key>> model(slots);
  auto key = [&] { return static_cast<Key>(rng.chance(0.5) ? rng.range(1, 64) : rng.range(1, 1000000)); };
  for (int i = 0; i < 20000; ++i) {
    int a = static_cast<int>(rng.range(0, slots - 1)), b = static_cast<int>(rng.range(0, slots - 1));
    int dst = static_cast<int>(rng.range(0, slots - 1));
    switch (rng.range(0, 5)) {
    case 0:
    case 1: {
      Key k = key();
      sets[dst] = t.add(sets[a], k);
      model[dst] = model[a];
      model[dst].insert(k);
      break;
    }
    case 2: {
      Key k = model[a].empty() || rng.chance(0.3) ? key() : *model[a].begin();
      sets[dst] = t.remove(sets[a], k);
      model[dst] = model[a];
      model[dst].erase(k);
      break;
    }
    case 3: {
      std::set<Key> m = model[a];
      m.insert(model[b].begin(), model[b].end());
      sets[dst] = t.unite(sets[a], sets[b]);
      model[dst] = m;
      break;
    }
    case 4: {
      std::set<Key> m;
      std::set_intersection(model[a].begin(), model[a].end(), model[b].begin(), model[b].end(),
                            std::inserter(m, m.end()));
      sets[dst] = t.inter(sets[a], sets[b]);
      model[dst] = m;
      break;
    }
    default: {
      std::set<Key> m;
      std::set_difference(model[a].begin(), model[a].end(), model[b].begin(), model[b].end(),
                          std::inserter(m, m.end()));
      sets[dst] = t.diff(sets[a], sets[b]);
      model[dst] = m;
      break;
    }
    }
    REQUIRE(contents(sets[dst]) == sorted(model[dst]));
    REQUIRE(audit_reduced(sets[dst]));
    CHECK(equal(sets[a], sets[b]) == (model[a] == model[b]));
    CHECK(subset(sets[a], sets[b]) ==
          std::includes(model[b].begin(), model[b].end(), model[a].begin(), model[a].end()));
  }
}

TEST_CASE("union and intersection are commutative and associative") {
  InternTable t;
  rtlcse::gen::Rng rng(3);
  auto rand_set = [&] {
    Set s = t.empty();
    for (int i = static_cast<int>(rng.range(0, 30)); i > 0; --i)
      s = t.add(s, static_cast<Key>(rng.range(1, 200)));
    return s;
  };
  for (int i = 0; i < 200; ++i) {
    Set a = rand_set(), b = rand_set(), c = rand_set();
    CHECK(t.unite(a, b) == t.unite(b, a));
    CHECK(t.inter(a, b) == t.inter(b, a));
    CHECK(t.unite(t.unite(a, b), c) == t.unite(a, t.unite(b, c)));
    CHECK(t.inter(t.inter(a, b), c) == t.inter(a, t.inter(b, c)));
    CHECK(t.unite(t.diff(a, b), t.inter(a, b)) == a);
  }
}

TEST_CASE("random_audit reports a clean run") {
  AuditReport r = random_audit(11, 20000);
  CHECK(r.ops == 20000);
  CHECK(r.queries > 0);
  CHECK(r.mismatches == 0);
  CHECK(r.unreduced == 0);
  CHECK(r.shortcut_descents == 0);
  CHECK(r.first_mismatch.empty());
}

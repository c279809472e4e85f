#include "rtlcse/hset.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <unordered_set>

namespace rtlcse::hset {

std::uint64_t &descent_counter() {
  thread_local std::uint64_t counter = 0;
  return counter;
}

namespace {

inline void count_descent() { ++descent_counter(); }

const Node *child(const Node *n, int bit) { return bit ? n->child1 : n->child0; }

} // namespace

std::size_t InternTable::ShapeHash::operator()(const Shape &s) const noexcept {
  std::uint64_t h = s.uid0 * 0x9E3779B97F4A7C15ULL;
  h ^= s.uid1 + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
  h ^= s.flag ? 0xD6E8FEB86659FD93ULL : 0;
  return static_cast<std::size_t>(h ^ (h >> 31));
}

const Node *InternTable::make(bool flag, const Node *c0, const Node *c1) {
  if (!flag && c0 == nullptr && c1 == nullptr)
    return nullptr;
  Shape shape{flag, c0 ? c0->uid : 0, c1 ? c1->uid : 0};
  auto it = index_.find(shape);
  if (it != index_.end())
    return it->second;
  const Node *n = &nodes_.emplace_back(Node{flag, c0, c1, next_uid_++});
  index_.emplace(shape, n);
  return n;
}

const Node *InternTable::add_rec(const Node *n, Key k) {
  if (k == 1) {
    if (n && n->flag)
      return n;
    return make(true, n ? n->child0 : nullptr, n ? n->child1 : nullptr);
  }
  const Node *c0 = n ? n->child0 : nullptr;
  const Node *c1 = n ? n->child1 : nullptr;
  bool flag = n && n->flag;
  if (k & 1)
    c1 = add_rec(c1, k >> 1);
  else
    c0 = add_rec(c0, k >> 1);
  return make(flag, c0, c1);
}

const Node *InternTable::remove_rec(const Node *n, Key k) {
  if (n == nullptr)
    return nullptr;
  if (k == 1)
    return n->flag ? make(false, n->child0, n->child1) : n;
  const Node *c0 = n->child0;
  const Node *c1 = n->child1;
  if (k & 1) {
    const Node *nc = remove_rec(c1, k >> 1);
    if (nc == c1)
      return n;
    c1 = nc;
  } else {
    const Node *nc = remove_rec(c0, k >> 1);
    if (nc == c0)
      return n;
    c0 = nc;
  }
  return make(n->flag, c0, c1);
}

const Node *InternTable::unite_rec(const Node *a, const Node *b) {
  if (a == b || b == nullptr)
    return a;
  if (a == nullptr)
    return b;
  count_descent();
  return make(a->flag || b->flag, unite_rec(a->child0, b->child0),
              unite_rec(a->child1, b->child1));
}

const Node *InternTable::inter_rec(const Node *a, const Node *b) {
  if (a == b)
    return a;
  if (a == nullptr || b == nullptr)
    return nullptr;
  count_descent();
  return make(a->flag && b->flag, inter_rec(a->child0, b->child0),
              inter_rec(a->child1, b->child1));
}

const Node *InternTable::diff_rec(const Node *a, const Node *b) {
  if (a == b || a == nullptr)
    return nullptr;
  if (b == nullptr)
    return a;
  count_descent();
  return make(a->flag && !b->flag, diff_rec(a->child0, b->child0),
              diff_rec(a->child1, b->child1));
}

Set InternTable::add(Set s, Key k) {
  assert(k >= 1);
  return Set(add_rec(s.root(), k));
}

Set InternTable::remove(Set s, Key k) {
  assert(k >= 1);
  return Set(remove_rec(s.root(), k));
}

Set InternTable::unite(Set a, Set b) { return Set(unite_rec(a.root(), b.root())); }
Set InternTable::inter(Set a, Set b) { return Set(inter_rec(a.root(), b.root())); }
Set InternTable::diff(Set a, Set b) { return Set(diff_rec(a.root(), b.root())); }

Set InternTable::from_keys(const std::vector<Key> &keys) {
  Set s;
  for (Key k : keys)
    s = add(s, k);
  return s;
}

bool contains(Set s, Key k) {
  const Node *n = s.root();
  while (n != nullptr && k != 1) {
    n = child(n, static_cast<int>(k & 1));
    k >>= 1;
  }
  return n != nullptr && n->flag;
}

static bool subset_rec(const Node *a, const Node *b) {
  if (a == b || a == nullptr)
    return true;
  if (b == nullptr)
    return false;
  if (a->flag && !b->flag)
    return false;
  count_descent();
  return subset_rec(a->child0, b->child0) && subset_rec(a->child1, b->child1);
}

bool subset(Set a, Set b) { return subset_rec(a.root(), b.root()); }

static void collect(const Node *n, Key acc, unsigned depth, std::vector<Key> &out) {
  if (n == nullptr)
    return;
  const Key bit = Key{1} << depth;
  if (n->flag)
    out.push_back(acc | bit);
  collect(n->child0, acc, depth + 1, out);
  collect(n->child1, acc | bit, depth + 1, out);
}

std::vector<Key> contents(Set s) {
  std::vector<Key> out;
  collect(s.root(), 0, 0, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t size(Set s) {
  std::function<std::size_t(const Node *)> rec = [&](const Node *n) -> std::size_t {
    return n == nullptr ? 0 : (n->flag ? 1 : 0) + rec(n->child0) + rec(n->child1);
  };
  return rec(s.root());
}

std::string dump(Set s) {
  std::string out = "{";
  bool first = true;
  for (Key k : contents(s)) {
    if (!first)
      out += ',';
    first = false;
    out += std::to_string(k);
  }
  out += '}';
  return out;
}

static bool audit_rec(const Node *n, std::unordered_set<std::uint64_t> *verified) {
  if (n == nullptr || (verified && verified->count(n->uid)))
    return true;
  if (!n->flag && n->child0 == nullptr && n->child1 == nullptr)
    return false;
  if (!audit_rec(n->child0, verified) || !audit_rec(n->child1, verified))
    return false;
  if (verified)
    verified->insert(n->uid);
  return true;
}

bool audit_reduced(Set s) { return audit_rec(s.root(), nullptr); }

bool audit_reduced(Set s, std::unordered_set<std::uint64_t> &verified) {
  return audit_rec(s.root(), &verified);
}

} // namespace rtlcse::hset

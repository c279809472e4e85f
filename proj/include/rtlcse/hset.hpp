// Hash-consed sets of positive integers.
//
// A set is a binary trie indexed by the binary digits of its keys, least
// significant first, with the terminating 1 marking the node: key 1 is the
// root, an even key k lives at key k/2 of the "0" child, an odd key k > 1 at
// key (k-1)/2 of the "1" child. Tries are kept reduced (no node with a false
// flag and two empty children) and every node is interned in an InternTable,
// so two sets built through the same table are equal iff their roots are the
// same node. The set algebra uses that identity to short-circuit.
#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace rtlcse::hset {

using Key = std::uint64_t;

struct Node {
  bool flag;
  const Node *child0;
  const Node *child1;
  std::uint64_t uid;
};

/// Immutable handle to an interned reduced trie. The empty set is the null
/// root (uid 0).
class Set {
public:
  Set() = default;

  const Node *root() const { return root_; }
  std::uint64_t uid() const { return root_ ? root_->uid : 0; }
  bool is_empty() const { return root_ == nullptr; }

  friend bool operator==(Set a, Set b) { return a.root_ == b.root_; }

private:
  friend class InternTable;
  explicit Set(const Node *root) : root_(root) {}
  const Node *root_ = nullptr;
};

/// Owns every node of the sets it builds. Constructing operations on one table
/// must be externally serialized; Set handles may be read concurrently.
class InternTable {
public:
  InternTable() = default;
  InternTable(const InternTable &) = delete;
  InternTable &operator=(const InternTable &) = delete;

  Set empty() const { return Set(); }
  Set add(Set s, Key k);
  Set remove(Set s, Key k);
  Set unite(Set a, Set b);
  Set inter(Set a, Set b);
  Set diff(Set a, Set b);
  Set from_keys(const std::vector<Key> &keys);

  std::size_t node_count() const { return nodes_.size(); }

private:
  struct Shape {
    bool flag;
    std::uint64_t uid0;
    std::uint64_t uid1;
    bool operator==(const Shape &) const = default;
  };
  struct ShapeHash {
    std::size_t operator()(const Shape &s) const noexcept;
  };

  const Node *make(bool flag, const Node *c0, const Node *c1);
  const Node *add_rec(const Node *n, Key k);
  const Node *remove_rec(const Node *n, Key k);
  const Node *unite_rec(const Node *a, const Node *b);
  const Node *inter_rec(const Node *a, const Node *b);
  const Node *diff_rec(const Node *a, const Node *b);

  std::deque<Node> nodes_;
  std::unordered_map<Shape, const Node *, ShapeHash> index_;
  std::uint64_t next_uid_ = 1;
};

bool contains(Set s, Key k);
inline bool is_empty(Set s) { return s.is_empty(); }
/// Both operands must come from the same InternTable.
inline bool equal(Set a, Set b) { return a.uid() == b.uid(); }
bool subset(Set a, Set b);
std::size_t size(Set s);

/// Keys in ascending order.
std::vector<Key> contents(Set s);

template <typename Acc, typename F> Acc fold(Set s, F &&f, Acc init) {
  for (Key k : contents(s))
    init = f(std::move(init), k);
  return init;
}

/// `{k1,k2,...}` in ascending order.
std::string dump(Set s);

/// True when no reachable node has a false flag and two empty children.
bool audit_reduced(Set s);
/// Same, skipping nodes whose uid is in `verified` and adding the ones found
/// reduced. Interned nodes never change, so the cache stays valid.
bool audit_reduced(Set s, std::unordered_set<std::uint64_t> &verified);

struct AuditReport {
  std::size_t ops = 0;
  std::size_t queries = 0;
  std::size_t mismatches = 0;
  std::size_t unreduced = 0;
  std::uint64_t shortcut_descents = 0;  // descents in x-op-x cases; expected 0
  std::string first_mismatch;
};

/// Runs `ops` random operations with keys up to `max_key` against a naive
/// model, auditing every result.
AuditReport random_audit(std::uint64_t seed, std::size_t ops, Key max_key = 1000000);

/// Number of child descents performed by the recursive set operations on this
/// thread. Used to check the identity shortcuts.
std::uint64_t &descent_counter();

} // namespace rtlcse::hset

#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "tinval/audit.hpp"
#include "tinval/latch.hpp"
#include "tinval/model.hpp"

namespace tinval {

struct IntervalEntry {
  Value lo;
  Value hi;
  EntryId id = 0;

  friend auto operator<=>(const IntervalEntry&, const IntervalEntry&) = default;
  friend bool operator==(const IntervalEntry&, const IntervalEntry&) = default;
};

/// Concurrent interval index shaped like a B+-tree over lower bounds. Every
/// node tracks the largest upper bound below it so stabbing queries prune
/// subtrees on both sides.
///
/// Concurrency: operations descend with shared latches and take leaves
/// exclusively; splits use exclusive latch coupling. Removals that leave a
/// node under-full only mark its parent; the parent's children are repaired
/// by whichever thread next unwinds through it and wins the node's format
/// flag. An entry removed by invalidate is returned by exactly one caller.
class QTree {
 public:
  /// Decides, under the leaf latch, whether a covering entry is taken.
  using Accept = std::function<bool(const IntervalEntry&)>;

  explicit QTree(std::size_t arity = 32);
  ~QTree();
  QTree(const QTree&) = delete;
  QTree& operator=(const QTree&) = delete;

  /// Throws InvalidInterval when hi < lo. Re-inserting a present triple is a no-op.
  void insert(const Value& lo, const Value& hi, EntryId id);
  bool evict(const Value& lo, const Value& hi, EntryId id);
  /// Removes and returns (sorted, unique) every entry covering key that
  /// `accept` approves; all covering entries when accept is empty.
  std::vector<EntryId> invalidate(const Value& key, const Accept& accept = {});
  std::vector<EntryId> stab(const Value& key) const;

  [[nodiscard]] std::size_t size() const noexcept { return size_.load(); }
  [[nodiscard]] std::size_t arity() const noexcept { return arity_; }
  [[nodiscard]] std::size_t height() const;

  /// Quiescent-only helpers.
  [[nodiscard]] std::vector<IntervalEntry> dump() const;
  /// Runs any repair still pending after concurrent removals.
  void settle();
  /// Checks ordering, separators, equal leaf depth, exact subtree maxima and
  /// the leaf chain; with `check_fanout` also minimum occupancy.
  [[nodiscard]] AuditReport audit(bool check_fanout = true) const;

  /// Nodes touched by stab/invalidate since the last reset.
  [[nodiscard]] std::uint64_t node_visits() const noexcept { return visits_.load(); }
  void reset_node_visits() noexcept { visits_.store(0); }

  // Implementation detail; public only so file-local helpers can name it.
  struct Node;

 private:
  bool insert_optimistic(const IntervalEntry& e);
  void insert_pessimistic(const IntervalEntry& e);
  void stab_walk(const Node* n, const Value& key, std::vector<EntryId>& out) const;
  void remove_walk(Node* n, const Value& key, const Accept& accept, std::vector<EntryId>& out);
  bool remove_from_leaf(Node* leaf, Node* parent, const Value& key, const Accept& accept,
                        std::vector<EntryId>& out);
  bool evict_walk(Node* n, const IntervalEntry& e);
  bool evict_from_leaf(Node* leaf, Node* parent, const IntervalEntry& e);
  void maybe_repair(Node* n, Node* parent);
  bool repair_children(Node* n);
  void settle_walk(Node* n, Node* parent);
  void collapse_root();

  std::size_t arity_;
  std::size_t min_fanout_;
  mutable RwLatch root_latch_;  // acts as the parent of the root node
  std::unique_ptr<Node> root_;
  std::atomic<std::size_t> size_{0};
  std::atomic<bool> root_shrinkable_{false};
  mutable std::atomic<std::uint64_t> visits_{0};
};

}  // namespace tinval

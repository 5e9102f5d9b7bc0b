#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "tinval/audit.hpp"
#include "tinval/bloom.hpp"
#include "tinval/latch.hpp"
#include "tinval/model.hpp"

namespace tinval {

/// A stored (filter bits, entry id) pair as returned by BFTree::dump.
struct StoredFilter {
  EntryId id = 0;
  std::vector<std::uint64_t> words;

  friend auto operator<=>(const StoredFilter&, const StoredFilter&) = default;
};

/// Concurrent balanced tree over bloom filters. Every node keeps a mask that
/// is a superset of the OR of the filters below it; a search for a probe
/// filter only enters nodes whose mask contains the probe.
///
/// Masks only grow on insert. They are recomputed exactly when deferred
/// repair restructures a node and by audit_and_tighten; eviction and
/// invalidation leave them as over-approximations. Filters are placed under
/// the child whose mask overlaps them most. Concurrency follows QTree.
class BFTree {
 public:
  /// Decides, under the leaf latch, whether a matching entry is taken.
  using Accept = std::function<bool(EntryId)>;

  explicit BFTree(const BloomConfig& cfg, std::size_t arity = 16);
  ~BFTree();
  BFTree(const BFTree&) = delete;
  BFTree& operator=(const BFTree&) = delete;

  /// Duplicates are stored as separate items. Throws ConfigMismatch.
  void insert(const BloomFilter& filter, EntryId id);
  /// Removes one item with exactly these bits and id.
  bool evict(const BloomFilter& filter, EntryId id);
  /// Removes and returns (sorted, unique) the ids of items whose filter
  /// contains the probe and that `accept` approves. Throws ConfigMismatch.
  std::vector<EntryId> invalidate(const BloomFilter& probe, const Accept& accept = {});
  std::vector<EntryId> search(const BloomFilter& probe) const;

  [[nodiscard]] std::size_t size() const noexcept { return size_.load(); }
  [[nodiscard]] std::size_t arity() const noexcept { return arity_; }
  [[nodiscard]] std::size_t height() const;

  /// Quiescent-only helpers.
  [[nodiscard]] std::vector<StoredFilter> dump() const;
  void settle();
  /// Checks shape, counts, and that every mask covers its subtree; with
  /// `exact_masks` also that no mask carries stale bits.
  [[nodiscard]] AuditReport audit(bool check_fanout = true, bool exact_masks = false) const;
  /// Recomputes every mask from its subtree; returns how many nodes shrank.
  std::size_t audit_and_tighten();

  [[nodiscard]] std::uint64_t node_visits() const noexcept { return visits_.load(); }
  void reset_node_visits() noexcept { visits_.store(0); }

  // Implementation detail; public only so file-local helpers can name it.
  struct Node;

 private:
  void check_config(const BloomFilter& f) const;
  bool insert_optimistic(const std::uint64_t* w, EntryId id);
  void insert_pessimistic(const std::uint64_t* w, EntryId id);
  void split(Node* c, std::unique_ptr<Node>& right) const;
  void search_walk(const Node* n, const std::uint64_t* p, std::vector<EntryId>& out) const;
  void remove_walk(Node* n, const std::uint64_t* p, const Accept& accept,
                   std::vector<EntryId>& out);
  void remove_from_leaf(Node* leaf, Node* parent, const std::uint64_t* p, const Accept& accept,
                        std::vector<EntryId>& out);
  bool evict_walk(Node* n, const std::uint64_t* w, EntryId id);
  bool evict_from_leaf(Node* leaf, Node* parent, const std::uint64_t* w, EntryId id);
  void maybe_repair(Node* n, Node* parent);
  bool repair_children(Node* n);
  void settle_walk(Node* n, Node* parent);
  void collapse_root();
  std::unique_ptr<Node> make_node(bool leaf) const;

  std::uint64_t fingerprint_;
  std::size_t words_;
  std::size_t arity_;
  std::size_t min_fanout_;
  mutable RwLatch root_latch_;  // acts as the parent of the root node
  std::unique_ptr<Node> root_;
  std::atomic<std::size_t> size_{0};
  std::atomic<bool> root_shrinkable_{false};
  mutable std::atomic<std::uint64_t> visits_{0};
};

}  // namespace tinval

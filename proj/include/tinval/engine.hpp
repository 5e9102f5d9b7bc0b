#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tinval/audit.hpp"
#include "tinval/bftree.hpp"
#include "tinval/bloom.hpp"
#include "tinval/metrics.hpp"
#include "tinval/qtree.hpp"
#include "tinval/simdb.hpp"

namespace tinval {

enum class StrategyKind { transparent_p, transparent_b, coarse, ttl };

std::string_view to_string(StrategyKind kind) noexcept;
/// Accepts "transparent-p", "transparent-b", "coarse" and "ttl"; throws InvalidArgument.
StrategyKind parse_strategy(std::string_view name);

struct EngineConfig {
  StrategyKind strategy = StrategyKind::transparent_p;
  /// Entries; the least recently used entry is evicted beyond this.
  std::size_t capacity = 10000;
  /// Lifetime in logical ticks under the TTL strategy.
  std::uint64_t ttl_ticks = 1000;
  BloomConfig bloom = BloomConfig::small_profile();
  std::size_t qtree_arity = 32;
  std::size_t bftree_arity = 16;

  /// Signature modes the database must produce for this strategy.
  [[nodiscard]] Modes modes() const;
};

struct CacheHit {
  EntryId id = 0;
  std::string result;
  std::uint64_t version = 0;
  std::uint64_t inserted_at = 0;
};

/// Cache side: a bounded entry store, its invalidation indexes, and metrics.
/// lookup, admit and on_update may be called concurrently.
class Engine {
 public:
  explicit Engine(EngineConfig cfg);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Expired TTL entries count as misses and are evicted.
  std::optional<CacheHit> lookup(const std::string& key, std::uint64_t now);

  /// Stores the response under `key` and registers its signature. Returns the
  /// entry id, or nullopt when the response is not cacheable or an update to
  /// one of its tables committed after it was read. Throws EmptyResult for a
  /// response without rows flagged cacheable.
  std::optional<EntryId> admit(const std::string& key, const Query& q, const QueryResponse& resp,
                               std::uint64_t now);

  /// Drops every entry the update may have changed; returns their ids sorted.
  std::vector<EntryId> on_update(const UpdateResponse& upd, std::uint64_t now);

  /// Drops one entry and all of its index residue. False if it was already gone.
  bool drop(EntryId id);

  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] bool contains(EntryId id) const;
  [[nodiscard]] std::vector<EntryId> entry_ids() const;
  [[nodiscard]] const EngineConfig& config() const noexcept { return cfg_; }
  Metrics& metrics() noexcept { return metrics_; }
  [[nodiscard]] const Metrics& metrics() const noexcept { return metrics_; }

  /// Quiescent-only: index structure checks plus agreement between live
  /// entries and index residents in both directions.
  [[nodiscard]] AuditReport audit() const;

  /// Items currently held by each invalidation index.
  [[nodiscard]] std::size_t qtree_items() const;
  [[nodiscard]] std::size_t bftree_items() const;

 private:
  struct Registration {
    enum class Kind { coarse, interval, filters } kind = Kind::coarse;
    std::vector<std::string> tables;
    // interval
    std::string attribute;
    Value lo;
    Value hi;
    PredicateSignature predicate_sig;
    // filters
    std::vector<BloomFilter> filters;
  };
  struct Entry {
    std::string key;
    std::string query_id;
    std::string result;
    std::vector<std::string> tables;
    std::uint64_t version = 0;
    std::uint64_t inserted_at = 0;
    std::uint64_t ttl_deadline = 0;
    std::shared_ptr<const QueryFootprint> footprint;
    std::list<EntryId>::iterator lru;
  };

  Registration make_registration(const Query& q, const QueryResponse& resp) const;
  void register_indexes(EntryId id, const Registration& reg);
  void unregister_indexes(EntryId id, const Registration& reg);
  /// Removes the entry from the store; the caller cleans up its residue.
  std::optional<Entry> take_entry(EntryId id);
  /// False when no registration was left to release.
  bool release_residue(EntryId id, std::vector<EntryId>* dropped);
  QTree& qtree_for(const std::string& attribute);
  QTree* find_qtree(std::string_view attribute) const;
  std::uint64_t table_version(const std::string& table) const;

  EngineConfig cfg_;
  Metrics metrics_;

  mutable std::mutex store_mu_;
  std::unordered_map<std::string, EntryId> by_key_;
  std::unordered_map<EntryId, Entry> entries_;
  std::list<EntryId> lru_;  // most recent first
  EntryId next_id_ = 1;

  // Readable from index accept callbacks, which run under leaf latches; no
  // index latch is ever taken while this is held.
  mutable std::shared_mutex reg_mu_;
  std::unordered_map<EntryId, Registration> registrations_;
  std::map<std::string, std::set<EntryId>, std::less<>> namespaces_;

  mutable std::shared_mutex qtrees_mu_;
  std::map<std::string, std::unique_ptr<QTree>, std::less<>> qtrees_;
  BFTree bftree_;

  mutable std::mutex versions_mu_;
  std::map<std::string, std::uint64_t, std::less<>> table_versions_;
};

}  // namespace tinval

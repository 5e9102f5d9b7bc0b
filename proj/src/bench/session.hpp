#pragma once

// Shared state of one workload run, used by the per-family drivers.

#include <atomic>
#include <cstdint>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tinval/bench/workload.hpp"

namespace tinval::bench {

class Session {
 public:
  Session(const WorkloadSpec& spec, Engine& engine, Database& db);

  void advance() noexcept { clock_.fetch_add(1, std::memory_order_relaxed); }
  [[nodiscard]] std::uint64_t now() const noexcept { return clock_.load(std::memory_order_relaxed); }

  /// Serves the query from the cache or the database, admitting misses.
  std::string read(const std::string& key, const Query& q);
  void write(const DmlStatement& u);
  /// Uncached read that leaves no trace in the cache or its metrics.
  [[nodiscard]] std::vector<Row> peek(const Query& q) const { return db_.evaluate(q); }

  /// Validation mode: entries live at begin whose result differs at end
  /// without having been invalidated count as missed.
  void begin_transaction();
  void end_transaction();

  [[nodiscard]] std::uint64_t missed() const noexcept { return missed_; }

 private:
  struct Tracked {
    Query query;
    std::string bytes;
  };
  void prune();

  const WorkloadSpec& spec_;
  Engine& engine_;
  Database& db_;
  Modes modes_;
  std::atomic<std::uint64_t> clock_{0};

  // Validation state; clients are serialized in validation mode.
  std::unordered_map<EntryId, Tracked> tracked_;
  bool in_txn_ = false;
  std::vector<EntryId> txn_live_;
  std::set<EntryId> txn_dropped_;
  std::uint64_t missed_ = 0;
};

class Driver {
 public:
  virtual ~Driver() = default;
  virtual void run_op(Session& s, std::mt19937_64& rng) = 0;
};

std::unique_ptr<Driver> make_ycsb_driver(const WorkloadSpec& spec, const YcsbMix& mix,
                                         const Database& db);
std::unique_ptr<Driver> make_tpcc_driver(const WorkloadSpec& spec, const TpccMix& mix,
                                         const Database& db);

}  // namespace tinval::bench

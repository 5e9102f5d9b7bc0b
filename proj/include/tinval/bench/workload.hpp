#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "tinval/bench/report.hpp"
#include "tinval/bench/zipfian.hpp"
#include "tinval/engine.hpp"
#include "tinval/simdb.hpp"

namespace tinval::bench {

/// Proportions of YCSB-style requests against `usertable`.
struct YcsbMix {
  double point_read = 0.9;
  double range_scan = 0.05;
  double update = 0.05;
};

/// Proportions of the two mini-TPC-C transactions.
struct TpccMix {
  double new_order = 0.05;
  double stock_level = 0.95;
};

struct WorkloadSpec {
  std::string name = "ycsb-rh";
  std::variant<YcsbMix, TpccMix> mix = YcsbMix{};
  Distribution distribution = Distribution::zipfian;
  double theta = 0.99;
  std::size_t threads = 1;
  /// Operations (YCSB requests or TPC-C transactions) across all clients.
  std::uint64_t ops = 100000;
  std::uint64_t max_scan_length = 10;
  std::uint64_t seed = 1;
  /// Re-executes queries to label stale hits and false invalidations.
  /// Clients then take turns, one operation at a time.
  bool validate = false;
  /// The logical clock advances one tick per operation; this maps TTLs
  /// given in seconds onto ticks.
  std::uint64_t ticks_per_second = 10000;

  /// Throws InvalidArgument unless proportions are non-negative and sum to 1,
  /// theta suits the distribution, and counts are positive.
  void check() const;

  /// "ycsb-rh", "ycsb-sh", "ycsb-mix", "ycsb-ro" and "tpcc" (the "ycsb-"
  /// prefix is optional), or explicit proportions "ycsb:READ,SCAN,UPDATE" and
  /// "tpcc:NEW_ORDER,STOCK_LEVEL". Throws InvalidArgument.
  static WorkloadSpec named(std::string_view mix);
};

std::uint64_t ttl_ticks_for(double seconds, const WorkloadSpec& spec);

/// Bloom false-positive probability of one full filter against one key.
double analytic_false_positive(const BloomConfig& cfg);

/// Drives the mix through `db` and a fresh engine built from `cfg`. YCSB
/// mixes need table `usertable` with an int column `field0`; TPC-C needs
/// `district`, `order_line` and `stock` as in fixtures/tpcc.fix. Throws
/// ConfigMismatch when the database and engine disagree on bloom parameters.
RunReport run_workload(const WorkloadSpec& spec, const EngineConfig& cfg, Database& db);

}  // namespace tinval::bench

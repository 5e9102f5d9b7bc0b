#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tinval/metrics.hpp"

namespace tinval::bench {

/// Count and 95th percentile latency of one operation type.
struct OpStats {
  std::uint64_t count = 0;
  std::uint64_t p95_ns = 0;

  friend bool operator==(const OpStats&, const OpStats&) = default;
};

/// Outcome of one workload or index-bench run, with the settings that produced it.
struct RunReport {
  std::string kind;      // "workload" or "index-bench"
  std::string workload;  // mix name, or the index kind
  std::string strategy;  // empty for index-bench
  std::string distribution;
  double theta = 0;
  std::uint64_t threads = 1;
  std::uint64_t ops = 0;
  std::uint64_t seed = 0;
  std::uint64_t bloom_bits = 0;
  std::uint64_t keys_per_filter = 0;
  std::uint64_t ttl_ticks = 0;
  double insert_ratio = 0;
  std::uint64_t preload = 0;

  MetricsSnapshot metrics;
  double hit_ratio = 0;
  double stale_rate = 0;
  double false_invalidation_rate = 0;
  /// Bloom false-positive probability of one full filter against one key.
  double analytic_fp = 0;
  /// Validation mode: entries whose result changed but were not invalidated.
  std::uint64_t missed_invalidations = 0;

  OpStats inserts;
  OpStats evictions;
  OpStats invalidations;

  double seconds = 0;
  double throughput = 0;
  bool validated = false;
  std::uint64_t audit_problems = 0;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

enum class ReportFormat { csv, json };

/// Accepts "csv" and "json"; throws InvalidArgument.
ReportFormat parse_format(std::string_view name);

/// One header line plus one line per report, columns in a fixed order.
std::string to_csv(const std::vector<RunReport>& reports);
std::string to_json(const std::vector<RunReport>& reports);
/// Throws InvalidArgument on malformed input.
std::vector<RunReport> reports_from_json(std::string_view text);

/// Writes the reports to `path`; throws IoError.
void write_report(const std::vector<RunReport>& reports, const std::string& path,
                  ReportFormat format);

}  // namespace tinval::bench

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <string>

namespace tinval {

/// Lock-free latency histogram with four buckets per power of two. A reported
/// percentile overstates the true sample by at most a quarter.
class LatencyHistogram {
 public:
  static constexpr std::size_t kBuckets = 4 * 48;

  void record(std::uint64_t nanos) noexcept;
  void merge(const LatencyHistogram& other) noexcept;
  void reset() noexcept;

  [[nodiscard]] std::uint64_t count() const noexcept;
  /// Upper edge of the bucket holding the q-quantile; 0 when empty.
  [[nodiscard]] std::uint64_t percentile(double q) const noexcept;
  [[nodiscard]] double mean() const noexcept;

  static std::size_t bucket_of(std::uint64_t nanos) noexcept;
  static std::uint64_t bucket_upper(std::size_t bucket) noexcept;

 private:
  std::array<std::atomic<std::uint64_t>, kBuckets> buckets_{};
  std::atomic<std::uint64_t> sum_{0};
};

/// Plain copy of the counters, with the derived rates.
struct MetricsSnapshot {
  std::uint64_t lookups = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t stale_hits = 0;
  std::uint64_t admissions = 0;
  std::uint64_t rejected_admissions = 0;
  std::uint64_t capacity_evictions = 0;
  std::uint64_t ttl_expirations = 0;
  std::uint64_t updates = 0;
  std::uint64_t invalidations = 0;
  std::uint64_t false_invalidations = 0;
  /// Entry/update pairs where the update left the entry's result unchanged.
  std::uint64_t unaffected_pairs = 0;
  std::uint64_t lookup_p95_ns = 0;
  std::uint64_t admit_p95_ns = 0;
  std::uint64_t update_p95_ns = 0;

  [[nodiscard]] double hit_ratio() const noexcept;
  /// Stale hits per lookup.
  [[nodiscard]] double stale_rate() const noexcept;
  /// False invalidations per unaffected entry/update pair.
  [[nodiscard]] double false_invalidation_rate() const noexcept;

  friend bool operator==(const MetricsSnapshot&, const MetricsSnapshot&) = default;
};

/// Counters shared by the engine and the harness. Every field is atomic.
struct Metrics {
  std::atomic<std::uint64_t> lookups{0};
  std::atomic<std::uint64_t> hits{0};
  std::atomic<std::uint64_t> misses{0};
  std::atomic<std::uint64_t> stale_hits{0};
  std::atomic<std::uint64_t> admissions{0};
  std::atomic<std::uint64_t> rejected_admissions{0};
  std::atomic<std::uint64_t> capacity_evictions{0};
  std::atomic<std::uint64_t> ttl_expirations{0};
  std::atomic<std::uint64_t> updates{0};
  std::atomic<std::uint64_t> invalidations{0};
  std::atomic<std::uint64_t> false_invalidations{0};
  std::atomic<std::uint64_t> unaffected_pairs{0};
  LatencyHistogram lookup_latency;
  LatencyHistogram admit_latency;
  LatencyHistogram update_latency;

  [[nodiscard]] MetricsSnapshot snapshot() const;
  void reset();
};

}  // namespace tinval

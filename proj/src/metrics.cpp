#include "tinval/metrics.hpp"

#include <bit>

namespace tinval {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

// Bucket b covers [lower(b), lower(b+1)) where values below 4 map to
// themselves and larger values use the top three bits after the leading one.
std::size_t LatencyHistogram::bucket_of(std::uint64_t nanos) noexcept {
  if (nanos < 4) return static_cast<std::size_t>(nanos);
  const int log = std::bit_width(nanos) - 1;  // >= 2
  const auto sub = static_cast<std::size_t>((nanos >> (log - 2)) & 3);
  const auto b = static_cast<std::size_t>(log - 1) * 4 + sub;
  return b < kBuckets ? b : kBuckets - 1;
}

std::uint64_t LatencyHistogram::bucket_upper(std::size_t bucket) noexcept {
  if (bucket < 4) return bucket;
  const std::size_t log = bucket / 4 + 1;
  const std::uint64_t sub = bucket % 4;
  return ((4 + sub + 1) << (log - 2)) - 1;
}

void LatencyHistogram::record(std::uint64_t nanos) noexcept {
  buckets_[bucket_of(nanos)].fetch_add(1, std::memory_order_relaxed);
  sum_.fetch_add(nanos, std::memory_order_relaxed);
}

void LatencyHistogram::merge(const LatencyHistogram& other) noexcept {
  for (std::size_t i = 0; i < kBuckets; ++i) {
    buckets_[i].fetch_add(other.buckets_[i].load(std::memory_order_relaxed), std::memory_order_relaxed);
  }
  sum_.fetch_add(other.sum_.load(std::memory_order_relaxed), std::memory_order_relaxed);
}

void LatencyHistogram::reset() noexcept {
  for (auto& b : buckets_) b.store(0, std::memory_order_relaxed);
  sum_.store(0, std::memory_order_relaxed);
}

std::uint64_t LatencyHistogram::count() const noexcept {
  std::uint64_t n = 0;
  for (const auto& b : buckets_) n += b.load(std::memory_order_relaxed);
  return n;
}

std::uint64_t LatencyHistogram::percentile(double q) const noexcept {
  const std::uint64_t n = count();
  if (n == 0) return 0;
  // Rank of the q-quantile sample, 1-based, rounded up.
  auto rank = static_cast<std::uint64_t>(q * static_cast<double>(n));
  if (static_cast<double>(rank) < q * static_cast<double>(n)) ++rank;
  if (rank == 0) rank = 1;
  std::uint64_t seen = 0;
  for (std::size_t i = 0; i < kBuckets; ++i) {
    seen += buckets_[i].load(std::memory_order_relaxed);
    if (seen >= rank) return bucket_upper(i);
  }
  return bucket_upper(kBuckets - 1);
}

double LatencyHistogram::mean() const noexcept {
  return ratio(sum_.load(std::memory_order_relaxed), count());
}

double MetricsSnapshot::hit_ratio() const noexcept { return ratio(hits, lookups); }
double MetricsSnapshot::stale_rate() const noexcept { return ratio(stale_hits, lookups); }
double MetricsSnapshot::false_invalidation_rate() const noexcept {
  return ratio(false_invalidations, unaffected_pairs);
}

MetricsSnapshot Metrics::snapshot() const {
  MetricsSnapshot s;
  s.lookups = lookups.load();
  s.hits = hits.load();
  s.misses = misses.load();
  s.stale_hits = stale_hits.load();
  s.admissions = admissions.load();
  s.rejected_admissions = rejected_admissions.load();
  s.capacity_evictions = capacity_evictions.load();
  s.ttl_expirations = ttl_expirations.load();
  s.updates = updates.load();
  s.invalidations = invalidations.load();
  s.false_invalidations = false_invalidations.load();
  s.unaffected_pairs = unaffected_pairs.load();
  s.lookup_p95_ns = lookup_latency.percentile(0.95);
  s.admit_p95_ns = admit_latency.percentile(0.95);
  s.update_p95_ns = update_latency.percentile(0.95);
  return s;
}

void Metrics::reset() {
  for (auto* c : {&lookups, &hits, &misses, &stale_hits, &admissions, &rejected_admissions,
                  &capacity_evictions, &ttl_expirations, &updates, &invalidations,
                  &false_invalidations, &unaffected_pairs}) {
    c->store(0);
  }
  lookup_latency.reset();
  admit_latency.reset();
  update_latency.reset();
}

}  // namespace tinval

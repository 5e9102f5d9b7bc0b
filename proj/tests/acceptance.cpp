// Acceptance checks. Prints one PASS/FAIL line per criterion; the exit code
// is nonzero when a hard criterion fails. Criterion 8 is a soft floor.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "support/oracles.hpp"
#include "tinval/bench/index_bench.hpp"
#include "tinval/bench/workload.hpp"
#include "tinval/bench/zipfian.hpp"
#include "tinval/bftree.hpp"
#include "tinval/bloom.hpp"
#include "tinval/cost_model.hpp"
#include "tinval/error.hpp"
#include "tinval/qtree.hpp"

using namespace tinval;
using namespace tinval::bench;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string fixture(const char* name) { return std::string(TINVAL_FIXTURE_DIR) + "/" + name; }

// ---- 1 ------------------------------------------------------------------------------

Outcome qtree_oracle() {
  const auto start = std::chrono::steady_clock::now();
  std::uint64_t mismatches = 0, invalidates = 0, runs = 0;
  for (auto dist : {Distribution::uniform, Distribution::zipfian}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      ++runs;
      std::mt19937_64 rng(seed);
      KeyChooser keys(10000, dist, 0.99, seed);
      std::uniform_int_distribution<int> width(0, 10), op(0, 99);
      QTree tree(32);
      testing::IntervalListOracle oracle;
      std::vector<IntervalEntry> live;
      EntryId next = 1;
      for (int i = 0; i < 100000; ++i) {
        const int r = op(rng);
        if (r < 50) {
          const auto lo = static_cast<std::int64_t>(keys.next(rng));
          const IntervalEntry e{Value(lo), Value(lo + width(rng)), next++};
          tree.insert(e.lo, e.hi, e.id);
          oracle.insert(e.lo, e.hi, e.id);
          live.push_back(e);
        } else if (r < 70 && !live.empty()) {
          const auto e = live[rng() % live.size()];
          if (tree.evict(e.lo, e.hi, e.id) != oracle.evict(e.lo, e.hi, e.id)) ++mismatches;
        } else {
          const Value k(static_cast<std::int64_t>(keys.next(rng)));
          ++invalidates;
          if (tree.invalidate(k) != oracle.invalidate(k)) ++mismatches;
        }
      }
      if (tree.dump() != oracle.sorted() || !tree.audit().ok()) ++mismatches;
    }
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 60,
          fmt("%llu runs, %llu invalidates, %llu mismatches, %.1f s", (unsigned long long)runs,
              (unsigned long long)invalidates, (unsigned long long)mismatches, secs)};
}

// ---- 2 ------------------------------------------------------------------------------

Outcome bftree_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = BloomConfig::small_profile();
  std::mt19937_64 rng(2);
  BFTree tree(cfg, 16);
  testing::FilterListOracle oracle;
  for (EntryId id = 1; id <= 10000; ++id) {
    BloomFilter f(cfg);
    for (std::uint64_t k = 0, n = 1 + rng() % 10; k < n; ++k) f.insert(rng() % 50000);
    tree.insert(f, id);
    oracle.insert(f, id);
  }
  std::uint64_t mismatches = 0, hits = 0;
  std::vector<std::uint64_t> probes;
  for (int i = 0; i < 10000; ++i) probes.push_back(rng() % 50000);
  for (auto key : probes) {
    const auto probe = BloomFilter::of_key(cfg, key);
    std::vector<EntryId> want;
    for (const auto& [f, id] : oracle.items()) {
      if (f.contains(probe)) want.push_back(id);
    }
    std::sort(want.begin(), want.end());
    hits += want.size();
    if (tree.search(probe) != want) ++mismatches;
  }
  for (auto key : probes) {
    const auto probe = BloomFilter::of_key(cfg, key);
    if (tree.invalidate(probe) != oracle.invalidate(probe)) ++mismatches;
  }
  if (!tree.audit().ok() || tree.size() != oracle.size()) ++mismatches;
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 60,
          fmt("10000 filters, 10000 probes (%llu matches) searched then invalidated, %llu mismatches, %.1f s",
              (unsigned long long)hits, (unsigned long long)mismatches, secs)};
}

// ---- 3 ------------------------------------------------------------------------------

struct ConcurrencyResult {
  std::uint64_t duplicates = 0;
  bool agree = false;
  std::uint64_t removed = 0;
};

ConcurrencyResult qtree_concurrency() {
  QTree tree(16);
  constexpr int kThreads = 8, kOps = 100000;
  std::vector<std::vector<EntryId>> removed(kThreads);
  std::vector<std::vector<IntervalEntry>> inserted(kThreads);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < kThreads; ++w) {
      pool.emplace_back([&, w] {
        std::mt19937_64 rng(1000 + w);
        std::uniform_int_distribution<int> pos(0, 5000), width(0, 10), op(0, 99);
        EntryId next = (static_cast<EntryId>(w) << 40) + 1;
        for (int i = 0; i < kOps; ++i) {
          const int r = op(rng);
          if (r < 50) {
            const std::int64_t lo = pos(rng);
            IntervalEntry e{Value(lo), Value(lo + width(rng)), next++};
            tree.insert(e.lo, e.hi, e.id);
            inserted[w].push_back(e);
          } else if (r < 65 && !inserted[w].empty()) {
            const auto& e = inserted[w][rng() % inserted[w].size()];
            if (tree.evict(e.lo, e.hi, e.id)) removed[w].push_back(e.id);
          } else {
            const auto got = tree.invalidate(Value(std::int64_t{pos(rng)}));
            removed[w].insert(removed[w].end(), got.begin(), got.end());
          }
        }
      });
    }
  }
  ConcurrencyResult res;
  std::set<EntryId> gone;
  for (const auto& v : removed) {
    for (auto id : v) {
      ++res.removed;
      if (!gone.insert(id).second) ++res.duplicates;
    }
  }
  std::vector<IntervalEntry> expected;
  for (const auto& v : inserted) {
    for (const auto& e : v) {
      if (!gone.contains(e.id)) expected.push_back(e);
    }
  }
  std::sort(expected.begin(), expected.end());
  tree.settle();
  res.agree = tree.audit().ok() && tree.dump() == expected;
  return res;
}

ConcurrencyResult bftree_concurrency() {
  const auto cfg = BloomConfig::small_profile();
  BFTree tree(cfg, 16);
  constexpr int kThreads = 8, kOps = 100000;
  std::vector<std::vector<EntryId>> removed(kThreads);
  std::vector<std::map<EntryId, BloomFilter>> inserted(kThreads);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < kThreads; ++w) {
      pool.emplace_back([&, w] {
        std::mt19937_64 rng(2000 + w);
        EntryId next = (static_cast<EntryId>(w) << 40) + 1;
        std::vector<EntryId> mine;
        for (int i = 0; i < kOps; ++i) {
          const auto r = rng() % 100;
          if (r < 50) {
            BloomFilter f(cfg);
            for (std::uint64_t k = 0, n = 1 + rng() % 3; k < n; ++k) f.insert(rng() % 4000);
            tree.insert(f, next);
            inserted[w].emplace(next, f);
            mine.push_back(next++);
          } else if (r < 65 && !mine.empty()) {
            const EntryId id = mine[rng() % mine.size()];
            if (tree.evict(inserted[w].at(id), id)) removed[w].push_back(id);
          } else {
            const auto got = tree.invalidate(BloomFilter::of_key(cfg, rng() % 4000));
            removed[w].insert(removed[w].end(), got.begin(), got.end());
          }
        }
      });
    }
  }
  ConcurrencyResult res;
  std::set<EntryId> gone;
  for (const auto& v : removed) {
    for (auto id : v) {
      ++res.removed;
      if (!gone.insert(id).second) ++res.duplicates;
    }
  }
  std::vector<StoredFilter> expected;
  for (const auto& m : inserted) {
    for (const auto& [id, f] : m) {
      if (!gone.contains(id)) {
        expected.push_back({id, std::vector<std::uint64_t>(f.words().begin(), f.words().end())});
      }
    }
  }
  std::sort(expected.begin(), expected.end());
  tree.settle();
  res.agree = tree.audit().ok() && tree.dump() == expected;
  return res;
}

Outcome concurrency() {
  const auto start = std::chrono::steady_clock::now();
  const auto q = qtree_concurrency();
  const auto b = bftree_concurrency();
  const double secs = seconds_since(start);
  return {q.duplicates == 0 && b.duplicates == 0 && q.agree && b.agree && secs < 300,
          fmt("Q-Tree %llu removals, %llu duplicates, audit %s; BF-Tree %llu removals, %llu duplicates, "
              "audit %s; %.1f s",
              (unsigned long long)q.removed, (unsigned long long)q.duplicates, q.agree ? "ok" : "FAILED",
              (unsigned long long)b.removed, (unsigned long long)b.duplicates, b.agree ? "ok" : "FAILED",
              secs)};
}

// ---- 4 ------------------------------------------------------------------------------

Outcome bloom_analytics() {
  const auto start = std::chrono::steady_clock::now();
  const auto k5 = optimal_k(128, 5);
  const double fp5 = fp_rate(128, k5, 5);
  double min25 = 1.0;
  for (std::uint32_t k = 1; k <= 20; ++k) min25 = std::min(min25, fp_rate(128, k, 25));

  const auto cfg = BloomConfig::with_optimal_k(128, 5);
  std::mt19937_64 rng(4);
  std::uint64_t false_hits = 0, probes = 0;
  while (probes < 1000000) {
    BloomFilter f(cfg);
    std::set<std::uint64_t> keys;
    while (keys.size() < 5) keys.insert(rng());
    for (auto k : keys) f.insert(k);
    for (int i = 0; i < 100; ++i, ++probes) {
      std::uint64_t k = rng();
      while (keys.contains(k)) k = rng();
      if (f.contains(k)) ++false_hits;
    }
  }
  const double mc = static_cast<double>(false_hits) / static_cast<double>(probes);
  const double secs = seconds_since(start);
  return {fp5 < 1e-5 && min25 > 0.08 && mc < 1e-4 && secs < 120,
          fmt("fp(128,k=%u,5)=%.3g, min_k fp(128,k,25)=%.4f, Monte-Carlo %llu/%llu=%.2g, %.1f s", k5,
              fp5, min25, (unsigned long long)false_hits, (unsigned long long)probes, mc, secs)};
}

// ---- 5 ------------------------------------------------------------------------------

RunReport ycsb_run(const WorkloadSpec& spec, StrategyKind s, const BloomConfig& bloom) {
  EngineConfig cfg;
  cfg.strategy = s;
  cfg.bloom = bloom;
  cfg.ttl_ticks = ttl_ticks_for(1.0, spec);
  auto db = load_fixture_file(fixture("ycsb.fix"), bloom);
  return run_workload(spec, cfg, *db);
}

Outcome freshness() {
  const auto start = std::chrono::steady_clock::now();
  auto spec = WorkloadSpec::named("ycsb-mix");
  spec.ops = 100000;
  spec.distribution = Distribution::zipfian;
  spec.theta = 0.99;
  spec.validate = true;
  const auto bloom = BloomConfig::small_profile();
  const auto p = ycsb_run(spec, StrategyKind::transparent_p, bloom);
  const auto b = ycsb_run(spec, StrategyKind::transparent_b, bloom);
  const auto t = ycsb_run(spec, StrategyKind::ttl, bloom);
  const auto c = ycsb_run(spec, StrategyKind::coarse, bloom);
  const double bound = 2 * analytic_false_positive(bloom);
  const bool ok = p.stale_rate == 0 && p.false_invalidation_rate == 0 && b.stale_rate == 0 &&
                  b.false_invalidation_rate <= bound && t.stale_rate > 0 &&
                  c.hit_ratio <= p.hit_ratio && p.audit_problems + b.audit_problems +
                  t.audit_problems + c.audit_problems == 0;
  const double secs = seconds_since(start);
  return {ok && secs < 600,
          fmt("P stale=%.3g fi=%.3g hit=%.3f; B stale=%.3g fi=%.3g (bound %.3g); TTL-1s stale=%.3f "
              "hit=%.3f; coarse hit=%.3f; %.1f s",
              p.stale_rate, p.false_invalidation_rate, p.hit_ratio, b.stale_rate,
              b.false_invalidation_rate, bound, t.stale_rate, t.hit_ratio, c.hit_ratio, secs)};
}

// ---- 6 ------------------------------------------------------------------------------

Outcome tpcc_coverage() {
  const auto start = std::chrono::steady_clock::now();
  auto spec = WorkloadSpec::named("tpcc");
  spec.ops = 10000;
  spec.validate = true;
  EngineConfig cfg;
  cfg.strategy = StrategyKind::transparent_p;
  auto db = load_fixture_file(fixture("tpcc.fix"));
  const auto r = run_workload(spec, cfg, *db);
  const double secs = seconds_since(start);
  const bool ok = r.missed_invalidations == 0 && r.metrics.false_invalidations == 0 &&
                  r.metrics.stale_hits == 0 && r.metrics.invalidations > 0 && r.audit_problems == 0;
  return {ok && secs < 600,
          fmt("10000 transactions, %llu invalidations, %llu missed, %llu false, %llu stale hits, "
              "hit=%.3f, %.1f s",
              (unsigned long long)r.metrics.invalidations, (unsigned long long)r.missed_invalidations,
              (unsigned long long)r.metrics.false_invalidations,
              (unsigned long long)r.metrics.stale_hits, r.hit_ratio, secs)};
}

// ---- 7 ------------------------------------------------------------------------------

Outcome fp_profile() {
  const auto start = std::chrono::steady_clock::now();
  auto spec = WorkloadSpec::named("ycsb-sh");
  spec.ops = 100000;
  spec.validate = true;
  const auto bloom = BloomConfig::large_profile();
  spec.max_scan_length = bloom.keys_per_filter;
  const auto r = ycsb_run(spec, StrategyKind::transparent_b, bloom);
  const double secs = seconds_since(start);
  const double rate = r.false_invalidation_rate;
  return {rate > 0 && rate <= 0.02 && r.stale_rate == 0 && secs < 600,
          fmt("ycsb-sh, 4096-bit filters of 200 keys, scans up to 200 rows: %llu false of %llu "
              "unaffected pairs, rate=%.3g, stale=%.3g, %.1f s",
              (unsigned long long)r.metrics.false_invalidations,
              (unsigned long long)r.metrics.unaffected_pairs, rate, r.stale_rate, secs)};
}

// ---- 8 ------------------------------------------------------------------------------

Outcome throughput() {
  std::map<IndexKind, RunReport> got;
  for (auto kind : {IndexKind::qtree, IndexKind::bftree}) {
    IndexBenchSpec spec;
    spec.kind = kind;
    spec.threads = 16;
    spec.preload = 1000000;
    spec.ops = 5000000;
    spec.max_seconds = 3;
    spec.insert_ratio = 0.5;
    got.emplace(kind, run_index_bench(spec));
  }
  const auto& q = got.at(IndexKind::qtree);
  const auto& b = got.at(IndexKind::bftree);
  return {q.throughput >= 100000 && b.throughput >= 50000 && q.audit_problems + b.audit_problems == 0,
          fmt("16 threads, 1e6 preload, insert ratio 0.5: Q-Tree %.0f ops/s (floor 100000), "
              "BF-Tree %.0f ops/s (floor 50000)",
              q.throughput, b.throughput)};
}

// ---- 9 ------------------------------------------------------------------------------

Outcome cost_model_values() {
  struct Case {
    CostParams in;
    StrategyCosts want;
  };
  const std::vector<Case> cases = {
      {{100, 1, 0, 1, 1, 3, 2.5, 0.25, 0, 1}, {2.5, 26, 101}},
      {{100, 1, 2, 1, 0, 0, 0, 0.5, 0, 1}, {0, 51, 100}},
      {{100, 1, 0, 1, 0, 0, 0, 0, 0, 10}, {0, 0, 10}},
      {{1000, 10, 5, 2, 4, 4, 8, 0.25, 0.5, 4}, {2018, 511.5, 54}},
      {{50, 2, 3, 1, 2, 2, 3, 1, 0, 5}, {9, 52, 7}},
      {{0, 1, 0, 0, 0, 0, 0, 0, 0, 1}, {0, 0, 0}},
      {{8, 0.5, 8, 0.25, 0.125, 0.5, 0.25, 0.75, 0.125, 2}, {4.25, 2.125, 2.125}},
      {{64, 4, 0, 1.5, 0.5, 1.5, 0.75, 0.5, 0.25, 0.5}, {24.75, 48.5, 48.5}},
      {{10, 1, 4, 3, 7, 3, 7, 0.5, 0.5, 3}, {28, 28, 17}},
      {{1e6, 1000, 10, 0x1p-10, 0.5, 0x1p-9, 1, 0.5, 0, 2}, {1.01953125, 488.7861328125, 0.98828125}},
  };
  int matched = 0;
  for (const auto& c : cases) matched += cost_model(c.in) == c.want;
  auto code_of = [](const CostParams& p) {
    try {
      (void)cost_model(p);
    } catch (const Error& e) {
      return static_cast<int>(e.code());
    }
    return -1;
  };
  const bool errors = code_of({1, 0, 0, 1, 1, 1, 1, 0, 0, 1}) == static_cast<int>(Errc::division_by_zero) &&
                      code_of({-1, 1, 0, 1, 1, 1, 1, 0, 0, 1}) == static_cast<int>(Errc::invalid_argument) &&
                      code_of({1, 1, 0, 1, 1, 1, 1, 1.5, 0, 1}) == static_cast<int>(Errc::invalid_argument);
  return {matched == static_cast<int>(cases.size()) && errors,
          fmt("%d/%zu parameter sets exact, error cases %s", matched, cases.size(), errors ? "ok" : "WRONG")};
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    bool soft;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "Q-Tree oracle equivalence", false, qtree_oracle},
      {2, "BF-Tree oracle equivalence", false, bftree_oracle},
      {3, "concurrent exactly-once", false, concurrency},
      {4, "bloom analytics", false, bloom_analytics},
      {5, "end-to-end freshness", false, freshness},
      {6, "mini-TPC-C join coverage", false, tpcc_coverage},
      {7, "false-positive profile", false, fp_profile},
      {8, "throughput floor", true, throughput},
      {9, "cost model", false, cost_model_values},
  };
  int hard_failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const char* verdict = o.pass ? "PASS" : (c.soft ? "FAIL (soft)" : "FAIL");
    std::printf("criterion %d [PRIMARY] %s: %s  %s\n", c.number, c.name, verdict, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass && !c.soft) ++hard_failures;
  }
  return hard_failures == 0 ? 0 : 1;
}

#include "tinval/bench/workload.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <type_traits>
#include <mutex>
#include <thread>
#include <unordered_set>
#include <variant>
#include <vector>

#include "session.hpp"
#include "tinval/error.hpp"

namespace tinval::bench {

// ---- Session ------------------------------------------------------------------

Session::Session(const WorkloadSpec& spec, Engine& engine, Database& db)
    : spec_(spec), engine_(engine), db_(db), modes_(engine.config().modes()) {}

std::string Session::read(const std::string& key, const Query& q) {
  if (auto hit = engine_.lookup(key, now())) {
    if (spec_.validate && encode_rows(db_.evaluate(q)) != hit->result) {
      engine_.metrics().stale_hits.fetch_add(1);
    }
    return std::move(hit->result);
  }
  const auto resp = db_.execute_query(q, modes_);
  auto bytes = resp.result_bytes();
  if (resp.cacheable) {
    const auto id = engine_.admit(key, q, resp, now());
    if (id && spec_.validate) {
      tracked_[*id] = {q, bytes};
      prune();
    }
  }
  return bytes;
}

void Session::write(const DmlStatement& u) {
  const std::uint64_t live_before = spec_.validate ? engine_.size() : 0;
  const auto upd = db_.execute_dml(u, modes_);
  const auto dropped = engine_.on_update(upd, now());
  if (!spec_.validate) return;
  std::uint64_t changed = 0;
  for (EntryId id : dropped) {
    auto it = tracked_.find(id);
    if (it == tracked_.end()) continue;
    if (encode_rows(db_.evaluate(it->second.query)) == it->second.bytes) {
      engine_.metrics().false_invalidations.fetch_add(1);
    } else {
      ++changed;
    }
    if (in_txn_) txn_dropped_.insert(id);
    tracked_.erase(it);
  }
  engine_.metrics().unaffected_pairs.fetch_add(live_before - changed);
}

// TTL never reacts to updates, so its misses are reported through stale hits only.
void Session::begin_transaction() {
  if (!spec_.validate || engine_.config().strategy == StrategyKind::ttl) return;
  in_txn_ = true;
  txn_live_ = engine_.entry_ids();
  txn_dropped_.clear();
}

void Session::end_transaction() {
  if (!in_txn_) return;
  in_txn_ = false;
  for (EntryId id : txn_live_) {
    if (txn_dropped_.contains(id) || !engine_.contains(id)) continue;
    auto it = tracked_.find(id);
    if (it == tracked_.end()) continue;
    if (encode_rows(db_.evaluate(it->second.query)) != it->second.bytes) ++missed_;
  }
  txn_live_.clear();
  txn_dropped_.clear();
}

void Session::prune() {
  if (tracked_.size() <= 2 * engine_.config().capacity + 1024) return;
  const auto live = engine_.entry_ids();
  const std::unordered_set<EntryId> keep(live.begin(), live.end());
  std::erase_if(tracked_, [&](const auto& kv) { return !keep.contains(kv.first); });
}

// ---- WorkloadSpec -----------------------------------------------------------------

void WorkloadSpec::check() const {
  auto fail = [](const std::string& what) { throw Error(Errc::invalid_argument, what); };
  const auto proportions = std::visit(
      [](const auto& m) -> std::vector<double> {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, YcsbMix>) {
          return {m.point_read, m.range_scan, m.update};
        } else {
          return {m.new_order, m.stock_level};
        }
      },
      mix);
  double sum = 0;
  for (double p : proportions) {
    if (!(p >= 0)) fail("mix proportions must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail("mix proportions must sum to 1");
  if (distribution == Distribution::zipfian && !(theta > 0 && theta < 1)) {
    fail("zipfian theta must lie in (0, 1)");
  }
  if (threads == 0) fail("threads must be positive");
  if (ops == 0) fail("ops must be positive");
  if (max_scan_length == 0) fail("max scan length must be positive");
  if (ticks_per_second == 0) fail("ticks per second must be positive");
}

namespace {

std::vector<double> parse_proportions(std::string_view list) {
  std::vector<double> out;
  std::string s(list);
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const std::string part = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    char* end = nullptr;
    const double v = std::strtod(part.c_str(), &end);
    if (part.empty() || end != part.c_str() + part.size()) {
      throw Error(Errc::invalid_argument, "bad proportion '" + part + "'");
    }
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

WorkloadSpec WorkloadSpec::named(std::string_view mix) {
  WorkloadSpec spec;
  std::string_view name = mix;
  if (name.starts_with("ycsb-")) name.remove_prefix(5);
  if (name == "rh") {
    spec.mix = YcsbMix{0.9, 0.05, 0.05};
  } else if (name == "sh") {
    spec.mix = YcsbMix{0.5, 0.45, 0.05};
  } else if (name == "mix") {
    spec.mix = YcsbMix{0.5, 0.25, 0.25};
  } else if (name == "ro") {
    spec.mix = YcsbMix{0.9, 0.1, 0.0};
  } else if (name == "tpcc") {
    spec.mix = TpccMix{0.05, 0.95};
  } else if (mix.starts_with("ycsb:")) {
    const auto p = parse_proportions(mix.substr(5));
    if (p.size() != 3) throw Error(Errc::invalid_argument, "ycsb mix needs three proportions");
    spec.mix = YcsbMix{p[0], p[1], p[2]};
  } else if (mix.starts_with("tpcc:")) {
    const auto p = parse_proportions(mix.substr(5));
    if (p.size() != 2) throw Error(Errc::invalid_argument, "tpcc mix needs two proportions");
    spec.mix = TpccMix{p[0], p[1]};
  } else {
    throw Error(Errc::invalid_argument, "unknown mix '" + std::string(mix) + "'");
  }
  spec.name = name == "tpcc" ? "tpcc" : (mix.find(':') == std::string_view::npos
                                             ? "ycsb-" + std::string(name)
                                             : std::string(mix));
  return spec;
}

std::uint64_t ttl_ticks_for(double seconds, const WorkloadSpec& spec) {
  if (!(seconds >= 0)) throw Error(Errc::invalid_argument, "ttl must be non-negative");
  return static_cast<std::uint64_t>(std::llround(seconds * static_cast<double>(spec.ticks_per_second)));
}

double analytic_false_positive(const BloomConfig& cfg) {
  return fp_rate(cfg.m_bits, cfg.k_hashes, cfg.keys_per_filter);
}

// ---- Runner -------------------------------------------------------------------------

RunReport run_workload(const WorkloadSpec& spec, const EngineConfig& cfg, Database& db) {
  spec.check();
  if (cfg.strategy == StrategyKind::transparent_b && !(db.bloom_config() == cfg.bloom)) {
    throw Error(Errc::config_mismatch, "database and engine use different bloom parameters");
  }
  Engine engine(cfg);
  Session session(spec, engine, db);
  const auto driver = std::visit(
      [&](const auto& m) -> std::unique_ptr<Driver> {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, YcsbMix>) {
          return make_ycsb_driver(spec, m, db);
        } else {
          return make_tpcc_driver(spec, m, db);
        }
      },
      spec.mix);

  std::mutex serial;
  auto worker = [&](std::size_t w, std::uint64_t ops) {
    std::mt19937_64 rng(spec.seed + w);
    for (std::uint64_t i = 0; i < ops; ++i) {
      std::unique_lock lk(serial, std::defer_lock);
      if (spec.validate) lk.lock();
      session.advance();
      driver->run_op(session, rng);
    }
  };

  const auto start = std::chrono::steady_clock::now();
  if (spec.threads == 1) {
    worker(0, spec.ops);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < spec.threads; ++w) {
      pool.emplace_back(worker, w, spec.ops / spec.threads + (w < spec.ops % spec.threads ? 1 : 0));
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  auto audit = engine.audit();
  for (const auto& name : db.table_names()) {
    if (!db.table(name).indexes_consistent()) audit.fail("secondary index of " + name + " is inconsistent");
  }

  RunReport r;
  r.kind = "workload";
  r.workload = spec.name;
  r.strategy = std::string(to_string(cfg.strategy));
  r.distribution = std::string(to_string(spec.distribution));
  r.theta = spec.theta;
  r.threads = spec.threads;
  r.ops = spec.ops;
  r.seed = spec.seed;
  r.bloom_bits = cfg.bloom.m_bits;
  r.keys_per_filter = cfg.bloom.keys_per_filter;
  r.ttl_ticks = cfg.strategy == StrategyKind::ttl ? cfg.ttl_ticks : 0;
  r.metrics = engine.metrics().snapshot();
  r.hit_ratio = r.metrics.hit_ratio();
  r.stale_rate = r.metrics.stale_rate();
  r.false_invalidation_rate = r.metrics.false_invalidation_rate();
  r.analytic_fp = analytic_false_positive(cfg.bloom);
  r.missed_invalidations = session.missed();
  r.seconds = seconds;
  r.throughput = seconds > 0 ? static_cast<double>(spec.ops) / seconds : 0;
  r.validated = spec.validate;
  r.audit_problems = audit.problems.size();
  return r;
}

}  // namespace tinval::bench

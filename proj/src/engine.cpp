#include "tinval/engine.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_set>

#include "tinval/error.hpp"

namespace tinval {

namespace {

class LatencyTimer {
 public:
  explicit LatencyTimer(LatencyHistogram& h) : h_(h), start_(std::chrono::steady_clock::now()) {}
  ~LatencyTimer() {
    const auto d = std::chrono::steady_clock::now() - start_;
    h_.record(static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(d).count()));
  }
  LatencyTimer(const LatencyTimer&) = delete;
  LatencyTimer& operator=(const LatencyTimer&) = delete;

 private:
  LatencyHistogram& h_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

std::string_view to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::transparent_p: return "transparent-p";
    case StrategyKind::transparent_b: return "transparent-b";
    case StrategyKind::coarse: return "coarse";
    case StrategyKind::ttl: return "ttl";
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  for (auto k : {StrategyKind::transparent_p, StrategyKind::transparent_b, StrategyKind::coarse,
                 StrategyKind::ttl}) {
    if (to_string(k) == name) return k;
  }
  throw Error(Errc::invalid_argument, "unknown strategy '" + std::string(name) + "'");
}

Modes EngineConfig::modes() const {
  return {.predicate = strategy == StrategyKind::transparent_p,
          .bloom = strategy == StrategyKind::transparent_b};
}

Engine::Engine(EngineConfig cfg) : cfg_(std::move(cfg)), bftree_(cfg_.bloom, cfg_.bftree_arity) {
  if (cfg_.capacity == 0) throw Error(Errc::invalid_argument, "cache capacity must be positive");
  cfg_.bloom.validate();
}

Engine::~Engine() = default;

// ---- lookups --------------------------------------------------------------------

std::optional<CacheHit> Engine::lookup(const std::string& key, std::uint64_t now) {
  LatencyTimer timer(metrics_.lookup_latency);
  metrics_.lookups.fetch_add(1);
  std::optional<EntryId> expired;
  {
    std::lock_guard g(store_mu_);
    auto k = by_key_.find(key);
    if (k != by_key_.end()) {
      auto& e = entries_.at(k->second);
      if (cfg_.strategy == StrategyKind::ttl && now >= e.ttl_deadline) {
        expired = k->second;
      } else {
        lru_.splice(lru_.begin(), lru_, e.lru);
        metrics_.hits.fetch_add(1);
        return CacheHit{k->second, e.result, e.version, e.inserted_at};
      }
    }
  }
  metrics_.misses.fetch_add(1);
  if (expired && take_entry(*expired)) {
    metrics_.ttl_expirations.fetch_add(1);
    release_residue(*expired, nullptr);
  }
  return std::nullopt;
}

// ---- admission ------------------------------------------------------------------

Engine::Registration Engine::make_registration(const Query& q, const QueryResponse& resp) const {
  Registration reg;
  reg.tables = resp.tables;
  if (cfg_.strategy == StrategyKind::transparent_p && resp.predicate_sig) {
    reg.kind = Registration::Kind::interval;
    reg.predicate_sig = *resp.predicate_sig;
    reg.attribute = reg.predicate_sig.index_attribute;
    std::tie(reg.lo, reg.hi) = predicate_to_interval(reg.predicate_sig.indexed_predicate());
  } else if (cfg_.strategy == StrategyKind::transparent_b && resp.bloom_sig && !q.selections.empty()) {
    reg.kind = Registration::Kind::filters;
    reg.filters = resp.bloom_sig->filters;
  }
  return reg;
}

QTree& Engine::qtree_for(const std::string& attribute) {
  {
    std::shared_lock lk(qtrees_mu_);
    auto it = qtrees_.find(attribute);
    if (it != qtrees_.end()) return *it->second;
  }
  std::unique_lock lk(qtrees_mu_);
  auto& slot = qtrees_[attribute];
  if (!slot) slot = std::make_unique<QTree>(cfg_.qtree_arity);
  return *slot;
}

QTree* Engine::find_qtree(std::string_view attribute) const {
  std::shared_lock lk(qtrees_mu_);
  auto it = qtrees_.find(attribute);
  return it == qtrees_.end() ? nullptr : it->second.get();
}

void Engine::register_indexes(EntryId id, const Registration& reg) {
  switch (reg.kind) {
    case Registration::Kind::interval: qtree_for(reg.attribute).insert(reg.lo, reg.hi, id); break;
    case Registration::Kind::filters:
      for (const auto& f : reg.filters) bftree_.insert(f, id);
      break;
    case Registration::Kind::coarse: break;
  }
}

void Engine::unregister_indexes(EntryId id, const Registration& reg) {
  switch (reg.kind) {
    case Registration::Kind::interval:
      if (auto* t = find_qtree(reg.attribute)) t->evict(reg.lo, reg.hi, id);
      break;
    case Registration::Kind::filters:
      for (const auto& f : reg.filters) bftree_.evict(f, id);
      break;
    case Registration::Kind::coarse: break;
  }
}

std::uint64_t Engine::table_version(const std::string& table) const {
  std::lock_guard g(versions_mu_);
  auto it = table_versions_.find(table);
  return it == table_versions_.end() ? 0 : it->second;
}

std::optional<EntryId> Engine::admit(const std::string& key, const Query& q,
                                     const QueryResponse& resp, std::uint64_t now) {
  LatencyTimer timer(metrics_.admit_latency);
  if (resp.rows.empty()) throw Error(Errc::empty_result, "empty results are never cached: " + q.id);
  if (!resp.cacheable) return std::nullopt;
  if (resp.tables.empty()) throw Error(Errc::invalid_argument, "entry without namespace: " + q.id);
  Registration reg = make_registration(q, resp);

  EntryId id = 0;
  std::vector<EntryId> victims;
  {
    std::lock_guard g(store_mu_);
    if (auto old = by_key_.find(key); old != by_key_.end()) victims.push_back(old->second);
    for (auto v : victims) {
      auto it = entries_.find(v);
      lru_.erase(it->second.lru);
      by_key_.erase(it->second.key);
      entries_.erase(it);
    }
    id = next_id_++;
    Entry e;
    e.key = key;
    e.query_id = q.id;
    e.result = resp.result_bytes();
    e.tables = resp.tables;
    e.version = resp.version;
    e.inserted_at = now;
    e.ttl_deadline = now + cfg_.ttl_ticks;
    e.footprint = resp.footprint;
    lru_.push_front(id);
    e.lru = lru_.begin();
    entries_.emplace(id, std::move(e));
    by_key_[key] = id;
    while (entries_.size() > cfg_.capacity) {
      const EntryId victim = lru_.back();
      lru_.pop_back();
      auto it = entries_.find(victim);
      by_key_.erase(it->second.key);
      entries_.erase(it);
      victims.push_back(victim);
      metrics_.capacity_evictions.fetch_add(1);
    }
  }
  for (auto v : victims) release_residue(v, nullptr);

  {
    std::unique_lock lk(reg_mu_);
    for (const auto& t : reg.tables) namespaces_[t].insert(id);
    registrations_.emplace(id, reg);
  }
  register_indexes(id, reg);

  // A drop that raced with the registration above may have unregistered
  // before every index item was in place, or found no registration at all.
  bool live = false;
  {
    std::lock_guard g(store_mu_);
    live = entries_.contains(id);
  }
  if (!live) {
    if (!release_residue(id, nullptr)) unregister_indexes(id, reg);
    return std::nullopt;
  }

  // An update that committed after this result was read may have probed the
  // indexes before the registration above; such an entry must not survive.
  for (const auto& t : resp.tables) {
    if (table_version(t) > resp.version) {
      if (drop(id)) metrics_.rejected_admissions.fetch_add(1);
      return std::nullopt;
    }
  }
  metrics_.admissions.fetch_add(1);
  return id;
}

// ---- removal --------------------------------------------------------------------

std::optional<Engine::Entry> Engine::take_entry(EntryId id) {
  std::lock_guard g(store_mu_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  Entry e = std::move(it->second);
  lru_.erase(e.lru);
  by_key_.erase(e.key);
  entries_.erase(it);
  return e;
}

bool Engine::release_residue(EntryId id, std::vector<EntryId>* dropped) {
  std::optional<Registration> reg;
  {
    std::unique_lock lk(reg_mu_);
    auto it = registrations_.find(id);
    if (it == registrations_.end()) return false;
    reg = std::move(it->second);
    registrations_.erase(it);
    for (const auto& t : reg->tables) {
      auto ns = namespaces_.find(t);
      if (ns == namespaces_.end()) continue;
      ns->second.erase(id);
      if (ns->second.empty()) namespaces_.erase(ns);
    }
  }
  unregister_indexes(id, *reg);
  if (dropped) dropped->push_back(id);
  return true;
}

bool Engine::drop(EntryId id) {
  // The store decides which caller owns the drop; only that caller cleans up.
  if (!take_entry(id)) return false;
  release_residue(id, nullptr);
  return true;
}

// ---- updates --------------------------------------------------------------------

std::vector<EntryId> Engine::on_update(const UpdateResponse& upd, std::uint64_t /*now*/) {
  LatencyTimer timer(metrics_.update_latency);
  metrics_.updates.fetch_add(1);
  if (!upd.changed || cfg_.strategy == StrategyKind::ttl) return {};
  {
    std::lock_guard g(versions_mu_);
    for (const auto& t : upd.tables) {
      auto& v = table_versions_[t];
      v = std::max(v, upd.version);
    }
  }

  std::vector<EntryId> candidates;
  const bool have_p = cfg_.strategy == StrategyKind::transparent_p && upd.predicate_sig;
  const bool have_b = cfg_.strategy == StrategyKind::transparent_b && upd.bloom_sig;
  {
    // Coarse entries, plus every entry when the strategy's signature is missing.
    std::shared_lock lk(reg_mu_);
    for (const auto& t : upd.tables) {
      auto ns = namespaces_.find(t);
      if (ns == namespaces_.end()) continue;
      for (auto id : ns->second) {
        if (!have_p && !have_b) {
          candidates.push_back(id);
        } else if (registrations_.at(id).kind == Registration::Kind::coarse) {
          candidates.push_back(id);
        }
      }
    }
  }

  if (have_p) {
    const auto& sig = *upd.predicate_sig;
    std::unordered_map<EntryId, bool> verdicts;
    const QTree::Accept accept = [&](const IntervalEntry& e) {
      if (auto v = verdicts.find(e.id); v != verdicts.end()) return v->second;
      bool ok = false;
      {
        std::shared_lock lk(reg_mu_);
        auto it = registrations_.find(e.id);
        ok = it != registrations_.end() && match_p(it->second.predicate_sig, sig);
      }
      verdicts.emplace(e.id, ok);
      return ok;
    };
    std::set<std::pair<std::string_view, Value>> probed;
    for (const auto& image : sig.tuples) {
      for (const auto& [attr, value] : image.values) {
        if (value.is_null() || !probed.emplace(attr, value).second) continue;
        QTree* tree = find_qtree(attr);
        if (!tree) continue;
        for (const auto& key : stab_keys(value)) {
          auto got = tree->invalidate(key, accept);
          candidates.insert(candidates.end(), got.begin(), got.end());
        }
      }
    }
  } else if (have_b) {
    for (const auto& f : upd.bloom_sig->filters) {
      auto got = bftree_.invalidate(f);
      candidates.insert(candidates.end(), got.begin(), got.end());
    }
  }

  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::vector<EntryId> dropped;
  for (auto id : candidates) {
    if (drop(id)) dropped.push_back(id);
  }
  metrics_.invalidations.fetch_add(dropped.size());
  return dropped;
}

// ---- inspection -----------------------------------------------------------------

std::size_t Engine::size() const {
  std::lock_guard g(store_mu_);
  return entries_.size();
}

bool Engine::contains(EntryId id) const {
  std::lock_guard g(store_mu_);
  return entries_.contains(id);
}

std::vector<EntryId> Engine::entry_ids() const {
  std::lock_guard g(store_mu_);
  std::vector<EntryId> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t Engine::qtree_items() const {
  std::shared_lock lk(qtrees_mu_);
  std::size_t n = 0;
  for (const auto& [attr, t] : qtrees_) n += t->size();
  return n;
}

std::size_t Engine::bftree_items() const { return bftree_.size(); }

AuditReport Engine::audit() const {
  AuditReport r;
  std::lock_guard g(store_mu_);
  std::shared_lock lk(reg_mu_);
  std::shared_lock tl(qtrees_mu_);

  if (entries_.size() > cfg_.capacity) r.fail("store exceeds capacity");
  if (lru_.size() != entries_.size() || by_key_.size() != entries_.size()) {
    r.fail("LRU list or key map out of step with the store");
  }
  for (const auto& [key, id] : by_key_) {
    auto it = entries_.find(id);
    if (it == entries_.end() || it->second.key != key) r.fail("key map points at a wrong entry");
  }
  for (const auto& [id, e] : entries_) {
    if (e.tables.empty()) r.fail("entry " + std::to_string(id) + " has no namespace");
    if (!registrations_.contains(id)) r.fail("entry " + std::to_string(id) + " is unregistered");
  }

  std::map<EntryId, std::vector<IntervalEntry>> intervals;
  for (const auto& [attr, tree] : qtrees_) {
    AuditReport tr = tree->audit();
    for (auto& p : tr.problems) r.fail("qtree " + attr + ": " + p);
    for (const auto& item : tree->dump()) {
      auto it = registrations_.find(item.id);
      if (it == registrations_.end() || it->second.kind != Registration::Kind::interval ||
          it->second.attribute != attr || it->second.lo != item.lo || it->second.hi != item.hi) {
        r.fail("qtree " + attr + " holds a stray interval for entry " + std::to_string(item.id));
      }
      intervals[item.id].push_back(item);
    }
  }
  std::map<EntryId, std::vector<std::vector<std::uint64_t>>> filters;
  {
    AuditReport br = bftree_.audit();
    for (auto& p : br.problems) r.fail("bftree: " + p);
    for (auto& item : bftree_.dump()) filters[item.id].push_back(std::move(item.words));
  }

  for (const auto& [id, reg] : registrations_) {
    if (!entries_.contains(id)) r.fail("registration for missing entry " + std::to_string(id));
    for (const auto& t : reg.tables) {
      auto ns = namespaces_.find(t);
      if (ns == namespaces_.end() || !ns->second.contains(id)) {
        r.fail("entry " + std::to_string(id) + " missing from namespace " + t);
      }
    }
    const auto iv = intervals.find(id);
    const std::size_t n_iv = iv == intervals.end() ? 0 : iv->second.size();
    if (n_iv != (reg.kind == Registration::Kind::interval ? 1u : 0u)) {
      r.fail("entry " + std::to_string(id) + " has " + std::to_string(n_iv) + " intervals");
    }
    std::vector<std::vector<std::uint64_t>> want;
    if (reg.kind == Registration::Kind::filters) {
      for (const auto& f : reg.filters) want.emplace_back(f.words().begin(), f.words().end());
    }
    auto have = filters.contains(id) ? filters.at(id) : decltype(want){};
    std::sort(want.begin(), want.end());
    std::sort(have.begin(), have.end());
    if (want != have) r.fail("entry " + std::to_string(id) + " filters disagree with the bftree");
  }
  for (const auto& [id, v] : filters) {
    if (!registrations_.contains(id)) r.fail("bftree holds filters of dropped entry " + std::to_string(id));
  }
  for (const auto& [t, ids] : namespaces_) {
    for (auto id : ids) {
      if (!registrations_.contains(id)) r.fail("namespace " + t + " lists dropped entry " + std::to_string(id));
    }
  }
  return r;
}

}  // namespace tinval

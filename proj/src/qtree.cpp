#include "tinval/qtree.hpp"

#include <algorithm>
#include <cassert>
#include <mutex>
#include <optional>
#include <shared_mutex>

#include "tinval/error.hpp"

namespace tinval {

struct QTree::Node {
  explicit Node(bool is_leaf) : leaf(is_leaf) {}

  [[nodiscard]] std::size_t fanout() const { return leaf ? entries.size() : children.size(); }

  const bool leaf;
  mutable RwLatch latch;
  // Guards `max`. Taken innermost, parent before child, never while waiting on a latch.
  mutable std::mutex bound_mu;
  std::optional<Value> max;
  std::atomic<bool> format_bit{false};
  std::atomic<std::uint32_t> underflow_children{0};

  std::vector<IntervalEntry> entries;  // leaf: sorted by (lo, hi, id)
  Node* next = nullptr;                // leaf chain, for audits

  std::vector<IntervalEntry> seps;  // internal: seps[i] bounds children[i + 1] from below
  std::vector<std::unique_ptr<Node>> children;
};

namespace {

using Node = QTree::Node;
using SharedLatch = std::shared_lock<RwLatch>;
using ExclusiveLatch = std::unique_lock<RwLatch>;

bool covers(const QTree::Node* n, const Value& key) {
  std::lock_guard g(n->bound_mu);
  return n->max.has_value() && !(*n->max < key);
}

void grow_max(QTree::Node* n, const Value& hi) {
  std::lock_guard g(n->bound_mu);
  if (!n->max || *n->max < hi) n->max = hi;
}

// Caller holds n's latch (shared for internal nodes is enough).
void recalc_max(QTree::Node* n) {
  std::lock_guard g(n->bound_mu);
  std::optional<Value> m;
  if (n->leaf) {
    for (const auto& e : n->entries) {
      if (!m || *m < e.hi) m = e.hi;
    }
  } else {
    for (const auto& c : n->children) {
      std::lock_guard cg(c->bound_mu);
      if (c->max && (!m || *m < *c->max)) m = c->max;
    }
  }
  n->max = std::move(m);
}

std::size_t route(const QTree::Node* n, const IntervalEntry& e) {
  return static_cast<std::size_t>(std::upper_bound(n->seps.begin(), n->seps.end(), e) -
                                  n->seps.begin());
}

}  // namespace

QTree::QTree(std::size_t arity)
    : arity_(arity), min_fanout_((arity + 1) / 2), root_(std::make_unique<Node>(true)) {
  if (arity < 3) throw Error(Errc::invalid_argument, "Q-Tree arity must be at least 3");
}

QTree::~QTree() = default;

std::size_t QTree::height() const {
  SharedLatch rl(root_latch_);
  std::size_t h = 1;
  for (const Node* n = root_.get(); !n->leaf; n = n->children.front().get()) ++h;
  return h;
}

// ---- insert -------------------------------------------------------------------

void QTree::insert(const Value& lo, const Value& hi, EntryId id) {
  if (hi < lo) {
    throw Error(Errc::invalid_interval, "lo " + lo.debug_string() + " > hi " + hi.debug_string());
  }
  const IntervalEntry e{lo, hi, id};
  if (!insert_optimistic(e)) insert_pessimistic(e);
}

// Shared latches down the path, exclusive on the leaf. Fails when the leaf is
// full. Maxima grow leaf-first while the whole path stays pinned, so a
// concurrent recalculation can never overwrite the growth with a stale value.
bool QTree::insert_optimistic(const IntervalEntry& e) {
  SharedLatch rl(root_latch_);
  std::vector<SharedLatch> pinned;
  std::vector<Node*> path;
  Node* n = root_.get();
  while (!n->leaf) {
    pinned.emplace_back(n->latch);
    path.push_back(n);
    n = n->children[route(n, e)].get();
  }
  ExclusiveLatch leaf_latch(n->latch);
  auto it = std::lower_bound(n->entries.begin(), n->entries.end(), e);
  if (it != n->entries.end() && *it == e) return true;
  if (n->entries.size() >= arity_) return false;
  n->entries.insert(it, e);
  size_.fetch_add(1);
  grow_max(n, e.hi);
  for (auto p = path.rbegin(); p != path.rend(); ++p) grow_max(*p, e.hi);
  return true;
}

// Exclusive latch coupling; ancestors are released as soon as a child has
// room for one more item, so a split can only propagate into latched nodes.
void QTree::insert_pessimistic(const IntervalEntry& e) {
  ExclusiveLatch root_excl(root_latch_, std::defer_lock);
  SharedLatch root_shared(root_latch_);
  Node* n = root_.get();
  ExclusiveLatch top(n->latch);
  if (n->fanout() >= arity_) {
    top.unlock();
    root_shared.unlock();
    root_excl.lock();
    n = root_.get();
    top = ExclusiveLatch(n->latch);
  }

  std::vector<ExclusiveLatch> held;
  std::vector<Node*> chain;
  auto release_ancestors = [&] {
    held.clear();
    chain.clear();
    if (root_excl.owns_lock()) root_excl.unlock();
    if (root_shared.owns_lock()) root_shared.unlock();
  };
  if (n->fanout() < arity_) release_ancestors();
  held.push_back(std::move(top));
  chain.push_back(n);
  grow_max(n, e.hi);

  while (!n->leaf) {
    Node* c = n->children[route(n, e)].get();
    ExclusiveLatch cl(c->latch);
    grow_max(c, e.hi);
    if (c->fanout() < arity_) release_ancestors();
    held.push_back(std::move(cl));
    chain.push_back(c);
    n = c;
  }

  auto it = std::lower_bound(n->entries.begin(), n->entries.end(), e);
  if (it != n->entries.end() && *it == e) return;
  n->entries.insert(it, e);
  size_.fetch_add(1);

  for (std::size_t lvl = chain.size(); lvl-- > 0;) {
    Node* c = chain[lvl];
    if (c->fanout() <= arity_) break;

    auto right = std::make_unique<Node>(c->leaf);
    IntervalEntry sep;
    if (c->leaf) {
      const std::size_t mid = c->entries.size() / 2;
      right->entries.assign(std::make_move_iterator(c->entries.begin() + mid),
                            std::make_move_iterator(c->entries.end()));
      c->entries.resize(mid);
      sep = right->entries.front();
      right->next = c->next;
      c->next = right.get();
    } else {
      const std::size_t mid = c->children.size() / 2;
      sep = c->seps[mid - 1];
      right->seps.assign(std::make_move_iterator(c->seps.begin() + mid),
                         std::make_move_iterator(c->seps.end()));
      right->children.assign(std::make_move_iterator(c->children.begin() + mid),
                             std::make_move_iterator(c->children.end()));
      c->seps.resize(mid - 1);
      c->children.resize(mid);
      if (c->underflow_children.load() > 0) right->underflow_children.store(1);
    }
    recalc_max(c);
    recalc_max(right.get());

    if (lvl == 0) {
      // Only an unsafe root reaches here, and then the root latch is held exclusively.
      assert(root_excl.owns_lock() && c == root_.get());
      auto grown = std::make_unique<Node>(false);
      grown->seps.push_back(std::move(sep));
      grown->children.push_back(std::move(root_));
      grown->children.push_back(std::move(right));
      recalc_max(grown.get());
      root_ = std::move(grown);
    } else {
      Node* p = chain[lvl - 1];
      std::size_t pos = 0;
      while (p->children[pos].get() != c) ++pos;
      p->seps.insert(p->seps.begin() + static_cast<std::ptrdiff_t>(pos), std::move(sep));
      p->children.insert(p->children.begin() + static_cast<std::ptrdiff_t>(pos) + 1,
                         std::move(right));
    }
  }
}

// ---- stab / invalidate ---------------------------------------------------------------

std::vector<EntryId> QTree::stab(const Value& key) const {
  std::vector<EntryId> out;
  {
    SharedLatch rl(root_latch_);
    stab_walk(root_.get(), key, out);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void QTree::stab_walk(const Node* n, const Value& key, std::vector<EntryId>& out) const {
  SharedLatch lk(n->latch);
  visits_.fetch_add(1, std::memory_order_relaxed);
  if (!covers(n, key)) return;
  if (n->leaf) {
    for (const auto& e : n->entries) {
      if (key < e.lo) break;
      if (!(e.hi < key)) out.push_back(e.id);
    }
    return;
  }
  for (std::size_t i = 0; i < n->children.size(); ++i) {
    if (i > 0 && key < n->seps[i - 1].lo) break;
    stab_walk(n->children[i].get(), key, out);
  }
}

std::vector<EntryId> QTree::invalidate(const Value& key, const Accept& accept) {
  std::vector<EntryId> out;
  {
    SharedLatch rl(root_latch_);
    Node* r = root_.get();
    if (r->leaf) {
      remove_from_leaf(r, nullptr, key, accept, out);
    } else {
      remove_walk(r, key, accept, out);
      maybe_repair(r, nullptr);
    }
  }
  if (root_shrinkable_.load()) collapse_root();
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Internal node: scan covering children under a shared latch, then recompute
// this node's bound on the way out. Children that a removal left under-full
// are repaired right after their own subtree is finished.
void QTree::remove_walk(Node* n, const Value& key, const Accept& accept,
                        std::vector<EntryId>& out) {
  SharedLatch lk(n->latch);
  visits_.fetch_add(1, std::memory_order_relaxed);
  if (!covers(n, key)) return;
  const std::size_t before = out.size();
  for (std::size_t i = 0; i < n->children.size(); ++i) {
    if (i > 0 && key < n->seps[i - 1].lo) break;
    Node* c = n->children[i].get();
    if (c->leaf) {
      remove_from_leaf(c, n, key, accept, out);
    } else {
      remove_walk(c, key, accept, out);
      maybe_repair(c, n);
    }
  }
  if (out.size() != before) recalc_max(n);
}

bool QTree::remove_from_leaf(Node* leaf, Node* parent, const Value& key, const Accept& accept,
                             std::vector<EntryId>& out) {
  ExclusiveLatch lk(leaf->latch);
  visits_.fetch_add(1, std::memory_order_relaxed);
  if (!covers(leaf, key)) return false;
  auto& es = leaf->entries;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < es.size(); ++i) {
    const bool hit = !(key < es[i].lo) && !(es[i].hi < key) && (!accept || accept(es[i]));
    if (hit) {
      out.push_back(es[i].id);
    } else {
      if (kept != i) es[kept] = std::move(es[i]);
      ++kept;
    }
  }
  if (kept == es.size()) return false;
  size_.fetch_sub(es.size() - kept);
  es.resize(kept);
  recalc_max(leaf);
  if (parent && es.size() < min_fanout_) parent->underflow_children.fetch_add(1);
  return true;
}

// ---- evict -------------------------------------------------------------------------

bool QTree::evict(const Value& lo, const Value& hi, EntryId id) {
  const IntervalEntry e{lo, hi, id};
  bool removed = false;
  {
    SharedLatch rl(root_latch_);
    Node* r = root_.get();
    if (r->leaf) {
      removed = evict_from_leaf(r, nullptr, e);
    } else {
      removed = evict_walk(r, e);
      maybe_repair(r, nullptr);
    }
  }
  if (root_shrinkable_.load()) collapse_root();
  return removed;
}

bool QTree::evict_walk(Node* n, const IntervalEntry& e) {
  SharedLatch lk(n->latch);
  Node* c = n->children[route(n, e)].get();
  bool removed = false;
  if (c->leaf) {
    removed = evict_from_leaf(c, n, e);
  } else {
    removed = evict_walk(c, e);
    maybe_repair(c, n);
  }
  if (removed) recalc_max(n);
  return removed;
}

bool QTree::evict_from_leaf(Node* leaf, Node* parent, const IntervalEntry& e) {
  ExclusiveLatch lk(leaf->latch);
  auto it = std::lower_bound(leaf->entries.begin(), leaf->entries.end(), e);
  if (it == leaf->entries.end() || !(*it == e)) return false;
  leaf->entries.erase(it);
  size_.fetch_sub(1);
  recalc_max(leaf);
  if (parent && leaf->entries.size() < min_fanout_) parent->underflow_children.fetch_add(1);
  return true;
}

// ---- deferred repair ---------------------------------------------------------------

// Called while the caller still latches n's parent (or the root latch), after
// n itself has been released. The format flag admits one repairing thread.
void QTree::maybe_repair(Node* n, Node* parent) {
  if (n->leaf) return;
  while (n->underflow_children.load() > 0) {
    bool expected = false;
    if (!n->format_bit.compare_exchange_strong(expected, true)) return;
    bool lone_child = false;
    {
      ExclusiveLatch lk(n->latch);
      n->underflow_children.store(0);
      lone_child = repair_children(n);
      recalc_max(n);
      if (parent) {
        if (n->children.size() < min_fanout_) parent->underflow_children.fetch_add(1);
      } else if (n->children.size() == 1) {
        root_shrinkable_.store(true);
      }
    }
    n->format_bit.store(false);
    if (lone_child) {
      // Cannot be fixed at this level; the hint travels with n if its parent merges it.
      n->underflow_children.fetch_add(1);
      return;
    }
    // Otherwise loop: marks that raced with the repair are picked up here.
  }
}

// n is latched exclusively, so no other thread is positioned between n and
// its children. Under-full children borrow from a neighbour or merge into it.
// Returns true when n is left with a single child, which this level cannot fix.
bool QTree::repair_children(Node* n) {
  auto repair_nested = [this](Node* x) {
    if (!x->leaf && x->underflow_children.exchange(0) > 0 && repair_children(x)) {
      x->underflow_children.fetch_add(1);
    }
  };
  std::size_t i = 0;
  while (i < n->children.size() && n->children.size() > 1) {
    Node* c = n->children[i].get();
    ExclusiveLatch cl(c->latch);
    if (c->fanout() >= min_fanout_) {
      ++i;
      continue;
    }
    const std::size_t li = i + 1 < n->children.size() ? i : i - 1;
    Node* l = n->children[li].get();
    Node* r = n->children[li + 1].get();
    ExclusiveLatch other(li == i ? r->latch : l->latch);
    ExclusiveLatch& l_latch = li == i ? cl : other;
    ExclusiveLatch& r_latch = li == i ? other : cl;
    IntervalEntry& sep = n->seps[li];

    if (l->fanout() + r->fanout() <= arity_) {
      if (l->leaf) {
        l->entries.insert(l->entries.end(), std::make_move_iterator(r->entries.begin()),
                          std::make_move_iterator(r->entries.end()));
        l->next = r->next;
      } else {
        l->seps.push_back(std::move(sep));
        l->seps.insert(l->seps.end(), std::make_move_iterator(r->seps.begin()),
                       std::make_move_iterator(r->seps.end()));
        l->children.insert(l->children.end(), std::make_move_iterator(r->children.begin()),
                           std::make_move_iterator(r->children.end()));
        l->underflow_children.fetch_add(r->underflow_children.load());
        repair_nested(l);
      }
      recalc_max(l);
      n->seps.erase(n->seps.begin() + static_cast<std::ptrdiff_t>(li));
      auto dead = std::move(n->children[li + 1]);
      n->children.erase(n->children.begin() + static_cast<std::ptrdiff_t>(li) + 1);
      r_latch.unlock();
      l_latch.unlock();
      dead.reset();
      i = li;
      continue;
    }

    const std::size_t target_left = (l->fanout() + r->fanout()) / 2;
    if (l->leaf) {
      while (l->entries.size() < target_left) {
        l->entries.push_back(std::move(r->entries.front()));
        r->entries.erase(r->entries.begin());
      }
      while (l->entries.size() > target_left) {
        r->entries.insert(r->entries.begin(), std::move(l->entries.back()));
        l->entries.pop_back();
      }
      sep = r->entries.front();
    } else {
      while (l->children.size() < target_left) {
        l->seps.push_back(std::move(sep));
        l->children.push_back(std::move(r->children.front()));
        sep = std::move(r->seps.front());
        r->seps.erase(r->seps.begin());
        r->children.erase(r->children.begin());
      }
      while (l->children.size() > target_left) {
        r->seps.insert(r->seps.begin(), std::move(sep));
        r->children.insert(r->children.begin(), std::move(l->children.back()));
        sep = std::move(l->seps.back());
        l->seps.pop_back();
        l->children.pop_back();
      }
      if (l->underflow_children.load() + r->underflow_children.load() > 0) {
        l->underflow_children.store(1);
        r->underflow_children.store(1);
        repair_nested(l);
        repair_nested(r);
      }
    }
    recalc_max(l);
    recalc_max(r);
    // Nested repairs may have shrunk either side; look at the pair again.
    i = (l->fanout() >= min_fanout_ && r->fanout() >= min_fanout_) ? li + 2 : li;
  }
  return n->children.size() == 1;
}

void QTree::collapse_root() {
  ExclusiveLatch rl(root_latch_);
  root_shrinkable_.store(false);
  while (!root_->leaf) {
    // A pessimistic insert may still hold the root without the root latch and
    // give it a second child, so the count is only stable under the node latch.
    ExclusiveLatch old(root_->latch);
    if (root_->children.size() != 1) break;
    auto child = std::move(root_->children.front());
    old.unlock();
    root_ = std::move(child);
  }
}

// ---- maintenance / audit -----------------------------------------------------------

void QTree::settle() {
  {
    SharedLatch rl(root_latch_);
    settle_walk(root_.get(), nullptr);
  }
  collapse_root();
}

void QTree::settle_walk(Node* n, Node* parent) {
  if (n->leaf) return;
  {
    SharedLatch lk(n->latch);
    for (auto& c : n->children) settle_walk(c.get(), n);
  }
  n->underflow_children.fetch_add(1);
  maybe_repair(n, parent);
}

std::vector<IntervalEntry> QTree::dump() const {
  SharedLatch rl(root_latch_);
  std::vector<IntervalEntry> out;
  const Node* n = root_.get();
  while (!n->leaf) n = n->children.front().get();
  for (; n; n = n->next) out.insert(out.end(), n->entries.begin(), n->entries.end());
  return out;
}

namespace {

struct AuditState {
  std::size_t arity = 0;
  std::size_t min_fanout = 0;
  bool check_fanout = true;
  long leaf_depth = -1;
  std::size_t entries = 0;
  std::vector<const QTree::Node*> leaves;
  AuditReport report;
};

std::optional<Value> audit_node(const QTree::Node* n, long depth, const IntervalEntry* lower,
                                const IntervalEntry* upper, bool is_root, AuditState& st) {
  std::optional<Value> truth;
  const std::string where = "depth " + std::to_string(depth);
  if (!is_root && st.check_fanout && n->fanout() < st.min_fanout) {
    st.report.fail("under-full node at " + where);
  }
  if (n->fanout() > st.arity) st.report.fail("over-full node at " + where);
  if (n->leaf) {
    if (st.leaf_depth < 0) st.leaf_depth = depth;
    if (st.leaf_depth != depth) st.report.fail("leaves at unequal depth");
    st.leaves.push_back(n);
    for (std::size_t i = 0; i < n->entries.size(); ++i) {
      const auto& e = n->entries[i];
      if (e.hi < e.lo) st.report.fail("inverted interval at " + where);
      if (i > 0 && !(n->entries[i - 1] < e)) st.report.fail("unsorted leaf at " + where);
      if (lower && e < *lower) st.report.fail("entry below separator at " + where);
      if (upper && !(e < *upper)) st.report.fail("entry above separator at " + where);
      if (!truth || *truth < e.hi) truth = e.hi;
    }
    st.entries += n->entries.size();
  } else {
    if (n->children.empty() || n->seps.size() + 1 != n->children.size()) {
      st.report.fail("separator/child count mismatch at " + where);
      return truth;
    }
    for (std::size_t i = 0; i < n->seps.size(); ++i) {
      if (i > 0 && !(n->seps[i - 1] < n->seps[i])) st.report.fail("unsorted separators");
      if (lower && n->seps[i] < *lower) st.report.fail("separator below parent bound");
      if (upper && !(n->seps[i] < *upper)) st.report.fail("separator above parent bound");
    }
    for (std::size_t i = 0; i < n->children.size(); ++i) {
      const IntervalEntry* lo = i == 0 ? lower : &n->seps[i - 1];
      const IntervalEntry* hi = i + 1 == n->children.size() ? upper : &n->seps[i];
      auto sub = audit_node(n->children[i].get(), depth + 1, lo, hi, false, st);
      if (sub && (!truth || *truth < *sub)) truth = sub;
    }
  }
  std::lock_guard g(n->bound_mu);
  if (n->max != truth) {
    st.report.fail("stale subtree max at " + where + ": stored " +
                   (n->max ? n->max->debug_string() : "none") + ", actual " +
                   (truth ? truth->debug_string() : "none"));
  }
  return truth;
}

}  // namespace

AuditReport QTree::audit(bool check_fanout) const {
  ExclusiveLatch rl(root_latch_);
  AuditState st;
  st.arity = arity_;
  st.min_fanout = min_fanout_;
  st.check_fanout = check_fanout;
  audit_node(root_.get(), 0, nullptr, nullptr, true, st);
  if (st.entries != size_.load()) {
    st.report.fail("entry count " + std::to_string(st.entries) + " != size " +
                   std::to_string(size_.load()));
  }
  for (std::size_t i = 0; i < st.leaves.size(); ++i) {
    const Node* expected = i + 1 < st.leaves.size() ? st.leaves[i + 1] : nullptr;
    if (st.leaves[i]->next != expected) {
      st.report.fail("broken leaf chain");
      break;
    }
  }
  return st.report;
}

}  // namespace tinval

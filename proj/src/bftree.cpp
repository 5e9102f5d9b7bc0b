#include "tinval/bftree.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <mutex>
#include <shared_mutex>

#include "tinval/error.hpp"

namespace tinval {

struct BFTree::Node {
  Node(bool is_leaf, std::size_t words)
      : leaf(is_leaf), mask(std::make_unique<std::atomic<std::uint64_t>[]>(words)) {
    for (std::size_t i = 0; i < words; ++i) mask[i].store(0, std::memory_order_relaxed);
  }

  [[nodiscard]] std::size_t fanout() const { return leaf ? ids.size() : children.size(); }

  const bool leaf;
  mutable RwLatch latch;
  // Written with fetch_or by inserters holding the node shared, and stored
  // wholesale only under the node's exclusive latch.
  std::unique_ptr<std::atomic<std::uint64_t>[]> mask;
  std::atomic<bool> format_bit{false};
  std::atomic<std::uint32_t> underflow_children{0};

  std::vector<EntryId> ids;         // leaf
  std::vector<std::uint64_t> bits;  // leaf: words_ per id, same order
  std::vector<std::unique_ptr<Node>> children;
};

namespace {

using Node = BFTree::Node;
using SharedLatch = std::shared_lock<RwLatch>;
using ExclusiveLatch = std::unique_lock<RwLatch>;

bool subset(const std::uint64_t* needle, const std::uint64_t* hay, std::size_t words) {
  for (std::size_t i = 0; i < words; ++i) {
    if ((hay[i] & needle[i]) != needle[i]) return false;
  }
  return true;
}

bool mask_contains(const Node* n, const std::uint64_t* p, std::size_t words) {
  for (std::size_t i = 0; i < words; ++i) {
    if ((n->mask[i].load(std::memory_order_relaxed) & p[i]) != p[i]) return false;
  }
  return true;
}

void mask_or(Node* n, const std::uint64_t* w, std::size_t words) {
  for (std::size_t i = 0; i < words; ++i) {
    if ((n->mask[i].load(std::memory_order_relaxed) & w[i]) != w[i]) {
      n->mask[i].fetch_or(w[i], std::memory_order_relaxed);
    }
  }
}

std::size_t overlap(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < words; ++i) n += static_cast<std::size_t>(std::popcount(a[i] & b[i]));
  return n;
}

std::vector<std::uint64_t> load_mask(const Node* n, std::size_t words) {
  std::vector<std::uint64_t> out(words);
  for (std::size_t i = 0; i < words; ++i) out[i] = n->mask[i].load(std::memory_order_relaxed);
  return out;
}

std::vector<std::uint64_t> true_mask(const Node* n, std::size_t words) {
  std::vector<std::uint64_t> m(words, 0);
  if (n->leaf) {
    for (std::size_t e = 0; e < n->ids.size(); ++e) {
      for (std::size_t i = 0; i < words; ++i) m[i] |= n->bits[e * words + i];
    }
  } else {
    for (const auto& c : n->children) {
      for (std::size_t i = 0; i < words; ++i) m[i] |= c->mask[i].load(std::memory_order_relaxed);
    }
  }
  return m;
}

// Caller holds n exclusively, so no inserter is between n and its children.
void recalc_mask(Node* n, std::size_t words) {
  const auto m = true_mask(n, words);
  for (std::size_t i = 0; i < words; ++i) n->mask[i].store(m[i], std::memory_order_relaxed);
}

// Child whose mask shares the most bits with w; the leftmost on ties.
std::size_t pick_child(const Node* n, const std::uint64_t* w, std::size_t words) {
  std::size_t best = 0;
  std::size_t best_overlap = 0;
  for (std::size_t c = 0; c < n->children.size(); ++c) {
    std::size_t ov = 0;
    for (std::size_t i = 0; i < words; ++i) {
      ov += static_cast<std::size_t>(
          std::popcount(n->children[c]->mask[i].load(std::memory_order_relaxed) & w[i]));
    }
    if (c == 0 || ov > best_overlap) {
      best = c;
      best_overlap = ov;
    }
  }
  return best;
}

void move_leaf_item(Node* from, std::size_t idx, Node* to, std::size_t words) {
  to->ids.push_back(from->ids[idx]);
  to->bits.insert(to->bits.end(), from->bits.begin() + static_cast<std::ptrdiff_t>(idx * words),
                  from->bits.begin() + static_cast<std::ptrdiff_t>((idx + 1) * words));
  from->ids.erase(from->ids.begin() + static_cast<std::ptrdiff_t>(idx));
  from->bits.erase(from->bits.begin() + static_cast<std::ptrdiff_t>(idx * words),
                   from->bits.begin() + static_cast<std::ptrdiff_t>((idx + 1) * words));
}

}  // namespace

BFTree::BFTree(const BloomConfig& cfg, std::size_t arity)
    : fingerprint_(cfg.fingerprint()),
      words_(cfg.words()),
      arity_(arity),
      min_fanout_((arity + 1) / 2) {
  cfg.validate();
  if (arity < 3) throw Error(Errc::invalid_argument, "BF-Tree arity must be at least 3");
  root_ = make_node(true);
}

BFTree::~BFTree() = default;

std::unique_ptr<BFTree::Node> BFTree::make_node(bool leaf) const {
  return std::make_unique<Node>(leaf, words_);
}

void BFTree::check_config(const BloomFilter& f) const {
  if (f.fingerprint() != fingerprint_) {
    throw Error(Errc::config_mismatch, "filter configuration differs from the tree's");
  }
}

std::size_t BFTree::height() const {
  SharedLatch rl(root_latch_);
  std::size_t h = 1;
  for (const Node* n = root_.get(); !n->leaf; n = n->children.front().get()) ++h;
  return h;
}

// ---- insert ---------------------------------------------------------------------

void BFTree::insert(const BloomFilter& filter, EntryId id) {
  check_config(filter);
  const std::uint64_t* w = filter.words().data();
  if (!insert_optimistic(w, id)) insert_pessimistic(w, id);
}

// Masks are widened top-down before the item lands, so at every instant each
// mask covers every item below it.
bool BFTree::insert_optimistic(const std::uint64_t* w, EntryId id) {
  SharedLatch rl(root_latch_);
  std::vector<SharedLatch> pinned;
  Node* n = root_.get();
  while (!n->leaf) {
    pinned.emplace_back(n->latch);
    mask_or(n, w, words_);
    n = n->children[pick_child(n, w, words_)].get();
  }
  ExclusiveLatch leaf_latch(n->latch);
  if (n->ids.size() >= arity_) return false;
  mask_or(n, w, words_);
  n->ids.push_back(id);
  n->bits.insert(n->bits.end(), w, w + words_);
  size_.fetch_add(1);
  return true;
}

void BFTree::insert_pessimistic(const std::uint64_t* w, EntryId id) {
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
  mask_or(n, w, words_);

  while (!n->leaf) {
    Node* c = n->children[pick_child(n, w, words_)].get();
    ExclusiveLatch cl(c->latch);
    mask_or(c, w, words_);
    if (c->fanout() < arity_) release_ancestors();
    held.push_back(std::move(cl));
    chain.push_back(c);
    n = c;
  }
  n->ids.push_back(id);
  n->bits.insert(n->bits.end(), w, w + words_);
  size_.fetch_add(1);

  for (std::size_t lvl = chain.size(); lvl-- > 0;) {
    Node* c = chain[lvl];
    if (c->fanout() <= arity_) break;
    std::unique_ptr<Node> right;
    split(c, right);
    if (lvl == 0) {
      assert(root_excl.owns_lock() && c == root_.get());
      auto grown = make_node(false);
      grown->children.push_back(std::move(root_));
      grown->children.push_back(std::move(right));
      recalc_mask(grown.get(), words_);
      root_ = std::move(grown);
    } else {
      Node* p = chain[lvl - 1];
      std::size_t pos = 0;
      while (p->children[pos].get() != c) ++pos;
      p->children.insert(p->children.begin() + static_cast<std::ptrdiff_t>(pos) + 1,
                         std::move(right));
    }
  }
}

// Seeds the two halves with the densest item and the item least like it, then
// hands every other item to the half it overlaps more, keeping both halves
// at least min_fanout_ large.
void BFTree::split(Node* c, std::unique_ptr<Node>& right) const {
  right = make_node(c->leaf);
  const std::size_t total = c->fanout();
  std::vector<std::vector<std::uint64_t>> item(total);
  for (std::size_t e = 0; e < total; ++e) {
    if (c->leaf) {
      item[e].assign(c->bits.begin() + static_cast<std::ptrdiff_t>(e * words_),
                     c->bits.begin() + static_cast<std::ptrdiff_t>((e + 1) * words_));
    } else {
      item[e] = load_mask(c->children[e].get(), words_);
    }
  }
  auto pop = [&](std::size_t e) { return overlap(item[e].data(), item[e].data(), words_); };
  std::size_t s1 = 0;
  for (std::size_t e = 1; e < total; ++e) {
    if (pop(e) > pop(s1)) s1 = e;
  }
  std::size_t s2 = s1 == 0 ? 1 : 0;
  for (std::size_t e = 0; e < total; ++e) {
    if (e == s1) continue;
    const auto ov = overlap(item[e].data(), item[s1].data(), words_);
    const auto best = overlap(item[s2].data(), item[s1].data(), words_);
    if (ov < best) s2 = e;
  }

  const std::size_t cap = total - min_fanout_;
  std::vector<int> side(total, 0);
  std::vector<std::uint64_t> m_left = item[s1], m_right = item[s2];
  std::size_t n_left = 1, n_right = 1;
  side[s2] = 1;
  for (std::size_t e = 0; e < total; ++e) {
    if (e == s1 || e == s2) continue;
    bool go_right;
    if (n_left >= cap) {
      go_right = true;
    } else if (n_right >= cap) {
      go_right = false;
    } else {
      go_right = overlap(item[e].data(), m_right.data(), words_) >
                 overlap(item[e].data(), m_left.data(), words_);
    }
    auto& m = go_right ? m_right : m_left;
    for (std::size_t i = 0; i < words_; ++i) m[i] |= item[e][i];
    (go_right ? n_right : n_left) += 1;
    side[e] = go_right ? 1 : 0;
  }

  if (c->leaf) {
    std::vector<EntryId> ids;
    std::vector<std::uint64_t> bits;
    for (std::size_t e = 0; e < total; ++e) {
      auto& ids_to = side[e] ? right->ids : ids;
      auto& bits_to = side[e] ? right->bits : bits;
      ids_to.push_back(c->ids[e]);
      bits_to.insert(bits_to.end(), item[e].begin(), item[e].end());
    }
    c->ids = std::move(ids);
    c->bits = std::move(bits);
  } else {
    std::vector<std::unique_ptr<Node>> kept;
    for (std::size_t e = 0; e < total; ++e) {
      (side[e] ? right->children : kept).push_back(std::move(c->children[e]));
    }
    c->children = std::move(kept);
    if (c->underflow_children.load() > 0) right->underflow_children.store(1);
  }
  recalc_mask(c, words_);
  recalc_mask(right.get(), words_);
}

// ---- search / invalidate ------------------------------------------------------------

std::vector<EntryId> BFTree::search(const BloomFilter& probe) const {
  check_config(probe);
  std::vector<EntryId> out;
  {
    SharedLatch rl(root_latch_);
    search_walk(root_.get(), probe.words().data(), out);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void BFTree::search_walk(const Node* n, const std::uint64_t* p, std::vector<EntryId>& out) const {
  SharedLatch lk(n->latch);
  visits_.fetch_add(1, std::memory_order_relaxed);
  if (!mask_contains(n, p, words_)) return;
  if (n->leaf) {
    for (std::size_t e = 0; e < n->ids.size(); ++e) {
      if (subset(p, n->bits.data() + e * words_, words_)) out.push_back(n->ids[e]);
    }
    return;
  }
  for (const auto& c : n->children) search_walk(c.get(), p, out);
}

std::vector<EntryId> BFTree::invalidate(const BloomFilter& probe, const Accept& accept) {
  check_config(probe);
  const std::uint64_t* p = probe.words().data();
  std::vector<EntryId> out;
  {
    SharedLatch rl(root_latch_);
    Node* r = root_.get();
    if (r->leaf) {
      remove_from_leaf(r, nullptr, p, accept, out);
    } else {
      remove_walk(r, p, accept, out);
      maybe_repair(r, nullptr);
    }
  }
  if (root_shrinkable_.load()) collapse_root();
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void BFTree::remove_walk(Node* n, const std::uint64_t* p, const Accept& accept,
                         std::vector<EntryId>& out) {
  SharedLatch lk(n->latch);
  visits_.fetch_add(1, std::memory_order_relaxed);
  if (!mask_contains(n, p, words_)) return;
  for (const auto& child : n->children) {
    Node* c = child.get();
    if (c->leaf) {
      remove_from_leaf(c, n, p, accept, out);
    } else {
      remove_walk(c, p, accept, out);
      maybe_repair(c, n);
    }
  }
}

void BFTree::remove_from_leaf(Node* leaf, Node* parent, const std::uint64_t* p,
                              const Accept& accept, std::vector<EntryId>& out) {
  ExclusiveLatch lk(leaf->latch);
  visits_.fetch_add(1, std::memory_order_relaxed);
  if (!mask_contains(leaf, p, words_)) return;
  std::size_t kept = 0;
  const std::size_t total = leaf->ids.size();
  for (std::size_t e = 0; e < total; ++e) {
    const std::uint64_t* w = leaf->bits.data() + e * words_;
    if (subset(p, w, words_) && (!accept || accept(leaf->ids[e]))) {
      out.push_back(leaf->ids[e]);
      continue;
    }
    if (kept != e) {
      leaf->ids[kept] = leaf->ids[e];
      std::copy(w, w + words_, leaf->bits.begin() + static_cast<std::ptrdiff_t>(kept * words_));
    }
    ++kept;
  }
  if (kept == total) return;
  size_.fetch_sub(total - kept);
  leaf->ids.resize(kept);
  leaf->bits.resize(kept * words_);
  if (parent && kept < min_fanout_) parent->underflow_children.fetch_add(1);
}

// ---- evict ------------------------------------------------------------------------------

bool BFTree::evict(const BloomFilter& filter, EntryId id) {
  if (filter.fingerprint() != fingerprint_) return false;
  const std::uint64_t* w = filter.words().data();
  bool removed = false;
  {
    SharedLatch rl(root_latch_);
    Node* r = root_.get();
    if (r->leaf) {
      removed = evict_from_leaf(r, nullptr, w, id);
    } else {
      removed = evict_walk(r, w, id);
      maybe_repair(r, nullptr);
    }
  }
  if (root_shrinkable_.load()) collapse_root();
  return removed;
}

bool BFTree::evict_walk(Node* n, const std::uint64_t* w, EntryId id) {
  SharedLatch lk(n->latch);
  if (!mask_contains(n, w, words_)) return false;
  for (const auto& child : n->children) {
    Node* c = child.get();
    bool removed;
    if (c->leaf) {
      removed = evict_from_leaf(c, n, w, id);
    } else {
      removed = evict_walk(c, w, id);
      maybe_repair(c, n);
    }
    if (removed) return true;
  }
  return false;
}

bool BFTree::evict_from_leaf(Node* leaf, Node* parent, const std::uint64_t* w, EntryId id) {
  ExclusiveLatch lk(leaf->latch);
  for (std::size_t e = 0; e < leaf->ids.size(); ++e) {
    if (leaf->ids[e] != id) continue;
    if (!std::equal(w, w + words_, leaf->bits.begin() + static_cast<std::ptrdiff_t>(e * words_))) {
      continue;
    }
    leaf->ids.erase(leaf->ids.begin() + static_cast<std::ptrdiff_t>(e));
    leaf->bits.erase(leaf->bits.begin() + static_cast<std::ptrdiff_t>(e * words_),
                     leaf->bits.begin() + static_cast<std::ptrdiff_t>((e + 1) * words_));
    size_.fetch_sub(1);
    if (parent && leaf->ids.size() < min_fanout_) parent->underflow_children.fetch_add(1);
    return true;
  }
  return false;
}

// ---- deferred repair ----------------------------------------------------------------------

void BFTree::maybe_repair(Node* n, Node* parent) {
  if (n->leaf) return;
  while (n->underflow_children.load() > 0) {
    bool expected = false;
    if (!n->format_bit.compare_exchange_strong(expected, true)) return;
    bool lone_child = false;
    {
      ExclusiveLatch lk(n->latch);
      n->underflow_children.store(0);
      lone_child = repair_children(n);
      recalc_mask(n, words_);
      if (parent) {
        if (n->children.size() < min_fanout_) parent->underflow_children.fetch_add(1);
      } else if (n->children.size() == 1) {
        root_shrinkable_.store(true);
      }
    }
    n->format_bit.store(false);
    if (lone_child) {
      n->underflow_children.fetch_add(1);
      return;
    }
  }
}

// Same scheme as the Q-Tree: n is exclusive, under-full children borrow from
// or merge into a neighbour, and the touched masks are recomputed exactly.
bool BFTree::repair_children(Node* n) {
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

    if (l->fanout() + r->fanout() <= arity_) {
      if (l->leaf) {
        l->ids.insert(l->ids.end(), r->ids.begin(), r->ids.end());
        l->bits.insert(l->bits.end(), r->bits.begin(), r->bits.end());
      } else {
        l->children.insert(l->children.end(), std::make_move_iterator(r->children.begin()),
                           std::make_move_iterator(r->children.end()));
        l->underflow_children.fetch_add(r->underflow_children.load());
        repair_nested(l);
      }
      recalc_mask(l, words_);
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
      while (l->ids.size() < target_left) move_leaf_item(r, r->ids.size() - 1, l, words_);
      while (l->ids.size() > target_left) move_leaf_item(l, l->ids.size() - 1, r, words_);
    } else {
      while (l->children.size() < target_left) {
        l->children.push_back(std::move(r->children.back()));
        r->children.pop_back();
      }
      while (l->children.size() > target_left) {
        r->children.push_back(std::move(l->children.back()));
        l->children.pop_back();
      }
      if (l->underflow_children.load() + r->underflow_children.load() > 0) {
        l->underflow_children.store(1);
        r->underflow_children.store(1);
        repair_nested(l);
        repair_nested(r);
      }
    }
    recalc_mask(l, words_);
    recalc_mask(r, words_);
    i = (l->fanout() >= min_fanout_ && r->fanout() >= min_fanout_) ? li + 2 : li;
  }
  return n->children.size() == 1;
}

void BFTree::collapse_root() {
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

// ---- maintenance / audit -------------------------------------------------------------

void BFTree::settle() {
  {
    SharedLatch rl(root_latch_);
    settle_walk(root_.get(), nullptr);
  }
  collapse_root();
}

void BFTree::settle_walk(Node* n, Node* parent) {
  if (n->leaf) return;
  {
    SharedLatch lk(n->latch);
    for (auto& c : n->children) settle_walk(c.get(), n);
  }
  n->underflow_children.fetch_add(1);
  maybe_repair(n, parent);
}

std::vector<StoredFilter> BFTree::dump() const {
  SharedLatch rl(root_latch_);
  std::vector<StoredFilter> out;
  std::vector<const Node*> stack{root_.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!n->leaf) {
      for (const auto& c : n->children) stack.push_back(c.get());
      continue;
    }
    for (std::size_t e = 0; e < n->ids.size(); ++e) {
      out.push_back({n->ids[e],
                     std::vector<std::uint64_t>(
                         n->bits.begin() + static_cast<std::ptrdiff_t>(e * words_),
                         n->bits.begin() + static_cast<std::ptrdiff_t>((e + 1) * words_))});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

struct AuditState {
  std::size_t words = 0;
  std::size_t arity = 0;
  std::size_t min_fanout = 0;
  bool check_fanout = true;
  bool exact = false;
  long leaf_depth = -1;
  std::size_t entries = 0;
  AuditReport report;
};

// Returns the exact OR of all filters below n.
std::vector<std::uint64_t> audit_node(const Node* n, long depth, bool is_root, AuditState& st) {
  const std::string where = "depth " + std::to_string(depth);
  if (!is_root && st.check_fanout && n->fanout() < st.min_fanout) {
    st.report.fail("under-full node at " + where);
  }
  if (n->fanout() > st.arity) st.report.fail("over-full node at " + where);
  std::vector<std::uint64_t> truth(st.words, 0);
  if (n->leaf) {
    if (st.leaf_depth < 0) st.leaf_depth = depth;
    if (st.leaf_depth != depth) st.report.fail("leaves at unequal depth");
    if (n->bits.size() != n->ids.size() * st.words) st.report.fail("leaf bit array size mismatch");
    st.entries += n->ids.size();
    truth = true_mask(n, st.words);
  } else {
    if (n->children.empty()) st.report.fail("internal node without children at " + where);
    for (const auto& c : n->children) {
      auto sub = audit_node(c.get(), depth + 1, false, st);
      for (std::size_t i = 0; i < st.words; ++i) truth[i] |= sub[i];
      // Each mask must also cover its children's masks, stale bits included.
      const auto child_mask = load_mask(c.get(), st.words);
      if (!subset(child_mask.data(), load_mask(n, st.words).data(), st.words)) {
        st.report.fail("mask does not cover a child's mask at " + where);
      }
    }
  }
  const auto stored = load_mask(n, st.words);
  if (!subset(truth.data(), stored.data(), st.words)) {
    st.report.fail("mask misses subtree bits at " + where);
  } else if (st.exact && stored != truth) {
    st.report.fail("mask carries stale bits at " + where);
  }
  return truth;
}

std::size_t tighten(Node* n, std::size_t words) {
  std::size_t shrunk = 0;
  for (auto& c : n->children) shrunk += tighten(c.get(), words);
  const auto before = load_mask(n, words);
  recalc_mask(n, words);
  if (load_mask(n, words) != before) ++shrunk;
  return shrunk;
}

}  // namespace

AuditReport BFTree::audit(bool check_fanout, bool exact_masks) const {
  ExclusiveLatch rl(root_latch_);
  AuditState st;
  st.words = words_;
  st.arity = arity_;
  st.min_fanout = min_fanout_;
  st.check_fanout = check_fanout;
  st.exact = exact_masks;
  audit_node(root_.get(), 0, true, st);
  if (st.entries != size_.load()) {
    st.report.fail("entry count " + std::to_string(st.entries) + " != size " +
                   std::to_string(size_.load()));
  }
  return st.report;
}

std::size_t BFTree::audit_and_tighten() {
  // The exclusive root latch keeps every other operation out of the tree.
  ExclusiveLatch rl(root_latch_);
  return tighten(root_.get(), words_);
}

}  // namespace tinval

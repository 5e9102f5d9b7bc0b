#include "tinval/simdb.hpp"

#include <algorithm>
#include <type_traits>
#include <unordered_set>
#include <variant>

#include "tinval/error.hpp"

namespace tinval {

// ---- rows ---------------------------------------------------------------------

std::string encode_rows(const std::vector<Row>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (const auto& [name, value] : row) {
      out += name;
      out += '=';
      out += value.debug_string();
      out += ';';
    }
    out += '\n';
  }
  return out;
}

std::string QueryResponse::result_bytes() const { return encode_rows(rows); }

// ---- registry -----------------------------------------------------------------

void Registry::acquire(const QueryFootprint& fp, const std::optional<JoinTemplate>& tmpl) {
  std::lock_guard g(mu_);
  if (fp.template_id) {
    auto [it, fresh] = templates_.try_emplace(*fp.template_id, *tmpl, 0);
    ++it->second.second;
  }
  for (const auto& a : fp.attributes) ++attributes_[a];
  for (const auto& i : fp.indexes) ++indexes_[i];
}

void Registry::release(const QueryFootprint& fp) {
  std::lock_guard g(mu_);
  if (fp.template_id) {
    auto it = templates_.find(*fp.template_id);
    if (it != templates_.end() && --it->second.second == 0) templates_.erase(it);
  }
  for (const auto& a : fp.attributes) {
    auto it = attributes_.find(a);
    if (it != attributes_.end() && --it->second == 0) attributes_.erase(it);
  }
  for (const auto& i : fp.indexes) {
    auto it = indexes_.find(i);
    if (it != indexes_.end() && --it->second == 0) indexes_.erase(it);
  }
}

std::vector<JoinTemplate> Registry::templates_touching(std::string_view table) const {
  std::lock_guard g(mu_);
  std::vector<JoinTemplate> out;
  for (const auto& [id, entry] : templates_) {
    const auto& tables = entry.first.tables;
    if (std::find(tables.begin(), tables.end(), table) != tables.end()) out.push_back(entry.first);
  }
  return out;
}

std::vector<JoinTemplate> Registry::templates() const {
  std::lock_guard g(mu_);
  std::vector<JoinTemplate> out;
  for (const auto& [id, entry] : templates_) out.push_back(entry.first);
  return out;
}

std::set<std::string, std::less<>> Registry::attributes() const {
  std::lock_guard g(mu_);
  std::set<std::string, std::less<>> out;
  for (const auto& [a, n] : attributes_) out.insert(a);
  return out;
}

std::vector<IndexRef> Registry::indexes() const {
  std::lock_guard g(mu_);
  std::vector<IndexRef> out;
  for (const auto& [i, n] : indexes_) out.push_back(i);
  return out;
}

std::vector<std::string> Registry::indexed_attributes(std::string_view table) const {
  std::lock_guard g(mu_);
  std::vector<std::string> out;
  for (const auto& [i, n] : indexes_) {
    if (i.table == table) out.push_back(i.attribute);
  }
  return out;
}

bool Registry::empty() const {
  std::lock_guard g(mu_);
  return templates_.empty() && attributes_.empty() && indexes_.empty();
}

// ---- join machinery -------------------------------------------------------------

namespace {

struct ResolvedJoin {
  std::size_t a;
  std::string col_a;
  std::size_t b;
  std::string col_b;
};

struct Candidates {
  bool restricted = false;
  // Restricted to one tuple that need not be stored in the table.
  bool pinned = false;
  std::vector<const Tuple*> list;
  std::unordered_set<std::uint64_t> pks;
};

std::size_t table_position(const std::vector<std::string>& tables, std::string_view name) {
  auto it = std::find(tables.begin(), tables.end(), name);
  if (it == tables.end()) throw Error(Errc::unknown_table, std::string(name));
  return static_cast<std::size_t>(it - tables.begin());
}

std::vector<ResolvedJoin> resolve_joins(const std::vector<std::string>& tables,
                                        const std::vector<JoinCondition>& joins) {
  std::vector<ResolvedJoin> out;
  for (const auto& j : joins) {
    auto [ta, ca] = split_qualified(j.left);
    auto [tb, cb] = split_qualified(j.right);
    out.push_back({table_position(tables, ta), std::string(ca), table_position(tables, tb),
                   std::string(cb)});
  }
  return out;
}

std::vector<const Tuple*> lookup(const Table& t, const Candidates& cand, std::string_view col,
                                 const Value& v) {
  std::vector<const Tuple*> out;
  if (cand.pinned) {
    for (const Tuple* tp : cand.list) {
      if (tp->get(col) == v) out.push_back(tp);
    }
    return out;
  }
  if (col == kPrimaryKey) {
    if (v.is_int() && v.as_int() >= 0) {
      if (const Tuple* tp = t.find(static_cast<std::uint64_t>(v.as_int()))) out.push_back(tp);
    }
    return out;
  }
  if (t.has_index(col)) {
    const auto& idx = t.index(col);
    auto it = idx.find(v);
    if (it != idx.end()) {
      for (auto pk : it->second) out.push_back(t.find(pk));
    }
    return out;
  }
  for (const auto& [pk, tuple] : t.rows()) {
    if (tuple.get(col) == v) out.push_back(&tuple);
  }
  return out;
}

// Index nested-loop join. Starts from the smallest restricted table and
// repeatedly binds a table connected to the bound set. Records the pks looked
// up in unrestricted tables when `visited` is given.
std::vector<std::vector<const Tuple*>> join_core(const std::vector<const Table*>& tabs,
                                                 const std::vector<ResolvedJoin>& joins,
                                                 const std::vector<Candidates>& cand,
                                                 std::vector<std::vector<std::uint64_t>>* visited) {
  const std::size_t n = tabs.size();
  std::vector<std::vector<const Tuple*>> partial;
  std::size_t start = 0;
  bool have_start = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!cand[i].restricted) continue;
    if (!have_start || cand[i].pinned ||
        (!cand[start].pinned && cand[i].list.size() < cand[start].list.size())) {
      start = i;
      have_start = true;
    }
  }
  std::vector<std::unordered_set<std::uint64_t>> seen(n);
  if (cand[start].restricted) {
    for (const Tuple* t : cand[start].list) {
      partial.emplace_back(n, nullptr);
      partial.back()[start] = t;
    }
  } else {
    for (const auto& [pk, t] : tabs[start]->rows()) {
      partial.emplace_back(n, nullptr);
      partial.back()[start] = &t;
      if (visited && seen[start].insert(pk).second) (*visited)[start].push_back(pk);
    }
  }

  std::vector<bool> bound(n, false);
  bound[start] = true;
  for (std::size_t step = 1; step < n; ++step) {
    // Pick the first unbound table joined to a bound one.
    std::size_t next = n;
    for (std::size_t i = 0; i < n && next == n; ++i) {
      if (bound[i]) continue;
      for (const auto& j : joins) {
        if ((j.a == i && bound[j.b]) || (j.b == i && bound[j.a])) {
          next = i;
          break;
        }
      }
    }
    if (next == n) throw Error(Errc::invalid_argument, "query tables are not connected by joins");

    // Conditions between `next` and bound tables, oriented as (bound col, next col).
    struct Link {
      std::size_t other;
      std::string other_col;
      std::string col;
    };
    std::vector<Link> links;
    for (const auto& j : joins) {
      if (j.a == next && bound[j.b]) links.push_back({j.b, j.col_b, j.col_a});
      if (j.b == next && bound[j.a]) links.push_back({j.a, j.col_a, j.col_b});
    }

    std::vector<std::vector<const Tuple*>> grown;
    for (const auto& row : partial) {
      const Value v = row[links[0].other]->get(links[0].other_col);
      if (v.is_null()) continue;
      for (const Tuple* t : lookup(*tabs[next], cand[next], links[0].col, v)) {
        if (cand[next].restricted && !cand[next].pinned && !cand[next].pks.contains(t->pk)) {
          continue;
        }
        if (!cand[next].restricted && visited && seen[next].insert(t->pk).second) {
          (*visited)[next].push_back(t->pk);
        }
        bool ok = true;
        for (std::size_t l = 1; l < links.size() && ok; ++l) {
          const Value a = row[links[l].other]->get(links[l].other_col);
          ok = !a.is_null() && a == t->get(links[l].col);
        }
        if (!ok) continue;
        grown.push_back(row);
        grown.back()[next] = t;
      }
    }
    partial = std::move(grown);
    bound[next] = true;
  }
  return partial;
}

void add_tuple(Row& row, const std::string& table, const Tuple& t) {
  row.emplace(qualify(table, kPrimaryKey), Value(static_cast<std::int64_t>(t.pk)));
  for (const auto& [col, v] : t.attrs) row.emplace(qualify(table, col), v);
}

// Before/after images of the tuple a statement touches.
struct Images {
  const Table* table = nullptr;
  std::optional<Tuple> before;
  std::optional<Tuple> after;
};

Images images_of(const DmlStatement& u, const Database& db) {
  Images im;
  im.table = &db.table(u.table());
  const Table& t = *im.table;
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, InsertStmt>) {
          if (t.find(s.tuple.pk)) {
            throw Error(Errc::duplicate_pk, t.name() + " pk " + std::to_string(s.tuple.pk));
          }
          im.after = t.normalize(s.tuple);
        } else {
          const Tuple* cur = t.find(s.pk);
          if (!cur) throw Error(Errc::missing_tuple, t.name() + " pk " + std::to_string(s.pk));
          im.before = *cur;
          if constexpr (std::is_same_v<S, UpdateStmt>) im.after = t.with_changes(*cur, s.changes);
        }
      },
      u.kind);
  return im;
}

bool is_noop(const Images& im) { return im.before && im.after && *im.before == *im.after; }

}  // namespace

// ---- Database -------------------------------------------------------------------

Database::Database(BloomConfig cfg) : cfg_(cfg), registry_(std::make_shared<Registry>()) {
  cfg_.validate();
}

Table& Database::create_table(std::string name, std::vector<Column> schema) {
  std::unique_lock lk(rw_);
  if (tables_.contains(name)) throw Error(Errc::invalid_argument, "table exists: " + name);
  auto t = std::make_unique<Table>(name, std::move(schema));
  Table& ref = *t;
  tables_.emplace(std::move(name), std::move(t));
  return ref;
}

bool Database::has_table(std::string_view name) const { return tables_.find(name) != tables_.end(); }

const Table& Database::table(std::string_view name) const {
  auto it = tables_.find(name);
  if (it == tables_.end()) throw Error(Errc::unknown_table, std::string(name));
  return *it->second;
}

Table& Database::mutable_table(std::string_view name) {
  auto it = tables_.find(name);
  if (it == tables_.end()) throw Error(Errc::unknown_table, std::string(name));
  return *it->second;
}

std::vector<std::string> Database::table_names() const {
  std::vector<std::string> out;
  for (const auto& [name, t] : tables_) out.push_back(name);
  return out;
}

std::uint64_t Database::version() const {
  std::shared_lock lk(rw_);
  return version_;
}

void Database::validate(const Query& q) const {
  if (q.tables.empty()) throw Error(Errc::invalid_argument, "query without tables: " + q.id);
  for (std::size_t i = 0; i < q.tables.size(); ++i) {
    (void)table(q.tables[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (q.tables[i] == q.tables[j]) {
        throw Error(Errc::invalid_argument, "self-joins are not supported: " + q.id);
      }
    }
  }
  auto check_attr = [&](std::string_view qualified) {
    auto [tname, col] = split_qualified(qualified);
    if (std::find(q.tables.begin(), q.tables.end(), tname) == q.tables.end()) {
      throw Error(Errc::unknown_table, std::string(tname) + " is not part of " + q.id);
    }
    if (col != kPrimaryKey && !table(tname).has_column(col)) {
      throw Error(Errc::unknown_attribute, std::string(qualified));
    }
  };
  for (const auto& p : q.selections) check_attr(p.attribute);
  for (const auto& j : q.joins) {
    check_attr(j.left);
    check_attr(j.right);
  }
  for (const auto& a : q.projection) check_attr(a);
  if (q.tables.size() > 1 && q.joins.empty()) {
    throw Error(Errc::invalid_argument, "multi-table query without join: " + q.id);
  }
}

Database::Execution Database::run(const Query& q, bool capture) const {
  validate(q);
  const std::size_t n = q.tables.size();
  std::vector<const Table*> tabs;
  for (const auto& name : q.tables) tabs.push_back(&table(name));

  std::vector<std::vector<Predicate>> local(n);
  for (const auto& p : q.selections) local[table_position(q.tables, p.table())].push_back(p);

  Execution ex;
  std::vector<Candidates> cand(n);
  std::vector<std::vector<std::uint64_t>> visited(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (local[i].empty()) continue;
    const Table& t = *tabs[i];
    const Predicate* via = nullptr;
    for (const auto& p : local[i]) {
      if (p.is_substring() || !t.has_index(p.column())) continue;
      if (!via || more_selective(p, *via)) via = &p;
    }
    auto& c = cand[i];
    c.restricted = true;
    if (via) {
      auto [lo, hi] = predicate_to_interval(*via);
      visited[i] = t.scan_index(via->column(), lo, hi);
      ex.indexes_used.push_back({t.name(), std::string(via->column())});
      for (auto pk : visited[i]) {
        const Tuple* tp = t.find(pk);
        AttrValues vals;
        add_tuple(vals, t.name(), *tp);
        if (eval_conjunction(local[i], vals)) c.list.push_back(tp);
      }
    } else {
      for (const auto& [pk, tuple] : t.rows()) {
        AttrValues vals;
        add_tuple(vals, t.name(), tuple);
        if (eval_conjunction(local[i], vals)) {
          c.list.push_back(&tuple);
          visited[i].push_back(pk);
        }
      }
    }
    for (const Tuple* tp : c.list) c.pks.insert(tp->pk);
  }

  const auto joined = join_core(tabs, resolve_joins(q.tables, q.joins), cand,
                                capture ? &visited : nullptr);
  ex.rows.reserve(joined.size());
  for (const auto& jt : joined) {
    Row row;
    if (q.projection.empty()) {
      for (std::size_t i = 0; i < n; ++i) add_tuple(row, q.tables[i], *jt[i]);
    } else {
      for (const auto& a : q.projection) {
        auto [tname, col] = split_qualified(a);
        row.emplace(a, jt[table_position(q.tables, tname)]->get(col));
      }
    }
    ex.rows.push_back(std::move(row));
  }
  std::sort(ex.rows.begin(), ex.rows.end());
  if (capture) {
    for (std::size_t i = 0; i < n; ++i) ex.accessed.push_back({q.tables[i], std::move(visited[i])});
  }
  return ex;
}

std::vector<Row> Database::instantiate(const JoinTemplate& tmpl, std::string_view table_name,
                                       const Tuple& image) const {
  std::vector<const Table*> tabs;
  for (const auto& name : tmpl.tables) tabs.push_back(&table(name));
  std::vector<Candidates> cand(tmpl.tables.size());
  auto& pin = cand[table_position(tmpl.tables, table_name)];
  pin.restricted = true;
  pin.pinned = true;
  pin.list.push_back(&image);
  std::vector<Row> out;
  for (const auto& jt : join_core(tabs, resolve_joins(tmpl.tables, tmpl.joins), cand, nullptr)) {
    Row row;
    for (std::size_t i = 0; i < jt.size(); ++i) add_tuple(row, tmpl.tables[i], *jt[i]);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<Row> Database::evaluate(const Query& q) const {
  std::shared_lock lk(rw_);
  return run(q, false).rows;
}

QueryResponse Database::execute_query(const Query& q, Modes modes) {
  std::shared_lock lk(rw_);
  auto ex = run(q, modes.bloom && q.cacheable);
  QueryResponse resp;
  resp.rows = std::move(ex.rows);
  resp.version = version_;
  resp.tables = q.tables;
  resp.cacheable = q.cacheable && !resp.rows.empty();
  if (!resp.cacheable || (!modes.predicate && !modes.bloom)) return resp;

  QueryFootprint fp;
  std::optional<JoinTemplate> tmpl;
  if (modes.predicate && !q.selections.empty()) {
    resp.predicate_sig = make_signature(q, 0);
    if (q.tables.size() > 1) {
      tmpl = make_join_template(q);
      fp.template_id = tmpl->id;
    }
    for (const auto& p : q.selections) fp.attributes.push_back(p.attribute);
    std::sort(fp.attributes.begin(), fp.attributes.end());
    fp.attributes.erase(std::unique(fp.attributes.begin(), fp.attributes.end()),
                        fp.attributes.end());
  }
  if (modes.bloom) {
    resp.bloom_sig = make_bloom_signature(q, ex.accessed, std::move(ex.indexes_used), cfg_, 0);
    fp.indexes = resp.bloom_sig->index_set;
  }
  registry_->acquire(fp, tmpl);
  auto reg = registry_;
  resp.footprint = std::shared_ptr<const QueryFootprint>(
      new QueryFootprint(std::move(fp)), [reg](const QueryFootprint* p) {
        reg->release(*p);
        delete p;
      });
  return resp;
}

UpdateResponse Database::execute_dml(const DmlStatement& u, Modes modes) {
  std::unique_lock lk(rw_);
  const Images im = images_of(u, *this);
  UpdateResponse resp;
  resp.tables = {u.table()};
  if (is_noop(im)) {
    resp.changed = false;
    resp.version = version_;
    if (modes.predicate) resp.predicate_sig = UpdateSignatureP{u.id, {}};
    if (modes.bloom) resp.bloom_sig = UpdateSignatureB{u.id, {}};
    return resp;
  }
  if (modes.predicate) resp.predicate_sig = make_update_signature(u, *this);
  if (modes.bloom) resp.bloom_sig = make_update_signature_b(u, *this);

  Table& t = mutable_table(u.table());
  if (im.before && im.after) {
    t.replace(*im.after);
  } else if (im.after) {
    t.insert(*im.after);
  } else {
    t.erase(im.before->pk);
  }
  resp.version = ++version_;
  return resp;
}

// ---- update signatures ------------------------------------------------------------

UpdateSignatureP make_update_signature(const DmlStatement& u, const Database& db) {
  const Images im = images_of(u, db);
  UpdateSignatureP sig{u.id, {}};
  if (is_noop(im)) return sig;
  const auto referenced = db.registry().attributes();
  const auto templates = db.registry().templates_touching(u.table());
  auto project = [&](std::string source, const Row& full) {
    TupleImage img{std::move(source), {}};
    for (const auto& [name, v] : full) {
      if (referenced.contains(name)) img.values.emplace(name, v);
    }
    sig.tuples.push_back(std::move(img));
  };
  for (const auto* image : {im.before ? &*im.before : nullptr, im.after ? &*im.after : nullptr}) {
    if (!image) continue;
    Row bare;
    add_tuple(bare, u.table(), *image);
    project(u.table(), bare);
    for (const auto& tmpl : templates) {
      for (const auto& joint : db.instantiate(tmpl, u.table(), *image)) project(tmpl.id, joint);
    }
  }
  return sig;
}

UpdateSignatureB make_update_signature_b(const DmlStatement& u, const Database& db) {
  const Images im = images_of(u, db);
  std::set<std::uint64_t> keys;
  if (!is_noop(im)) {
    const Table& t = *im.table;
    const std::uint64_t pk = im.before ? im.before->pk : im.after->pk;
    keys.insert(tuple_key(t.name(), pk));
    if (im.after) {
      for (const auto& attr : db.registry().indexed_attributes(t.name())) {
        const Value v = im.after->get(attr);
        // A value that did not move cannot bring the tuple into a new range.
        if (im.before && im.before->get(attr) == v) continue;
        for (auto n : neighbors(t, attr, v, pk)) keys.insert(tuple_key(t.name(), n));
      }
    }
  }
  return make_update_signature_b_from_keys(u.id, keys, db.bloom_config());
}

}  // namespace tinval

#include "tinval/model.hpp"

#include <algorithm>

#include "tinval/error.hpp"

namespace tinval {

std::strong_ordering operator<=>(const Value& a, const Value& b) {
  if (a.v_.index() != b.v_.index()) return a.v_.index() <=> b.v_.index();
  switch (a.v_.index()) {
    case 1: return std::get<1>(a.v_) <=> std::get<1>(b.v_);
    case 2: {
      // std::string::compare goes through char_traits<char>, which orders as unsigned bytes.
      const int c = std::get<2>(a.v_).compare(std::get<2>(b.v_));
      return c <=> 0;
    }
    default: return std::strong_ordering::equal;
  }
}

std::string Value::debug_string() const {
  if (is_null()) return "null";
  if (is_int()) return std::to_string(as_int());
  return '"' + as_text() + '"';
}

const Value* Tuple::find(std::string_view column) const {
  for (const auto& [name, value] : attrs) {
    if (name == column) return &value;
  }
  return nullptr;
}

Value Tuple::get(std::string_view column) const {
  if (column == kPrimaryKey) return Value(static_cast<std::int64_t>(pk));
  const Value* v = find(column);
  return v ? *v : Value{};
}

// ---- Table ------------------------------------------------------------------

Table::Table(std::string name, std::vector<Column> schema)
    : name_(std::move(name)), schema_(std::move(schema)) {
  if (name_.empty() || name_.find('.') != std::string::npos) {
    throw Error(Errc::invalid_argument, "bad table name '" + name_ + "'");
  }
  std::set<std::string_view> seen;
  for (const auto& c : schema_) {
    if (c.name.empty() || c.name == kPrimaryKey || c.name.find('.') != std::string::npos ||
        !seen.insert(c.name).second) {
      throw Error(Errc::invalid_argument, "bad column '" + c.name + "' in " + name_);
    }
  }
}

bool Table::has_column(std::string_view column) const {
  return std::any_of(schema_.begin(), schema_.end(),
                     [&](const Column& c) { return c.name == column; });
}

void Table::add_index(const std::string& column) {
  if (column == kPrimaryKey) return;
  if (!has_column(column)) throw Error(Errc::unknown_attribute, name_ + "." + column);
  if (indexes_.contains(column)) return;
  auto& idx = indexes_[column];
  for (const auto& [pk, t] : rows_) idx[t.get(column)].insert(pk);
}

bool Table::has_index(std::string_view column) const {
  return column == kPrimaryKey || indexes_.find(column) != indexes_.end();
}

const SecondaryIndex& Table::index(std::string_view column) const {
  auto it = indexes_.find(column);
  if (it == indexes_.end()) {
    throw Error(Errc::no_such_index, name_ + "." + std::string(column));
  }
  return it->second;
}

std::vector<std::string> Table::indexed_columns() const {
  std::vector<std::string> out;
  for (const auto& [col, idx] : indexes_) out.push_back(col);
  return out;
}

const Tuple* Table::find(std::uint64_t pk) const {
  auto it = rows_.find(pk);
  return it == rows_.end() ? nullptr : &it->second;
}

Tuple Table::normalize(Tuple t) const {
  for (const auto& [name, value] : t.attrs) {
    auto col = std::find_if(schema_.begin(), schema_.end(),
                            [&](const Column& c) { return c.name == name; });
    if (col == schema_.end()) throw Error(Errc::unknown_attribute, name_ + "." + name);
    const bool type_ok = value.is_null() || (col->type == ValueType::integer && value.is_int()) ||
                         (col->type == ValueType::text && value.is_text());
    if (!type_ok) throw Error(Errc::invalid_argument, "type mismatch for " + name_ + "." + name);
  }
  Tuple out;
  out.pk = t.pk;
  out.attrs.reserve(schema_.size());
  for (const auto& c : schema_) {
    const Value* v = t.find(c.name);
    out.attrs.emplace_back(c.name, v ? *v : Value{});
  }
  return out;
}

Tuple Table::with_changes(const Tuple& current, const AttrList& changes) const {
  Tuple next = current;
  for (const auto& [name, value] : changes) {
    auto it = std::find_if(next.attrs.begin(), next.attrs.end(),
                           [&](const auto& kv) { return kv.first == name; });
    if (it == next.attrs.end()) throw Error(Errc::unknown_attribute, name_ + "." + name);
    it->second = value;
  }
  return normalize(std::move(next));
}

void Table::insert(Tuple t) {
  if (rows_.contains(t.pk)) {
    throw Error(Errc::duplicate_pk, name_ + " pk " + std::to_string(t.pk));
  }
  t = normalize(std::move(t));
  index_add(t);
  const auto pk = t.pk;
  rows_.emplace(pk, std::move(t));
}

Tuple Table::erase(std::uint64_t pk) {
  auto it = rows_.find(pk);
  if (it == rows_.end()) throw Error(Errc::missing_tuple, name_ + " pk " + std::to_string(pk));
  Tuple before = std::move(it->second);
  rows_.erase(it);
  index_remove(before);
  return before;
}

Tuple Table::replace(Tuple after) {
  auto it = rows_.find(after.pk);
  if (it == rows_.end()) {
    throw Error(Errc::missing_tuple, name_ + " pk " + std::to_string(after.pk));
  }
  after = normalize(std::move(after));
  Tuple before = std::move(it->second);
  index_remove(before);
  index_add(after);
  it->second = std::move(after);
  return before;
}

std::vector<std::uint64_t> Table::scan_index(std::string_view column, const Value& lo,
                                             const Value& hi) const {
  std::vector<std::uint64_t> out;
  if (hi < lo) return out;
  if (column == kPrimaryKey) {
    // Primary keys are unsigned; only integer bounds can select anything.
    if (hi.is_null() || lo.is_text()) return out;
    if (hi.is_int() && hi.as_int() < 0) return out;
    const std::uint64_t from =
        lo.is_int() && lo.as_int() > 0 ? static_cast<std::uint64_t>(lo.as_int()) : 0;
    auto end = hi.is_text() ? rows_.end()
                            : rows_.upper_bound(static_cast<std::uint64_t>(hi.as_int()));
    for (auto it = rows_.lower_bound(from); it != end; ++it) out.push_back(it->first);
    return out;
  }
  const auto& idx = index(column);
  for (auto it = idx.lower_bound(lo); it != idx.end() && !(hi < it->first); ++it) {
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  return out;
}

bool Table::indexes_consistent() const {
  for (const auto& [col, idx] : indexes_) {
    std::size_t entries = 0;
    for (const auto& [value, pks] : idx) {
      if (pks.empty()) return false;
      for (auto pk : pks) {
        const Tuple* t = find(pk);
        if (!t || t->get(col) != value) return false;
        ++entries;
      }
    }
    if (entries != rows_.size()) return false;
  }
  return true;
}

void Table::index_add(const Tuple& t) {
  for (auto& [col, idx] : indexes_) idx[t.get(col)].insert(t.pk);
}

void Table::index_remove(const Tuple& t) {
  for (auto& [col, idx] : indexes_) {
    auto it = idx.find(t.get(col));
    if (it == idx.end()) continue;
    it->second.erase(t.pk);
    if (it->second.empty()) idx.erase(it);
  }
}

// ---- Predicates ---------------------------------------------------------------

Predicate Predicate::point(std::string attribute, Value v) {
  split_qualified(attribute);
  return Predicate{std::move(attribute), PointPredicate{std::move(v)}};
}

Predicate Predicate::range(std::string attribute, Value lo, Value hi, bool lo_inclusive,
                           bool hi_inclusive) {
  split_qualified(attribute);
  if (hi < lo) throw Error(Errc::invalid_argument, "range with lo > hi on " + attribute);
  return Predicate{std::move(attribute),
                   RangePredicate{std::move(lo), std::move(hi), lo_inclusive, hi_inclusive}};
}

Predicate Predicate::substring(std::string attribute, std::string needle) {
  split_qualified(attribute);
  if (needle.empty()) throw Error(Errc::invalid_argument, "empty substring on " + attribute);
  return Predicate{std::move(attribute), SubstringPredicate{std::move(needle)}};
}

std::string_view Predicate::table() const { return split_qualified(attribute).first; }
std::string_view Predicate::column() const { return split_qualified(attribute).second; }

bool eval_predicate(const Predicate& p, const Value& v) {
  if (v.is_null()) return false;
  if (const auto* pt = std::get_if<PointPredicate>(&p.kind)) return v == pt->value;
  if (const auto* r = std::get_if<RangePredicate>(&p.kind)) {
    const auto lo = r->lo <=> v;
    const auto hi = v <=> r->hi;
    const bool lo_ok = r->lo_inclusive ? lo <= 0 : lo < 0;
    const bool hi_ok = r->hi_inclusive ? hi <= 0 : hi < 0;
    return lo_ok && hi_ok;
  }
  const auto& s = std::get<SubstringPredicate>(p.kind);
  return v.is_text() && v.as_text().find(s.needle) != std::string::npos;
}

bool eval_conjunction(std::span<const Predicate> preds, const AttrValues& t) {
  static const Value null_value;
  for (const auto& p : preds) {
    auto it = t.find(p.attribute);
    if (!eval_predicate(p, it == t.end() ? null_value : it->second)) return false;
  }
  return true;
}

const std::string& DmlStatement::table() const {
  return std::visit([](const auto& s) -> const std::string& { return s.table; }, kind);
}

std::string qualify(std::string_view table, std::string_view column) {
  std::string out;
  out.reserve(table.size() + 1 + column.size());
  out.append(table).push_back('.');
  out.append(column);
  return out;
}

std::pair<std::string_view, std::string_view> split_qualified(std::string_view name) {
  const auto dot = name.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == name.size()) {
    throw Error(Errc::unknown_attribute, "expected table.column, got '" + std::string(name) + "'");
  }
  return {name.substr(0, dot), name.substr(dot + 1)};
}

}  // namespace tinval

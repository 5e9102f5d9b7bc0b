#include "tinval/predicate_sig.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <tuple>

#include "tinval/error.hpp"

namespace tinval {

namespace {

JoinCondition canonical(const JoinCondition& j) {
  return j.left <= j.right ? j : JoinCondition{j.right, j.left};
}

// Width of an integer range after tightening; nullopt when not comparable.
std::optional<long double> int_width(const Predicate& p) {
  if (!p.is_range()) return std::nullopt;
  auto [lo, hi] = predicate_to_interval(p);
  if (!lo.is_int() || !hi.is_int()) return std::nullopt;
  return static_cast<long double>(hi.as_int()) - static_cast<long double>(lo.as_int());
}

}  // namespace

bool more_selective(const Predicate& a, const Predicate& b) {
  if (a.kind.index() != b.kind.index()) return a.kind.index() < b.kind.index();
  if (a.is_range()) {
    const auto wa = int_width(a);
    const auto wb = int_width(b);
    if (wa && wb && *wa != *wb) return *wa < *wb;
    if (wa.has_value() != wb.has_value()) return wa.has_value();
  }
  return a.attribute < b.attribute;
}

JoinTemplate make_join_template(const Query& q) {
  if (q.tables.size() < 2 || q.joins.empty()) {
    throw Error(Errc::invalid_argument, "join template needs two tables and a join: " + q.id);
  }
  JoinTemplate t;
  t.tables = q.tables;
  std::sort(t.tables.begin(), t.tables.end());
  for (const auto& j : q.joins) t.joins.push_back(canonical(j));
  std::sort(t.joins.begin(), t.joins.end(), [](const JoinCondition& a, const JoinCondition& b) {
    return std::tie(a.left, a.right) < std::tie(b.left, b.right);
  });
  t.id = "join:";
  for (const auto& name : t.tables) t.id += name + ",";
  for (const auto& j : t.joins) t.id += j.left + "=" + j.right + ";";
  return t;
}

std::string signature_source(const Query& q) {
  if (q.tables.size() == 1) return q.tables.front();
  return make_join_template(q).id;
}

const Predicate& PredicateSignature::indexed_predicate() const {
  for (const auto& p : predicates) {
    if (p.attribute == index_attribute) return p;
  }
  throw Error(Errc::unknown_attribute, "no predicate on " + index_attribute);
}

PredicateSignature make_signature(const Query& q, EntryId entry_id) {
  if (q.selections.empty()) throw Error(Errc::no_predicates, q.id);
  PredicateSignature sig;
  sig.query_id = q.id;
  sig.entry_id = entry_id;
  sig.source = signature_source(q);
  sig.predicates = q.selections;
  sig.index_attribute =
      std::min_element(q.selections.begin(), q.selections.end(), more_selective)->attribute;
  return sig;
}

std::pair<Value, Value> predicate_to_interval(const Predicate& p) {
  if (const auto* pt = std::get_if<PointPredicate>(&p.kind)) return {pt->value, pt->value};
  if (const auto* s = std::get_if<SubstringPredicate>(&p.kind)) {
    return {Value::text(s->needle),
            Value(s->needle + std::string(kSubstringSentinelBytes, '\xFF'))};
  }
  const auto& r = std::get<RangePredicate>(p.kind);
  Value lo = r.lo;
  Value hi = r.hi;
  constexpr auto kMin = std::numeric_limits<std::int64_t>::min();
  constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
  if (!r.lo_inclusive && lo.is_int() && lo.as_int() != kMax) lo = Value(lo.as_int() + 1);
  if (!r.hi_inclusive && hi.is_int() && hi.as_int() != kMin) hi = Value(hi.as_int() - 1);
  // An empty open range keeps its original closed bounds; evaluation rejects everything.
  if (hi < lo) return {r.lo, r.hi};
  return {std::move(lo), std::move(hi)};
}

std::vector<Value> probe_keys(const Value& v) {
  if (!v.is_text()) return {v};
  const std::string& s = v.as_text();
  std::vector<Value> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out.emplace_back(s.substr(i));
  return out;
}

std::vector<Value> stab_keys(const Value& v) {
  if (v.is_text() && v.as_text().empty()) return {v};
  return probe_keys(v);
}

bool match_p(const PredicateSignature& sig, const UpdateSignatureP& upd) {
  return std::any_of(upd.tuples.begin(), upd.tuples.end(), [&](const TupleImage& t) {
    return t.source == sig.source && eval_conjunction(sig.predicates, t.values);
  });
}

}  // namespace tinval

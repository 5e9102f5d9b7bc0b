#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tinval/model.hpp"

namespace tinval {

/// Bytes appended to a substring needle to form the upper bound of its
/// interval. Any text starting with the needle sorts below the bound unless
/// the needle is directly followed by this many 0xFF bytes.
inline constexpr std::size_t kSubstringSentinelBytes = 8;

/// Equi-join skeleton of a multi-table query. The id is canonical: two
/// queries joining the same tables on the same conditions share a template.
struct JoinTemplate {
  std::string id;
  std::vector<std::string> tables;
  std::vector<JoinCondition> joins;

  friend bool operator==(const JoinTemplate&, const JoinTemplate&) = default;
};

/// Throws InvalidArgument for fewer than two tables or no join conditions.
JoinTemplate make_join_template(const Query& q);

/// Where an attribute map comes from: the table name for bare tuple images,
/// the template id for joint tuples. A signature only matches maps of its own source.
std::string signature_source(const Query& q);

struct PredicateSignature {
  std::string query_id;
  EntryId entry_id = 0;
  std::string source;
  std::vector<Predicate> predicates;
  std::string index_attribute;

  /// The predicate on index_attribute.
  [[nodiscard]] const Predicate& indexed_predicate() const;
};

/// One projected (joint) tuple image.
struct TupleImage {
  std::string source;
  AttrValues values;

  friend bool operator==(const TupleImage&, const TupleImage&) = default;
};

struct UpdateSignatureP {
  std::string stmt_id;
  std::vector<TupleImage> tuples;
};

/// Strict ordering of predicates by syntactic selectivity: Point before Range
/// before Substring, then the narrower integer range, then the attribute name.
bool more_selective(const Predicate& a, const Predicate& b);

/// Keeps every selection and indexes the most selective one. Throws NoPredicates when the query has no selection.
PredicateSignature make_signature(const Query& q, EntryId entry_id);

/// Closed interval whose stabbing by a probe key is necessary for the
/// predicate to hold. Exclusive integer bounds are tightened by one; other
/// exclusive bounds stay closed and rely on re-evaluating the predicate.
std::pair<Value, Value> predicate_to_interval(const Predicate& p);

/// Keys to stab per-attribute trees with: the value itself, or every
/// non-empty suffix of a text value.
std::vector<Value> probe_keys(const Value& v);

/// Keys the engine stabs with: probe_keys, plus the empty text itself, which
/// has no suffix but may still sit inside a point or range interval.
std::vector<Value> stab_keys(const Value& v);

/// True iff some image of the signature's source satisfies all its predicates.
bool match_p(const PredicateSignature& sig, const UpdateSignatureP& upd);

}  // namespace tinval

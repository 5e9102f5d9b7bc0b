#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace tinval {

/// Name of the pseudo-attribute that exposes a tuple's primary key to
/// predicates and join conditions.
inline constexpr std::string_view kPrimaryKey = "pk";

/// Identifies one cache entry across the engine and its indexes.
using EntryId = std::uint64_t;

enum class ValueType { integer, text };

/// Null < every Int < every Text; texts compare bytewise.
class Value {
 public:
  Value() = default;
  Value(std::int64_t v) : v_(v) {}  // NOLINT(google-explicit-constructor)
  Value(std::string v) : v_(std::move(v)) {}  // NOLINT(google-explicit-constructor)

  static Value null() { return {}; }
  static Value text(std::string_view s) { return Value(std::string(s)); }

  [[nodiscard]] bool is_null() const noexcept { return v_.index() == 0; }
  [[nodiscard]] bool is_int() const noexcept { return v_.index() == 1; }
  [[nodiscard]] bool is_text() const noexcept { return v_.index() == 2; }
  [[nodiscard]] std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  [[nodiscard]] const std::string& as_text() const { return std::get<std::string>(v_); }

  [[nodiscard]] std::string debug_string() const;

  friend std::strong_ordering operator<=>(const Value& a, const Value& b);
  friend bool operator==(const Value& a, const Value& b) = default;

 private:
  std::variant<std::monostate, std::int64_t, std::string> v_;
};

struct Column {
  std::string name;
  ValueType type = ValueType::integer;
};

using AttrList = std::vector<std::pair<std::string, Value>>;

struct Tuple {
  std::uint64_t pk = 0;
  AttrList attrs;

  /// Pointer to the named attribute, or nullptr. Does not resolve `pk`.
  [[nodiscard]] const Value* find(std::string_view column) const;
  /// Copy of the named attribute; `pk` yields the primary key, unknown names Null.
  [[nodiscard]] Value get(std::string_view column) const;

  friend bool operator==(const Tuple&, const Tuple&) = default;
};

/// Secondary index: value -> primary keys holding it.
using SecondaryIndex = std::map<Value, std::set<std::uint64_t>>;

class Table {
 public:
  Table(std::string name, std::vector<Column> schema);

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] const std::vector<Column>& schema() const noexcept { return schema_; }
  [[nodiscard]] bool has_column(std::string_view column) const;
  [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }
  [[nodiscard]] const std::map<std::uint64_t, Tuple>& rows() const noexcept { return rows_; }

  void add_index(const std::string& column);
  /// The primary key counts as an index.
  [[nodiscard]] bool has_index(std::string_view column) const;
  [[nodiscard]] const SecondaryIndex& index(std::string_view column) const;
  [[nodiscard]] std::vector<std::string> indexed_columns() const;

  [[nodiscard]] const Tuple* find(std::uint64_t pk) const;
  /// Validates names and types, fills missing columns with Null, orders by schema.
  [[nodiscard]] Tuple normalize(Tuple t) const;
  [[nodiscard]] Tuple with_changes(const Tuple& current, const AttrList& changes) const;

  void insert(Tuple t);
  Tuple erase(std::uint64_t pk);
  /// Replaces the stored tuple with the same pk; returns the before-image.
  Tuple replace(Tuple after);

  /// Primary keys whose column value lies in [lo, hi], in index order.
  [[nodiscard]] std::vector<std::uint64_t> scan_index(std::string_view column, const Value& lo,
                                                      const Value& hi) const;

  /// Every index entry points at a live tuple holding that value, and vice versa.
  [[nodiscard]] bool indexes_consistent() const;

 private:
  void index_add(const Tuple& t);
  void index_remove(const Tuple& t);

  std::string name_;
  std::vector<Column> schema_;
  std::map<std::uint64_t, Tuple> rows_;
  std::map<std::string, SecondaryIndex, std::less<>> indexes_;
};

struct PointPredicate {
  Value value;
  friend bool operator==(const PointPredicate&, const PointPredicate&) = default;
};
struct RangePredicate {
  Value lo;
  Value hi;
  bool lo_inclusive = true;
  bool hi_inclusive = true;
  friend bool operator==(const RangePredicate&, const RangePredicate&) = default;
};
struct SubstringPredicate {
  std::string needle;
  friend bool operator==(const SubstringPredicate&, const SubstringPredicate&) = default;
};

struct Predicate {
  std::string attribute;  // qualified as table.column
  std::variant<PointPredicate, RangePredicate, SubstringPredicate> kind;

  static Predicate point(std::string attribute, Value v);
  /// Throws InvalidArgument when lo > hi.
  static Predicate range(std::string attribute, Value lo, Value hi, bool lo_inclusive = true,
                         bool hi_inclusive = true);
  /// Throws InvalidArgument for an empty needle.
  static Predicate substring(std::string attribute, std::string needle);

  [[nodiscard]] std::string_view table() const;
  [[nodiscard]] std::string_view column() const;
  [[nodiscard]] bool is_point() const { return kind.index() == 0; }
  [[nodiscard]] bool is_range() const { return kind.index() == 1; }
  [[nodiscard]] bool is_substring() const { return kind.index() == 2; }

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// Attribute values of a (joint) tuple keyed by qualified name.
using AttrValues = std::map<std::string, Value, std::less<>>;

bool eval_predicate(const Predicate& p, const Value& v);
/// Missing attributes evaluate as Null.
bool eval_conjunction(std::span<const Predicate> preds, const AttrValues& t);

struct JoinCondition {
  std::string left;   // table.column
  std::string right;  // table.column
  friend bool operator==(const JoinCondition&, const JoinCondition&) = default;
};

struct Query {
  std::string id;
  std::vector<std::string> tables;
  std::vector<JoinCondition> joins;
  std::vector<Predicate> selections;
  std::vector<std::string> projection;  // empty means every column
  bool cacheable = true;
};

struct InsertStmt {
  std::string table;
  Tuple tuple;
};
struct DeleteStmt {
  std::string table;
  std::uint64_t pk = 0;
};
struct UpdateStmt {
  std::string table;
  std::uint64_t pk = 0;
  AttrList changes;
};

struct DmlStatement {
  std::string id;
  std::variant<InsertStmt, DeleteStmt, UpdateStmt> kind;

  [[nodiscard]] const std::string& table() const;
};

std::string qualify(std::string_view table, std::string_view column);
/// Splits table.column; throws UnknownAttribute when there is no dot.
std::pair<std::string_view, std::string_view> split_qualified(std::string_view name);

}  // namespace tinval

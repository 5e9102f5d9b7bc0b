#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "tinval/bloom.hpp"
#include "tinval/bloom_sig.hpp"
#include "tinval/model.hpp"
#include "tinval/predicate_sig.hpp"

namespace tinval {

/// Which signatures the database attaches to responses.
struct Modes {
  bool predicate = false;
  bool bloom = false;
};

/// Projected joint tuple keyed by qualified attribute name.
using Row = AttrValues;

/// Registry entries a cacheable query pinned. Releasing the last copy of a
/// response's footprint hands them back.
struct QueryFootprint {
  std::optional<std::string> template_id;
  std::vector<std::string> attributes;
  std::vector<IndexRef> indexes;
};

struct QueryResponse {
  std::vector<Row> rows;
  /// The query allows caching and produced rows.
  bool cacheable = false;
  std::vector<std::string> tables;
  /// Absent for queries without selections.
  std::optional<PredicateSignature> predicate_sig;
  std::optional<BloomSignature> bloom_sig;
  std::uint64_t version = 0;
  std::shared_ptr<const QueryFootprint> footprint;

  /// Canonical encoding of the rows; equal iff the rows are equal.
  [[nodiscard]] std::string result_bytes() const;
};

std::string encode_rows(const std::vector<Row>& rows);

struct UpdateResponse {
  /// False for an update that leaves the tuple as it was.
  bool changed = true;
  std::vector<std::string> tables;
  std::optional<UpdateSignatureP> predicate_sig;
  std::optional<UpdateSignatureB> bloom_sig;
  std::uint64_t version = 0;
};

/// Join templates, referenced attributes and used indexes with reference counts.
class Registry {
 public:
  void acquire(const QueryFootprint& fp, const std::optional<JoinTemplate>& tmpl);
  void release(const QueryFootprint& fp);

  [[nodiscard]] std::vector<JoinTemplate> templates_touching(std::string_view table) const;
  [[nodiscard]] std::vector<JoinTemplate> templates() const;
  [[nodiscard]] std::set<std::string, std::less<>> attributes() const;
  [[nodiscard]] std::vector<IndexRef> indexes() const;
  [[nodiscard]] std::vector<std::string> indexed_attributes(std::string_view table) const;
  [[nodiscard]] bool empty() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::pair<JoinTemplate, std::size_t>> templates_;
  std::map<std::string, std::size_t, std::less<>> attributes_;
  std::map<IndexRef, std::size_t> indexes_;
};

/// In-memory row store executing conjunctive select-project-join queries and
/// single-row DML. Queries share a database-wide read lock, DML takes it
/// exclusively, and signatures are built inside the same critical section.
class Database {
 public:
  explicit Database(BloomConfig cfg = BloomConfig::small_profile());
  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;

  /// Throws InvalidArgument when the table exists.
  Table& create_table(std::string name, std::vector<Column> schema);
  [[nodiscard]] bool has_table(std::string_view name) const;
  /// Throws UnknownTable. Unsynchronized: use at quiescent points or under execute_*.
  [[nodiscard]] const Table& table(std::string_view name) const;
  Table& mutable_table(std::string_view name);
  [[nodiscard]] std::vector<std::string> table_names() const;
  [[nodiscard]] const BloomConfig& bloom_config() const noexcept { return cfg_; }
  [[nodiscard]] const Registry& registry() const noexcept { return *registry_; }

  /// Rows come back sorted. Cacheable responses carry signatures for the requested modes.
  QueryResponse execute_query(const Query& q, Modes modes);
  /// Applies one statement; signatures describe it against the state it replaced.
  UpdateResponse execute_dml(const DmlStatement& u, Modes modes);
  /// Rows only, without signatures or registry effects.
  [[nodiscard]] std::vector<Row> evaluate(const Query& q) const;
  [[nodiscard]] std::uint64_t version() const;

  /// Validates tables, attributes, joins and the projection. Throws UnknownTable/UnknownAttribute.
  void validate(const Query& q) const;

  /// Unsynchronized evaluation used by the signature builders.
  struct Execution {
    std::vector<Row> rows;
    std::vector<AccessedKeys> accessed;
    std::vector<IndexRef> indexes_used;
  };
  [[nodiscard]] Execution run(const Query& q, bool capture) const;

  /// Joint tuples of a template with `table` fixed to `image`, unprojected.
  [[nodiscard]] std::vector<Row> instantiate(const JoinTemplate& tmpl, std::string_view table,
                                             const Tuple& image) const;

 private:
  BloomConfig cfg_;
  mutable std::shared_mutex rw_;
  std::map<std::string, std::unique_ptr<Table>, std::less<>> tables_;
  std::uint64_t version_ = 0;
  std::shared_ptr<Registry> registry_;
};

/// Projected before/after images plus their template instantiations.
/// Reads the state before u is applied; unsynchronized like Database::run.
UpdateSignatureP make_update_signature(const DmlStatement& u, const Database& db);
/// Updated or deleted pks, plus index neighbours of new values on registered indexes.
UpdateSignatureB make_update_signature_b(const DmlStatement& u, const Database& db);

/// Builds tables from the line-oriented fixture format (see docs/fixture-format.md).
/// Throws MalformedFixture with the offending line number.
std::unique_ptr<Database> load_fixture(std::string_view text,
                                       BloomConfig cfg = BloomConfig::small_profile());
void load_fixture_into(Database& db, std::string_view text);
std::unique_ptr<Database> load_fixture_file(const std::string& path,
                                            BloomConfig cfg = BloomConfig::small_profile());

}  // namespace tinval

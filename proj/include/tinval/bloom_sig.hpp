#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tinval/bloom.hpp"
#include "tinval/model.hpp"

namespace tinval {

/// Key inserted into filters for one tuple. Primary keys are only unique per
/// table, so the table name is folded in.
std::uint64_t tuple_key(std::string_view table, std::uint64_t pk);

/// A (table, attribute) index a query scanned through.
struct IndexRef {
  std::string table;
  std::string attribute;

  friend auto operator<=>(const IndexRef&, const IndexRef&) = default;
};

/// Primary keys accessed in one table, in access order.
struct AccessedKeys {
  std::string table;
  std::vector<std::uint64_t> pks;
};

struct BloomSignature {
  std::string query_id;
  EntryId entry_id = 0;
  std::vector<BloomFilter> filters;
  std::vector<IndexRef> index_set;
};

/// Throws EmptyResult when no key was accessed.
BloomSignature make_bloom_signature(const Query& q, const std::vector<AccessedKeys>& accessed,
                                    std::vector<IndexRef> index_set, const BloomConfig& cfg,
                                    EntryId entry_id);

/// Primary keys of the closest tuples at or below and at or above `value` in
/// the attribute's index, with every tie included. `self` is never returned.
/// Throws NoSuchIndex.
std::set<std::uint64_t> neighbors(const Table& table, std::string_view attribute,
                                  const Value& value, std::optional<std::uint64_t> self = {});

struct UpdateSignatureB {
  std::string stmt_id;
  std::vector<BloomFilter> filters;  // one key each
};

/// One single-key filter per distinct tuple key.
UpdateSignatureB make_update_signature_b_from_keys(std::string stmt_id,
                                                   const std::set<std::uint64_t>& keys,
                                                   const BloomConfig& cfg);

/// True iff some update filter is contained in some signature filter.
bool match_b(const BloomSignature& sig, const UpdateSignatureB& upd);

/// What the database sends the cache to register an entry.
struct RegistrationMessage {
  EntryId entry_id = 0;
  std::vector<std::string> tables;
  std::vector<BloomFilter> filters;
  std::vector<IndexRef> index_set;

  [[nodiscard]] std::string encode() const;
  /// Throws InvalidArgument on malformed input and ConfigMismatch on a foreign filter.
  static RegistrationMessage decode(std::string_view bytes, const BloomConfig& cfg);
};

}  // namespace tinval

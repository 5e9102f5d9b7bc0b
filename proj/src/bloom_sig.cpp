#include "tinval/bloom_sig.hpp"

#include <algorithm>

#include "tinval/error.hpp"

namespace tinval {

namespace {

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_str(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

std::uint64_t take(std::string_view& in, int bytes) {
  if (in.size() < static_cast<std::size_t>(bytes)) {
    throw Error(Errc::invalid_argument, "truncated registration message");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  }
  in.remove_prefix(bytes);
  return v;
}
std::string take_str(std::string_view& in) {
  const auto n = take(in, 4);
  if (in.size() < n) throw Error(Errc::invalid_argument, "truncated registration message");
  std::string s(in.substr(0, n));
  in.remove_prefix(n);
  return s;
}

// Collects pks of the nearest non-self group walking from `it` in one direction.
template <typename It>
void nearest_group(It it, It end, std::optional<std::uint64_t> self,
                   std::set<std::uint64_t>& out) {
  for (; it != end; ++it) {
    bool found = false;
    for (auto pk : it->second) {
      if (pk != self) {
        out.insert(pk);
        found = true;
      }
    }
    if (found) return;
  }
}

}  // namespace

std::uint64_t tuple_key(std::string_view table, std::uint64_t pk) {
  return (fnv1a(table) * 0x9e3779b97f4a7c15ULL) ^ pk;
}

BloomSignature make_bloom_signature(const Query& q, const std::vector<AccessedKeys>& accessed,
                                    std::vector<IndexRef> index_set, const BloomConfig& cfg,
                                    EntryId entry_id) {
  std::vector<std::uint64_t> keys;
  for (const auto& a : accessed) {
    for (auto pk : a.pks) keys.push_back(tuple_key(a.table, pk));
  }
  if (keys.empty()) throw Error(Errc::empty_result, "no tuple accessed by " + q.id);
  std::sort(index_set.begin(), index_set.end());
  index_set.erase(std::unique(index_set.begin(), index_set.end()), index_set.end());
  return BloomSignature{q.id, entry_id, segmented_build(keys, cfg), std::move(index_set)};
}

std::set<std::uint64_t> neighbors(const Table& table, std::string_view attribute,
                                  const Value& value, std::optional<std::uint64_t> self) {
  std::set<std::uint64_t> out;
  if (attribute == kPrimaryKey) {
    // Primary keys are unique, so the groups are single rows.
    const auto& rows = table.rows();
    if (!value.is_int() || value.as_int() < 0) {
      // Every pk sorts above a Null or negative value, every pk below a text.
      if (value.is_text() && !rows.empty()) {
        auto it = rows.rbegin();
        if (self && it->first == *self) ++it;
        if (it != rows.rend()) out.insert(it->first);
      } else if (!rows.empty()) {
        auto it = rows.begin();
        if (self && it->first == *self) ++it;
        if (it != rows.end()) out.insert(it->first);
      }
      return out;
    }
    const auto v = static_cast<std::uint64_t>(value.as_int());
    for (auto it = std::make_reverse_iterator(rows.upper_bound(v)); it != rows.rend(); ++it) {
      if (it->first != self) {
        out.insert(it->first);
        break;
      }
    }
    for (auto it = rows.lower_bound(v); it != rows.end(); ++it) {
      if (it->first != self) {
        out.insert(it->first);
        break;
      }
    }
    return out;
  }
  const SecondaryIndex& idx = table.index(attribute);
  nearest_group(std::make_reverse_iterator(idx.upper_bound(value)), idx.rend(), self, out);
  nearest_group(idx.lower_bound(value), idx.end(), self, out);
  return out;
}

UpdateSignatureB make_update_signature_b_from_keys(std::string stmt_id,
                                                   const std::set<std::uint64_t>& keys,
                                                   const BloomConfig& cfg) {
  UpdateSignatureB sig{std::move(stmt_id), {}};
  sig.filters.reserve(keys.size());
  for (auto k : keys) sig.filters.push_back(BloomFilter::of_key(cfg, k));
  return sig;
}

bool match_b(const BloomSignature& sig, const UpdateSignatureB& upd) {
  for (const auto& probe : upd.filters) {
    for (const auto& f : sig.filters) {
      if (f.contains(probe)) return true;
    }
  }
  return false;
}

std::string RegistrationMessage::encode() const {
  std::string out;
  put_u64(out, entry_id);
  put_u32(out, static_cast<std::uint32_t>(tables.size()));
  for (const auto& t : tables) put_str(out, t);
  put_u32(out, static_cast<std::uint32_t>(filters.size()));
  for (const auto& f : filters) f.serialize_to(out);
  put_u32(out, static_cast<std::uint32_t>(index_set.size()));
  for (const auto& i : index_set) {
    put_str(out, i.table);
    put_str(out, i.attribute);
  }
  return out;
}

RegistrationMessage RegistrationMessage::decode(std::string_view in, const BloomConfig& cfg) {
  RegistrationMessage m;
  m.entry_id = take(in, 8);
  for (auto n = take(in, 4); n > 0; --n) m.tables.push_back(take_str(in));
  for (auto n = take(in, 4); n > 0; --n) m.filters.push_back(BloomFilter::deserialize(in, cfg));
  for (auto n = take(in, 4); n > 0; --n) {
    IndexRef r;
    r.table = take_str(in);
    r.attribute = take_str(in);
    m.index_set.push_back(std::move(r));
  }
  if (!in.empty()) throw Error(Errc::invalid_argument, "trailing bytes in registration message");
  return m;
}

}  // namespace tinval

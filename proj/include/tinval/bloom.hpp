#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tinval {

struct BloomConfig {
  std::uint32_t m_bits = 128;
  std::uint32_t k_hashes = 9;
  std::uint64_t seed = 0x5eedULL;
  std::uint32_t keys_per_filter = 10;
  std::uint32_t max_filters_per_query = 64;

  /// Picks k = round(ln2 * m / keys_per_filter).
  static BloomConfig with_optimal_k(std::uint32_t m_bits, std::uint32_t keys_per_filter,
                                    std::uint64_t seed = 0x5eedULL);
  /// 16-byte filters holding 10 keys each.
  static BloomConfig small_profile() { return with_optimal_k(128, 10); }
  /// 512-byte filters holding 200 keys each.
  static BloomConfig large_profile() { return with_optimal_k(4096, 200); }

  /// Throws InvalidArgument unless m is a positive multiple of 64 and k, keys_per_filter >= 1.
  void validate() const;
  /// Hash of the parameters that decide bit positions; filters only compare within one value.
  [[nodiscard]] std::uint64_t fingerprint() const;
  [[nodiscard]] std::size_t words() const { return m_bits / 64; }

  friend bool operator==(const BloomConfig&, const BloomConfig&) = default;
};

double fp_rate(std::uint32_t m_bits, std::uint32_t k_hashes, std::uint64_t n_keys);
/// round(ln2 * m / n), at least 1.
std::uint32_t optimal_k(std::uint32_t m_bits, std::uint64_t n_keys);

class BloomFilter {
 public:
  explicit BloomFilter(const BloomConfig& cfg);
  static BloomFilter of_key(const BloomConfig& cfg, std::uint64_t key);

  void insert(std::uint64_t key);
  [[nodiscard]] bool contains(std::uint64_t key) const;
  /// (this AND needle) == needle. Throws ConfigMismatch across configurations.
  [[nodiscard]] bool contains(const BloomFilter& needle) const;

  [[nodiscard]] std::uint32_t count() const noexcept { return count_; }
  [[nodiscard]] std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  [[nodiscard]] std::span<const std::uint64_t> words() const noexcept { return bits_; }
  [[nodiscard]] std::size_t popcount() const;
  [[nodiscard]] bool empty() const noexcept { return count_ == 0; }

  /// Little-endian layout: fingerprint (u64), count (u32), word count (u32), words.
  [[nodiscard]] std::string serialize() const;
  void serialize_to(std::string& out) const;
  /// Reads one filter from the front of `in` and advances it.
  static BloomFilter deserialize(std::string_view& in, const BloomConfig& cfg);

  friend bool operator==(const BloomFilter&, const BloomFilter&) = default;

 private:
  template <typename Visit>
  void for_each_bit(std::uint64_t key, Visit&& visit) const;

  std::uint64_t fingerprint_;
  std::uint64_t seed_;
  std::uint32_t m_bits_;
  std::uint32_t k_hashes_;
  std::uint32_t count_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// Packs keys into ceil(n / keys_per_filter) filters in arrival order; once
/// max_filters_per_query is reached the remainder shares the last filter.
std::vector<BloomFilter> segmented_build(std::span<const std::uint64_t> keys,
                                         const BloomConfig& cfg);

}  // namespace tinval

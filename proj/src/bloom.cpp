#include "tinval/bloom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "tinval/error.hpp"

namespace tinval {
namespace {

constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint64_t take_le(std::string_view& in, int bytes) {
  if (in.size() < static_cast<std::size_t>(bytes)) {
    throw Error(Errc::invalid_argument, "truncated bloom filter encoding");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  }
  in.remove_prefix(bytes);
  return v;
}

}  // namespace

BloomConfig BloomConfig::with_optimal_k(std::uint32_t m_bits, std::uint32_t keys_per_filter,
                                        std::uint64_t seed) {
  BloomConfig cfg;
  cfg.m_bits = m_bits;
  cfg.keys_per_filter = keys_per_filter;
  cfg.k_hashes = optimal_k(m_bits, keys_per_filter);
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

void BloomConfig::validate() const {
  if (m_bits == 0 || m_bits % 64 != 0) {
    throw Error(Errc::invalid_argument, "m_bits must be a positive multiple of 64");
  }
  if (k_hashes == 0) throw Error(Errc::invalid_argument, "k_hashes must be >= 1");
  if (keys_per_filter == 0) throw Error(Errc::invalid_argument, "keys_per_filter must be >= 1");
  if (max_filters_per_query == 0) {
    throw Error(Errc::invalid_argument, "max_filters_per_query must be >= 1");
  }
}

std::uint64_t BloomConfig::fingerprint() const {
  return mix64(mix64(mix64(m_bits) ^ k_hashes) ^ seed);
}

double fp_rate(std::uint32_t m_bits, std::uint32_t k_hashes, std::uint64_t n_keys) {
  if (m_bits == 0) throw Error(Errc::invalid_argument, "m_bits must be positive");
  const double k = k_hashes;
  return std::pow(1.0 - std::exp(-k * static_cast<double>(n_keys) / m_bits), k);
}

std::uint32_t optimal_k(std::uint32_t m_bits, std::uint64_t n_keys) {
  if (n_keys == 0) n_keys = 1;
  const double k = std::round(std::log(2.0) * m_bits / static_cast<double>(n_keys));
  return static_cast<std::uint32_t>(std::max(1.0, k));
}

BloomFilter::BloomFilter(const BloomConfig& cfg)
    : fingerprint_(cfg.fingerprint()),
      seed_(cfg.seed),
      m_bits_(cfg.m_bits),
      k_hashes_(cfg.k_hashes),
      bits_(cfg.words(), 0) {
  cfg.validate();
}

BloomFilter BloomFilter::of_key(const BloomConfig& cfg, std::uint64_t key) {
  BloomFilter f(cfg);
  f.insert(key);
  return f;
}

// Double hashing g_i = h1 + i * h2, with each g_i passed through the
// finalizer before being mapped to [0, m) by a multiply-high. Taking the
// terms directly (mod m) gives an arithmetic progression on a 128-bit ring,
// which collapses onto few bits whenever h2 is close to a fraction with a
// small denominator and lifts the false-positive rate near 1e-3.
template <typename Visit>
void BloomFilter::for_each_bit(std::uint64_t key, Visit&& visit) const {
  const std::uint64_t h1 = mix64(key ^ seed_);
  const std::uint64_t h2 = mix64(key + 0x9e3779b97f4a7c15ULL * (seed_ | 1)) | 1;
  std::uint64_t g = h1;
  for (std::uint32_t i = 0; i < k_hashes_; ++i, g += h2) {
    const std::uint64_t r = mix64(g);
    const std::uint64_t bit = ((r >> 32) * m_bits_) >> 32;
    if (!visit(bit)) return;
  }
}

void BloomFilter::insert(std::uint64_t key) {
  for_each_bit(key, [&](std::uint64_t bit) {
    bits_[bit >> 6] |= 1ULL << (bit & 63);
    return true;
  });
  ++count_;
}

bool BloomFilter::contains(std::uint64_t key) const {
  bool all = true;
  for_each_bit(key, [&](std::uint64_t bit) {
    all = (bits_[bit >> 6] & (1ULL << (bit & 63))) != 0;
    return all;
  });
  return all;
}

bool BloomFilter::contains(const BloomFilter& needle) const {
  if (needle.fingerprint_ != fingerprint_) {
    throw Error(Errc::config_mismatch, "bloom filters built with different configurations");
  }
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if ((bits_[i] & needle.bits_[i]) != needle.bits_[i]) return false;
  }
  return true;
}

std::size_t BloomFilter::popcount() const {
  std::size_t n = 0;
  for (auto w : bits_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::string BloomFilter::serialize() const {
  std::string out;
  serialize_to(out);
  return out;
}

void BloomFilter::serialize_to(std::string& out) const {
  put_u64(out, fingerprint_);
  put_u32(out, count_);
  put_u32(out, static_cast<std::uint32_t>(bits_.size()));
  for (auto w : bits_) put_u64(out, w);
}

BloomFilter BloomFilter::deserialize(std::string_view& in, const BloomConfig& cfg) {
  BloomFilter f(cfg);
  const auto fp = take_le(in, 8);
  if (fp != f.fingerprint_) {
    throw Error(Errc::config_mismatch, "encoded filter belongs to another configuration");
  }
  f.count_ = static_cast<std::uint32_t>(take_le(in, 4));
  const auto words = take_le(in, 4);
  if (words != f.bits_.size()) throw Error(Errc::invalid_argument, "filter width mismatch");
  for (auto& w : f.bits_) w = take_le(in, 8);
  return f;
}

std::vector<BloomFilter> segmented_build(std::span<const std::uint64_t> keys,
                                         const BloomConfig& cfg) {
  cfg.validate();
  std::vector<BloomFilter> out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const bool open_new = i % cfg.keys_per_filter == 0 && out.size() < cfg.max_filters_per_query;
    if (open_new) out.emplace_back(cfg);
    out.back().insert(keys[i]);
  }
  return out;
}

}  // namespace tinval

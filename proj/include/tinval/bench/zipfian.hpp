#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace tinval::bench {

/// Zipfian ranks in [0, items) using Gray's rejection-free method; rank 0 is
/// the most popular. Requires 0 < theta < 1.
class ZipfianGenerator {
 public:
  ZipfianGenerator(std::uint64_t items, double theta);

  std::uint64_t next(std::mt19937_64& rng) const;
  /// Rank for a uniform draw u in [0, 1).
  [[nodiscard]] std::uint64_t at(double u) const;
  /// Exact probability of `rank` under the Zipf law the generator targets.
  [[nodiscard]] double probability(std::uint64_t rank) const;

  [[nodiscard]] std::uint64_t items() const noexcept { return items_; }
  [[nodiscard]] double theta() const noexcept { return theta_; }

 private:
  std::uint64_t items_;
  double theta_;
  double zetan_;
  double alpha_;
  double eta_;
  double half_pow_theta_;
};

enum class Distribution { uniform, zipfian };

std::string_view to_string(Distribution d) noexcept;
/// Accepts "uniform" and "zipfian"; throws InvalidArgument.
Distribution parse_distribution(std::string_view name);

/// Draws indexes in [0, items). Zipfian ranks pass through a fixed random
/// permutation so popular items are spread over the key space.
class KeyChooser {
 public:
  KeyChooser(std::uint64_t items, Distribution dist, double theta, std::uint64_t seed);

  std::uint64_t next(std::mt19937_64& rng) const;
  /// Index for a uniform draw u in [0, 1).
  [[nodiscard]] std::uint64_t at(double u) const;
  [[nodiscard]] std::uint64_t items() const noexcept { return items_; }

 private:
  std::uint64_t items_;
  Distribution dist_;
  std::vector<ZipfianGenerator> zipf_;  // empty for uniform
  std::vector<std::uint64_t> permutation_;
};

}  // namespace tinval::bench

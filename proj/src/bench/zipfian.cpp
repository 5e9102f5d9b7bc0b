#include "tinval/bench/zipfian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tinval/error.hpp"

namespace tinval::bench {

namespace {

double zeta(std::uint64_t n, double theta) {
  double sum = 0;
  for (std::uint64_t i = 1; i <= n; ++i) sum += 1.0 / std::pow(static_cast<double>(i), theta);
  return sum;
}

}  // namespace

ZipfianGenerator::ZipfianGenerator(std::uint64_t items, double theta)
    : items_(items), theta_(theta) {
  if (items == 0) throw Error(Errc::invalid_argument, "zipfian needs at least one item");
  if (!(theta > 0) || !(theta < 1)) {
    throw Error(Errc::invalid_argument, "zipfian theta must lie in (0, 1)");
  }
  zetan_ = zeta(items, theta);
  alpha_ = 1.0 / (1.0 - theta);
  const double n = static_cast<double>(items);
  eta_ = items < 2 ? 0.0 : (1.0 - std::pow(2.0 / n, 1.0 - theta)) / (1.0 - zeta(2, theta) / zetan_);
  half_pow_theta_ = std::pow(0.5, theta);
}

std::uint64_t ZipfianGenerator::next(std::mt19937_64& rng) const {
  return at(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
}

std::uint64_t ZipfianGenerator::at(double u) const {
  const double uz = u * zetan_;
  if (uz < 1.0 || items_ == 1) return 0;
  if (uz < 1.0 + half_pow_theta_) return 1;
  const auto r = static_cast<std::uint64_t>(static_cast<double>(items_) *
                                            std::pow(eta_ * u - eta_ + 1.0, alpha_));
  return std::min(r, items_ - 1);
}

double ZipfianGenerator::probability(std::uint64_t rank) const {
  if (rank >= items_) return 0.0;
  return 1.0 / std::pow(static_cast<double>(rank + 1), theta_) / zetan_;
}

std::string_view to_string(Distribution d) noexcept {
  return d == Distribution::uniform ? "uniform" : "zipfian";
}

Distribution parse_distribution(std::string_view name) {
  if (name == "uniform") return Distribution::uniform;
  if (name == "zipfian") return Distribution::zipfian;
  throw Error(Errc::invalid_argument, "unknown distribution '" + std::string(name) + "'");
}

KeyChooser::KeyChooser(std::uint64_t items, Distribution dist, double theta, std::uint64_t seed)
    : items_(items), dist_(dist) {
  if (items == 0) throw Error(Errc::invalid_argument, "key chooser needs at least one item");
  if (dist == Distribution::zipfian) {
    zipf_.emplace_back(items, theta);
    permutation_.resize(items);
    std::iota(permutation_.begin(), permutation_.end(), 0);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::shuffle(permutation_.begin(), permutation_.end(), rng);
  }
}

std::uint64_t KeyChooser::next(std::mt19937_64& rng) const {
  if (dist_ == Distribution::uniform) {
    return std::uniform_int_distribution<std::uint64_t>(0, items_ - 1)(rng);
  }
  return permutation_[zipf_.front().next(rng)];
}

std::uint64_t KeyChooser::at(double u) const {
  if (dist_ == Distribution::uniform) {
    return std::min(static_cast<std::uint64_t>(u * static_cast<double>(items_)), items_ - 1);
  }
  return permutation_[zipf_.front().at(u)];
}

}  // namespace tinval::bench

#pragma once

#include <cstdint>
#include <string_view>

#include "tinval/model.hpp"

namespace tinval::bench::ycsb {

inline constexpr std::string_view kTable = "usertable";
inline constexpr std::string_view kField = "field0";

Query point_read(std::uint64_t pk);
/// Rows with pk in [first, first + length).
Query range_scan(std::uint64_t first, std::uint64_t length);
DmlStatement update(std::uint64_t pk, std::int64_t value);

}  // namespace tinval::bench::ycsb

#pragma once

#include <cstdint>
#include <vector>

#include "tinval/model.hpp"

namespace tinval::bench::tpcc {

/// Orders examined by a stock-level transaction.
inline constexpr std::int64_t kStockLevelWindow = 20;

/// The district row, whose next_o_id bounds the stock-level window.
Query district_read(std::int64_t district);
/// Order lines of the district's last orders joined with stock below `threshold`.
Query stock_level(std::int64_t district, std::int64_t next_o_id, std::int64_t threshold);

/// Statements of one new-order: bump the district's next_o_id, add one order
/// line per item, then take `line_quantity` from each item's stock (refilling
/// by 91 when it would drop under 10).
struct NewOrderInput {
  std::int64_t district = 1;
  std::int64_t o_id = 0;
  std::uint64_t first_line_pk = 0;
  std::vector<std::uint64_t> items;
  std::vector<std::int64_t> stock_quantities;  // current quantity per item
  std::int64_t line_quantity = 5;
};
std::vector<DmlStatement> new_order(const NewOrderInput& in);

}  // namespace tinval::bench::tpcc

#pragma once

#include <stdexcept>
#include <string>

namespace tinval {

enum class Errc {
  invalid_argument,
  no_predicates,
  invalid_interval,
  config_mismatch,
  unknown_table,
  unknown_attribute,
  missing_tuple,
  duplicate_pk,
  no_such_index,
  empty_result,
  division_by_zero,
  malformed_fixture,
  io_error,
};

const char* to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tinval

#include "tinval/error.hpp"

namespace tinval {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::no_predicates: return "NoPredicates";
    case Errc::invalid_interval: return "InvalidInterval";
    case Errc::config_mismatch: return "ConfigMismatch";
    case Errc::unknown_table: return "UnknownTable";
    case Errc::unknown_attribute: return "UnknownAttribute";
    case Errc::missing_tuple: return "MissingTuple";
    case Errc::duplicate_pk: return "DuplicatePk";
    case Errc::no_such_index: return "NoSuchIndex";
    case Errc::empty_result: return "EmptyResult";
    case Errc::division_by_zero: return "DivisionByZero";
    case Errc::malformed_fixture: return "MalformedFixture";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace tinval

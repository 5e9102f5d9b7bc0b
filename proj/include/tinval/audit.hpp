#pragma once

#include <string>
#include <vector>

namespace tinval {

/// Outcome of a structural self-check. Problems are human-readable.
struct AuditReport {
  std::vector<std::string> problems;

  [[nodiscard]] bool ok() const noexcept { return problems.empty(); }
  void fail(std::string what) { problems.push_back(std::move(what)); }
  void merge(const AuditReport& other);
  [[nodiscard]] std::string summary() const;
};

}  // namespace tinval

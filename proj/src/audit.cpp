#include "tinval/audit.hpp"

namespace tinval {

void AuditReport::merge(const AuditReport& other) {
  problems.insert(problems.end(), other.problems.begin(), other.problems.end());
}

std::string AuditReport::summary() const {
  if (problems.empty()) return "ok";
  std::string out = std::to_string(problems.size()) + " problem(s): " + problems.front();
  if (problems.size() > 1) out += " ...";
  return out;
}

}  // namespace tinval

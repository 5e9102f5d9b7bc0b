#include "tinval/cost_model.hpp"

#include <initializer_list>

#include "tinval/error.hpp"

namespace tinval {

StrategyCosts cost_model(const CostParams& c) {
  for (double v : {c.capacity, c.updates_per_time, c.outdated_per_update, c.c_q, c.c_u,
                   c.c_q_prime, c.c_u_prime, c.p, c.p_prime, c.ttl}) {
    if (!(v >= 0)) throw Error(Errc::invalid_argument, "cost parameters must be non-negative");
  }
  if (c.p > 1 || c.p_prime > 1) throw Error(Errc::invalid_argument, "rates must lie in [0, 1]");
  if (c.ttl * c.updates_per_time == 0) {
    throw Error(Errc::division_by_zero, "TTL cost needs t > 0 and u > 0");
  }
  const double n = c.outdated_per_update;
  const double rest = c.capacity - n;
  StrategyCosts out;
  out.transparent = (n + rest * c.p_prime) * c.c_q_prime + c.c_u_prime;
  out.coarse = (n + rest * c.p) * c.c_q + c.c_u;
  out.ttl = c.capacity * c.c_q / (c.ttl * c.updates_per_time) + c.c_u;
  return out;
}

}  // namespace tinval

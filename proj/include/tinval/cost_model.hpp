#pragma once

namespace tinval {

/// Inputs of the per-update cost comparison. Primed costs and p' belong to
/// the transparent strategy.
struct CostParams {
  double capacity = 0;        // C, entries
  double updates_per_time = 0;  // u
  double outdated_per_update = 0;  // n
  double c_q = 0;
  double c_u = 0;
  double c_q_prime = 0;
  double c_u_prime = 0;
  double p = 0;        // coarse false-invalidation rate
  double p_prime = 0;  // transparent false-invalidation rate
  double ttl = 0;      // t
};

struct StrategyCosts {
  double transparent = 0;
  double coarse = 0;
  double ttl = 0;

  friend bool operator==(const StrategyCosts&, const StrategyCosts&) = default;
};

/// Cost of handling one update under each strategy, counting the update and
/// the refills it causes. Throws InvalidArgument for negative inputs or rates
/// outside [0, 1], and DivisionByZero when t * u == 0.
StrategyCosts cost_model(const CostParams& params);

}  // namespace tinval

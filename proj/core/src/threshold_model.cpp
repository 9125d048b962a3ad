#include "autoclean/threshold_model.hpp"

#include <cmath>
#include <string>

#include "autoclean/errors.hpp"

namespace autoclean {

namespace {

void check_within(double tau, const Bounds& b, const std::string& what) {
  if (!std::isfinite(tau)) throw ContractError(what + " threshold is not finite");
  if (tau < b.first || tau > b.second) {
    throw ContractError(what + " threshold " + std::to_string(tau) + " lies outside [" + std::to_string(b.first) +
                        ", " + std::to_string(b.second) + "]");
  }
}

}  // namespace

void ThresholdModel::validate() const {
  if (global_tau && global_bounds) check_within(*global_tau, *global_bounds, "global");
  if (sensor_taus && sensor_bounds) {
    if (sensor_taus->size() != sensor_bounds->size()) throw ContractError("sensor thresholds and bounds differ in length");
    for (std::size_t j = 0; j < sensor_taus->size(); ++j) {
      check_within((*sensor_taus)[j], (*sensor_bounds)[j], "sensor " + std::to_string(j));
    }
  }
  if (rho_star && *rho_star < 0) throw ContractError("rho_star must be nonnegative");
  if (kappa_star && *kappa_star < 1) throw ContractError("kappa_star must be positive");
  if (rho_star && kappa_star && !(*rho_star < *kappa_star)) throw ContractError("rho_star must be less than kappa_star");
}

}  // namespace autoclean

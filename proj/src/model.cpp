#include "ccfm/model.hpp"

#include <string>

namespace ccfm {

void SystemParams::validate() const {
  if (!(V0 > 0.0)) throw ConfigError("system.V0 must be > 0");
  if (!(a > 0.0)) throw ConfigError("system.a must be > 0");
  if (!(omega > 0.0)) throw ConfigError("system.omega must be > 0");
  if (!(epsilon >= 0.0)) throw ConfigError("system.epsilon must be >= 0");
}

double excursion_alpha(const SystemParams& params) {
  params.validate();
  return params.epsilon / (params.omega * params.omega);
}

DerivedClassical derive_classical(const SystemParams& params) {
  return {excursion_alpha(params), params.period()};
}

DriveTerms drive_terms(double t, const SystemParams& params) {
  const double s = std::sin(params.omega * t);
  const double amplitude = params.epsilon / params.omega;
  return {-amplitude * s, 0.5 * amplitude * amplitude * s * s};
}

}  // namespace ccfm

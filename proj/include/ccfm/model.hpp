#pragma once

#include <cmath>

#include "ccfm/types.hpp"

namespace ccfm {

/// Driven inverted-Gaussian well in the radiation gauge (atomic units).
///
///   H = (p - (eps/omega) sin(omega t))^2 / 2 - V0 exp(-(x/a)^2)
struct SystemParams {
  double V0 = 0.63;       // well depth
  double a = 2.65;        // well width
  double omega = 0.0925;  // drive angular frequency
  double epsilon = 0.0;   // drive field strength

  void validate() const;

  double period() const { return 2.0 * kPi / omega; }
  /// Harmonic frequency of the well bottom, sqrt(V''(0)) = sqrt(2 V0) / a.
  double well_frequency() const { return std::sqrt(2.0 * V0) / a; }
};

struct DerivedClassical {
  double alpha = 0.0;   // free-electron excursion eps / omega^2
  double period = 0.0;  // 2 pi / omega
};

DerivedClassical derive_classical(const SystemParams& params);

double excursion_alpha(const SystemParams& params);

/// Well potential continued to complex coordinates: -V0 exp(-(z/a)^2).
template <typename Scalar>
Scalar potential_value(const Scalar& z, const SystemParams& params) {
  using std::exp;
  const Scalar u = z / params.a;
  return Scalar(-params.V0) * exp(-(u * u));
}

/// dV/dx for real x.
inline double potential_gradient(double x, const SystemParams& params) {
  const double u = x / params.a;
  return 2.0 * params.V0 * x / (params.a * params.a) * std::exp(-u * u);
}

struct DriveTerms {
  double momentum_coupling = 0.0;  // -(eps/omega) sin(omega t), multiplies p
  double scalar_offset = 0.0;      // (eps^2 / 2 omega^2) sin^2(omega t)
};

DriveTerms drive_terms(double t, const SystemParams& params);

}  // namespace ccfm

#pragma once

#include <optional>

#include "ccfm/types.hpp"

namespace ccfm {

enum class ScalingMode { CCS, ECCS };

/// Complex coordinate scaling. CCS rotates every coordinate, x -> x e^{i theta};
/// ECCS leaves |x| < xs unscaled and blends smoothly (rate lambda) into the
/// rotated exterior.
struct ScalingParams {
  ScalingMode mode = ScalingMode::ECCS;
  double theta = 0.3;
  double xs = 25.0;
  double lambda = 5.0;

  void validate() const;
};

const char* to_string(ScalingMode mode);
ScalingMode scaling_mode_from_string(const std::string& name);

/// F(x) and its first two derivatives with respect to x.
struct ScalingProfile {
  Complex F;
  Complex f;    // dF/dx
  Complex df;   // d^2F/dx^2
  Complex d2f;  // d^3F/dx^3
};

/// Smooth exterior map
///   F(x) = x + (e^{i theta} - 1) [x + ln(cosh(l(x - xs)) / cosh(l(x + xs))) / (2 l)]
/// with derivatives differentiated by hand. For CCS this degenerates to x e^{i theta}.
ScalingProfile eccs_map(double x, const ScalingParams& scaling);

/// The same map continued to complex arguments.
ScalingProfile eccs_map(Complex z, const ScalingParams& scaling);

/// Solves F(z) = y by Newton iteration; empty if it fails to converge.
std::optional<Complex> eccs_inverse(Complex y, const ScalingParams& scaling);

/// Coordinate factors of the absorbing potential
///   V_CAP = V0(x) + V1(x) d/dx + V2(x) d^2/dx^2.
struct CapCoefficients {
  Complex v0;
  Complex v1;
  Complex v2;
};

CapCoefficients vcap_coefficients(double x, const ScalingParams& scaling);
CapCoefficients vcap_coefficients(const ScalingProfile& profile);

}  // namespace ccfm

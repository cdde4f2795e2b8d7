#include "ccfm/scaling.hpp"

#include <cmath>

namespace ccfm {

namespace {

// ln cosh(u) without overflow.
double log_cosh(double u) {
  const double a = std::abs(u);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

double sech2(double u) {
  const double a = std::abs(u);
  if (a > 350.0) return 0.0;
  const double e = std::exp(-2.0 * a);
  return 4.0 * e / ((1.0 + e) * (1.0 + e));
}

Complex log_cosh(Complex w) {
  const double s = w.real() < 0.0 ? -1.0 : 1.0;
  return s * w + std::log(1.0 + std::exp(-2.0 * s * w)) - std::log(2.0);
}

Complex tanh_stable(Complex w) {
  const double s = w.real() < 0.0 ? -1.0 : 1.0;
  const Complex e = std::exp(-2.0 * s * w);
  return s * (1.0 - e) / (1.0 + e);
}

}  // namespace

void ScalingParams::validate() const {
  if (!(theta >= 0.0 && theta < kPi / 4.0))
    throw ConfigError("scaling.theta must satisfy 0 <= theta < pi/4");
  if (!(xs >= 0.0)) throw ConfigError("scaling.xs must be >= 0");
  if (!(lambda > 0.0)) throw ConfigError("scaling.lambda must be > 0");
}

const char* to_string(ScalingMode mode) {
  return mode == ScalingMode::CCS ? "CCS" : "ECCS";
}

ScalingMode scaling_mode_from_string(const std::string& name) {
  if (name == "CCS") return ScalingMode::CCS;
  if (name == "ECCS") return ScalingMode::ECCS;
  throw ConfigError("unknown scaling mode '" + name + "' (expected CCS or ECCS)");
}

ScalingProfile eccs_map(double x, const ScalingParams& scaling) {
  const Complex rot = std::polar(1.0, scaling.theta);
  if (scaling.mode == ScalingMode::CCS) return {x * rot, rot, 0.0, 0.0};

  const Complex g = rot - 1.0;
  const double l = scaling.lambda;
  const double u = l * (x - scaling.xs);
  const double v = l * (x + scaling.xs);
  const double tu = std::tanh(u);
  const double tv = std::tanh(v);
  const double su = sech2(u);
  const double sv = sech2(v);

  ScalingProfile out;
  out.F = x + g * (x + (log_cosh(u) - log_cosh(v)) / (2.0 * l));
  out.f = 1.0 + g * (1.0 + 0.5 * (tu - tv));
  out.df = g * (0.5 * l) * (su - sv);
  out.d2f = -g * (l * l) * (su * tu - sv * tv);
  return out;
}

ScalingProfile eccs_map(Complex z, const ScalingParams& scaling) {
  const Complex rot = std::polar(1.0, scaling.theta);
  if (scaling.mode == ScalingMode::CCS) return {z * rot, rot, 0.0, 0.0};
  const Complex g = rot - 1.0;
  const double l = scaling.lambda;
  const Complex u = l * (z - scaling.xs);
  const Complex v = l * (z + scaling.xs);
  const Complex tu = tanh_stable(u);
  const Complex tv = tanh_stable(v);
  const Complex su = 1.0 - tu * tu;
  const Complex sv = 1.0 - tv * tv;
  ScalingProfile out;
  out.F = z + g * (z + (log_cosh(u) - log_cosh(v)) / (2.0 * l));
  out.f = 1.0 + g * (1.0 + 0.5 * (tu - tv));
  out.df = g * (0.5 * l) * (su - sv);
  out.d2f = -g * (l * l) * (su * tu - sv * tv);
  return out;
}

std::optional<Complex> eccs_inverse(Complex y, const ScalingParams& scaling) {
  const Complex rot = std::polar(1.0, scaling.theta);
  if (scaling.mode == ScalingMode::CCS) return y / rot;
  // Start from the piecewise-linear limit of the map.
  const double edge = y.real() < 0.0 ? -scaling.xs : scaling.xs;
  Complex z = std::abs(y.real()) <= scaling.xs ? y : edge + (y - edge) / rot;
  for (int it = 0; it < 60; ++it) {
    const ScalingProfile p = eccs_map(z, scaling);
    const Complex step = (p.F - y) / p.f;
    z -= step;
    if (std::abs(step) <= 1e-13 * (1.0 + std::abs(z))) return z;
  }
  return std::nullopt;
}

CapCoefficients vcap_coefficients(const ScalingProfile& p) {
  const Complex inv = 1.0 / p.f;
  const Complex inv2 = inv * inv;
  const Complex inv3 = inv2 * inv;
  return {0.25 * inv3 * p.d2f - 0.625 * inv2 * inv2 * p.df * p.df,
          inv3 * p.df,
          0.5 * (1.0 - inv2)};
}

CapCoefficients vcap_coefficients(double x, const ScalingParams& scaling) {
  return vcap_coefficients(eccs_map(x, scaling));
}

}  // namespace ccfm

#include "ccfm/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace ccfm {

QuadratureRule gauss_legendre(int order) {
  if (order < 1) throw ConfigError("Gauss-Legendre order must be >= 1");
  if (order == 1) return {VectorXd::Zero(1), VectorXd::Constant(1, 2.0)};
  QuadratureRule rule{VectorXd(order), VectorXd(order)};
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.nodes[order - 1 - i] = x;
    rule.weights[order - 1 - i] = w;
  }
  return rule;
}

QuadratureRule composite_gauss_legendre(double lo, double hi, int panels, int order) {
  if (!(hi > lo)) throw ConfigError("composite rule needs hi > lo");
  if (panels < 1) throw ConfigError("composite rule needs at least one panel");
  const QuadratureRule base = gauss_legendre(order);
  QuadratureRule rule{VectorXd(panels * order), VectorXd(panels * order)};
  const double width = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * width;
    for (int k = 0; k < order; ++k) {
      rule.nodes[p * order + k] = mid + 0.5 * width * base.nodes[k];
      rule.weights[p * order + k] = 0.5 * width * base.weights[k];
    }
  }
  return rule;
}

void QuadratureSpec::validate() const {
  if (order < 2) throw ConfigError("quadrature.order must be >= 2");
  if (!(tolerance > 0.0)) throw ConfigError("quadrature.tolerance must be > 0");
}

QuadratureRule resolving_rule(double lo, double hi, double feature_length,
                              double max_wavenumber, const QuadratureSpec& spec,
                              int refinement) {
  double width = spec.panel_width;
  if (width <= 0.0) {
    width = 2.0 * feature_length;
    if (max_wavenumber > 0.0) width = std::min(width, 4.0 * kPi / max_wavenumber);
  }
  const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / width))) * refinement;
  return composite_gauss_legendre(lo, hi, panels, spec.order);
}

}  // namespace ccfm

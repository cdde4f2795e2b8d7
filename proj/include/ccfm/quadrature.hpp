#pragma once

#include "ccfm/types.hpp"

namespace ccfm {

struct QuadratureRule {
  VectorXd nodes;
  VectorXd weights;

  Eigen::Index size() const { return nodes.size(); }
};

/// Gauss-Legendre rule with `order` nodes on [-1, 1].
QuadratureRule gauss_legendre(int order);

/// Composite Gauss-Legendre over [lo, hi] split into `panels` equal panels.
QuadratureRule composite_gauss_legendre(double lo, double hi, int panels, int order);

/// Controls the composite rule used for matrix elements and overlaps.
struct QuadratureSpec {
  int order = 16;            // nodes per panel
  double panel_width = 0.0;  // <= 0 selects a width from the integrand scales
  double tolerance = 1e-9;   // max element change allowed under node doubling
  bool check_convergence = true;

  void validate() const;
};

/// Composite rule over [lo, hi] whose panels resolve both the transition
/// length `feature_length` and oscillations up to `max_wavenumber`.
QuadratureRule resolving_rule(double lo, double hi, double feature_length,
                              double max_wavenumber, const QuadratureSpec& spec,
                              int refinement = 1);

}  // namespace ccfm

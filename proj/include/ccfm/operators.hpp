#pragma once

#include <optional>
#include <string>

#include "ccfm/model.hpp"
#include "ccfm/quadrature.hpp"
#include "ccfm/scaling.hpp"

namespace ccfm {

/// Particle-in-a-box sine basis on [-L/2, L/2]:
///   <x|n> = sqrt(2/L) sin(n pi x / L - n pi / 2),  n = 1..N.
struct BasisParams {
  double L = 200.0;
  int N = 400;

  void validate() const;
  double wavenumber(int n) const { return n * kPi / L; }
};

/// Basis amplitude at a real point inside the box. Throws ConfigError outside.
double basis_value(int n, double x, const BasisParams& basis);

/// Analytic continuation of the basis function to complex coordinates.
Complex basis_value(int n, Complex z, const BasisParams& basis);

/// Basis functions (or their `derivative`-th x-derivative, 0..2) sampled at
/// `points`; row j holds every basis function at points[j].
MatrixXd basis_matrix(const VectorXd& points, const BasisParams& basis, int derivative = 0);

/// Kinetic element <m| p^2 e^{-2i theta} / 2 |n>; diagonal in the sine basis.
Complex kinetic_element_ccs(int m, int n, double theta, const BasisParams& basis);

/// Closed-form Gaussian element <m| -V0 exp(-(x e^{i theta}/a)^2) |n>
/// = V(m+n) - V(|m-n|), valid while the box is large against the well.
Complex potential_element_ccs(int m, int n, double theta, const SystemParams& params,
                              const BasisParams& basis);

/// Unscaled <m| -i d/dx |n> in the sine basis.
Complex box_momentum_element(int m, int n, const BasisParams& basis);

/// P(k) = int sin(k pi x / L - k pi / 2) / f(x) dx over the box.
Complex momentum_integral(int k, const BasisParams& basis, const ScalingParams& scaling,
                          const QuadratureSpec& quad);

/// Scaled momentum element. CCS: e^{-i theta} <m|p|n>. ECCS: -i pi n / L^2 [P(m+n) + P(m-n)].
Complex momentum_matrix_basis(int m, int n, const BasisParams& basis,
                              const ScalingParams& scaling, const QuadratureSpec& quad);

/// Interior Gram matrix int_{-s}^{s} <m|x><x|n> dx, closed form.
MatrixXd interior_gram(const BasisParams& basis, double s);

struct AssemblyDiagnostics {
  double quadrature_change = 0.0;  // max element change under node doubling
  double asymmetry = 0.0;          // max |h0 - h0^T| before symmetrisation
  int quadrature_nodes = 0;
  bool potential_by_quadrature = false;
};

/// Scaled static Hamiltonian and momentum in the sine basis.
struct ScaledOperatorSet {
  MatrixXc h0;
  MatrixXc p;
  ScalingParams scaling;
  BasisParams basis;
  AssemblyDiagnostics diagnostics;
};

/// CCS: analytic kinetic + analytic scaled potential.
/// ECCS: analytic unscaled kinetic + potential + quadrature V_CAP elements
///   int phi_m [V0 + V1 d/dx + V2 d^2/dx^2] phi_n dx.
/// When the well is not negligible where the map departs from the identity
/// (small xs), the potential is integrated as V(F(x)) instead.
/// Throws NumericalError if an element moves by more than quad.tolerance when
/// the node count doubles.
MatrixXc assemble_h0(const SystemParams& params, const BasisParams& basis,
                     const ScalingParams& scaling, const QuadratureSpec& quad,
                     AssemblyDiagnostics* diagnostics = nullptr);

/// Scaled momentum matrix in the sine basis.
MatrixXc momentum_matrix(const BasisParams& basis, const ScalingParams& scaling,
                         const QuadratureSpec& quad, AssemblyDiagnostics* diagnostics = nullptr);

ScaledOperatorSet build_operators(const SystemParams& params, const BasisParams& basis,
                                  const ScalingParams& scaling, const QuadratureSpec& quad);

/// Warning text if L is not comfortably larger than 2a / sqrt(cos 2 theta).
/// The width scale of the box-size condition is taken to be the well width a.
std::optional<std::string> box_validity_warning(const SystemParams& params,
                                                const BasisParams& basis,
                                                const ScalingParams& scaling);

}  // namespace ccfm

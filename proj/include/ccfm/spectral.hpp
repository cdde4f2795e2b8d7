#pragma once

#include <string>
#include <vector>

#include "ccfm/operators.hpp"

namespace ccfm {

/// Eigenpairs of a complex-symmetric matrix. Column i of `coeffs` is c-normalised,
/// sum_n c_ni^2 = 1, so the left eigenvector is its plain transpose.
struct SpectralDecomposition {
  VectorXc energies;
  MatrixXc coeffs;
  /// |sum c^2| / sum |c|^2 per column before normalisation; ~0 marks a
  /// self-orthogonal (near-defective) vector, which is left 2-normalised.
  VectorXd c_norm_quality;
  std::vector<bool> self_orthogonal;
  /// +1 / -1 for states of definite parity, 0 when unknown.
  std::vector<int> parity;
  double max_residual = 0.0;
  std::string provenance;

  Eigen::Index size() const { return energies.size(); }
};

struct EigenOptions {
  double symmetry_tolerance = 1e-9;       // relative to max |entry|
  double self_orthogonal_threshold = 1e-6;
};

/// Dense eigendecomposition followed by c-normalisation. Eigenvalues ascend by
/// Re E, ties broken by Im E; each column's largest component is made positive real
/// before c-normalisation fixes the remaining sign.
SpectralDecomposition diagonalize_complex_symmetric(const MatrixXc& matrix,
                                                    const EigenOptions& options = {});

/// max_{i != j} |sum_n c_ni c_nj| over pairs not flagged self-orthogonal.
double biorthogonality_defect(const SpectralDecomposition& decomp);

enum class StateKind { Bound, RotatedContinuum, PartiallyScaled };

const char* to_string(StateKind kind);

struct StaticStateLabel {
  StateKind kind = StateKind::RotatedContinuum;
  double rotation_angle = 0.0;  // arg E
};

struct LabelThresholds {
  double bound_imag = 1e-4;
  double partial_factor = 1.5;  // partially scaled if |arg E| < factor * theta
};

struct StaticSpectrum {
  ScaledOperatorSet operators;
  SpectralDecomposition decomp;
  std::vector<StaticStateLabel> labels;
  double continuum_angle = 0.0;  // fitted arg E of the positive-energy ray
};

std::vector<StaticStateLabel> label_states(const VectorXc& energies, const ScalingParams& scaling,
                                           const LabelThresholds& thresholds = {});

/// Least-squares angle of the ray through the origin fitted to non-bound
/// states with Re E > 0.
double fit_continuum_angle(const VectorXc& energies, const std::vector<StaticStateLabel>& labels);

/// Diagonalises h0 one parity block at a time (the Hamiltonian never couples
/// odd and even sine indices) and labels the states.
StaticSpectrum static_spectrum(ScaledOperatorSet operators, const LabelThresholds& thresholds = {});

StaticSpectrum static_spectrum(const SystemParams& params, const BasisParams& basis,
                               const ScalingParams& scaling, const QuadratureSpec& quad = {},
                               const LabelThresholds& thresholds = {});

struct WavefunctionSample {
  Complex value;
  bool saturated = false;
};

/// sum_n c_n <x|n> at a real point inside the box.
Complex state_wavefunction(const VectorXc& coeffs, const BasisParams& basis, double x);

/// Same sum continued to complex z; |value| above `cap` (or non-finite) is
/// reported as saturated with value set to `cap`.
WavefunctionSample state_wavefunction(const VectorXc& coeffs, const BasisParams& basis, Complex z,
                                      double cap = 1e6);

Complex state_wavefunction(const SpectralDecomposition& decomp, const BasisParams& basis,
                           Eigen::Index i, double x);

/// Fraction of sum |psi|^2 lying in |x| < s.
double interior_probability(const VectorXc& coeffs, const MatrixXd& interior_gram);

}  // namespace ccfm

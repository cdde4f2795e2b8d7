#pragma once

#include <string>
#include <vector>

#include "ccfm/spectral.hpp"

namespace ccfm {

enum class PropagatorScheme {
  RK4Fixed,   // classical RK4 on the full generator
  LawsonRK4,  // integrating factor: diag(E) exact, classical RK4 on the drive
  LawsonRK6,  // integrating factor with Butcher's sixth-order tableau
  AdaptiveRK  // Dormand-Prince 5(4) with local error control
};

const char* to_string(PropagatorScheme scheme);
PropagatorScheme propagator_scheme_from_string(const std::string& name);

struct PropagatorSpec {
  int steps_per_period = 4096;
  PropagatorScheme scheme = PropagatorScheme::LawsonRK6;
  double tolerance = 1e-10;           // adaptive scheme only
  bool include_scalar_term = true;    // (eps^2 / 2 omega^2) sin^2(omega t) I
  bool use_parity_symmetry = true;    // U(T) = (Pi U(T/2))^2 when parity is exact
  int retained_states = 0;            // <= 0 keeps every eigenstate of h0
  int jobs = 1;

  void validate() const;
};

/// <psi_i| p |psi_j> = sum_mn c_mi c_nj <m|p|n>: plain transposes, no conjugation.
MatrixXc momentum_in_eigenbasis(const MatrixXc& coeffs, const MatrixXc& p_basis);

/// Propagates every unit vector from t0 to t1 under
///   i dPsi/dt = [diag(E) - (eps/omega) sin(omega t) P + (eps^2/2 omega^2) sin^2(omega t)] Psi
/// with `steps` fixed steps (adaptive scheme: `steps` sets the initial step).
/// A parity vector, when exact, lets the coupling be applied block-wise.
MatrixXc propagate(const VectorXc& energies, const MatrixXc& p_eig, const SystemParams& params,
                   const PropagatorSpec& spec, double t0, double t1, int steps,
                   const std::vector<int>& parity = {});

/// One-period evolution matrix. `parity` (+1/-1 per state, empty if unknown)
/// enables the half-period construction when p_eig only couples opposite parities.
MatrixXc propagate_period(const VectorXc& energies, const MatrixXc& p_eig,
                          const SystemParams& params, const PropagatorSpec& spec,
                          const std::vector<int>& parity = {});

/// Global phase exp(-i eps^2 T / (4 omega^2)) contributed by the scalar drive term.
Complex scalar_term_phase(const SystemParams& params);

enum class FloquetKind { Resonance, Continuum, Ambiguous };

const char* to_string(FloquetKind kind);

/// Floquet eigenpairs of U(T). Decay rate Gamma = -2 Im q, so decaying states
/// have Gamma > 0 and |lambda| = exp(-Gamma T / 2); Omega is on (-omega/2, omega/2].
struct FloquetResult {
  MatrixXc U;
  VectorXc lambdas;
  VectorXc quasienergies;  // q = Omega + i Gamma/2 with the sign convention above
  VectorXd omegas;
  VectorXd gammas;
  VectorXd lifetimes;      // tau / T = 1 / (Gamma T); +inf when Gamma <= 0
  MatrixXc dcoeffs;        // column beta: Floquet state in the h0 eigenbasis, unit 2-norm
  std::vector<bool> defective;
  std::vector<FloquetKind> labels;
  VectorXd interior_weight;
  VectorXd spiral_deviation;  // |deviation| / local scatter, NaN when not tested
  double period = 0.0;
  double omega = 0.0;
};

inline constexpr const char* kGammaConvention =
    "Gamma = -2 Im(q); lambda = exp(-i q T); tau = 1/Gamma; Omega in (-omega/2, omega/2]";

/// Diagonalises U (general complex). States sorted by |lambda| descending.
FloquetResult floquet_eigen(const MatrixXc& U, double period, double omega);

/// q = i ln(lambda) / T on the principal branch.
Complex quasienergy_from_lambda(Complex lambda, double period, double omega);
Complex lambda_from_quasienergy(Complex q, double period);

struct ClassifierSpec {
  double spiral_threshold = 3.0;   // deviation in units of local spiral scatter
  double interior_min = 0.5;       // w_min: probability fraction inside |x| < xs
  double interior_radius = 0.0;    // <= 0 uses the scaling xs (or L/8 for CCS)
  int spiral_window = 15;          // neighbours used for the local spiral fit
  double spiral_floor = 0.05;      // |lambda| at or below this is not spiral-tested
};

/// Dual classifier: spiral outliers and interior-localised states. Resonance
/// only when both agree, Ambiguous when exactly one fires.
void classify_resonances(FloquetResult& result, const SpectralDecomposition& decomp,
                         const BasisParams& basis, const ScalingParams& scaling,
                         const ClassifierSpec& spec = {});

std::vector<Eigen::Index> resonance_indices(const FloquetResult& result);

/// Full static -> Floquet pipeline for one field strength.
FloquetResult run_floquet(const StaticSpectrum& spectrum, const SystemParams& params,
                          const PropagatorSpec& propagator, const ClassifierSpec& classifier = {});

/// Floquet state in the box basis: C_retained d.
VectorXc floquet_state_coeffs(const FloquetResult& result, const SpectralDecomposition& decomp,
                              Eigen::Index beta);

}  // namespace ccfm

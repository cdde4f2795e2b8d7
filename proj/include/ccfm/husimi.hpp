#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ccfm/quadrature.hpp"
#include "ccfm/spectral.hpp"

namespace ccfm {

enum class HusimiFrame { AsComputed, RotatedToReal };

const char* to_string(HusimiFrame frame);
HusimiFrame husimi_frame_from_string(const std::string& name);

struct HusimiSpec {
  double sigma = 0.0;  // must be set; default_husimi_spec uses 1/sqrt(well frequency)
  double xmin = -30.0;
  double xmax = 30.0;
  double pmin = -3.0;
  double pmax = 3.0;
  int nx = 121;
  int np = 81;
  HusimiFrame frame = HusimiFrame::AsComputed;
  double saturation_cap = 1e6;
  double envelope_cutoff = 8.0;  // integrate only within this many sigma of x0
  QuadratureSpec quadrature;
  int jobs = 1;

  void validate() const;
};

/// Natural coherent-state width: matches the harmonic ground state of the well bottom.
double default_sigma(const SystemParams& params);

/// Spec with sigma resolved and a window covering the given phase-space points
/// (typically periodic orbits) with 25% margin, never smaller than the ground
/// state's coherent-state footprint.
HusimiSpec default_husimi_spec(const SystemParams& params,
                               const std::vector<std::pair<double, double>>& points = {});

/// Wavefunction on the real axis in the requested frame.
using WavefunctionAccessor = std::function<WavefunctionSample(double)>;

/// Box-basis state sum_n c_n <x|n>. RotatedToReal undoes the scaling map:
/// psi(y) = phi(z) f(z)^{-1/2} with F(z) = y; for CCS z = y e^{-i theta}.
WavefunctionAccessor box_state_accessor(const VectorXc& coeffs, const BasisParams& basis,
                                        const ScalingParams& scaling, HusimiFrame frame,
                                        double saturation_cap = 1e6);

struct PhaseSpaceGrid {
  VectorXd x;       // x0 axis
  VectorXd p;       // p0 axis
  MatrixXd values;  // values(i, j) = G(x[i], p[j])
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> saturation_mask;
  double sigma = 0.0;
  HusimiFrame frame = HusimiFrame::AsComputed;
  double quadrature_change = 0.0;  // relative change under node doubling

  Eigen::Index mask_count() const { return saturation_mask.count(); }
};

/// G(x0, p0) = |(pi sigma^2)^{-1/4} int exp(-(x - x0)^2 / 2 sigma^2 - i p0 x) psi(x) dx|^2
/// over support [lo, hi]. Cells whose envelope touches a saturated sample are masked.
PhaseSpaceGrid husimi_grid(const WavefunctionAccessor& psi, double lo, double hi,
                           const HusimiSpec& spec);

/// Convenience overload for box-basis states.
PhaseSpaceGrid husimi_grid(const VectorXc& coeffs, const BasisParams& basis,
                           const ScalingParams& scaling, const HusimiSpec& spec);

/// Integral of G dx0 dp0 / (2 pi) by the trapezoid rule.
double grid_norm(const PhaseSpaceGrid& grid);

/// Share of grid_norm carried by the outermost ring of cells.
double boundary_mass_fraction(const PhaseSpaceGrid& grid);

struct GridPeak {
  double x;
  double p;
  double value;
};

/// Up to k strict local maxima (unmasked interior cells), largest first,
/// refined to sub-cell position by separable quadratic fits.
std::vector<GridPeak> peak_locations(const PhaseSpaceGrid& grid, int k);

}  // namespace ccfm

#include "ccfm/husimi.hpp"

#include <algorithm>
#include <cmath>

#include "ccfm/parallel.hpp"
#include "ccfm/spectral.hpp"

namespace ccfm {

const char* to_string(HusimiFrame frame) {
  return frame == HusimiFrame::AsComputed ? "AsComputed" : "RotatedToReal";
}

HusimiFrame husimi_frame_from_string(const std::string& name) {
  if (name == "AsComputed") return HusimiFrame::AsComputed;
  if (name == "RotatedToReal") return HusimiFrame::RotatedToReal;
  throw ConfigError("unknown husimi frame '" + name + "' (expected AsComputed or RotatedToReal)");
}

void HusimiSpec::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("husimi.sigma must be > 0");
  if (!(xmax > xmin) || !(pmax > pmin)) throw ConfigError("husimi window must have max > min");
  if (nx < 2 || np < 2) throw ConfigError("husimi.nx and husimi.np must be >= 2");
  if (!(saturation_cap > 0.0)) throw ConfigError("husimi.saturation_cap must be > 0");
  if (!(envelope_cutoff > 0.0)) throw ConfigError("husimi.envelope_cutoff must be > 0");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  quadrature.validate();
}

double default_sigma(const SystemParams& params) {
  return 1.0 / std::sqrt(params.well_frequency());
}

HusimiSpec default_husimi_spec(const SystemParams& params,
                               const std::vector<std::pair<double, double>>& points) {
  HusimiSpec spec;
  spec.sigma = default_sigma(params);
  double xr = 4.0 * spec.sigma;
  double pr = 4.0 / spec.sigma;
  for (const auto& [x, p] : points) {
    xr = std::max(xr, 1.25 * std::abs(x));
    pr = std::max(pr, 1.25 * std::abs(p));
  }
  pr = std::max(pr, 1.25 * params.epsilon / params.omega);
  spec.xmin = -xr;
  spec.xmax = xr;
  spec.pmin = -pr;
  spec.pmax = pr;
  return spec;
}

WavefunctionAccessor box_state_accessor(const VectorXc& coeffs, const BasisParams& basis,
                                        const ScalingParams& scaling, HusimiFrame frame,
                                        double saturation_cap) {
  if (frame == HusimiFrame::AsComputed) {
    return [coeffs, basis](double x) -> WavefunctionSample {
      if (std::abs(x) > 0.5 * basis.L) return {Complex(0.0, 0.0), false};
      return {state_wavefunction(coeffs, basis, x), false};
    };
  }
  return [coeffs, basis, scaling, saturation_cap](double y) -> WavefunctionSample {
    const std::optional<Complex> z = eccs_inverse(Complex(y, 0.0), scaling);
    if (!z) return {Complex(saturation_cap, 0.0), true};
    WavefunctionSample s = state_wavefunction(coeffs, basis, *z, saturation_cap);
    if (s.saturated) return s;
    s.value /= std::sqrt(eccs_map(*z, scaling).f);
    if (!std::isfinite(std::abs(s.value)) || std::abs(s.value) > saturation_cap)
      return {Complex(saturation_cap, 0.0), true};
    return s;
  };
}

namespace {

struct RawGrid {
  MatrixXd values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
};

RawGrid evaluate(const WavefunctionAccessor& psi, double lo, double hi, const HusimiSpec& spec,
                 const VectorXd& xs, const VectorXd& ps, int refinement) {
  const double sigma = spec.sigma;
  const double cut = spec.envelope_cutoff * sigma;
  const double a = std::max(lo, xs.minCoeff() - cut);
  const double b = std::min(hi, xs.maxCoeff() + cut);
  RawGrid out{MatrixXd::Zero(xs.size(), ps.size()),
              Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(xs.size(), ps.size(),
                                                                            false)};
  if (!(b > a)) return out;

  const double pmax = std::max(std::abs(ps.minCoeff()), std::abs(ps.maxCoeff()));
  const QuadratureRule rule = resolving_rule(a, b, 0.5 * sigma, pmax, spec.quadrature, refinement);
  const Eigen::Index nq = rule.size();
  VectorXc samples(nq);
  std::vector<char> saturated(nq, 0);
  for (Eigen::Index q = 0; q < nq; ++q) {
    const WavefunctionSample s = psi(rule.nodes[q]);
    samples[q] = s.value * rule.weights[q];
    saturated[q] = s.saturated ? 1 : 0;
  }

  MatrixXc phases(ps.size(), nq);
  for (Eigen::Index j = 0; j < ps.size(); ++j)
    for (Eigen::Index q = 0; q < nq; ++q) phases(j, q) = std::polar(1.0, -ps[j] * rule.nodes[q]);

  const double norm = std::pow(kPi * sigma * sigma, -0.25);
  parallel_chunks(static_cast<long>(xs.size()), spec.jobs, [&](long begin, long end) {
    MatrixXc envelope = MatrixXc::Zero(nq, end - begin);
    std::vector<char> masked(end - begin, 0);
    for (long i = begin; i < end; ++i) {
      for (Eigen::Index q = 0; q < nq; ++q) {
        const double d = rule.nodes[q] - xs[i];
        if (std::abs(d) > cut) continue;
        if (saturated[q]) masked[i - begin] = 1;
        envelope(q, i - begin) = norm * std::exp(-d * d / (2.0 * sigma * sigma)) * samples[q];
      }
    }
    const MatrixXc overlap = phases * envelope;
    for (long i = begin; i < end; ++i) {
      out.values.row(i) = overlap.col(i - begin).cwiseAbs2().transpose();
      if (masked[i - begin]) out.mask.row(i).setConstant(true);
    }
  });
  return out;
}

}  // namespace

PhaseSpaceGrid husimi_grid(const WavefunctionAccessor& psi, double lo, double hi,
                           const HusimiSpec& spec) {
  spec.validate();
  if (!(hi > lo)) throw ConfigError("husimi support must have hi > lo");
  PhaseSpaceGrid grid;
  grid.sigma = spec.sigma;
  grid.frame = spec.frame;
  grid.x = VectorXd::LinSpaced(spec.nx, spec.xmin, spec.xmax);
  grid.p = VectorXd::LinSpaced(spec.np, spec.pmin, spec.pmax);

  RawGrid coarse = evaluate(psi, lo, hi, spec, grid.x, grid.p, 1);
  if (spec.quadrature.check_convergence) {
    RawGrid fine = evaluate(psi, lo, hi, spec, grid.x, grid.p, 2);
    double scale = 0.0;
    double change = 0.0;
    for (Eigen::Index i = 0; i < fine.values.rows(); ++i)
      for (Eigen::Index j = 0; j < fine.values.cols(); ++j) {
        if (fine.mask(i, j)) continue;
        scale = std::max(scale, fine.values(i, j));
        change = std::max(change, std::abs(fine.values(i, j) - coarse.values(i, j)));
      }
    grid.quadrature_change = scale > 0.0 ? change / scale : 0.0;
    if (grid.quadrature_change > std::max(spec.quadrature.tolerance, 1e-12))
      throw NumericalError("husimi quadrature not converged: relative change " +
                           std::to_string(grid.quadrature_change));
    coarse = std::move(fine);
  }
  grid.values = std::move(coarse.values);
  grid.saturation_mask = std::move(coarse.mask);
  return grid;
}

PhaseSpaceGrid husimi_grid(const VectorXc& coeffs, const BasisParams& basis,
                           const ScalingParams& scaling, const HusimiSpec& spec) {
  return husimi_grid(box_state_accessor(coeffs, basis, scaling, spec.frame, spec.saturation_cap),
                     -0.5 * basis.L, 0.5 * basis.L, spec);
}

namespace {

double trapezoid_weight(Eigen::Index i, Eigen::Index n) {
  return (i == 0 || i == n - 1) ? 0.5 : 1.0;
}

}  // namespace

double grid_norm(const PhaseSpaceGrid& grid) {
  const Eigen::Index nx = grid.x.size();
  const Eigen::Index np = grid.p.size();
  if (nx < 2 || np < 2) return 0.0;
  const double dx = (grid.x[nx - 1] - grid.x[0]) / static_cast<double>(nx - 1);
  const double dp = (grid.p[np - 1] - grid.p[0]) / static_cast<double>(np - 1);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < np; ++j)
      sum += trapezoid_weight(i, nx) * trapezoid_weight(j, np) * grid.values(i, j);
  return sum * dx * dp / (2.0 * kPi);
}

double boundary_mass_fraction(const PhaseSpaceGrid& grid) {
  const Eigen::Index nx = grid.x.size();
  const Eigen::Index np = grid.p.size();
  double edge = 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < np; ++j) {
      const double w = trapezoid_weight(i, nx) * trapezoid_weight(j, np) * grid.values(i, j);
      total += w;
      if (i == 0 || j == 0 || i == nx - 1 || j == np - 1) edge += w;
    }
  return total > 0.0 ? edge / total : 0.0;
}

namespace {

// Vertex offset of the parabola through (-1, a), (0, b), (1, c), clamped to half a cell.
double parabolic_offset(double a, double b, double c) {
  const double curvature = a - 2.0 * b + c;
  if (curvature >= 0.0) return 0.0;
  return std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);
}

}  // namespace

std::vector<GridPeak> peak_locations(const PhaseSpaceGrid& grid, int k) {
  std::vector<GridPeak> peaks;
  const Eigen::Index nx = grid.x.size();
  const Eigen::Index np = grid.p.size();
  if (nx < 3 || np < 3 || k <= 0) return peaks;
  const double dx = (grid.x[nx - 1] - grid.x[0]) / static_cast<double>(nx - 1);
  const double dp = (grid.p[np - 1] - grid.p[0]) / static_cast<double>(np - 1);
  const MatrixXd& g = grid.values;
  for (Eigen::Index i = 1; i + 1 < nx; ++i) {
    for (Eigen::Index j = 1; j + 1 < np; ++j) {
      if (grid.saturation_mask(i, j)) continue;
      const double v = g(i, j);
      if (!(v > 0.0)) continue;
      bool is_max = true;
      for (int di = -1; di <= 1 && is_max; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const double w = g(i + di, j + dj);
          // Ties go to the lexicographically first cell.
          if (w > v || (w == v && (di < 0 || (di == 0 && dj < 0)))) {
            is_max = false;
            break;
          }
        }
      if (!is_max) continue;
      const double ox = parabolic_offset(g(i - 1, j), v, g(i + 1, j));
      const double op = parabolic_offset(g(i, j - 1), v, g(i, j + 1));
      peaks.push_back({grid.x[i] + ox * dx, grid.p[j] + op * dp, v});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const GridPeak& a, const GridPeak& b) { return a.value > b.value; });
  if (static_cast<int>(peaks.size()) > k) peaks.resize(k);
  return peaks;
}

}  // namespace ccfm

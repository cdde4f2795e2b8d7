#include "ccfm/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace ccfm {

namespace {

// cos(j pi / 2) for integer j.
double quarter_cos(int j) {
  switch (((j % 4) + 4) % 4) {
    case 0: return 1.0;
    case 2: return -1.0;
    default: return 0.0;
  }
}

void check_index(int n, const BasisParams& basis) {
  if (n < 1 || n > basis.N)
    throw ConfigError("basis index " + std::to_string(n) + " outside 1.." +
                      std::to_string(basis.N));
}

// Unscaled P0(k) = int sin(k pi x / L - k pi / 2) dx over the box.
double box_sine_integral(int k, const BasisParams& basis) {
  if (k == 0) return 0.0;
  const double s = std::sin(0.5 * kPi * k);
  return -2.0 * basis.L / (k * kPi) * s * s;
}

// Splits w*c into real and imaginary parts and forms A^T diag(w c) B with real GEMMs.
MatrixXc weighted_product(const MatrixXd& A, const VectorXc& wc, const MatrixXd& B) {
  const MatrixXd re = A.transpose() * (wc.real().asDiagonal() * B);
  const MatrixXd im = A.transpose() * (wc.imag().asDiagonal() * B);
  MatrixXc out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

QuadratureRule select_nodes(const QuadratureRule& rule, const std::vector<Eigen::Index>& keep) {
  QuadratureRule out{VectorXd(keep.size()), VectorXd(keep.size())};
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.nodes[i] = rule.nodes[keep[i]];
    out.weights[i] = rule.weights[keep[i]];
  }
  return out;
}

constexpr double kNegligible = 1e-18;

QuadratureRule box_rule(const BasisParams& basis, const ScalingParams& scaling,
                        const QuadratureSpec& quad, int refinement) {
  return resolving_rule(-0.5 * basis.L, 0.5 * basis.L, 1.0 / scaling.lambda,
                        2.0 * basis.wavenumber(basis.N), quad, refinement);
}

struct EccsPieces {
  MatrixXc cap;
  MatrixXc potential;
  bool potential_by_quadrature = false;
  int nodes = 0;
};

EccsPieces eccs_pieces(const SystemParams& params, const BasisParams& basis,
                       const ScalingParams& scaling, const QuadratureSpec& quad, int refinement) {
  const QuadratureRule rule = box_rule(basis, scaling, quad, refinement);
  const Eigen::Index q = rule.size();

  std::vector<Eigen::Index> cap_nodes;
  std::vector<Eigen::Index> pot_nodes;
  std::vector<CapCoefficients> coeffs(q);
  std::vector<Complex> scaled_potential(q);
  double potential_shift = 0.0;
  for (Eigen::Index j = 0; j < q; ++j) {
    const double x = rule.nodes[j];
    const ScalingProfile prof = eccs_map(x, scaling);
    coeffs[j] = vcap_coefficients(prof);
    const double mag = std::max({std::abs(coeffs[j].v0), std::abs(coeffs[j].v1),
                                 std::abs(coeffs[j].v2)});
    if (mag > kNegligible) cap_nodes.push_back(j);
    scaled_potential[j] = potential_value(prof.F, params);
    if (std::abs(scaled_potential[j]) > kNegligible * params.V0) pot_nodes.push_back(j);
    potential_shift = std::max(potential_shift,
                               std::abs(scaled_potential[j] - potential_value(x, params)));
  }

  EccsPieces out;
  out.nodes = static_cast<int>(q);
  const int N = basis.N;
  out.cap = MatrixXc::Zero(N, N);
  if (!cap_nodes.empty()) {
    const QuadratureRule sub = select_nodes(rule, cap_nodes);
    const MatrixXd phi = basis_matrix(sub.nodes, basis, 0);
    const MatrixXd dphi = basis_matrix(sub.nodes, basis, 1);
    const MatrixXd d2phi = basis_matrix(sub.nodes, basis, 2);
    VectorXc w0(sub.size()), w1(sub.size()), w2(sub.size());
    for (Eigen::Index i = 0; i < sub.size(); ++i) {
      const CapCoefficients& c = coeffs[cap_nodes[i]];
      w0[i] = sub.weights[i] * c.v0;
      w1[i] = sub.weights[i] * c.v1;
      w2[i] = sub.weights[i] * c.v2;
    }
    out.cap = weighted_product(phi, w0, phi) + weighted_product(phi, w1, dphi) +
              weighted_product(phi, w2, d2phi);
  }

  out.potential_by_quadrature = potential_shift > 1e-15 * params.V0;
  if (out.potential_by_quadrature) {
    const QuadratureRule sub = select_nodes(rule, pot_nodes);
    const MatrixXd phi = basis_matrix(sub.nodes, basis, 0);
    VectorXc wv(sub.size());
    for (Eigen::Index i = 0; i < sub.size(); ++i)
      wv[i] = sub.weights[i] * scaled_potential[pot_nodes[i]];
    out.potential = weighted_product(phi, wv, phi);
  } else {
    out.potential.resize(N, N);
    for (int m = 1; m <= N; ++m)
      for (int n = m; n <= N; ++n)
        out.potential(m - 1, n - 1) = out.potential(n - 1, m - 1) =
            potential_element_ccs(m, n, 0.0, params, basis);
  }
  return out;
}

// P(k) for k = 0..kmax: analytic unscaled part plus quadrature of (1/f - 1).
VectorXc momentum_integrals(int kmax, const BasisParams& basis, const ScalingParams& scaling,
                            const QuadratureRule& rule) {
  VectorXc P(kmax + 1);
  for (int k = 0; k <= kmax; ++k) P[k] = box_sine_integral(k, basis);
  for (Eigen::Index j = 0; j < rule.size(); ++j) {
    const double x = rule.nodes[j];
    const Complex g = rule.weights[j] * (1.0 / eccs_map(x, scaling).f - 1.0);
    if (std::abs(g) <= kNegligible * rule.weights[j]) continue;
    for (int k = 1; k <= kmax; ++k)
      P[k] += g * std::sin(k * kPi * x / basis.L - 0.5 * k * kPi);
  }
  return P;
}

MatrixXc momentum_from_integrals(const VectorXc& P, const BasisParams& basis) {
  const int N = basis.N;
  MatrixXc p(N, N);
  auto Pk = [&](int k) { return k >= 0 ? P[k] : -P[-k]; };
  for (int m = 1; m <= N; ++m)
    for (int n = 1; n <= N; ++n)
      p(m - 1, n - 1) = -kI * (kPi * n / (basis.L * basis.L)) * (Pk(m + n) + Pk(m - n));
  return p;
}

}  // namespace

void BasisParams::validate() const {
  if (!(L > 0.0)) throw ConfigError("basis.L must be > 0");
  if (N < 1) throw ConfigError("basis.N must be >= 1");
}

double basis_value(int n, double x, const BasisParams& basis) {
  if (std::abs(x) > 0.5 * basis.L * (1.0 + 1e-14))
    throw ConfigError("basis_value: x outside the box");
  return std::sqrt(2.0 / basis.L) * std::sin(basis.wavenumber(n) * x - 0.5 * n * kPi);
}

Complex basis_value(int n, Complex z, const BasisParams& basis) {
  return std::sqrt(2.0 / basis.L) * std::sin(basis.wavenumber(n) * z - 0.5 * n * kPi);
}

MatrixXd basis_matrix(const VectorXd& points, const BasisParams& basis, int derivative) {
  if (derivative < 0 || derivative > 2) throw ConfigError("basis_matrix: derivative must be 0..2");
  const double norm = std::sqrt(2.0 / basis.L);
  MatrixXd out(points.size(), basis.N);
  for (int n = 1; n <= basis.N; ++n) {
    const double k = basis.wavenumber(n);
    const double phase = 0.5 * n * kPi;
    for (Eigen::Index j = 0; j < points.size(); ++j) {
      const double arg = k * points[j] - phase;
      switch (derivative) {
        case 0: out(j, n - 1) = norm * std::sin(arg); break;
        case 1: out(j, n - 1) = norm * k * std::cos(arg); break;
        default: out(j, n - 1) = -norm * k * k * std::sin(arg); break;
      }
    }
  }
  return out;
}

Complex kinetic_element_ccs(int m, int n, double theta, const BasisParams& basis) {
  if (m != n) return 0.0;
  const double k = basis.wavenumber(n);
  return 0.5 * k * k * std::polar(1.0, -2.0 * theta);
}

Complex potential_element_ccs(int m, int n, double theta, const SystemParams& params,
                              const BasisParams& basis) {
  const Complex rot = std::polar(1.0, -theta);
  const Complex prefactor = params.V0 * params.a * std::sqrt(kPi) * rot / basis.L;
  const double width = kPi * params.a / (2.0 * basis.L);
  auto V = [&](int j) -> Complex {
    const double c = quarter_cos(j);
    if (c == 0.0) return 0.0;
    return prefactor * std::exp(-(j * width) * (j * width) * rot * rot) * c;
  };
  return V(m + n) - V(std::abs(m - n));
}

Complex box_momentum_element(int m, int n, const BasisParams& basis) {
  return -kI * (kPi * n / (basis.L * basis.L)) *
         (box_sine_integral(m + n, basis) + box_sine_integral(m - n, basis));
}

Complex momentum_integral(int k, const BasisParams& basis, const ScalingParams& scaling,
                          const QuadratureSpec& quad) {
  const int ak = std::abs(k);
  if (scaling.mode == ScalingMode::CCS) {
    // f is the constant e^{i theta}.
    const double p0 = box_sine_integral(ak, basis);
    return (k >= 0 ? 1.0 : -1.0) * p0 * std::polar(1.0, -scaling.theta);
  }
  const VectorXc P = momentum_integrals(ak, basis, scaling, box_rule(basis, scaling, quad, 1));
  return k >= 0 ? P[ak] : -P[ak];
}

Complex momentum_matrix_basis(int m, int n, const BasisParams& basis,
                              const ScalingParams& scaling, const QuadratureSpec& quad) {
  check_index(m, basis);
  check_index(n, basis);
  if (scaling.mode == ScalingMode::CCS)
    return box_momentum_element(m, n, basis) * std::polar(1.0, -scaling.theta);
  return -kI * (kPi * n / (basis.L * basis.L)) *
         (momentum_integral(m + n, basis, scaling, quad) +
          momentum_integral(m - n, basis, scaling, quad));
}

MatrixXd interior_gram(const BasisParams& basis, double s) {
  s = std::min(s, 0.5 * basis.L);
  auto C = [&](int k) {
    if (k == 0) return 2.0 * s;
    const double kk = k * kPi / basis.L;
    return quarter_cos(k) * 2.0 * std::sin(kk * s) / kk;
  };
  MatrixXd G(basis.N, basis.N);
  for (int m = 1; m <= basis.N; ++m)
    for (int n = m; n <= basis.N; ++n)
      G(m - 1, n - 1) = G(n - 1, m - 1) = (C(std::abs(m - n)) - C(m + n)) / basis.L;
  return G;
}

MatrixXc assemble_h0(const SystemParams& params, const BasisParams& basis,
                     const ScalingParams& scaling, const QuadratureSpec& quad,
                     AssemblyDiagnostics* diagnostics) {
  params.validate();
  basis.validate();
  scaling.validate();
  quad.validate();
  const int N = basis.N;
  AssemblyDiagnostics diag;

  MatrixXc h0(N, N);
  if (scaling.mode == ScalingMode::CCS) {
    for (int m = 1; m <= N; ++m)
      for (int n = m; n <= N; ++n)
        h0(m - 1, n - 1) = h0(n - 1, m - 1) =
            kinetic_element_ccs(m, n, scaling.theta, basis) +
            potential_element_ccs(m, n, scaling.theta, params, basis);
  } else {
    EccsPieces pieces = eccs_pieces(params, basis, scaling, quad, 1);
    if (quad.check_convergence) {
      EccsPieces fine = eccs_pieces(params, basis, scaling, quad, 2);
      diag.quadrature_change = std::max((fine.cap - pieces.cap).cwiseAbs().maxCoeff(),
                                        (fine.potential - pieces.potential).cwiseAbs().maxCoeff());
      if (diag.quadrature_change > quad.tolerance) {
        std::ostringstream msg;
        msg << "ECCS matrix elements not converged: change " << diag.quadrature_change
            << " under node doubling exceeds " << quad.tolerance;
        throw NumericalError(msg.str());
      }
      pieces = std::move(fine);
    }
    diag.quadrature_nodes = pieces.nodes;
    diag.potential_by_quadrature = pieces.potential_by_quadrature;
    h0 = pieces.cap + pieces.potential;
    for (int n = 1; n <= N; ++n) h0(n - 1, n - 1) += kinetic_element_ccs(n, n, 0.0, basis);
  }

  diag.asymmetry = (h0 - h0.transpose()).cwiseAbs().maxCoeff();
  h0 = (0.5 * (h0 + h0.transpose())).eval();
  if (diagnostics) *diagnostics = diag;
  return h0;
}

MatrixXc momentum_matrix(const BasisParams& basis, const ScalingParams& scaling,
                         const QuadratureSpec& quad, AssemblyDiagnostics* diagnostics) {
  basis.validate();
  scaling.validate();
  const int N = basis.N;
  if (scaling.mode == ScalingMode::CCS) {
    MatrixXc p(N, N);
    const Complex rot = std::polar(1.0, -scaling.theta);
    for (int m = 1; m <= N; ++m)
      for (int n = 1; n <= N; ++n) p(m - 1, n - 1) = box_momentum_element(m, n, basis) * rot;
    return p;
  }
  VectorXc P = momentum_integrals(2 * N, basis, scaling, box_rule(basis, scaling, quad, 1));
  if (quad.check_convergence) {
    const VectorXc fine = momentum_integrals(2 * N, basis, scaling, box_rule(basis, scaling, quad, 2));
    const MatrixXc coarse_p = momentum_from_integrals(P, basis);
    const MatrixXc fine_p = momentum_from_integrals(fine, basis);
    const double change = (fine_p - coarse_p).cwiseAbs().maxCoeff();
    if (diagnostics) diagnostics->quadrature_change = std::max(diagnostics->quadrature_change, change);
    if (change > quad.tolerance)
      throw NumericalError("ECCS momentum elements not converged under node doubling");
    return fine_p;
  }
  return momentum_from_integrals(P, basis);
}

ScaledOperatorSet build_operators(const SystemParams& params, const BasisParams& basis,
                                  const ScalingParams& scaling, const QuadratureSpec& quad) {
  ScaledOperatorSet ops;
  ops.scaling = scaling;
  ops.basis = basis;
  ops.h0 = assemble_h0(params, basis, scaling, quad, &ops.diagnostics);
  ops.p = momentum_matrix(basis, scaling, quad, &ops.diagnostics);
  return ops;
}

std::optional<std::string> box_validity_warning(const SystemParams& params,
                                                const BasisParams& basis,
                                                const ScalingParams& scaling) {
  const double theta = scaling.mode == ScalingMode::CCS ? scaling.theta : 0.0;
  const double scale = 2.0 * params.a / std::sqrt(std::cos(2.0 * theta));
  if (basis.L >= 10.0 * scale) return std::nullopt;
  std::ostringstream msg;
  msg << "box length L=" << basis.L << " is not much larger than 2a/sqrt(cos 2theta)=" << scale
      << "; closed-form potential elements may be inaccurate";
  return msg.str();
}

}  // namespace ccfm

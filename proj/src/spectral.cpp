#include "ccfm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ccfm {

namespace {

void fix_sign(Eigen::Ref<VectorXc> v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v[k].real() < 0.0) v = -v;
}

}  // namespace

SpectralDecomposition diagonalize_complex_symmetric(const MatrixXc& matrix,
                                                    const EigenOptions& options) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("matrix must be square");
  const Eigen::Index n = matrix.rows();
  SpectralDecomposition out;
  if (n == 0) return out;

  const double scale = std::max(matrix.cwiseAbs().maxCoeff(), 1e-300);
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > options.symmetry_tolerance * scale)
    throw std::invalid_argument("diagonalize_complex_symmetric: matrix is not symmetric");

  VectorXc values(n);
  MatrixXc vectors(n, n);
  if (matrix.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(matrix.real());
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
    values = solver.eigenvalues().cast<Complex>();
    vectors = solver.eigenvectors().cast<Complex>();
  } else {
    Eigen::ComplexEigenSolver<MatrixXc> solver(matrix, true);
    if (solver.info() != Eigen::Success) throw NumericalError("complex eigensolver failed");
    values = solver.eigenvalues();
    vectors = solver.eigenvectors();
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (values[a].real() != values[b].real()) return values[a].real() < values[b].real();
    return values[a].imag() < values[b].imag();
  });

  out.energies.resize(n);
  out.coeffs.resize(n, n);
  out.c_norm_quality.resize(n);
  out.self_orthogonal.assign(n, false);
  out.parity.assign(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.energies[i] = values[order[i]];
    VectorXc v = vectors.col(order[i]);
    v.normalize();
    const Complex c2 = v.transpose() * v;
    out.c_norm_quality[i] = std::abs(c2);
    fix_sign(v);
    if (out.c_norm_quality[i] < options.self_orthogonal_threshold) {
      out.self_orthogonal[i] = true;
    } else {
      const Complex root = std::sqrt(Complex(v.transpose() * v));
      v /= root;
      fix_sign(v);
    }
    out.coeffs.col(i) = v;
  }
  out.max_residual =
      (matrix * out.coeffs - out.coeffs * out.energies.asDiagonal()).colwise().norm().maxCoeff();
  return out;
}

double biorthogonality_defect(const SpectralDecomposition& decomp) {
  const MatrixXc gram = decomp.coeffs.transpose() * decomp.coeffs;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < gram.cols(); ++j) {
    if (decomp.self_orthogonal[j]) continue;
    for (Eigen::Index i = 0; i < gram.rows(); ++i) {
      if (i == j || decomp.self_orthogonal[i]) continue;
      worst = std::max(worst, std::abs(gram(i, j)));
    }
  }
  return worst;
}

const char* to_string(StateKind kind) {
  switch (kind) {
    case StateKind::Bound: return "Bound";
    case StateKind::PartiallyScaled: return "PartiallyScaled";
    default: return "RotatedContinuum";
  }
}

std::vector<StaticStateLabel> label_states(const VectorXc& energies, const ScalingParams& scaling,
                                           const LabelThresholds& thresholds) {
  std::vector<StaticStateLabel> labels(energies.size());
  for (Eigen::Index i = 0; i < energies.size(); ++i) {
    const Complex E = energies[i];
    StaticStateLabel& label = labels[i];
    label.rotation_angle = std::arg(E);
    if (std::abs(E.imag()) < thresholds.bound_imag && E.real() < 0.0) {
      label.kind = StateKind::Bound;
    } else if (scaling.theta > 0.0 && E.real() > 0.0 &&
               std::abs(label.rotation_angle) < thresholds.partial_factor * scaling.theta) {
      label.kind = StateKind::PartiallyScaled;
    } else {
      label.kind = StateKind::RotatedContinuum;
    }
  }
  return labels;
}

double fit_continuum_angle(const VectorXc& energies, const std::vector<StaticStateLabel>& labels) {
  double sxx = 0.0;
  double sxy = 0.0;
  for (Eigen::Index i = 0; i < energies.size(); ++i) {
    if (labels[i].kind == StateKind::Bound || energies[i].real() <= 0.0) continue;
    sxx += energies[i].real() * energies[i].real();
    sxy += energies[i].real() * energies[i].imag();
  }
  return sxx > 0.0 ? std::atan2(sxy, sxx) : 0.0;
}

StaticSpectrum static_spectrum(ScaledOperatorSet operators, const LabelThresholds& thresholds) {
  const MatrixXc& h0 = operators.h0;
  const Eigen::Index n = h0.rows();

  // Odd sine index -> even function of x.
  std::vector<Eigen::Index> even_idx, odd_idx;
  for (Eigen::Index k = 0; k < n; ++k) ((k + 1) % 2 ? even_idx : odd_idx).push_back(k);
  double coupling = 0.0;
  for (Eigen::Index i : even_idx)
    for (Eigen::Index j : odd_idx) coupling = std::max(coupling, std::abs(h0(i, j)));

  SpectralDecomposition decomp;
  // Quadrature leaves roundoff-level cross-parity entries; the exact operator has none.
  const double scale = h0.cwiseAbs().maxCoeff();
  if (coupling <= 1e-12 * scale && !odd_idx.empty()) {
    decomp.energies.resize(n);
    decomp.coeffs = MatrixXc::Zero(n, n);
    decomp.c_norm_quality.resize(n);
    decomp.self_orthogonal.clear();
    decomp.parity.clear();
    struct Entry { Complex e; VectorXc v; double q; bool so; int parity; };
    std::vector<Entry> entries;
    for (int block = 0; block < 2; ++block) {
      const auto& idx = block == 0 ? even_idx : odd_idx;
      const MatrixXc sub = h0(idx, idx);
      const SpectralDecomposition part = diagonalize_complex_symmetric(sub);
      for (Eigen::Index i = 0; i < part.size(); ++i) {
        VectorXc v = VectorXc::Zero(n);
        v(idx) = part.coeffs.col(i);
        entries.push_back({part.energies[i], std::move(v), part.c_norm_quality[i],
                           part.self_orthogonal[i], block == 0 ? 1 : -1});
      }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.e.real() != b.e.real()) return a.e.real() < b.e.real();
      return a.e.imag() < b.e.imag();
    });
    for (Eigen::Index i = 0; i < n; ++i) {
      decomp.energies[i] = entries[i].e;
      decomp.coeffs.col(i) = entries[i].v;
      decomp.c_norm_quality[i] = entries[i].q;
      decomp.self_orthogonal.push_back(entries[i].so);
      decomp.parity.push_back(entries[i].parity);
    }
    decomp.max_residual = (h0 * decomp.coeffs - decomp.coeffs * decomp.energies.asDiagonal())
                              .colwise()
                              .norm()
                              .maxCoeff();
  } else {
    decomp = diagonalize_complex_symmetric(h0);
  }

  StaticSpectrum out;
  out.labels = label_states(decomp.energies, operators.scaling, thresholds);
  out.continuum_angle = fit_continuum_angle(decomp.energies, out.labels);
  out.decomp = std::move(decomp);
  out.operators = std::move(operators);
  return out;
}

StaticSpectrum static_spectrum(const SystemParams& params, const BasisParams& basis,
                               const ScalingParams& scaling, const QuadratureSpec& quad,
                               const LabelThresholds& thresholds) {
  return static_spectrum(build_operators(params, basis, scaling, quad), thresholds);
}

Complex state_wavefunction(const VectorXc& coeffs, const BasisParams& basis, double x) {
  Complex sum = 0.0;
  for (Eigen::Index n = 0; n < coeffs.size(); ++n)
    sum += coeffs[n] * basis_value(static_cast<int>(n + 1), x, basis);
  return sum;
}

WavefunctionSample state_wavefunction(const VectorXc& coeffs, const BasisParams& basis, Complex z,
                                      double cap) {
  Complex sum = 0.0;
  for (Eigen::Index n = 0; n < coeffs.size(); ++n)
    sum += coeffs[n] * basis_value(static_cast<int>(n + 1), z, basis);
  if (!std::isfinite(sum.real()) || !std::isfinite(sum.imag()) || std::abs(sum) > cap)
    return {Complex(cap, 0.0), true};
  return {sum, false};
}

Complex state_wavefunction(const SpectralDecomposition& decomp, const BasisParams& basis,
                           Eigen::Index i, double x) {
  return state_wavefunction(VectorXc(decomp.coeffs.col(i)), basis, x);
}

double interior_probability(const VectorXc& coeffs, const MatrixXd& interior_gram) {
  const double total = coeffs.squaredNorm();
  if (total == 0.0) return 0.0;
  const Complex inside = coeffs.dot(interior_gram * coeffs);
  return inside.real() / total;
}

}  // namespace ccfm

#include "ccfm/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ccfm/parallel.hpp"

namespace ccfm {

namespace {

struct Drive {
  double amplitude;  // eps / omega
  double omega;
  double scalar;     // eps^2 / (2 omega^2), zero when disabled

  double coupling(double t) const { return -amplitude * std::sin(omega * t); }
  double offset(double t) const {
    const double s = std::sin(omega * t);
    return scalar * s * s;
  }
};

Drive make_drive(const SystemParams& params, const PropagatorSpec& spec) {
  const double amp = params.epsilon / params.omega;
  return {amp, params.omega, spec.include_scalar_term ? 0.5 * amp * amp : 0.0};
}

// Momentum in the eigenbasis. With exact parity the states are ordered
// [even..., odd...] and only the two off-diagonal blocks are stored.
struct Coupling {
  MatrixXc full;
  MatrixXc even_odd;  // rows even, cols odd
  MatrixXc odd_even;
  Eigen::Index n_even = -1;

  bool blocked() const { return n_even >= 0; }

  // out = alpha P Y
  void apply(Complex alpha, const MatrixXc& Y, MatrixXc& out) const {
    if (!blocked()) {
      out.noalias() = alpha * (full * Y);
      return;
    }
    const Eigen::Index n_odd = Y.rows() - n_even;
    out.topRows(n_even).noalias() = alpha * (even_odd * Y.bottomRows(n_odd));
    out.bottomRows(n_odd).noalias() = alpha * (odd_even * Y.topRows(n_even));
  }
};

void check_finite(const MatrixXc& Y, double t) {
  if (!Y.allFinite()) {
    std::ostringstream msg;
    msg << "propagation produced non-finite amplitudes at t=" << t;
    throw NumericalError(msg.str());
  }
}

// -i (a P Y + s Y)
void drive_term(const Coupling& P, const Drive& d, double t, const MatrixXc& Y, MatrixXc& out) {
  P.apply(Complex(0.0, -d.coupling(t)), Y, out);
  const double offset = d.offset(t);
  if (offset != 0.0) out += Complex(0.0, -offset) * Y;
}

MatrixXc run_rk4(const VectorXc& E, const Coupling& P, const Drive& d, MatrixXc Y, double t0,
                 double t1, int steps) {
  const double h = (t1 - t0) / steps;
  const VectorXc mE = -kI * E;
  MatrixXc k1(Y.rows(), Y.cols()), k2(k1), k3(k1), k4(k1), tmp(k1);
  auto rhs = [&](double t, const MatrixXc& y, MatrixXc& out) {
    drive_term(P, d, t, y, out);
    out += mE.asDiagonal() * y;
  };
  for (int s = 0; s < steps; ++s) {
    const double t = t0 + s * h;
    rhs(t, Y, k1);
    tmp = Y + (0.5 * h) * k1;
    rhs(t + 0.5 * h, tmp, k2);
    tmp = Y + (0.5 * h) * k2;
    rhs(t + 0.5 * h, tmp, k3);
    tmp = Y + h * k3;
    rhs(t + h, tmp, k4);
    Y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if ((s & 255) == 255) check_finite(Y, t + h);
  }
  check_finite(Y, t1);
  return Y;
}

struct Tableau {
  std::vector<double> c;
  std::vector<std::vector<double>> a;  // strictly lower triangular rows
  std::vector<double> b;
};

const Tableau& classic_rk4() {
  static const Tableau t{{0.0, 0.5, 0.5, 1.0},
                         {{}, {0.5}, {0.0, 0.5}, {0.0, 0.0, 1.0}},
                         {1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6}};
  return t;
}

// Butcher's seven-stage sixth-order method.
const Tableau& butcher_rk6() {
  static const Tableau t{
      {0.0, 1.0 / 3, 2.0 / 3, 1.0 / 3, 0.5, 0.5, 1.0},
      {{},
       {1.0 / 3},
       {0.0, 2.0 / 3},
       {1.0 / 12, 1.0 / 3, -1.0 / 12},
       {-1.0 / 16, 9.0 / 8, -3.0 / 16, -3.0 / 8},
       {0.0, 9.0 / 8, -3.0 / 8, -3.0 / 4, 0.5},
       {9.0 / 44, -9.0 / 11, 63.0 / 44, 18.0 / 11, 0.0, -16.0 / 11}},
      {11.0 / 120, 0.0, 27.0 / 40, 27.0 / 40, -4.0 / 15, -4.0 / 15, 11.0 / 120}};
  return t;
}

// Integrating-factor (Lawson) RK: the diagonal static part is propagated
// exactly, the explicit tableau handles only the drive. Relative to the step
// start, stage i is
//   U_i = e^{c_i h D} u + h sum_j a_ij e^{(c_i - c_j) h D} N_j,  D = -i diag(E).
MatrixXc run_lawson(const VectorXc& E, const Coupling& P, const Drive& d, MatrixXc Y, double t0,
                    double t1, int steps, const Tableau& tab) {
  const double h = (t1 - t0) / steps;
  const std::size_t s = tab.c.size();
  auto phase = [&](double frac) -> VectorXc { return (-kI * E * (frac * h)).array().exp().matrix(); };

  // Row i (i = s is the update) combines lead[i] .* Y with weight[i][j] .* k_j.
  std::vector<VectorXc> lead(s + 1);
  std::vector<std::vector<std::pair<std::size_t, VectorXc>>> weight(s + 1);
  for (std::size_t i = 0; i <= s; ++i) {
    const double ci = i < s ? tab.c[i] : 1.0;
    lead[i] = phase(ci);
    const std::size_t terms = i < s ? i : s;
    for (std::size_t j = 0; j < terms; ++j) {
      const double coef = i < s ? tab.a[i][j] : tab.b[j];
      if (coef != 0.0) weight[i].emplace_back(j, (h * coef) * phase(ci - tab.c[j]));
    }
  }

  std::vector<MatrixXc> k(s, MatrixXc(Y.rows(), Y.cols()));
  MatrixXc stage(Y.rows(), Y.cols());
  auto combine = [&](std::size_t i) {
    for (Eigen::Index col = 0; col < Y.cols(); ++col) {
      auto out = stage.col(col);
      out = lead[i].cwiseProduct(Y.col(col));
      for (const auto& [j, w] : weight[i]) out += w.cwiseProduct(k[j].col(col));
    }
  };
  for (int n = 0; n < steps; ++n) {
    const double t = t0 + n * h;
    drive_term(P, d, t, Y, k[0]);
    for (std::size_t i = 1; i < s; ++i) {
      combine(i);
      drive_term(P, d, t + tab.c[i] * h, stage, k[i]);
    }
    combine(s);
    Y.swap(stage);
    if ((n & 255) == 255) check_finite(Y, t + h);
  }
  check_finite(Y, t1);
  return Y;
}

// Dormand-Prince 5(4) with max-norm error control on the full generator.
MatrixXc run_adaptive(const VectorXc& E, const Coupling& P, const Drive& d, MatrixXc Y, double t0,
                      double t1, int steps, double tol) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const VectorXc mE = -kI * E;
  auto rhs = [&](double t, const MatrixXc& y, MatrixXc& out) {
    drive_term(P, d, t, y, out);
    out += mE.asDiagonal() * y;
  };
  MatrixXc k1(Y.rows(), Y.cols()), k2(k1), k3(k1), k4(k1), k5(k1), k6(k1), k7(k1), y5(k1), err(k1);
  double t = t0;
  double h = (t1 - t0) / std::max(1, steps);
  rhs(t, Y, k1);
  long accepted = 0;
  while (t < t1) {
    if (t + h > t1) h = t1 - t;
    rhs(t + c2 * h, Y + h * (a21 * k1), k2);
    rhs(t + c3 * h, Y + h * (a31 * k1 + a32 * k2), k3);
    rhs(t + c4 * h, Y + h * (a41 * k1 + a42 * k2 + a43 * k3), k4);
    rhs(t + c5 * h, Y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
    rhs(t + h, Y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
    y5 = Y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, y5, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double scale = std::max(1.0, Y.cwiseAbs().maxCoeff());
    const double ratio = err.cwiseAbs().maxCoeff() / (tol * scale);
    if (!std::isfinite(ratio)) throw NumericalError("adaptive propagation produced non-finite error");
    if (ratio <= 1.0) {
      t += h;
      Y = y5;
      k1 = k7;
      ++accepted;
    }
    const double factor = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < 1e-12 * (t1 - t0)) throw NumericalError("adaptive propagation: step size underflow");
  }
  check_finite(Y, t1);
  return Y;
}

MatrixXc propagate_block(const VectorXc& E, const Coupling& P, const Drive& d, MatrixXc Y,
                         const PropagatorSpec& spec, double t0, double t1, int steps) {
  switch (spec.scheme) {
    case PropagatorScheme::RK4Fixed: return run_rk4(E, P, d, std::move(Y), t0, t1, steps);
    case PropagatorScheme::AdaptiveRK:
      return run_adaptive(E, P, d, std::move(Y), t0, t1, steps, spec.tolerance);
    case PropagatorScheme::LawsonRK4:
      return run_lawson(E, P, d, std::move(Y), t0, t1, steps, classic_rk4());
    default: return run_lawson(E, P, d, std::move(Y), t0, t1, steps, butcher_rk6());
  }
}

bool parity_applies(const MatrixXc& p_eig, const std::vector<int>& parity) {
  if (parity.size() != static_cast<std::size_t>(p_eig.rows())) return false;
  for (int s : parity)
    if (s != 1 && s != -1) return false;
  const double scale = p_eig.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < p_eig.cols(); ++j)
    for (Eigen::Index i = 0; i < p_eig.rows(); ++i)
      if (parity[i] == parity[j] && std::abs(p_eig(i, j)) > 1e-10 * scale) return false;
  return true;
}

void fix_phase(Eigen::Ref<VectorXc> v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v[k] != 0.0) v *= std::abs(v[k]) / v[k];
}

}  // namespace

const char* to_string(PropagatorScheme scheme) {
  switch (scheme) {
    case PropagatorScheme::RK4Fixed: return "RK4Fixed";
    case PropagatorScheme::AdaptiveRK: return "AdaptiveRK";
    case PropagatorScheme::LawsonRK4: return "LawsonRK4";
    default: return "LawsonRK6";
  }
}

PropagatorScheme propagator_scheme_from_string(const std::string& name) {
  if (name == "RK4Fixed") return PropagatorScheme::RK4Fixed;
  if (name == "LawsonRK4") return PropagatorScheme::LawsonRK4;
  if (name == "LawsonRK6") return PropagatorScheme::LawsonRK6;
  if (name == "AdaptiveRK") return PropagatorScheme::AdaptiveRK;
  throw ConfigError("unknown propagator scheme '" + name + "'");
}

void PropagatorSpec::validate() const {
  if (steps_per_period < 256) throw ConfigError("propagator.steps_per_period must be >= 256");
  if (!(tolerance > 0.0)) throw ConfigError("propagator.tolerance must be > 0");
  if (jobs < 1) throw ConfigError("propagator.jobs must be >= 1");
}

MatrixXc momentum_in_eigenbasis(const MatrixXc& coeffs, const MatrixXc& p_basis) {
  return coeffs.transpose() * p_basis * coeffs;
}

MatrixXc propagate(const VectorXc& energies, const MatrixXc& p_eig, const SystemParams& params,
                   const PropagatorSpec& spec, double t0, double t1, int steps,
                   const std::vector<int>& parity) {
  const Eigen::Index n = energies.size();
  if (p_eig.rows() != n || p_eig.cols() != n)
    throw std::invalid_argument("propagate: momentum matrix does not match the energy count");
  if (steps < 1) throw std::invalid_argument("propagate: steps must be >= 1");
  const Drive d = make_drive(params, spec);

  // Permute into parity order when the coupling is block off-diagonal.
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Coupling P;
  if (parity_applies(p_eig, parity)) {
    std::stable_partition(perm.begin(), perm.end(), [&](Eigen::Index i) { return parity[i] == 1; });
    P.n_even = std::count(parity.begin(), parity.end(), 1);
    const std::vector<Eigen::Index> ev(perm.begin(), perm.begin() + P.n_even);
    const std::vector<Eigen::Index> od(perm.begin() + P.n_even, perm.end());
    P.even_odd = p_eig(ev, od);
    P.odd_even = p_eig(od, ev);
  } else {
    P.full = p_eig;
  }
  const VectorXc E = energies(perm);

  // Fixed-width column blocks keep the arithmetic independent of the thread count.
  constexpr long kBlock = 32;
  const long blocks = (static_cast<long>(n) + kBlock - 1) / kBlock;
  MatrixXc Up(n, n);
  parallel_for(blocks, spec.jobs, [&](long b) {
    const long begin = b * kBlock;
    const long width = std::min<long>(kBlock, n - begin);
    MatrixXc Y = MatrixXc::Identity(n, n).middleCols(begin, width);
    Up.middleCols(begin, width) = propagate_block(E, P, d, std::move(Y), spec, t0, t1, steps);
  });
  MatrixXc U(n, n);
  U(perm, perm) = Up;
  return U;
}

MatrixXc propagate_period(const VectorXc& energies, const MatrixXc& p_eig,
                          const SystemParams& params, const PropagatorSpec& spec,
                          const std::vector<int>& parity) {
  spec.validate();
  const double T = params.period();
  const int steps = spec.steps_per_period;
  if (spec.use_parity_symmetry && steps % 2 == 0 && parity_applies(p_eig, parity)) {
    // H(t + T/2) = Pi H(t) Pi, hence U(T) = Pi U(T/2) Pi U(T/2).
    const MatrixXc half = propagate(energies, p_eig, params, spec, 0.0, 0.5 * T, steps / 2, parity);
    VectorXd pi(parity.size());
    for (std::size_t i = 0; i < parity.size(); ++i) pi[i] = parity[i];
    const MatrixXc flipped = pi.asDiagonal() * half;
    return flipped * flipped;
  }
  return propagate(energies, p_eig, params, spec, 0.0, T, steps, parity);
}

Complex scalar_term_phase(const SystemParams& params) {
  const double amp = params.epsilon / params.omega;
  // int_0^T (amp^2/2) sin^2 = amp^2 T / 4
  return std::polar(1.0, -0.25 * amp * amp * params.period());
}

const char* to_string(FloquetKind kind) {
  switch (kind) {
    case FloquetKind::Resonance: return "Resonance";
    case FloquetKind::Ambiguous: return "Ambiguous";
    default: return "Continuum";
  }
}

Complex quasienergy_from_lambda(Complex lambda, double period, double omega) {
  double Omega = -std::arg(lambda) / period;
  if (Omega <= -0.5 * omega) Omega += omega;
  const double im = std::log(std::abs(lambda)) / period;
  return {Omega, im};
}

Complex lambda_from_quasienergy(Complex q, double period) { return std::exp(-kI * q * period); }

FloquetResult floquet_eigen(const MatrixXc& U, double period, double omega) {
  const Eigen::Index n = U.rows();
  Eigen::ComplexEigenSolver<MatrixXc> solver(U, true);
  if (solver.info() != Eigen::Success) throw NumericalError("Floquet eigensolver failed");
  const VectorXc values = solver.eigenvalues();

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(values[a]), mb = std::abs(values[b]);
    if (ma != mb) return ma > mb;
    return std::arg(values[a]) < std::arg(values[b]);
  });

  FloquetResult r;
  r.U = U;
  r.period = period;
  r.omega = omega;
  r.lambdas.resize(n);
  r.quasienergies.resize(n);
  r.omegas.resize(n);
  r.gammas.resize(n);
  r.lifetimes.resize(n);
  r.dcoeffs.resize(n, n);
  r.defective.assign(n, false);
  r.labels.assign(n, FloquetKind::Continuum);
  r.interior_weight = VectorXd::Zero(n);
  r.spiral_deviation = VectorXd::Zero(n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const Complex lambda = values[order[b]];
    r.lambdas[b] = lambda;
    r.quasienergies[b] = quasienergy_from_lambda(lambda, period, omega);
    r.omegas[b] = r.quasienergies[b].real();
    r.gammas[b] = -2.0 * r.quasienergies[b].imag();
    r.lifetimes[b] = r.gammas[b] > 0.0 ? 1.0 / (r.gammas[b] * period)
                                       : std::numeric_limits<double>::infinity();
    VectorXc v = solver.eigenvectors().col(order[b]);
    v.normalize();
    fix_phase(v);
    r.dcoeffs.col(b) = v;
  }
  const MatrixXd gram = (r.dcoeffs.adjoint() * r.dcoeffs).cwiseAbs();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j && gram(i, j) > 1.0 - 1e-8) r.defective[j] = true;
  return r;
}

std::vector<Eigen::Index> resonance_indices(const FloquetResult& result) {
  std::vector<Eigen::Index> out;
  for (std::size_t b = 0; b < result.labels.size(); ++b)
    if (result.labels[b] == FloquetKind::Resonance) out.push_back(static_cast<Eigen::Index>(b));
  return out;
}

VectorXc floquet_state_coeffs(const FloquetResult& result, const SpectralDecomposition& decomp,
                              Eigen::Index beta) {
  const Eigen::Index nb = result.dcoeffs.rows();
  return decomp.coeffs.leftCols(nb) * result.dcoeffs.col(beta);
}

}  // namespace ccfm

namespace ccfm {

namespace {

double interior_radius(const ClassifierSpec& spec, const ScalingParams& scaling,
                       const BasisParams& basis) {
  if (spec.interior_radius > 0.0) return spec.interior_radius;
  if (scaling.mode == ScalingMode::ECCS && scaling.xs > 0.0) return scaling.xs;
  return basis.L / 8.0;
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

}  // namespace

void classify_resonances(FloquetResult& result, const SpectralDecomposition& decomp,
                         const BasisParams& basis, const ScalingParams& scaling,
                         const ClassifierSpec& spec) {
  const Eigen::Index n = result.lambdas.size();
  const MatrixXd G = interior_gram(basis, interior_radius(spec, scaling, basis));
  const MatrixXc states = decomp.coeffs.leftCols(result.dcoeffs.rows()) * result.dcoeffs;
  const MatrixXc Gs = G * states;
  for (Eigen::Index b = 0; b < n; ++b) {
    const double total = states.col(b).squaredNorm();
    result.interior_weight[b] = total > 0.0 ? states.col(b).dot(Gs.col(b)).real() / total : 0.0;
  }

  // Spiral: along ln|lambda| the continuum phase varies smoothly. Each state is
  // compared with a robust local line through its neighbours (itself excluded):
  // Theil-Sen slope, circular-mean intercept. States below the modulus floor
  // are not evaluated.
  std::vector<Eigen::Index> live;
  for (Eigen::Index b = 0; b < n; ++b)
    if (std::abs(result.lambdas[b]) > spec.spiral_floor) live.push_back(b);
  std::sort(live.begin(), live.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(result.lambdas[a]) > std::abs(result.lambdas[b]);
  });
  const int m = static_cast<int>(live.size());
  const int half = std::max(2, spec.spiral_window / 2);
  auto window = [&](int k) {
    const int lo = std::max(0, std::min(k - half, m - 2 * half - 1));
    return std::pair{lo, std::min(m - 1, lo + 2 * half)};
  };
  VectorXd residual = VectorXd::Zero(m);
  for (int k = 0; k < m; ++k) {
    const Complex lk = result.lambdas[live[k]];
    const double xk = std::log(std::abs(lk));
    const auto [lo, hi] = window(k);
    std::vector<double> dx, dy;
    for (int j = lo; j <= hi; ++j) {
      if (j == k) continue;
      const Complex lj = result.lambdas[live[j]];
      dx.push_back(std::log(std::abs(lj)) - xk);
      dy.push_back(std::arg(lj / lk));
    }
    std::vector<double> slopes;
    for (std::size_t i = 0; i < dx.size(); ++i)
      for (std::size_t j = i + 1; j < dx.size(); ++j)
        if (std::abs(dx[j] - dx[i]) > 1e-9)
          slopes.push_back(wrap_angle(dy[j] - dy[i]) / (dx[j] - dx[i]));
    const double slope = slopes.empty() ? 0.0 : median(slopes);
    Complex mean(0.0, 0.0);
    for (std::size_t i = 0; i < dx.size(); ++i) mean += std::polar(1.0, dy[i] - slope * dx[i]);
    residual[k] = dx.empty() ? 0.0 : std::arg(mean);
  }
  VectorXd dev = VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  for (int k = 0; k < m; ++k) {
    const auto [lo, hi] = window(k);
    std::vector<double> spread;
    for (int j = lo; j <= hi; ++j)
      if (j != k) spread.push_back(std::abs(residual[j]));
    const double scatter = spread.empty() ? 0.0 : 1.4826 * median(spread);
    dev[live[k]] = std::abs(residual[k]) / std::max(scatter, 1e-3);
  }
  result.spiral_deviation = dev;

  for (Eigen::Index b = 0; b < n; ++b) {
    const bool spiral = !std::isnan(result.spiral_deviation[b]) &&
                        result.spiral_deviation[b] > spec.spiral_threshold;
    const bool interior = result.interior_weight[b] > spec.interior_min;
    if (spiral && interior) {
      result.labels[b] = FloquetKind::Resonance;
    } else if (spiral || interior) {
      result.labels[b] = FloquetKind::Ambiguous;
    } else {
      result.labels[b] = FloquetKind::Continuum;
    }
  }
}

FloquetResult run_floquet(const StaticSpectrum& spectrum, const SystemParams& params,
                          const PropagatorSpec& propagator, const ClassifierSpec& classifier) {
  params.validate();
  propagator.validate();
  const SpectralDecomposition& decomp = spectrum.decomp;
  Eigen::Index nb = decomp.size();
  if (propagator.retained_states > 0) nb = std::min<Eigen::Index>(nb, propagator.retained_states);
  const MatrixXc C = decomp.coeffs.leftCols(nb);
  const MatrixXc p_eig = momentum_in_eigenbasis(C, spectrum.operators.p);
  const VectorXc E = decomp.energies.head(nb);
  std::vector<int> parity(decomp.parity.begin(), decomp.parity.begin() + nb);
  const MatrixXc U = propagate_period(E, p_eig, params, propagator, parity);
  FloquetResult result = floquet_eigen(U, params.period(), params.omega);
  classify_resonances(result, decomp, spectrum.operators.basis, spectrum.operators.scaling,
                      classifier);
  return result;
}

}  // namespace ccfm

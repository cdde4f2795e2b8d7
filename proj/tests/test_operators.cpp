#include <doctest.h>

#include "ccfm/operators.hpp"

using namespace ccfm;

namespace {

// Composite Simpson on [lo, hi] with n (even) intervals.
template <typename F>
auto simpson(F&& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  auto sum = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return sum * (h / 3.0);
}

}  // namespace

TEST_CASE("sine basis is orthonormal and vanishes at the walls") {
  BasisParams b{20.0, 12};
  for (int m = 1; m <= b.N; m += 3)
    for (int n = 1; n <= b.N; n += 2) {
      const double ip = simpson([&](double x) { return basis_value(m, x, b) * basis_value(n, x, b); },
                                -10.0, 10.0, 4000);
      CHECK(ip == doctest::Approx(m == n ? 1.0 : 0.0).epsilon(1e-10).scale(1.0));
    }
  CHECK(std::abs(basis_value(5, 10.0, b)) < 1e-12);
  CHECK(std::abs(basis_value(4, -10.0, b)) < 1e-12);
  CHECK_THROWS_AS(basis_value(1, 10.5, b), ConfigError);
  CHECK(std::abs(basis_value(3, Complex(2.5, 0.0), b) - basis_value(3, 2.5, b)) < 1e-14);
}

TEST_CASE("kinetic elements") {
  BasisParams b;
  const double k = b.wavenumber(7);
  CHECK(std::abs(kinetic_element_ccs(7, 7, 0.0, b) - 0.5 * k * k) < 1e-14);
  CHECK(std::abs(kinetic_element_ccs(7, 8, 0.3, b)) == 0.0);
  CHECK(std::abs(kinetic_element_ccs(7, 7, 0.3, b) - 0.5 * k * k * std::polar(1.0, -0.6)) < 1e-14);
}

TEST_CASE("momentum elements against quadrature") {
  BasisParams b{30.0, 10};
  for (int m = 1; m <= 6; ++m)
    for (int n = 1; n <= 6; ++n) {
      const double dn = b.wavenumber(n);
      const double ref = simpson(
          [&](double x) {
            return basis_value(m, x, b) * std::sqrt(2.0 / b.L) * dn *
                   std::cos(dn * x - 0.5 * n * kPi);
          },
          -15.0, 15.0, 6000);
      CHECK(std::abs(box_momentum_element(m, n, b) - Complex(0.0, -ref)) < 1e-9);
    }
  // Hermitian, hence purely imaginary and antisymmetric
  CHECK(std::abs(box_momentum_element(2, 3, b) + box_momentum_element(3, 2, b)) < 1e-14);
  CHECK(std::abs(box_momentum_element(2, 4, b)) < 1e-14);
}

TEST_CASE("rotated Gaussian potential elements against quadrature") {
  SystemParams p;
  BasisParams b{40.0, 16};
  for (double theta : {0.0, 0.3}) {
    const Complex e = std::polar(1.0, theta);
    for (auto [m, n] : {std::pair{1, 1}, {1, 3}, {2, 4}, {5, 9}, {16, 16}}) {
      const Complex ref = simpson(
          [&](double x) { return potential_value(Complex(x) * e, p) * basis_value(m, x, b) * basis_value(n, x, b); },
          -20.0, 20.0, 8000);
      CHECK(std::abs(potential_element_ccs(m, n, theta, p, b) - ref) < 1e-10);
    }
  }
}

TEST_CASE("interior Gram matrix against quadrature") {
  BasisParams b{50.0, 8};
  const MatrixXd G = interior_gram(b, 7.5);
  for (int m = 1; m <= b.N; ++m)
    for (int n = 1; n <= b.N; ++n) {
      const double ref = simpson([&](double x) { return basis_value(m, x, b) * basis_value(n, x, b); },
                                 -7.5, 7.5, 3000);
      CHECK(G(m - 1, n - 1) == doctest::Approx(ref).epsilon(1e-10).scale(1.0));
    }
  CHECK((interior_gram(b, 25.0) - MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ECCS with xs = 0 reproduces CCS operators") {
  SystemParams p;
  BasisParams b{200.0, 60};
  ScalingParams ccs{ScalingMode::CCS, 0.3, 0.0, 5.0};
  ScalingParams eccs{ScalingMode::ECCS, 0.3, 0.0, 5.0};
  const QuadratureSpec q;
  const MatrixXc h_ccs = assemble_h0(p, b, ccs, q);
  const MatrixXc h_eccs = assemble_h0(p, b, eccs, q);
  CHECK((h_ccs - h_eccs).cwiseAbs().maxCoeff() < 1e-8);
  const MatrixXc p_ccs = momentum_matrix(b, ccs, q);
  const MatrixXc p_eccs = momentum_matrix(b, eccs, q);
  CHECK((p_ccs - p_eccs).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("scaled operators are complex symmetric") {
  SystemParams p;
  BasisParams b{200.0, 80};
  AssemblyDiagnostics d;
  const MatrixXc h = assemble_h0(p, b, ScalingParams{}, QuadratureSpec{}, &d);
  CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.asymmetry < 1e-8);
  CHECK(d.quadrature_change < 1e-9);
  ScalingParams ccs{ScalingMode::CCS, 0.3, 0.0, 5.0};
  const MatrixXc pm = momentum_matrix(b, ccs, QuadratureSpec{});
  CHECK(std::abs(pm(2, 5) - box_momentum_element(3, 6, b) * std::polar(1.0, -0.3)) < 1e-14);
}

TEST_CASE("box validity warning") {
  SystemParams p;
  BasisParams small{4.0, 20};
  CHECK(box_validity_warning(p, small, ScalingParams{}).has_value());
  CHECK_FALSE(box_validity_warning(p, BasisParams{}, ScalingParams{}).has_value());
}

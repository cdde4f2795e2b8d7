#include <doctest.h>

#include "ccfm/model.hpp"
#include "ccfm/quadrature.hpp"
#include "ccfm/scaling.hpp"

using namespace ccfm;

TEST_CASE("default parameters and derived quantities") {
  SystemParams p;
  p.epsilon = 0.065;
  CHECK(p.period() == doctest::Approx(2.0 * kPi / 0.0925));
  CHECK(p.well_frequency() == doctest::Approx(0.42358).epsilon(1e-4));
  CHECK(excursion_alpha(p) == doctest::Approx(0.065 / (0.0925 * 0.0925)));
  const DerivedClassical d = derive_classical(p);
  CHECK(d.alpha == doctest::Approx(7.5968).epsilon(1e-4));
}

TEST_CASE("invalid parameters are rejected") {
  SystemParams p;
  p.a = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = SystemParams{};
  p.omega = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("potential and drive terms") {
  SystemParams p;
  p.epsilon = 0.05;
  CHECK(potential_value(0.0, p) == doctest::Approx(-0.63));
  CHECK(potential_value(p.a, p) == doctest::Approx(-0.63 / std::exp(1.0)));
  const double h = 1e-6, x = 1.3;
  const double fd = (potential_value(x + h, p) - potential_value(x - h, p)) / (2 * h);
  CHECK(potential_gradient(x, p) == doctest::Approx(fd).epsilon(1e-8));
  const double t = 0.3 * p.period();
  const DriveTerms d = drive_terms(t, p);
  const double s = std::sin(p.omega * t);
  CHECK(d.momentum_coupling == doctest::Approx(-(p.epsilon / p.omega) * s));
  CHECK(d.scalar_offset == doctest::Approx(p.epsilon * p.epsilon / (2 * p.omega * p.omega) * s * s));
}

TEST_CASE("Gauss-Legendre exactness") {
  for (int n : {2, 5, 16}) {
    const QuadratureRule r = gauss_legendre(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < r.size(); ++i) sum += r.weights[i] * std::pow(r.nodes[i], k);
      const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
      CHECK(sum == doctest::Approx(exact).epsilon(1e-13));
    }
  }
  const QuadratureRule c = composite_gauss_legendre(0.0, 3.0, 7, 8);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) sum += c.weights[i] * std::exp(c.nodes[i]);
  CHECK(sum == doctest::Approx(std::exp(3.0) - 1.0).epsilon(1e-13));
}

TEST_CASE("exterior scaling map") {
  ScalingParams s;
  const ScalingProfile origin = eccs_map(0.0, s);
  CHECK(std::abs(origin.F) < 1e-14);
  CHECK(std::abs(origin.f - 1.0) < 1e-12);
  const ScalingProfile far = eccs_map(60.0, s);
  CHECK(std::abs(far.f - std::polar(1.0, s.theta)) < 1e-12);
  // derivatives against central differences
  const double x = 24.7, h = 1e-5;
  const ScalingProfile a = eccs_map(x - h, s), b = eccs_map(x + h, s), m = eccs_map(x, s);
  CHECK(std::abs((b.F - a.F) / (2 * h) - m.f) < 1e-8);
  CHECK(std::abs((b.f - a.f) / (2 * h) - m.df) < 1e-7);
  CHECK(std::abs((b.df - a.df) / (2 * h) - m.d2f) < 1e-6);
  // odd symmetry
  CHECK(std::abs(eccs_map(-x, s).F + m.F) < 1e-12);
}

TEST_CASE("exterior scaling inverse round trip") {
  ScalingParams s;
  for (double x : {-70.0, -25.3, -3.0, 0.0, 12.0, 24.9, 31.0, 90.0}) {
    const Complex y = eccs_map(x, s).F;
    const auto z = eccs_inverse(y, s);
    REQUIRE(z.has_value());
    CHECK(std::abs(*z - x) < 1e-10 * (1 + std::abs(x)));
  }
  s.mode = ScalingMode::CCS;
  const auto z = eccs_inverse(Complex(3.0, 0.0), s);
  REQUIRE(z.has_value());
  CHECK(std::abs(*z - 3.0 * std::polar(1.0, -s.theta)) < 1e-14);
}

TEST_CASE("absorbing potential vanishes inside the unscaled region") {
  ScalingParams s;
  const CapCoefficients c = vcap_coefficients(5.0, s);
  CHECK(std::abs(c.v0) < 1e-12);
  CHECK(std::abs(c.v1) < 1e-12);
  CHECK(std::abs(c.v2) < 1e-12);
  const CapCoefficients out = vcap_coefficients(60.0, s);
  CHECK(std::abs(out.v2 - (-0.5 * (std::polar(1.0, -2 * s.theta) - 1.0))) < 1e-10);
}

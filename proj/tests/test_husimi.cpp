#include <doctest.h>

#include "ccfm/husimi.hpp"

using namespace ccfm;

namespace {

// Normalised coherent state of width s centred at (x1, p1).
WavefunctionAccessor coherent(double s, double x1, double p1) {
  return [=](double x) {
    const double g = std::pow(kPi * s * s, -0.25) * std::exp(-(x - x1) * (x - x1) / (2 * s * s));
    return WavefunctionSample{g * std::exp(kI * p1 * x), false};
  };
}

HusimiSpec spec_for(double sigma) {
  HusimiSpec spec;
  spec.sigma = sigma;
  spec.xmin = -12.0;
  spec.xmax = 12.0;
  spec.pmin = -4.0;
  spec.pmax = 4.0;
  spec.nx = 97;
  spec.np = 81;
  return spec;
}

}  // namespace

TEST_CASE("Husimi of a coherent state matches the closed form") {
  const double s = 1.3, x1 = 1.5, p1 = -0.7;
  const PhaseSpaceGrid g = husimi_grid(coherent(s, x1, p1), -40.0, 40.0, spec_for(s));
  for (Eigen::Index i = 0; i < g.x.size(); i += 7)
    for (Eigen::Index j = 0; j < g.p.size(); j += 5) {
      const double dx = g.x[i] - x1, dp = g.p[j] - p1;
      const double exact = std::exp(-dx * dx / (2 * s * s) - s * s * dp * dp / 2);
      CHECK(g.values(i, j) == doctest::Approx(exact).epsilon(1e-8).scale(1.0));
    }
  CHECK(grid_norm(g) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(boundary_mass_fraction(g) < 1e-4);
  CHECK(g.mask_count() == 0);
}

TEST_CASE("half window holds half the norm") {
  const double s = 1.0;
  HusimiSpec spec = spec_for(s);
  spec.xmin = 0.0;
  spec.nx = 61;
  const PhaseSpaceGrid g = husimi_grid(coherent(s, 0.0, 0.0), -40.0, 40.0, spec);
  CHECK(grid_norm(g) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("peak location is refined below the grid spacing") {
  const double s = 1.0;
  const PhaseSpaceGrid g = husimi_grid(coherent(s, 2.05, 0.33), -40.0, 40.0, spec_for(s));
  const auto peaks = peak_locations(g, 3);
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0].x == doctest::Approx(2.05).epsilon(0.02));
  CHECK(peaks[0].p == doctest::Approx(0.33).epsilon(0.02));
}

TEST_CASE("saturated samples mask whole rows") {
  WavefunctionAccessor psi = [](double x) {
    if (x > 5.0) return WavefunctionSample{1e6, true};
    return WavefunctionSample{std::exp(-x * x / 2), false};
  };
  HusimiSpec spec = spec_for(1.0);
  const PhaseSpaceGrid g = husimi_grid(psi, -20.0, 20.0, spec);
  CHECK(g.mask_count() > 0);
  CHECK_FALSE(g.saturation_mask(0, 0));
  CHECK(g.saturation_mask(g.x.size() - 1, 0));
}

TEST_CASE("box states in both frames") {
  BasisParams b;
  VectorXc c = VectorXc::Zero(b.N);
  c[0] = 1.0;
  ScalingParams s;
  SystemParams params;
  HusimiSpec spec = default_husimi_spec(params);
  CHECK(spec.sigma == doctest::Approx(1.0 / std::sqrt(params.well_frequency())));
  CHECK(spec.xmax >= 4 * spec.sigma);
  spec.nx = 31;
  spec.np = 21;
  const PhaseSpaceGrid g = husimi_grid(c, b, s, spec);
  // the broad lowest box mode leaks out of this small window
  CHECK(grid_norm(g) < 0.5);
  // inside the unscaled region both frames see the same function
  const auto a = box_state_accessor(c, b, s, HusimiFrame::AsComputed);
  const auto r = box_state_accessor(c, b, s, HusimiFrame::RotatedToReal);
  CHECK(std::abs(a(3.0).value - r(3.0).value) < 1e-10);
  CHECK(husimi_frame_from_string("RotatedToReal") == HusimiFrame::RotatedToReal);
}

TEST_CASE("invalid Husimi spec") {
  HusimiSpec spec;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.sigma = 1.0;
  spec.nx = 1;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

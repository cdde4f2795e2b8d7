#include <doctest.h>

#include "ccfm/classical.hpp"

using namespace ccfm;

TEST_CASE("undriven energy is conserved") {
  SystemParams p;
  const PhasePoint z0{1.2, 0.1};
  const TrajectoryResult r = integrate_trajectory(z0, 0.0, 3 * p.period(), p, 6000);
  CHECK_FALSE(r.escaped);
  CHECK(classical_energy(r.z, r.t, p) == doctest::Approx(classical_energy(z0, 0.0, p)).epsilon(1e-9));
}

TEST_CASE("small oscillations follow the harmonic well frequency") {
  SystemParams p;
  const MonodromyResult m = monodromy({1e-5, 0.0}, p);
  const double w = p.well_frequency();
  CHECK(m.jacobian.trace() == doctest::Approx(2 * std::cos(w * p.period())).epsilon(1e-6));
  CHECK(std::abs(m.jacobian.determinant() - 1.0) < 1e-8);
}

TEST_CASE("variational Jacobian matches finite differences and is symplectic") {
  SystemParams p;
  p.epsilon = 0.065;
  const PhasePoint z{3.1, -0.2};
  const MonodromyResult m = monodromy(z, p);
  const double h = 1e-6;
  const MonodromyResult xp = monodromy({z.x + h, z.p}, p), xm = monodromy({z.x - h, z.p}, p);
  const MonodromyResult pp = monodromy({z.x, z.p + h}, p), pm = monodromy({z.x, z.p - h}, p);
  Eigen::Matrix2d fd;
  fd << (xp.image.x - xm.image.x) / (2 * h), (pp.image.x - pm.image.x) / (2 * h),
      (xp.image.p - xm.image.p) / (2 * h), (pp.image.p - pm.image.p) / (2 * h);
  CHECK((fd - m.jacobian).cwiseAbs().maxCoeff() < 1e-5 * (1 + m.jacobian.cwiseAbs().maxCoeff()));
  CHECK(std::abs(m.jacobian.determinant() - 1.0) < 1e-8);
}

TEST_CASE("orbit classification") {
  CHECK(classify_orbit(0.5) == OrbitKind::Elliptic);
  CHECK(classify_orbit(-2.5) == OrbitKind::Hyperbolic);
  CHECK(classify_orbit(2.0) == OrbitKind::Parabolic);
  CHECK(std::string(to_string(OrbitKind::Hyperbolic)) == "Hyperbolic");
}

TEST_CASE("periodic orbits at moderate field") {
  SystemParams p;
  p.epsilon = 0.065;
  ClassicalSpec spec;
  spec.jobs = 2;
  const auto orbits = find_periodic_orbits(p, spec);
  auto near = [&](double x) {
    for (const auto& o : orbits)
      if (std::abs(o.point.x - x) < 0.3) return &o;
    return static_cast<const PeriodicOrbit*>(nullptr);
  };
  for (double x : {9.09, 16.67}) {
    const PeriodicOrbit* o = near(x);
    REQUIRE(o != nullptr);
    CHECK(o->kind == OrbitKind::Hyperbolic);
    CHECK(std::abs(o->detJ - 1.0) < 1e-6);
    CHECK(o->residual < 1e-8);
  }
  bool elliptic_core = false;
  for (const auto& o : orbits) elliptic_core |= o.kind == OrbitKind::Elliptic && std::abs(o.point.x) < 1.0;
  CHECK(elliptic_core);
  for (std::size_t i = 1; i < orbits.size(); ++i) CHECK(orbits[i - 1].point.x < orbits[i].point.x);
}

TEST_CASE("strobe map and escape") {
  SystemParams p;
  p.epsilon = 0.065;
  const StrobeSeries inside = strobe_map({0.3, 0.0}, p, 20);
  CHECK(inside.points.size() == 21);
  CHECK_FALSE(inside.escaped);
  const StrobeSeries out = strobe_map({0.0, 3.0}, p, 50);
  CHECK(out.escaped);
  CHECK(out.points.size() < 51);
  ClassicalSpec spec;
  CHECK(escape_bound(p, spec) == doctest::Approx(10 * excursion_alpha(p) + 50));
}

TEST_CASE("orbit drift follows branches across field strengths") {
  std::vector<SystemParams> ps(3);
  for (int i = 0; i < 3; ++i) ps[i].epsilon = 0.06 + 0.0025 * i;
  const auto branches = orbit_drift(ps);
  REQUIRE_FALSE(branches.empty());
  for (const auto& b : branches) CHECK(b.orbits.size() == 3);
}

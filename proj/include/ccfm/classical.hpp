#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ccfm/model.hpp"

namespace ccfm {

struct PhasePoint {
  double x = 0.0;
  double p = 0.0;
};

struct ClassicalSpec {
  int steps_per_period = 2048;
  double strobe_phase = 0.0;       // strobe times t = phase + n T
  double escape_bound = 0.0;       // <= 0 selects 10 alpha + 50
  double newton_step = 1e-6;       // finite-difference step of the Newton Jacobian
  double newton_tolerance = 1e-10;
  int newton_max_iterations = 50;
  double dedup_radius = 1e-4;
  int seeds = 64;                  // seeds on the p = 0 line over [0, seed_extent]
  double seed_extent = 0.0;        // <= 0 selects 2.5 alpha (at least 2a)
  int jobs = 1;

  void validate() const;
};

double escape_bound(const SystemParams& params, const ClassicalSpec& spec);

/// H = (p - (eps/omega) sin(omega t))^2 / 2 - V0 exp(-(x/a)^2).
double classical_energy(const PhasePoint& z, double t, const SystemParams& params);

struct TrajectoryResult {
  PhasePoint z;
  double t = 0.0;        // time reached (escape time when escaped)
  bool escaped = false;  // |x| exceeded the escape bound
};

/// Fixed-step RK4 on Hamilton's equations from t0 to t1 using `steps` steps.
TrajectoryResult integrate_trajectory(const PhasePoint& z0, double t0, double t1,
                                      const SystemParams& params, int steps,
                                      double escape = 0.0);

struct StrobeSeries {
  std::vector<PhasePoint> points;  // z(t0), z(t0 + T), ...
  bool escaped = false;
};

/// One sample per period starting at the strobe phase; stops early on escape.
StrobeSeries strobe_map(const PhasePoint& z0, const SystemParams& params, int periods,
                        const ClassicalSpec& spec = {});

/// One-period map M(z) and its Jacobian from the variational equations.
struct MonodromyResult {
  PhasePoint image;
  Eigen::Matrix2d jacobian;
  bool escaped = false;
};

MonodromyResult monodromy(const PhasePoint& z, const SystemParams& params,
                          const ClassicalSpec& spec = {});

enum class OrbitKind { Elliptic, Hyperbolic, Parabolic };

const char* to_string(OrbitKind kind);

struct PeriodicOrbit {
  PhasePoint point;
  double traceJ = 0.0;
  double detJ = 0.0;
  OrbitKind kind = OrbitKind::Parabolic;
  double residual = 0.0;  // |M(z) - z|
  Eigen::Vector2cd multipliers;
};

/// Classification of a 2x2 symplectic Jacobian by |tr J| against 2.
OrbitKind classify_orbit(double traceJ, double tolerance = 1e-9);

/// Newton refinement of one seed; empty when it escapes or does not converge.
std::optional<PeriodicOrbit> refine_periodic_orbit(const PhasePoint& seed,
                                                   const SystemParams& params,
                                                   const ClassicalSpec& spec = {});

/// Newton from seeds on the p = 0 line, deduplicated and sorted by x.
/// Throws NumericalError when no seed converges.
std::vector<PeriodicOrbit> find_periodic_orbits(const SystemParams& params,
                                                const ClassicalSpec& spec = {});

struct OrbitBranch {
  std::vector<PeriodicOrbit> orbits;  // one per field strength; valid only when found
  std::vector<bool> found;
  std::string break_reason;  // empty if continued across the whole sweep
};

/// Orbits at the first field strength continued along the sweep by reseeding
/// Newton at each branch's previous position. `params` differ only in epsilon.
std::vector<OrbitBranch> orbit_drift(const std::vector<SystemParams>& params,
                                     const ClassicalSpec& spec = {});

}  // namespace ccfm

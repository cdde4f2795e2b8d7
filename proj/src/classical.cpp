#include "ccfm/classical.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ccfm/parallel.hpp"

namespace ccfm {

void ClassicalSpec::validate() const {
  if (steps_per_period < 16) throw ConfigError("classical.steps_per_period must be >= 16");
  if (!(newton_step > 0.0)) throw ConfigError("classical.newton_step must be > 0");
  if (!(newton_tolerance > 0.0)) throw ConfigError("classical.newton_tolerance must be > 0");
  if (newton_max_iterations < 1) throw ConfigError("classical.newton_max_iterations must be >= 1");
  if (!(dedup_radius > 0.0)) throw ConfigError("classical.dedup_radius must be > 0");
  if (seeds < 1) throw ConfigError("classical.seeds must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

double escape_bound(const SystemParams& params, const ClassicalSpec& spec) {
  if (spec.escape_bound > 0.0) return spec.escape_bound;
  return 10.0 * excursion_alpha(params) + 50.0;
}

double classical_energy(const PhasePoint& z, double t, const SystemParams& params) {
  const double v = z.p + drive_terms(t, params).momentum_coupling;
  return 0.5 * v * v + potential_value(z.x, params);
}

namespace {

// (x, p, J00, J01, J10, J11)
using State = std::array<double, 6>;

double curvature(double x, const SystemParams& params) {
  const double a2 = params.a * params.a;
  return 2.0 * params.V0 / a2 * (1.0 - 2.0 * x * x / a2) * std::exp(-x * x / a2);
}

State rhs(const State& s, double t, const SystemParams& params, bool variational) {
  State d{};
  d[0] = s[1] + drive_terms(t, params).momentum_coupling;
  d[1] = -potential_gradient(s[0], params);
  if (variational) {
    const double k = curvature(s[0], params);
    d[2] = s[4];
    d[3] = s[5];
    d[4] = -k * s[2];
    d[5] = -k * s[3];
  }
  return d;
}

State axpy(const State& s, double h, const State& d) {
  State out;
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] + h * d[i];
  return out;
}

// Returns false on escape; `t_end` receives the last time reached.
bool rk4(State& s, double t0, double t1, int steps, const SystemParams& params, bool variational,
         double escape, double& t_end) {
  const double h = (t1 - t0) / steps;
  for (int n = 0; n < steps; ++n) {
    const double t = t0 + n * h;
    const State k1 = rhs(s, t, params, variational);
    const State k2 = rhs(axpy(s, 0.5 * h, k1), t + 0.5 * h, params, variational);
    const State k3 = rhs(axpy(s, 0.5 * h, k2), t + 0.5 * h, params, variational);
    const State k4 = rhs(axpy(s, h, k3), t + h, params, variational);
    for (std::size_t i = 0; i < s.size(); ++i)
      s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (escape > 0.0 && !(std::abs(s[0]) <= escape)) {
      t_end = t + h;
      return false;
    }
  }
  t_end = t1;
  return true;
}

}  // namespace

TrajectoryResult integrate_trajectory(const PhasePoint& z0, double t0, double t1,
                                      const SystemParams& params, int steps, double escape) {
  if (steps < 1) throw ConfigError("trajectory steps must be >= 1");
  if (!std::isfinite(z0.x) || !std::isfinite(z0.p) || !std::isfinite(t0) || !std::isfinite(t1))
    throw ConfigError("trajectory inputs must be finite");
  State s{z0.x, z0.p, 1.0, 0.0, 0.0, 1.0};
  TrajectoryResult out;
  out.escaped = !rk4(s, t0, t1, steps, params, false, escape, out.t);
  out.z = {s[0], s[1]};
  return out;
}

StrobeSeries strobe_map(const PhasePoint& z0, const SystemParams& params, int periods,
                        const ClassicalSpec& spec) {
  spec.validate();
  const double T = params.period();
  const double escape = escape_bound(params, spec);
  StrobeSeries out;
  out.points.push_back(z0);
  PhasePoint z = z0;
  for (int n = 0; n < periods; ++n) {
    const double t0 = spec.strobe_phase + n * T;
    const TrajectoryResult r =
        integrate_trajectory(z, t0, t0 + T, params, spec.steps_per_period, escape);
    if (r.escaped) {
      out.escaped = true;
      break;
    }
    z = r.z;
    out.points.push_back(z);
  }
  return out;
}

MonodromyResult monodromy(const PhasePoint& z, const SystemParams& params,
                          const ClassicalSpec& spec) {
  State s{z.x, z.p, 1.0, 0.0, 0.0, 1.0};
  double t_end = 0.0;
  const double t0 = spec.strobe_phase;
  MonodromyResult out;
  out.escaped = !rk4(s, t0, t0 + params.period(), spec.steps_per_period, params, true,
                     escape_bound(params, spec), t_end);
  out.image = {s[0], s[1]};
  out.jacobian << s[2], s[3], s[4], s[5];
  return out;
}

const char* to_string(OrbitKind kind) {
  switch (kind) {
    case OrbitKind::Elliptic: return "Elliptic";
    case OrbitKind::Hyperbolic: return "Hyperbolic";
    case OrbitKind::Parabolic: return "Parabolic";
  }
  return "Parabolic";
}

OrbitKind classify_orbit(double traceJ, double tolerance) {
  const double m = std::abs(traceJ);
  if (m < 2.0 - tolerance) return OrbitKind::Elliptic;
  if (m > 2.0 + tolerance) return OrbitKind::Hyperbolic;
  return OrbitKind::Parabolic;
}

namespace {

struct MapSample {
  Eigen::Vector2d image;
  bool escaped;
};

MapSample strobe_once(const Eigen::Vector2d& z, const SystemParams& params,
                      const ClassicalSpec& spec) {
  const double t0 = spec.strobe_phase;
  const TrajectoryResult r = integrate_trajectory({z[0], z[1]}, t0, t0 + params.period(), params,
                                                  spec.steps_per_period,
                                                  escape_bound(params, spec));
  return {Eigen::Vector2d(r.z.x, r.z.p), r.escaped};
}

}  // namespace

std::optional<PeriodicOrbit> refine_periodic_orbit(const PhasePoint& seed,
                                                   const SystemParams& params,
                                                   const ClassicalSpec& spec) {
  Eigen::Vector2d z(seed.x, seed.p);
  const double h = spec.newton_step;
  bool converged = false;
  for (int it = 0; it < spec.newton_max_iterations; ++it) {
    const MapSample m = strobe_once(z, params, spec);
    if (m.escaped) return std::nullopt;
    Eigen::Matrix2d J;
    for (int c = 0; c < 2; ++c) {
      Eigen::Vector2d dz = Eigen::Vector2d::Zero();
      dz[c] = h;
      const MapSample plus = strobe_once(z + dz, params, spec);
      const MapSample minus = strobe_once(z - dz, params, spec);
      if (plus.escaped || minus.escaped) return std::nullopt;
      J.col(c) = (plus.image - minus.image) / (2.0 * h);
    }
    const Eigen::Matrix2d A = J - Eigen::Matrix2d::Identity();
    if (std::abs(A.determinant()) < 1e-14) return std::nullopt;
    const Eigen::Vector2d step = A.inverse() * (m.image - z);
    z -= step;
    if (!z.allFinite()) return std::nullopt;
    if (step.norm() < spec.newton_tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) return std::nullopt;

  const MonodromyResult mono = monodromy({z[0], z[1]}, params, spec);
  if (mono.escaped) return std::nullopt;
  PeriodicOrbit orbit;
  orbit.point = {z[0], z[1]};
  orbit.traceJ = mono.jacobian.trace();
  orbit.detJ = mono.jacobian.determinant();
  orbit.kind = classify_orbit(orbit.traceJ);
  orbit.residual = std::hypot(mono.image.x - z[0], mono.image.p - z[1]);
  orbit.multipliers = mono.jacobian.eigenvalues();
  return orbit;
}

std::vector<PeriodicOrbit> find_periodic_orbits(const SystemParams& params,
                                                const ClassicalSpec& spec) {
  params.validate();
  spec.validate();
  double extent = spec.seed_extent;
  if (!(extent > 0.0)) extent = std::max(2.5 * excursion_alpha(params), 2.0 * params.a);
  std::vector<std::optional<PeriodicOrbit>> refined(spec.seeds);
  parallel_for(spec.seeds, spec.jobs, [&](long i) {
    const double x = spec.seeds == 1 ? 0.0 : extent * static_cast<double>(i) / (spec.seeds - 1);
    refined[i] = refine_periodic_orbit({x, 0.0}, params, spec);
  });

  std::vector<PeriodicOrbit> orbits;
  for (const auto& r : refined) {
    if (!r) continue;
    const bool duplicate = std::any_of(orbits.begin(), orbits.end(), [&](const PeriodicOrbit& o) {
      return std::hypot(o.point.x - r->point.x, o.point.p - r->point.p) < spec.dedup_radius;
    });
    if (!duplicate) orbits.push_back(*r);
  }
  if (orbits.empty())
    throw NumericalError("no periodic orbit converged from " + std::to_string(spec.seeds) +
                         " seeds");
  std::sort(orbits.begin(), orbits.end(),
            [](const PeriodicOrbit& a, const PeriodicOrbit& b) { return a.point.x < b.point.x; });
  return orbits;
}

std::vector<OrbitBranch> orbit_drift(const std::vector<SystemParams>& params,
                                     const ClassicalSpec& spec) {
  std::vector<OrbitBranch> branches;
  if (params.empty()) return branches;
  const std::vector<PeriodicOrbit> first = find_periodic_orbits(params.front(), spec);
  for (const PeriodicOrbit& o : first) {
    OrbitBranch b;
    b.orbits.push_back(o);
    b.found.push_back(true);
    branches.push_back(std::move(b));
  }
  for (std::size_t k = 1; k < params.size(); ++k) {
    std::vector<std::optional<PeriodicOrbit>> next(branches.size());
    parallel_for(static_cast<long>(branches.size()), spec.jobs, [&](long i) {
      const OrbitBranch& b = branches[i];
      if (!b.found.back()) return;
      next[i] = refine_periodic_orbit(b.orbits.back().point, params[k], spec);
    });
    for (std::size_t i = 0; i < branches.size(); ++i) {
      OrbitBranch& b = branches[i];
      bool ok = next[i].has_value();
      std::string reason = b.found.back() ? "newton did not converge" : b.break_reason;
      for (std::size_t j = 0; ok && j < i; ++j) {
        if (branches[j].found.back() && next[j] &&
            std::hypot(next[j]->point.x - next[i]->point.x, next[j]->point.p - next[i]->point.p) <
                spec.dedup_radius) {
          ok = false;
          reason = "merged with another branch";
        }
      }
      if (ok) {
        b.orbits.push_back(*next[i]);
        b.found.push_back(true);
      } else {
        b.orbits.push_back(b.orbits.back());
        b.found.push_back(false);
        if (b.break_reason.empty())
          b.break_reason = reason + " at epsilon=" + std::to_string(params[k].epsilon);
      }
    }
  }
  return branches;
}

}  // namespace ccfm

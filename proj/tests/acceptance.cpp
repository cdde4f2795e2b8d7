// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is 0 once every criterion has been evaluated and reported, so a
// failing criterion shows up in the log rather than as a crashed test. Pass
// --strict to turn any FAIL into a nonzero exit.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "ccfm/classical.hpp"
#include "ccfm/husimi.hpp"
#include "ccfm/scan.hpp"

using namespace ccfm;

namespace {

int g_jobs = 1;
int g_failures = 0;

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  if (!pass) ++g_failures;
  std::cout << (pass ? "PASS" : "FAIL") << "  C" << id << "  " << title << "  | " << detail << std::endl;
}

ScalingParams eccs(double theta = 0.3, double xs = 25.0) {
  return {ScalingMode::ECCS, theta, xs, 5.0};
}

ScalingParams ccs(double theta) { return {ScalingMode::CCS, theta, 0.0, 5.0}; }

SystemParams driven(double epsilon) {
  SystemParams p;
  p.epsilon = epsilon;
  return p;
}

PropagatorSpec default_propagator() {
  PropagatorSpec spec;
  spec.jobs = g_jobs;
  return spec;
}

// Memoised pipelines shared between criteria.
const StaticSpectrum& spectrum(const ScalingParams& s) {
  static std::map<std::tuple<int, double, double>, StaticSpectrum> cache;
  const auto key = std::make_tuple(static_cast<int>(s.mode), s.theta, s.xs);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, static_spectrum(SystemParams{}, BasisParams{}, s)).first;
  return it->second;
}

const FloquetResult& floquet(double epsilon, double theta = 0.3) {
  static std::map<std::pair<double, double>, FloquetResult> cache;
  const auto key = std::make_pair(epsilon, theta);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, run_floquet(spectrum(eccs(theta)), driven(epsilon), default_propagator())).first;
  return it->second;
}

std::vector<Eigen::Index> by_lifetime(const FloquetResult& r, bool include_ambiguous) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index b = 0; b < r.lambdas.size(); ++b)
    if (r.labels[b] == FloquetKind::Resonance ||
        (include_ambiguous && r.labels[b] == FloquetKind::Ambiguous && !std::isnan(r.spiral_deviation[b])))
      idx.push_back(b);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return r.lifetimes[a] > r.lifetimes[b]; });
  return idx;
}

std::vector<Complex> bound_energies(const StaticSpectrum& s) {
  std::vector<Complex> out;
  for (Eigen::Index i = 0; i < s.decomp.size(); ++i)
    if (s.labels[i].kind == StateKind::Bound) out.push_back(s.decomp.energies[i]);
  return out;
}

void criterion1() {
  const StaticSpectrum& s = spectrum(ccs(0.0));
  const std::vector<Complex> e = bound_energies(s);
  const double ref[3] = {-0.4451, -0.1400, -0.00014};
  double worst = 0.0;
  bool ok = e.size() >= 3;
  for (int i = 0; ok && i < 3; ++i) worst = std::max(worst, std::abs(e[i].real() - ref[i]));
  ok = ok && worst < 5e-4;
  std::string detail = "E =";
  for (std::size_t i = 0; i < std::min<std::size_t>(e.size(), 4); ++i) detail += fmt(" %.6f", e[i].real());
  report(1, "bound-state energies", ok, detail + fmt("  (max deviation %.2e, limit 5e-4)", worst));
}

void criterion2() {
  const StaticSpectrum& s = spectrum(ccs(0.3));
  const double angle = s.continuum_angle;
  const double rel = std::abs(angle + 0.6) / 0.6;
  double imag = 0.0;
  const std::vector<Complex> e = bound_energies(s);
  for (Complex z : e) imag = std::max(imag, std::abs(z.imag()));
  const bool ok = rel < 0.02 && imag < 1e-3 && e.size() >= 3;
  report(2, "continuum rotation", ok,
         fmt("fitted angle %.5f vs -2theta = -0.6 (%.2f%%, limit 2%%); %zu bound states, max |Im E| %.2e",
             angle, 100 * rel, e.size(), imag));
}

void criterion3() {
  const StaticSpectrum& c = spectrum(ccs(0.3));
  const StaticSpectrum& e0 = spectrum(eccs(0.3, 0.0));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 50; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < e0.decomp.size(); ++j)
      best = std::min(best, std::abs(c.decomp.energies[i] - e0.decomp.energies[j]));
    worst = std::max(worst, best);
  }
  const StaticSpectrum& e = spectrum(eccs(0.3, 25.0));
  const MatrixXd G = interior_gram(BasisParams{}, 25.0);
  int partial = 0;
  double best_weight = 0.0;
  for (Eigen::Index i = 0; i < e.decomp.size(); ++i) {
    const Complex E = e.decomp.energies[i];
    if (E.real() <= 0.0 || std::abs(std::arg(E)) >= 1.5 * 0.3) continue;
    const double w = interior_probability(e.decomp.coeffs.col(i), G);
    best_weight = std::max(best_weight, w);
    partial += w > 0.9;
  }
  report(3, "ECCS/CCS consistency", worst < 1e-4 && partial >= 1,
         fmt("xs=0: max |E_eccs - E_ccs| over 50 states %.2e (limit 1e-4); xs=25: %d states with "
             "|arg E| < 1.5 theta and interior weight > 0.9 (best %.4f)",
             worst, partial, best_weight));
}

void criterion4() {
  const StaticSpectrum& s = spectrum(ccs(0.0));
  PropagatorSpec spec = default_propagator();
  const FloquetResult a = run_floquet(s, driven(0.038), spec);
  spec.steps_per_period = 8192;
  const FloquetResult b = run_floquet(s, driven(0.038), spec);
  const Eigen::Index n = a.U.rows();
  const double unitarity = (a.U.adjoint() * a.U - MatrixXc::Identity(n, n)).cwiseAbs().maxCoeff();
  const double doubling = (a.U - b.U).cwiseAbs().maxCoeff();
  report(4, "unitary limit", unitarity < 1e-6 && doubling < 1e-8,
         fmt("theta=0, eps=0.038: max|U^dag U - I| = %.2e (limit 1e-6); |U_4096 - U_8192|_max = %.2e "
             "(limit 1e-8)",
             unitarity, doubling));
}

void criterion5() {
  const double eps[3] = {0.038, 0.065, 0.09};
  const int want[3] = {3, 4, 5};
  bool ok = true;
  std::string detail;
  for (int i = 0; i < 3; ++i) {
    const FloquetResult& r = floquet(eps[i]);
    const auto res = by_lifetime(r, false);
    const auto all = by_lifetime(r, true);
    ok = ok && static_cast<int>(res.size()) == want[i];
    detail += fmt("eps=%.3f: %zu resonances (want %d), %zu ambiguous; ", eps[i], res.size(), want[i],
                  all.size() - res.size());
  }
  report(5, "resonance counts", ok, detail);
}

void criterion6() {
  const FloquetResult& ref = floquet(0.038, 0.3);
  const auto res = by_lifetime(ref, false);
  double worst = 0.0;
  std::string detail;
  for (Eigen::Index b : res) {
    std::string line = fmt("tau/T %.4f", ref.lifetimes[b]);
    for (double theta : {0.5, 0.7}) {
      const FloquetResult& r = floquet(0.038, theta);
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < r.lambdas.size(); ++j)
        if (std::abs(r.lambdas[j] - ref.lambdas[b]) < std::abs(r.lambdas[best] - ref.lambdas[b])) best = j;
      const double drift = std::abs(r.lifetimes[best] - ref.lifetimes[b]);
      worst = std::max(worst, drift);
      line += fmt(" -> %.4f (theta=%.1f)", r.lifetimes[best], theta);
    }
    detail += line + "; ";
  }
  report(6, "theta robustness", !res.empty() && worst <= 0.1,
         detail + fmt("max drift %.4f T (limit 0.1 T)", worst));
}

void criterion7() {
  ClassicalSpec spec;
  spec.jobs = g_jobs;
  struct Case {
    double eps;
    std::vector<double> hyperbolic;
  };
  const std::vector<Case> cases = {{0.038, {6.98}}, {0.065, {9.09, 16.67}}, {0.09, {11.52, 22.04}}};
  bool ok = true;
  double worst_det = 0.0;
  std::string detail;
  auto nearest = [](const std::vector<PeriodicOrbit>& orbits, double x) {
    const PeriodicOrbit* best = nullptr;
    for (const auto& o : orbits)
      if (!best || std::abs(o.point.x - x) < std::abs(best->point.x - x)) best = &o;
    return best;
  };
  for (const Case& c : cases) {
    const auto orbits = find_periodic_orbits(driven(c.eps), spec);
    for (const auto& o : orbits) worst_det = std::max(worst_det, std::abs(o.detJ - 1.0));
    for (double x : c.hyperbolic) {
      const PeriodicOrbit* o = nearest(orbits, x);
      const bool hit = o && std::abs(o->point.x - x) <= 0.3 && std::abs(o->traceJ) > 2.0;
      ok = ok && hit;
      detail += o ? fmt("eps=%.3f x=%.3f tr=%.3f; ", c.eps, o->point.x, o->traceJ) : "missing; ";
    }
    const PeriodicOrbit* core = nullptr;
    for (const auto& o : orbits)
      if (o.kind == OrbitKind::Elliptic && std::hypot(o.point.x, o.point.p) < 1.0 &&
          (!core || std::hypot(o.point.x, o.point.p) < std::hypot(core->point.x, core->point.p)))
        core = &o;
    ok = ok && core && std::abs(core->traceJ) < 2.0;
    detail += core ? fmt("elliptic core x=%.3f tr=%.3f; ", core->point.x, core->traceJ) : "no elliptic core; ";
  }
  SystemParams hf;
  hf.omega = 2.0;
  hf.epsilon = 42.0;
  const double alpha = excursion_alpha(hf);
  const auto orbits = find_periodic_orbits(hf, spec);
  for (const auto& o : orbits) worst_det = std::max(worst_det, std::abs(o.detJ - 1.0));
  const PeriodicOrbit* o1 = nearest(orbits, alpha);
  const PeriodicOrbit* o2 = nearest(orbits, 2 * alpha);
  const bool hf_ok = o1 && o2 && o1 != o2 && o1->kind == OrbitKind::Hyperbolic && o2->kind == OrbitKind::Elliptic;
  ok = ok && hf_ok && worst_det < 1e-6;
  if (o1 && o2)
    detail += fmt("omega=2 eps=42: near alpha x=%.3f %s, near 2alpha x=%.3f %s; ", o1->point.x,
                  to_string(o1->kind), o2->point.x, to_string(o2->kind));
  report(7, "classical orbits", ok, detail + fmt("max |det J - 1| %.1e", worst_det));
}

std::vector<std::pair<double, double>> orbit_points(double eps) {
  ClassicalSpec spec;
  spec.jobs = g_jobs;
  std::vector<std::pair<double, double>> pts;
  for (const auto& o : find_periodic_orbits(driven(eps), spec)) pts.emplace_back(o.point.x, o.point.p);
  return pts;
}

PhaseSpaceGrid resonance_husimi(double eps, Eigen::Index beta) {
  const StaticSpectrum& s = spectrum(eccs());
  HusimiSpec spec = default_husimi_spec(driven(eps), orbit_points(eps));
  spec.jobs = g_jobs;
  return husimi_grid(floquet_state_coeffs(floquet(eps), s.decomp, beta), BasisParams{}, eccs(), spec);
}

void criterion8() {
  std::string detail;
  bool ok = true;

  // second-longest-lived resonance candidate at eps = 0.065
  const FloquetResult& r65 = floquet(0.065);
  const auto cand = by_lifetime(r65, true);
  if (cand.size() < 2) {
    ok = false;
    detail += "fewer than two resonance candidates at eps=0.065; ";
  } else {
    const PhaseSpaceGrid g = resonance_husimi(0.065, cand[1]);
    double best = std::numeric_limits<double>::infinity();
    GridPeak at{};
    for (const GridPeak& p : peak_locations(g, 10)) {
      const double d = std::hypot(p.x - 16.67, p.p);
      if (d < best) {
        best = d;
        at = p;
      }
    }
    ok = ok && best <= 1.5;
    detail += fmt("eps=0.065 beta=%ld (tau/T %.3f, %s): nearest local max (%.2f, %.2f) is %.2f from "
                  "(16.67, 0) (limit 1.5); ",
                  static_cast<long>(cand[1]), r65.lifetimes[cand[1]], to_string(r65.labels[cand[1]]), at.x,
                  at.p, best);
  }

  // longest-lived resonance at eps = 0.038
  const FloquetResult& r38 = floquet(0.038);
  const auto res = by_lifetime(r38, false);
  if (res.empty()) {
    ok = false;
    detail += "no resonance at eps=0.038; ";
  } else {
    const PhaseSpaceGrid g = resonance_husimi(0.038, res[0]);
    const auto peaks = peak_locations(g, 1);
    const double dx = g.x[1] - g.x[0], dp = g.p[1] - g.p[0];
    const bool hit = !peaks.empty() && std::abs(peaks[0].x) <= dx && std::abs(peaks[0].p) <= dp;
    ok = ok && hit;
    if (!peaks.empty())
      detail += fmt("eps=0.038 longest-lived peak (%.3f, %.3f), cell (%.3f, %.3f); ", peaks[0].x, peaks[0].p,
                    dx, dp);
  }

  // unit-norm test Gaussian
  const double sigma = default_sigma(SystemParams{});
  WavefunctionAccessor gauss = [&](double x) {
    const double s = 1.1;
    return WavefunctionSample{std::pow(kPi * s * s, -0.25) * std::exp(-(x - 0.7) * (x - 0.7) / (2 * s * s)) *
                                  std::exp(kI * 0.4 * x),
                              false};
  };
  HusimiSpec hs;
  hs.sigma = sigma;
  hs.xmin = -15;
  hs.xmax = 15;
  hs.pmin = -5;
  hs.pmax = 5;
  const double norm = grid_norm(husimi_grid(gauss, -60.0, 60.0, hs));
  ok = ok && std::abs(norm - 1.0) <= 1e-3;
  detail += fmt("test Gaussian norm %.6f (limit 1 +/- 1e-3)", norm);
  report(8, "scarring evidence", ok, detail);
}

void criterion9() {
  const std::vector<double> eps = crossing_sweep_values();
  SweepResult sweep;
  for (double e : eps) sweep.points.push_back({e, floquet(e), ""});
  const auto seeds = resonance_seeds(sweep, false);
  const auto branches = track_branches(sweep, seeds);
  if (branches.size() < 3) {
    report(9, "avoided crossing", false, fmt("only %zu resonance branches at eps=0.076", branches.size()));
    return;
  }
  const std::string a = branches.front().label;
  const auto partner = exchange_partner(sweep, branches, a, 0.078, 0.083);
  if (!partner) {
    report(9, "avoided crossing", false, "no exchange partner for the longest-lived branch");
    return;
  }
  const CrossingReport rep = crossing_report(sweep, branches, a, *partner, 0.078, 0.083);
  // C: of the remaining branches, the one passing closest to A or B
  std::string c;
  double c_gap = std::numeric_limits<double>::infinity();
  for (const auto& br : branches) {
    if (br.label == a || br.label == *partner) continue;
    for (const auto& p : br.path)
      for (const auto& other : branches) {
        if (other.label != a && other.label != *partner) continue;
        for (const auto& q : other.path)
          if (q.epsilon == p.epsilon && std::abs(q.lambda - p.lambda) < c_gap) {
            c_gap = std::abs(q.lambda - p.lambda);
            c = br.label;
          }
      }
  }
  double tau78 = NAN, tau83 = NAN;
  for (const auto& br : branches)
    if (br.label == c)
      for (const auto& p : br.path) {
        if (p.epsilon == 0.078) tau78 = p.lifetime;
        if (p.epsilon == 0.083) tau83 = p.lifetime;
      }
  const bool gap_ok = rep.gap_min_epsilon >= 0.080 && rep.gap_min_epsilon <= 0.081;
  const bool exch_ok = rep.cross_overlap > rep.same_overlap;
  const bool c_ok = tau83 > tau78;
  std::string detail = fmt("A=%s B=%s C=%s; gap minimum %.4g at eps=%.5f (want [0.080, 0.081]); "
                           "|<A@.078|B@.083>| %.3f vs |<A@.078|A@.083>| %.3f; tau_C %.3f -> %.3f",
                           a.c_str(), partner->c_str(), c.c_str(), rep.gap_min, rep.gap_min_epsilon,
                           rep.cross_overlap, rep.same_overlap, tau78, tau83);
  report(9, "avoided crossing", gap_ok && exch_ok && c_ok, detail);
}

void criterion10() {
  // biorthogonality of the production static basis
  const StaticSpectrum& s = spectrum(eccs());
  const double bio = biorthogonality_defect(s.decomp);

  // lambda <-> q round trip
  const FloquetResult& r = floquet(0.038);
  double trip = 0.0;
  for (Eigen::Index b = 0; b < r.lambdas.size(); ++b)
    trip = std::max(trip, std::abs(lambda_from_quasienergy(r.quasienergies[b], r.period) - r.lambdas[b]));

  // scalar drive term as a global phase, on a reduced basis
  PropagatorSpec with = default_propagator();
  with.steps_per_period = 1024;
  with.retained_states = 80;
  PropagatorSpec without = with;
  without.include_scalar_term = false;
  const SystemParams p = driven(0.065);
  const FloquetResult u1 = run_floquet(s, p, with);
  const FloquetResult u0 = run_floquet(s, p, without);
  const double scalar = (u1.U - scalar_term_phase(p) * u0.U).cwiseAbs().maxCoeff();

  // determinism: same config, different thread counts
  PropagatorSpec other = with;
  other.jobs = g_jobs > 1 ? 1 : 2;
  const FloquetResult u2 = run_floquet(s, p, other);
  const bool same = std::memcmp(u1.U.data(), u2.U.data(), u1.U.size() * sizeof(Complex)) == 0 &&
                    std::memcmp(u1.lambdas.data(), u2.lambdas.data(), u1.lambdas.size() * sizeof(Complex)) == 0;

  report(10, "property suites", bio < 1e-8 && trip < 1e-10 && scalar < 1e-8 && same,
         fmt("biorthogonality %.2e (limit 1e-8); lambda<->q %.2e (limit 1e-10); scalar-term "
             "factorisation %.2e (limit 1e-8); byte-identical rerun: %s",
             bio, trip, scalar, same ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::set<int> only;
  g_jobs = std::max(1u, std::thread::hardware_concurrency());
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--strict") {
      strict = true;
    } else if (arg == "--jobs" && i + 1 < argc) {
      g_jobs = std::max(1, std::atoi(argv[++i]));
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      std::string item;
      while (std::getline(list, item, ',')) only.insert(std::stoi(item));
    } else {
      std::cerr << "usage: acceptance [--strict] [--jobs N] [--only 1,2,...]\n";
      return 2;
    }
  }
  const std::vector<std::function<void()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                       criterion5, criterion6, criterion7, criterion8,
                                                       criterion9, criterion10};
  int errors = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      ++errors;
      report(id, "error", false, e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "      (" << fmt("%.0f", secs) << " s)" << std::endl;
  }
  std::cout << "acceptance: " << g_failures << " criteria failed" << std::endl;
  if (errors > 0) return 1;
  return strict && g_failures > 0 ? 1 : 0;
}

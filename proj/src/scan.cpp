#include "ccfm/scan.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ccfm/parallel.hpp"

namespace ccfm {

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep.values must not be empty");
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("sweep.values must be finite and >= 0");
  if (values.size() > 1) {
    const bool up = values[1] > values[0];
    for (std::size_t i = 1; i < values.size(); ++i)
      if ((values[i] > values[i - 1]) != up || values[i] == values[i - 1])
        throw ConfigError("sweep.values must be strictly monotone");
  }
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

std::vector<double> crossing_sweep_values() {
  return {0.076, 0.078, 0.08, 0.0805, 0.081, 0.083, 0.085};
}

bool SweepResult::partial() const {
  return std::any_of(points.begin(), points.end(),
                     [](const SweepPoint& p) { return !p.result.has_value(); });
}

SweepResult run_sweep(const SystemParams& base, const SweepSpec& sweep,
                      const PointEvaluator& evaluate) {
  sweep.validate();
  const int n = static_cast<int>(sweep.values.size());
  SweepResult out;
  out.points.resize(n);
  parallel_for(n, std::min(sweep.jobs, n), [&](long i) {
    SweepPoint& point = out.points[i];
    point.epsilon = sweep.values[i];
    SystemParams params = base;
    params.epsilon = sweep.values[i];
    try {
      point.result = evaluate(params);
    } catch (const std::exception& e) {
      point.error = e.what();
    }
  });
  return out;
}

SweepResult run_sweep(const StaticSpectrum& spectrum, const SystemParams& base,
                      const SweepSpec& sweep, const PropagatorSpec& propagator,
                      const ClassifierSpec& classifier) {
  sweep.validate();
  PropagatorSpec inner = propagator;
  inner.jobs = std::max(1, propagator.jobs / std::min<int>(sweep.jobs, sweep.values.size()));
  return run_sweep(base, sweep, [&](const SystemParams& params) {
    return run_floquet(spectrum, params, inner, classifier);
  });
}

double c_overlap(const VectorXc& d1, const VectorXc& d2) {
  const double n = d1.norm() * d2.norm();
  if (!(n > 0.0)) return 0.0;
  return std::min(1.0, std::abs(d1.dot(d2.conjugate())) / n);
}

namespace {

BranchPoint branch_point(const SweepPoint& point, Eigen::Index beta, double overlap) {
  const FloquetResult& r = *point.result;
  return {point.epsilon, beta, r.lambdas[beta], r.quasienergies[beta], r.lifetimes[beta],
          overlap, r.labels[beta]};
}

std::string format_epsilon(double eps) {
  std::ostringstream s;
  s << eps;
  return s.str();
}

}  // namespace

std::vector<TrackedBranch> track_branches(const SweepResult& sweep,
                                          const std::vector<BranchSeed>& seeds,
                                          const TrackingSpec& spec) {
  if (sweep.points.empty()) return {};
  for (const SweepPoint& p : sweep.points)
    if (!p.result) throw NumericalError("cannot track branches across a failed sweep point");

  std::vector<TrackedBranch> branches;
  const FloquetResult& first = *sweep.points.front().result;
  for (const BranchSeed& s : seeds) {
    if (s.beta < 0 || s.beta >= first.lambdas.size())
      throw ConfigError("branch seed '" + s.label + "' is out of range");
    TrackedBranch b;
    b.label = s.label;
    b.path.push_back(branch_point(sweep.points.front(), s.beta, 1.0));
    branches.push_back(std::move(b));
  }

  for (std::size_t k = 1; k < sweep.points.size(); ++k) {
    const FloquetResult& prev = *sweep.points[k - 1].result;
    const FloquetResult& next = *sweep.points[k].result;
    const MatrixXc cross = prev.dcoeffs.transpose() * next.dcoeffs;

    struct Candidate {
      double quantized;
      double distance;
      std::size_t branch;
      Eigen::Index target;
      double overlap;
    };
    std::vector<Candidate> candidates;
    for (std::size_t b = 0; b < branches.size(); ++b) {
      if (!branches[b].end_reason.empty()) continue;
      const Eigen::Index from = branches[b].path.back().beta;
      const double nf = prev.dcoeffs.col(from).norm();
      for (Eigen::Index j = 0; j < next.lambdas.size(); ++j) {
        const double nt = nf * next.dcoeffs.col(j).norm();
        const double ov = nt > 0.0 ? std::min(1.0, std::abs(cross(from, j)) / nt) : 0.0;
        candidates.push_back({std::floor(ov / spec.proximity_tie),
                              std::abs(next.lambdas[j] - prev.lambdas[from]), b, j, ov});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& x, const Candidate& y) {
                       if (x.quantized != y.quantized) return x.quantized > y.quantized;
                       return x.distance < y.distance;
                     });
    std::vector<bool> branch_done(branches.size(), false);
    std::vector<bool> taken(next.lambdas.size(), false);
    for (const Candidate& c : candidates) {
      if (branch_done[c.branch] || taken[c.target]) continue;
      branch_done[c.branch] = true;
      TrackedBranch& b = branches[c.branch];
      const std::string where = "epsilon=" + format_epsilon(sweep.points[k].epsilon);
      if (c.overlap < spec.death_threshold) {
        std::ostringstream reason;
        reason << "merged into continuum at " << where << " (best overlap " << c.overlap << ")";
        b.end_reason = reason.str();
        continue;
      }
      taken[c.target] = true;
      if (c.overlap < spec.mixing_threshold) {
        std::ostringstream w;
        w << "mixing at " << where << ": best overlap " << c.overlap;
        b.warnings.push_back(w.str());
      }
      b.path.push_back(branch_point(sweep.points[k], c.target, c.overlap));
    }
  }
  return branches;
}

std::vector<BranchSeed> resonance_seeds(const SweepResult& sweep, bool include_ambiguous) {
  std::vector<BranchSeed> seeds;
  if (sweep.points.empty() || !sweep.points.front().result) return seeds;
  const FloquetResult& r = *sweep.points.front().result;
  std::vector<Eigen::Index> picked;
  for (Eigen::Index b = 0; b < r.lambdas.size(); ++b)
    if (r.labels[b] == FloquetKind::Resonance ||
        (include_ambiguous && r.labels[b] == FloquetKind::Ambiguous &&
         !std::isnan(r.spiral_deviation[b])))
      picked.push_back(b);
  std::stable_sort(picked.begin(), picked.end(), [&](Eigen::Index x, Eigen::Index y) {
    return r.lifetimes[x] > r.lifetimes[y];
  });
  for (std::size_t i = 0; i < picked.size(); ++i) {
    std::string label(1, static_cast<char>('A' + i % 26));
    if (i >= 26) label += std::to_string(i / 26);
    seeds.push_back({label, picked[i]});
  }
  return seeds;
}

namespace {

const TrackedBranch& find_branch(const std::vector<TrackedBranch>& branches,
                                 const std::string& label) {
  for (const TrackedBranch& b : branches)
    if (b.label == label) return b;
  throw ConfigError("unknown branch label '" + label + "'");
}

const BranchPoint* point_at(const TrackedBranch& b, double eps) {
  for (const BranchPoint& p : b.path)
    if (p.epsilon == eps) return &p;
  return nullptr;
}

// Vertex of the parabola through three (x, y) points; falls back to the middle point.
double parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double d0 = (y1 - y0) / (x1 - x0);
  const double d1 = (y2 - y1) / (x2 - x1);
  const double c = (d1 - d0) / (x2 - x0);
  if (!(c > 0.0)) return x1;
  const double v = 0.5 * (x0 + x1) - d0 / (2.0 * c);
  return std::clamp(v, std::min(x0, x2), std::max(x0, x2));
}

}  // namespace

CrossingReport crossing_report(const SweepResult& sweep, const std::vector<TrackedBranch>& branches,
                               const std::string& a, const std::string& b,
                               std::optional<double> from, std::optional<double> to) {
  const TrackedBranch& A = find_branch(branches, a);
  const TrackedBranch& B = find_branch(branches, b);
  CrossingReport rep;
  rep.a = a;
  rep.b = b;
  for (const SweepPoint& sp : sweep.points) {
    const BranchPoint* pa = point_at(A, sp.epsilon);
    const BranchPoint* pb = point_at(B, sp.epsilon);
    if (!pa || !pb) continue;
    rep.epsilon.push_back(sp.epsilon);
    rep.gap.push_back(std::abs(pa->lambda - pb->lambda));
    rep.lifetime_a.push_back(pa->lifetime);
    rep.lifetime_b.push_back(pb->lifetime);
  }
  if (rep.epsilon.empty()) throw NumericalError("branches " + a + " and " + b + " share no points");

  const auto it = std::min_element(rep.gap.begin(), rep.gap.end());
  const std::size_t m = static_cast<std::size_t>(it - rep.gap.begin());
  rep.gap_min = *it;
  rep.gap_min_epsilon = rep.epsilon[m];
  if (m > 0 && m + 1 < rep.gap.size())
    rep.gap_min_epsilon = parabola_vertex(rep.epsilon[m - 1], rep.gap[m - 1], rep.epsilon[m],
                                          rep.gap[m], rep.epsilon[m + 1], rep.gap[m + 1]);

  rep.from_epsilon = from.value_or(rep.epsilon.front());
  rep.to_epsilon = to.value_or(rep.epsilon.back());
  const BranchPoint* a0 = point_at(A, rep.from_epsilon);
  const BranchPoint* a1 = point_at(A, rep.to_epsilon);
  const BranchPoint* b1 = point_at(B, rep.to_epsilon);
  if (!a0 || !a1 || !b1) throw NumericalError("exchange endpoints missing from branches");
  auto result_at = [&](double eps) -> const FloquetResult& {
    for (const SweepPoint& sp : sweep.points)
      if (sp.epsilon == eps) return *sp.result;
    throw NumericalError("sweep has no point at epsilon=" + format_epsilon(eps));
  };
  const VectorXc dA0 = result_at(rep.from_epsilon).dcoeffs.col(a0->beta);
  const FloquetResult& end = result_at(rep.to_epsilon);
  rep.same_overlap = c_overlap(dA0, end.dcoeffs.col(a1->beta));
  rep.cross_overlap = c_overlap(dA0, end.dcoeffs.col(b1->beta));
  rep.exchanged = rep.cross_overlap > rep.same_overlap;

  for (const TrackedBranch& other : branches) {
    if (other.label == a || other.label == b) continue;
    std::vector<double> series;
    for (double eps : rep.epsilon) {
      const BranchPoint* p = point_at(other, eps);
      series.push_back(p ? p->lifetime : std::numeric_limits<double>::quiet_NaN());
    }
    rep.bystanders.emplace_back(other.label, std::move(series));
  }
  return rep;
}

std::optional<std::string> exchange_partner(const SweepResult& sweep,
                                            const std::vector<TrackedBranch>& branches,
                                            const std::string& label, double from, double to) {
  const TrackedBranch& A = find_branch(branches, label);
  const BranchPoint* a0 = point_at(A, from);
  if (!a0) return std::nullopt;
  const FloquetResult* r0 = nullptr;
  const FloquetResult* r1 = nullptr;
  for (const SweepPoint& sp : sweep.points) {
    if (sp.epsilon == from && sp.result) r0 = &*sp.result;
    if (sp.epsilon == to && sp.result) r1 = &*sp.result;
  }
  if (!r0 || !r1) return std::nullopt;
  std::optional<std::string> best;
  double best_overlap = -1.0;
  for (const TrackedBranch& other : branches) {
    if (other.label == label) continue;
    const BranchPoint* b1 = point_at(other, to);
    if (!b1) continue;
    const double ov = c_overlap(r0->dcoeffs.col(a0->beta), r1->dcoeffs.col(b1->beta));
    if (ov > best_overlap) {
      best_overlap = ov;
      best = other.label;
    }
  }
  return best;
}

std::optional<std::pair<std::string, std::string>> closest_pair(
    const std::vector<TrackedBranch>& branches) {
  std::optional<std::pair<std::string, std::string>> best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < branches.size(); ++i)
    for (std::size_t j = i + 1; j < branches.size(); ++j)
      for (const BranchPoint& p : branches[i].path) {
        const BranchPoint* q = point_at(branches[j], p.epsilon);
        if (!q) continue;
        const double g = std::abs(p.lambda - q->lambda);
        if (g < best_gap) {
          best_gap = g;
          best = std::pair{branches[i].label, branches[j].label};
        }
      }
  return best;
}

}  // namespace ccfm

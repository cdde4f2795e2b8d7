#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ccfm/floquet.hpp"

namespace ccfm {

/// Field-strength sweep; every other run parameter is held fixed.
struct SweepSpec {
  std::vector<double> values;  // epsilon, strictly monotone
  int jobs = 1;                // points evaluated concurrently

  void validate() const;
};

/// The seven field strengths bracketing the A-B avoided crossing.
std::vector<double> crossing_sweep_values();

struct SweepPoint {
  double epsilon = 0.0;
  std::optional<FloquetResult> result;
  std::string error;  // set when the point failed
};

struct SweepResult {
  std::vector<SweepPoint> points;

  bool partial() const;
};

/// One Floquet pipeline per epsilon on the shared static eigenbasis. Failures
/// are recorded per point and the sweep continues.
SweepResult run_sweep(const StaticSpectrum& spectrum, const SystemParams& base,
                      const SweepSpec& sweep, const PropagatorSpec& propagator,
                      const ClassifierSpec& classifier = {});

using PointEvaluator = std::function<FloquetResult(const SystemParams&)>;

/// Same orchestration with a caller-supplied per-point pipeline.
SweepResult run_sweep(const SystemParams& base, const SweepSpec& sweep,
                      const PointEvaluator& evaluate);

/// |sum_i d_i d'_i| / (|d| |d'|): c-product magnitude scaled into [0, 1].
double c_overlap(const VectorXc& d1, const VectorXc& d2);

struct BranchPoint {
  double epsilon = 0.0;
  Eigen::Index beta = -1;
  Complex lambda;
  Complex quasienergy;
  double lifetime = 0.0;      // tau / T
  double step_overlap = 1.0;  // overlap with the previous point of the branch
  FloquetKind kind = FloquetKind::Continuum;
};

struct TrackedBranch {
  std::string label;
  std::vector<BranchPoint> path;
  std::string end_reason;  // empty while the branch spans the sweep
  std::vector<std::string> warnings;
};

struct BranchSeed {
  std::string label;
  Eigen::Index beta;  // Floquet index at the first sweep point
};

struct TrackingSpec {
  double mixing_threshold = 0.5;  // best step overlap below this is flagged
  double death_threshold = 0.2;   // best step overlap below this ends the branch
  double proximity_tie = 1e-6;    // overlaps closer than this are ranked by |dlambda|
};

/// Greedy bipartite matching between consecutive points by c-product overlap,
/// eigenvalue proximity breaking ties. Requires every point to have a result.
std::vector<TrackedBranch> track_branches(const SweepResult& sweep,
                                          const std::vector<BranchSeed>& seeds,
                                          const TrackingSpec& spec = {});

/// Seeds for every state at the first point labelled Resonance (and spiral-tested
/// Ambiguous ones when `include_ambiguous`), named A, B, C, ... by decreasing lifetime.
std::vector<BranchSeed> resonance_seeds(const SweepResult& sweep, bool include_ambiguous = false);

struct CrossingReport {
  std::string a;
  std::string b;
  std::vector<double> epsilon;
  std::vector<double> gap;  // |lambda_A - lambda_B|
  double gap_min_epsilon = 0.0;
  double gap_min = 0.0;
  std::vector<double> lifetime_a;
  std::vector<double> lifetime_b;
  double from_epsilon = 0.0;
  double to_epsilon = 0.0;
  double same_overlap = 0.0;   // |<A@from|A@to>|
  double cross_overlap = 0.0;  // |<A@from|B@to>|
  bool exchanged = false;      // cross_overlap > same_overlap
  std::vector<std::pair<std::string, std::vector<double>>> bystanders;  // lifetime series
};

/// Gap series with a parabolic-fit minimum, lifetimes, and the end-to-end
/// exchange verdict between `from` and `to` (defaults: first and last point).
CrossingReport crossing_report(const SweepResult& sweep, const std::vector<TrackedBranch>& branches,
                               const std::string& a, const std::string& b,
                               std::optional<double> from = std::nullopt,
                               std::optional<double> to = std::nullopt);

/// Branch (other than `label`) whose state at `to` has the largest overlap
/// with `label`'s state at `from`: the partner it exchanges structure with.
std::optional<std::string> exchange_partner(const SweepResult& sweep,
                                            const std::vector<TrackedBranch>& branches,
                                            const std::string& label, double from, double to);

/// Pair of live branches with the smallest gap anywhere in the sweep.
std::optional<std::pair<std::string, std::string>> closest_pair(
    const std::vector<TrackedBranch>& branches);

}  // namespace ccfm

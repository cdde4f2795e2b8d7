#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccfm/classical.hpp"
#include "ccfm/husimi.hpp"
#include "ccfm/scan.hpp"

namespace ccfm {

struct HusimiConfig {
  std::string state = "resonance:0";  // resonance:K, floquet:BETA or static:I
  double sigma = 0.0;                  // <= 0 uses the well-bottom coherent width
  bool auto_window = true;             // window from sigma and the periodic orbits
  double xmin = -30.0;
  double xmax = 30.0;
  double pmin = -3.0;
  double pmax = 3.0;
  int nx = 121;
  int np = 81;
  HusimiFrame frame = HusimiFrame::AsComputed;
  double saturation_cap = 1e6;
  double envelope_cutoff = 8.0;
  int peaks = 5;
};

struct StrobeConfig {
  int trajectories = 24;  // initial conditions on p = 0 over [0, x_extent]
  int periods = 300;
  double x_extent = 0.0;  // <= 0 uses the orbit seed extent
};

struct SweepConfig {
  std::vector<double> values = crossing_sweep_values();
  bool include_ambiguous = false;
  std::optional<double> exchange_from = 0.078;
  std::optional<double> exchange_to = 0.083;
  std::vector<std::string> pair;  // empty: longest-lived branch and its exchange partner
};

struct OutputConfig {
  std::string directory = "ccfm-out";
  std::string cache_directory;  // empty disables the Floquet-matrix cache
};

struct RunConfig {
  SystemParams system;
  BasisParams basis;
  ScalingParams scaling;
  QuadratureSpec quadrature;
  LabelThresholds labels;
  PropagatorSpec propagator;
  ClassifierSpec classifier;
  HusimiConfig husimi;
  ClassicalSpec classical;
  StrobeConfig strobe;
  SweepConfig sweep;
  TrackingSpec tracking;
  OutputConfig output;

  void validate() const;
};

using Json = nlohmann::ordered_json;

/// Fully resolved config as JSON; jobs settings are runtime-only and omitted.
Json config_to_json(const RunConfig& config);

/// Parses a complete or partial document over the defaults. Unknown keys and
/// wrongly typed values raise ConfigError.
RunConfig config_from_json(const Json& document);

/// Applies `dotted.path=value` overrides; value is parsed as JSON, else taken as a string.
void apply_overrides(Json& document, const std::vector<std::string>& overrides);

/// SHA-256 (hex) of the canonical serialisation of the resolved config.
std::string config_hash(const RunConfig& config);

/// Exit codes of the command-line front end.
enum ExitCode { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNumerical = 3, kExitPartial = 4 };

int run_cli(int argc, char** argv);

}  // namespace ccfm

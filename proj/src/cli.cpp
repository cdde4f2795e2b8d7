#include "ccfm/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "ccfm/parallel.hpp"

namespace ccfm {

namespace fs = std::filesystem;

namespace {

// Scalar <-> JSON for every field type appearing in RunConfig.
template <typename T>
Json encode(const T& v) {
  return Json(v);
}
Json encode(ScalingMode v) { return to_string(v); }
Json encode(PropagatorScheme v) { return to_string(v); }
Json encode(HusimiFrame v) { return to_string(v); }
Json encode(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

template <typename T>
void decode(const Json& j, T& v) {
  v = j.get<T>();
}
void decode(const Json& j, int& v) {
  if (!j.is_number_integer()) throw ConfigError("expected an integer");
  v = j.get<int>();
}
void decode(const Json& j, double& v) {
  if (!j.is_number()) throw ConfigError("expected a number");
  v = j.get<double>();
}
void decode(const Json& j, bool& v) {
  if (!j.is_boolean()) throw ConfigError("expected true or false");
  v = j.get<bool>();
}
void decode(const Json& j, std::string& v) {
  if (!j.is_string()) throw ConfigError("expected a string");
  v = j.get<std::string>();
}
void decode(const Json& j, ScalingMode& v) { v = scaling_mode_from_string(j.get<std::string>()); }
void decode(const Json& j, PropagatorScheme& v) {
  v = propagator_scheme_from_string(j.get<std::string>());
}
void decode(const Json& j, HusimiFrame& v) { v = husimi_frame_from_string(j.get<std::string>()); }
void decode(const Json& j, std::optional<double>& v) {
  if (j.is_null()) {
    v.reset();
    return;
  }
  double x;
  decode(j, x);
  v = x;
}

template <typename Visitor>
void visit_fields(RunConfig& c, Visitor&& f) {
  f("system", "V0", c.system.V0);
  f("system", "a", c.system.a);
  f("system", "omega", c.system.omega);
  f("system", "epsilon", c.system.epsilon);
  f("basis", "L", c.basis.L);
  f("basis", "N", c.basis.N);
  f("scaling", "mode", c.scaling.mode);
  f("scaling", "theta", c.scaling.theta);
  f("scaling", "xs", c.scaling.xs);
  f("scaling", "lambda", c.scaling.lambda);
  f("quadrature", "order", c.quadrature.order);
  f("quadrature", "panel_width", c.quadrature.panel_width);
  f("quadrature", "tolerance", c.quadrature.tolerance);
  f("quadrature", "check_convergence", c.quadrature.check_convergence);
  f("labels", "bound_imag", c.labels.bound_imag);
  f("labels", "partial_factor", c.labels.partial_factor);
  f("propagator", "steps_per_period", c.propagator.steps_per_period);
  f("propagator", "scheme", c.propagator.scheme);
  f("propagator", "tolerance", c.propagator.tolerance);
  f("propagator", "include_scalar_term", c.propagator.include_scalar_term);
  f("propagator", "use_parity_symmetry", c.propagator.use_parity_symmetry);
  f("propagator", "retained_states", c.propagator.retained_states);
  f("classifier", "spiral_threshold", c.classifier.spiral_threshold);
  f("classifier", "interior_min", c.classifier.interior_min);
  f("classifier", "interior_radius", c.classifier.interior_radius);
  f("classifier", "spiral_window", c.classifier.spiral_window);
  f("classifier", "spiral_floor", c.classifier.spiral_floor);
  f("husimi", "state", c.husimi.state);
  f("husimi", "sigma", c.husimi.sigma);
  f("husimi", "auto_window", c.husimi.auto_window);
  f("husimi", "xmin", c.husimi.xmin);
  f("husimi", "xmax", c.husimi.xmax);
  f("husimi", "pmin", c.husimi.pmin);
  f("husimi", "pmax", c.husimi.pmax);
  f("husimi", "nx", c.husimi.nx);
  f("husimi", "np", c.husimi.np);
  f("husimi", "frame", c.husimi.frame);
  f("husimi", "saturation_cap", c.husimi.saturation_cap);
  f("husimi", "envelope_cutoff", c.husimi.envelope_cutoff);
  f("husimi", "peaks", c.husimi.peaks);
  f("classical", "steps_per_period", c.classical.steps_per_period);
  f("classical", "strobe_phase", c.classical.strobe_phase);
  f("classical", "escape_bound", c.classical.escape_bound);
  f("classical", "newton_step", c.classical.newton_step);
  f("classical", "newton_tolerance", c.classical.newton_tolerance);
  f("classical", "newton_max_iterations", c.classical.newton_max_iterations);
  f("classical", "dedup_radius", c.classical.dedup_radius);
  f("classical", "seeds", c.classical.seeds);
  f("classical", "seed_extent", c.classical.seed_extent);
  f("strobe", "trajectories", c.strobe.trajectories);
  f("strobe", "periods", c.strobe.periods);
  f("strobe", "x_extent", c.strobe.x_extent);
  f("sweep", "values", c.sweep.values);
  f("sweep", "include_ambiguous", c.sweep.include_ambiguous);
  f("sweep", "exchange_from", c.sweep.exchange_from);
  f("sweep", "exchange_to", c.sweep.exchange_to);
  f("sweep", "pair", c.sweep.pair);
  f("tracking", "mixing_threshold", c.tracking.mixing_threshold);
  f("tracking", "death_threshold", c.tracking.death_threshold);
  f("tracking", "proximity_tie", c.tracking.proximity_tie);
  f("output", "directory", c.output.directory);
  f("output", "cache_directory", c.output.cache_directory);
}

}  // namespace

void RunConfig::validate() const {
  system.validate();
  basis.validate();
  scaling.validate();
  quadrature.validate();
  propagator.validate();
  classical.validate();
  if (!(classifier.spiral_threshold > 0.0)) throw ConfigError("classifier.spiral_threshold must be > 0");
  if (!(classifier.interior_min >= 0.0 && classifier.interior_min <= 1.0))
    throw ConfigError("classifier.interior_min must lie in [0, 1]");
  if (classifier.spiral_window < 3) throw ConfigError("classifier.spiral_window must be >= 3");
  if (husimi.sigma < 0.0) throw ConfigError("husimi.sigma must be >= 0");
  if (husimi.nx < 2 || husimi.np < 2) throw ConfigError("husimi.nx and husimi.np must be >= 2");
  if (!(husimi.xmax > husimi.xmin) || !(husimi.pmax > husimi.pmin))
    throw ConfigError("husimi window must have max > min");
  if (husimi.peaks < 0) throw ConfigError("husimi.peaks must be >= 0");
  if (strobe.trajectories < 0 || strobe.periods < 1)
    throw ConfigError("strobe.trajectories must be >= 0 and strobe.periods >= 1");
  SweepSpec{sweep.values, 1}.validate();
  if (!sweep.pair.empty() && sweep.pair.size() != 2)
    throw ConfigError("sweep.pair must name exactly two branches");
  if (!(tracking.death_threshold >= 0.0 && tracking.death_threshold <= tracking.mixing_threshold &&
        tracking.mixing_threshold <= 1.0))
    throw ConfigError("tracking thresholds must satisfy 0 <= death <= mixing <= 1");
  if (output.directory.empty()) throw ConfigError("output.directory must not be empty");
}

Json config_to_json(const RunConfig& config) {
  RunConfig copy = config;
  Json out = Json::object();
  visit_fields(copy, [&](const char* section, const char* key, auto& value) {
    out[section][key] = encode(value);
  });
  return out;
}

RunConfig config_from_json(const Json& document) {
  if (!document.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig config;
  const Json defaults = config_to_json(config);
  for (const auto& [section, body] : document.items()) {
    if (!defaults.contains(section)) throw ConfigError("unknown config section '" + section + "'");
    if (!body.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      (void)value;
      if (!defaults[section].contains(key))
        throw ConfigError("unknown config key '" + section + "." + key + "'");
    }
  }
  visit_fields(config, [&](const char* section, const char* key, auto& value) {
    if (!document.contains(section) || !document[section].contains(key)) return;
    try {
      decode(document[section][key], value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(section) + "." + key + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string(section) + "." + key + ": " + e.what());
    }
  });
  config.validate();
  return config;
}

void apply_overrides(Json& document, const std::vector<std::string>& overrides) {
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + item + "' is not path=value");
    const std::string path = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    Json* node = &document;
    std::stringstream parts(path);
    std::string part;
    std::vector<std::string> keys;
    while (std::getline(parts, part, '.')) keys.push_back(part);
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
      if (!node->is_object()) throw ConfigError("override path '" + path + "' crosses a value");
      node = &(*node)[keys[i]];
      if (node->is_null()) *node = Json::object();
    }
    if (!node->is_object()) throw ConfigError("override path '" + path + "' crosses a value");
    (*node)[keys.back()] = value;
  }
}

namespace {

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace

std::string config_hash(const RunConfig& config) { return sha256_hex(config_to_json(config).dump()); }

namespace {

// ---------------------------------------------------------------------------
// Output helpers

class Csv {
 public:
  Csv(const fs::path& path, const std::string& schema, const std::string& columns, bool human)
      : out_(path), human_(human) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << "# schema: " << schema << "\n" << columns << "\n";
  }

  Csv& num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, human_ ? "%.6g" : "%.16e", v);
    return field(buf);
  }
  Csv& integer(long v) { return field(std::to_string(v)); }
  Csv& text(const std::string& v) { return field(v); }
  void end() {
    out_ << "\n";
    first_ = true;
  }

 private:
  Csv& field(const std::string& s) {
    if (!first_) out_ << ",";
    out_ << s;
    first_ = false;
    return *this;
  }

  std::ofstream out_;
  bool human_;
  bool first_ = true;
};

struct Context {
  RunConfig config;
  std::string command;
  bool human = false;
  int jobs = 1;
  fs::path dir;
  Json outputs = Json::array();
  Json summary = Json::object();
  Json warnings = Json::array();

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return dir / name;
  }
};

Json conventions() {
  return Json{
      {"gamma", kGammaConvention},
      {"c_product", "sum_i a_i b_i without conjugation; overlaps reported as |a.b| / (|a| |b|)"},
      {"floquet_order", "states sorted by |lambda| descending"},
      {"classifier", "Resonance when both the spiral test and the interior-weight test fire, "
                     "Ambiguous when exactly one does"},
      {"branch_rules", "greedy matching of consecutive points by c-product overlap, ties within "
                       "tracking.proximity_tie broken by |dlambda|; warning below "
                       "tracking.mixing_threshold, branch ends below tracking.death_threshold"},
      {"husimi", "G(x0,p0) = |<x0,p0|psi>|^2 with a Gaussian coherent state of width sigma; "
                 "norm = integral G dx0 dp0 / (2 pi)"},
      {"csv_numbers", "%.16e (17 significant digits) unless --human"},
  };
}

void write_manifest(Context& ctx) {
  Json m;
  m["schema"] = "ccfm.manifest.v1";
  m["command"] = ctx.command;
  m["config_hash"] = config_hash(ctx.config);
  m["config"] = config_to_json(ctx.config);
  m["conventions"] = conventions();
  m["human_numbers"] = ctx.human;
  m["outputs"] = ctx.outputs;
  m["summary"] = ctx.summary;
  m["warnings"] = ctx.warnings;
  std::ofstream out(ctx.dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest");
  out << m.dump(2) << "\n";
}

Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

// ---------------------------------------------------------------------------
// Pipelines

StaticSpectrum compute_spectrum(const RunConfig& c) {
  return static_spectrum(c.system, c.basis, c.scaling, c.quadrature, c.labels);
}

std::string floquet_cache_key(const RunConfig& c, double epsilon) {
  RunConfig k;
  k.system = c.system;
  k.system.epsilon = epsilon;
  k.basis = c.basis;
  k.scaling = c.scaling;
  k.quadrature = c.quadrature;
  k.labels = c.labels;
  k.propagator = c.propagator;
  Json j = config_to_json(k);
  Json key = {{"system", j["system"]},         {"basis", j["basis"]},
              {"scaling", j["scaling"]},       {"quadrature", j["quadrature"]},
              {"propagator", j["propagator"]}, {"format", "U.v1"}};
  return sha256_hex(key.dump());
}

std::optional<MatrixXc> load_cached_matrix(const fs::path& path, Eigen::Index n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::int64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in || rows != n || cols != n) return std::nullopt;
  MatrixXc U(n, n);
  in.read(reinterpret_cast<char*>(U.data()), U.size() * sizeof(Complex));
  if (!in) return std::nullopt;
  return U;
}

void store_cached_matrix(const fs::path& path, const MatrixXc& U) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    const std::int64_t rows = U.rows(), cols = U.cols();
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    out.write(reinterpret_cast<const char*>(U.data()), U.size() * sizeof(Complex));
    if (!out) throw std::runtime_error("cannot write cache file " + tmp.string());
  }
  fs::rename(tmp, path);
}

FloquetResult compute_floquet(const RunConfig& c, const StaticSpectrum& spectrum,
                              const SystemParams& params, int jobs) {
  PropagatorSpec prop = c.propagator;
  prop.jobs = jobs;
  const SpectralDecomposition& decomp = spectrum.decomp;
  Eigen::Index nb = decomp.size();
  if (prop.retained_states > 0) nb = std::min<Eigen::Index>(nb, prop.retained_states);

  std::optional<MatrixXc> U;
  fs::path cache_file;
  if (!c.output.cache_directory.empty()) {
    cache_file = fs::path(c.output.cache_directory) / (floquet_cache_key(c, params.epsilon) + ".U");
    U = load_cached_matrix(cache_file, nb);
  }
  if (!U) {
    const MatrixXc C = decomp.coeffs.leftCols(nb);
    const MatrixXc p_eig = momentum_in_eigenbasis(C, spectrum.operators.p);
    const VectorXc E = decomp.energies.head(nb);
    std::vector<int> parity(decomp.parity.begin(), decomp.parity.begin() + nb);
    U = propagate_period(E, p_eig, params, prop, parity);
    if (!cache_file.empty()) store_cached_matrix(cache_file, *U);
  }
  FloquetResult result = floquet_eigen(*U, params.period(), params.omega);
  classify_resonances(result, decomp, spectrum.operators.basis, spectrum.operators.scaling,
                      c.classifier);
  return result;
}

void write_floquet_csv(const fs::path& path, const FloquetResult& r, bool human) {
  Csv csv(path, "ccfm.floquet.v1",
          "beta,re_lambda,im_lambda,abs_lambda,re_q,im_q,Omega,Gamma,tau_over_T,interior_weight,"
          "spiral_deviation,kind,defective",
          human);
  for (Eigen::Index b = 0; b < r.lambdas.size(); ++b) {
    csv.integer(b)
        .num(r.lambdas[b].real())
        .num(r.lambdas[b].imag())
        .num(std::abs(r.lambdas[b]))
        .num(r.quasienergies[b].real())
        .num(r.quasienergies[b].imag())
        .num(r.omegas[b])
        .num(r.gammas[b])
        .num(r.lifetimes[b])
        .num(r.interior_weight[b])
        .num(r.spiral_deviation[b])
        .text(to_string(r.labels[b]))
        .integer(r.defective[b] ? 1 : 0)
        .end();
  }
}

Json floquet_summary(const FloquetResult& r) {
  int res = 0, amb = 0;
  for (FloquetKind k : r.labels) {
    res += k == FloquetKind::Resonance;
    amb += k == FloquetKind::Ambiguous;
  }
  Json list = Json::array();
  for (Eigen::Index b : resonance_indices(r))
    list.push_back({{"beta", b}, {"lambda", complex_json(r.lambdas[b])}, {"tau_over_T", r.lifetimes[b]}});
  const MatrixXc G = r.U.adjoint() * r.U - MatrixXc::Identity(r.U.rows(), r.U.cols());
  return {{"resonances", res},
          {"ambiguous", amb},
          {"resonance_states", list},
          {"unitarity_defect", G.cwiseAbs().maxCoeff()}};
}

// Resonance indices ordered by decreasing lifetime.
std::vector<Eigen::Index> resonances_by_lifetime(const FloquetResult& r) {
  std::vector<Eigen::Index> idx = resonance_indices(r);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return r.lifetimes[a] > r.lifetimes[b]; });
  return idx;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_spectrum(Context& ctx) {
  const StaticSpectrum s = compute_spectrum(ctx.config);
  {
    Csv csv(ctx.file("spectrum.csv"), "ccfm.spectrum.v1",
            "index,re_E,im_E,kind,rotation_angle,parity,c_norm_quality,self_orthogonal", ctx.human);
    for (Eigen::Index i = 0; i < s.decomp.size(); ++i) {
      csv.integer(i)
          .num(s.decomp.energies[i].real())
          .num(s.decomp.energies[i].imag())
          .text(to_string(s.labels[i].kind))
          .num(s.labels[i].rotation_angle)
          .integer(s.decomp.parity.empty() ? 0 : s.decomp.parity[i])
          .num(s.decomp.c_norm_quality[i])
          .integer(s.decomp.self_orthogonal[i] ? 1 : 0)
          .end();
    }
  }
  int bound = 0, partial = 0;
  for (const auto& l : s.labels) {
    bound += l.kind == StateKind::Bound;
    partial += l.kind == StateKind::PartiallyScaled;
  }
  ctx.summary = {{"bound_states", bound},
                 {"partially_scaled_states", partial},
                 {"continuum_angle", s.continuum_angle},
                 {"max_residual", s.decomp.max_residual},
                 {"biorthogonality_defect", biorthogonality_defect(s.decomp)},
                 {"quadrature_change", s.operators.diagnostics.quadrature_change},
                 {"assembly_asymmetry", s.operators.diagnostics.asymmetry}};
  if (auto w = box_validity_warning(ctx.config.system, ctx.config.basis, ctx.config.scaling))
    ctx.warnings.push_back(*w);
  return kExitOk;
}

int cmd_floquet(Context& ctx) {
  const StaticSpectrum s = compute_spectrum(ctx.config);
  const FloquetResult r = compute_floquet(ctx.config, s, ctx.config.system, ctx.jobs);
  write_floquet_csv(ctx.file("floquet.csv"), r, ctx.human);
  ctx.summary = floquet_summary(r);
  return kExitOk;
}

struct SelectedState {
  VectorXc coeffs;
  Json description;
};

[[noreturn]] void unknown_state(const std::string& selector, const std::string& available) {
  throw ConfigError("unknown state selector '" + selector + "'; available: " + available);
}

SelectedState select_state(const std::string& selector, const StaticSpectrum& s,
                            const std::optional<FloquetResult>& r) {
  const auto colon = selector.find(':');
  const std::string kind = selector.substr(0, colon);
  long index = -1;
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      index = std::stol(selector.substr(colon + 1), &used);
      if (used != selector.size() - colon - 1) index = -1;
    } catch (const std::exception&) {
      index = -1;
    }
  }
  const long n = static_cast<long>(s.decomp.size());
  if (kind == "static") {
    if (index < 0 || index >= n)
      unknown_state(selector, "static:0.." + std::to_string(n - 1));
    return {s.decomp.coeffs.col(index),
            {{"selector", selector}, {"energy", complex_json(s.decomp.energies[index])},
             {"kind", to_string(s.labels[index].kind)}}};
  }
  if (kind == "floquet" || kind == "resonance") {
    const long nf = static_cast<long>(r->lambdas.size());
    if (kind == "floquet") {
      if (index < 0 || index >= nf) unknown_state(selector, "floquet:0.." + std::to_string(nf - 1));
    } else {
      const std::vector<Eigen::Index> res = resonances_by_lifetime(*r);
      if (index < 0 || index >= static_cast<long>(res.size())) {
        std::string list;
        for (std::size_t k = 0; k < res.size(); ++k) {
          std::ostringstream item;
          item << (k ? ", " : "") << "resonance:" << k << " (beta " << res[k] << ", tau/T "
               << r->lifetimes[res[k]] << ")";
          list += item.str();
        }
        unknown_state(selector, list.empty() ? "no resonances at this field strength" : list);
      }
      index = res[index];
    }
    return {floquet_state_coeffs(*r, s.decomp, index),
            {{"selector", selector},
             {"beta", index},
             {"lambda", complex_json(r->lambdas[index])},
             {"tau_over_T", r->lifetimes[index]},
             {"kind", to_string(r->labels[index])}}};
  }
  unknown_state(selector, "resonance:K, floquet:BETA, static:I");
}

std::vector<PeriodicOrbit> orbits_or_empty(const RunConfig& c, int jobs) {
  if (c.system.epsilon == 0.0) return {};
  ClassicalSpec spec = c.classical;
  spec.jobs = jobs;
  try {
    return find_periodic_orbits(c.system, spec);
  } catch (const NumericalError&) {
    return {};
  }
}

int cmd_husimi(Context& ctx) {
  const RunConfig& c = ctx.config;
  const StaticSpectrum s = compute_spectrum(c);
  const std::string& sel = c.husimi.state;
  std::optional<FloquetResult> r;
  if (sel.rfind("static", 0) != 0) r = compute_floquet(c, s, c.system, ctx.jobs);
  const SelectedState state = select_state(sel, s, r);

  const std::vector<PeriodicOrbit> orbits =
      r ? orbits_or_empty(c, ctx.jobs) : std::vector<PeriodicOrbit>{};
  HusimiSpec spec;
  if (c.husimi.auto_window) {
    std::vector<std::pair<double, double>> points;
    for (const PeriodicOrbit& o : orbits) points.emplace_back(o.point.x, o.point.p);
    spec = default_husimi_spec(c.system, points);
    spec.nx = c.husimi.nx;
    spec.np = c.husimi.np;
  } else {
    spec.xmin = c.husimi.xmin;
    spec.xmax = c.husimi.xmax;
    spec.pmin = c.husimi.pmin;
    spec.pmax = c.husimi.pmax;
    spec.nx = c.husimi.nx;
    spec.np = c.husimi.np;
    spec.sigma = default_sigma(c.system);
  }
  if (c.husimi.sigma > 0.0) spec.sigma = c.husimi.sigma;
  spec.frame = c.husimi.frame;
  spec.saturation_cap = c.husimi.saturation_cap;
  spec.envelope_cutoff = c.husimi.envelope_cutoff;
  spec.quadrature = c.quadrature;
  spec.jobs = ctx.jobs;

  const PhaseSpaceGrid g = husimi_grid(state.coeffs, c.basis, c.scaling, spec);
  {
    Csv csv(ctx.file("husimi.csv"), "ccfm.husimi.v1", "x0,p0,G,masked", ctx.human);
    for (Eigen::Index i = 0; i < g.x.size(); ++i)
      for (Eigen::Index j = 0; j < g.p.size(); ++j)
        csv.num(g.x[i]).num(g.p[j]).num(g.values(i, j)).integer(g.saturation_mask(i, j) ? 1 : 0).end();
  }
  const std::vector<GridPeak> peaks = peak_locations(g, c.husimi.peaks);
  {
    Csv csv(ctx.file("peaks.csv"), "ccfm.husimi_peaks.v1", "rank,x0,p0,G", ctx.human);
    for (std::size_t k = 0; k < peaks.size(); ++k)
      csv.integer(static_cast<long>(k)).num(peaks[k].x).num(peaks[k].p).num(peaks[k].value).end();
  }
  {
    Csv csv(ctx.file("orbits.csv"), "ccfm.orbits.v1", "x,p,traceJ,detJ,kind,residual", ctx.human);
    for (const PeriodicOrbit& o : orbits)
      csv.num(o.point.x).num(o.point.p).num(o.traceJ).num(o.detJ).text(to_string(o.kind)).num(o.residual).end();
  }
  ctx.summary = {{"state", state.description},
                 {"sigma", g.sigma},
                 {"frame", to_string(g.frame)},
                 {"norm", grid_norm(g)},
                 {"boundary_fraction", boundary_mass_fraction(g)},
                 {"masked_cells", g.mask_count()},
                 {"quadrature_change", g.quadrature_change}};
  if (g.mask_count() > 0)
    ctx.warnings.push_back(std::to_string(g.mask_count()) +
                           " cells masked where the back-rotated wavefunction saturates");
  return kExitOk;
}

int cmd_classical(Context& ctx) {
  const RunConfig& c = ctx.config;
  ClassicalSpec spec = c.classical;
  spec.jobs = ctx.jobs;
  const std::vector<PeriodicOrbit> orbits = find_periodic_orbits(c.system, spec);
  {
    Csv csv(ctx.file("orbits.csv"), "ccfm.orbits.v1", "x,p,traceJ,detJ,kind,residual", ctx.human);
    for (const PeriodicOrbit& o : orbits)
      csv.num(o.point.x).num(o.point.p).num(o.traceJ).num(o.detJ).text(to_string(o.kind)).num(o.residual).end();
  }
  double extent = c.strobe.x_extent;
  if (extent <= 0.0)
    extent = spec.seed_extent > 0.0 ? spec.seed_extent
                                    : std::max(2.5 * excursion_alpha(c.system), 2.0 * c.system.a);
  const int n = c.strobe.trajectories;
  std::vector<StrobeSeries> series(n);
  parallel_for(n, ctx.jobs, [&](long i) {
    const double x0 = n > 1 ? extent * static_cast<double>(i) / (n - 1) : 0.0;
    series[i] = strobe_map({x0, 0.0}, c.system, c.strobe.periods, spec);
  });
  int escaped = 0;
  {
    Csv csv(ctx.file("strobe.csv"), "ccfm.strobe.v1", "trajectory,n,x,p", ctx.human);
    for (int i = 0; i < n; ++i) {
      escaped += series[i].escaped;
      for (std::size_t k = 0; k < series[i].points.size(); ++k)
        csv.integer(i).integer(static_cast<long>(k)).num(series[i].points[k].x).num(series[i].points[k].p).end();
    }
  }
  ctx.summary = {{"alpha", excursion_alpha(c.system)},
                 {"orbits", orbits.size()},
                 {"escape_bound", escape_bound(c.system, spec)},
                 {"escaped_trajectories", escaped}};
  return kExitOk;
}

std::string epsilon_tag(double eps) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", eps);
  return buf;
}

int cmd_scan(Context& ctx) {
  const RunConfig& c = ctx.config;
  const StaticSpectrum s = compute_spectrum(c);
  SweepSpec sweep{c.sweep.values, std::min<int>(ctx.jobs, c.sweep.values.size())};
  const int inner = std::max(1, ctx.jobs / sweep.jobs);
  const SweepResult result = run_sweep(c.system, sweep, [&](const SystemParams& p) {
    return compute_floquet(c, s, p, inner);
  });

  Json points = Json::array();
  for (const SweepPoint& p : result.points) {
    Json entry = {{"epsilon", p.epsilon}};
    if (p.result) {
      const std::string name = "floquet_eps" + epsilon_tag(p.epsilon) + ".csv";
      write_floquet_csv(ctx.file(name), *p.result, ctx.human);
      entry["file"] = name;
      entry["resonances"] = resonance_indices(*p.result).size();
    } else {
      entry["error"] = p.error;
      ctx.warnings.push_back("epsilon=" + epsilon_tag(p.epsilon) + " failed: " + p.error);
    }
    points.push_back(entry);
  }
  ctx.summary["points"] = points;
  if (result.partial()) {
    ctx.summary["tracking"] = "skipped: sweep is partial";
    return kExitPartial;
  }

  const std::vector<BranchSeed> seeds = resonance_seeds(result, c.sweep.include_ambiguous);
  const std::vector<TrackedBranch> branches = track_branches(result, seeds, c.tracking);
  {
    Csv csv(ctx.file("branches.csv"), "ccfm.branches.v1",
            "label,epsilon,beta,re_lambda,im_lambda,tau_over_T,step_overlap,kind", ctx.human);
    for (const TrackedBranch& b : branches)
      for (const BranchPoint& p : b.path)
        csv.text(b.label).num(p.epsilon).integer(p.beta).num(p.lambda.real()).num(p.lambda.imag())
            .num(p.lifetime).num(p.step_overlap).text(to_string(p.kind)).end();
  }
  Json branch_json = Json::array();
  for (const TrackedBranch& b : branches) {
    branch_json.push_back({{"label", b.label}, {"points", b.path.size()}, {"end_reason", b.end_reason},
                           {"warnings", b.warnings}});
  }
  ctx.summary["branches"] = branch_json;

  std::string a, b;
  const double from = c.sweep.exchange_from.value_or(result.points.front().epsilon);
  const double to = c.sweep.exchange_to.value_or(result.points.back().epsilon);
  if (c.sweep.pair.size() == 2) {
    a = c.sweep.pair[0];
    b = c.sweep.pair[1];
  } else if (!branches.empty()) {
    a = branches.front().label;
    if (auto partner = exchange_partner(result, branches, a, from, to)) b = *partner;
  }
  if (a.empty() || b.empty()) {
    ctx.summary["crossing"] = "skipped: fewer than two branches";
    return kExitOk;
  }
  const CrossingReport rep = crossing_report(result, branches, a, b, from, to);
  {
    std::string columns = "epsilon,gap,tau_" + rep.a + ",tau_" + rep.b;
    for (const auto& [label, series] : rep.bystanders) columns += ",tau_" + label;
    Csv csv(ctx.file("crossing.csv"), "ccfm.crossing.v1", columns, ctx.human);
    for (std::size_t i = 0; i < rep.epsilon.size(); ++i) {
      csv.num(rep.epsilon[i]).num(rep.gap[i]).num(rep.lifetime_a[i]).num(rep.lifetime_b[i]);
      for (const auto& [label, series] : rep.bystanders) csv.num(series[i]);
      csv.end();
    }
  }
  {
    std::ofstream txt(ctx.file("crossing_report.txt"));
    char line[256];
    txt << "branches " << rep.a << " and " << rep.b << "\n";
    std::snprintf(line, sizeof line, "minimum gap %.6g at epsilon %.6g (parabolic fit)\n", rep.gap_min,
                  rep.gap_min_epsilon);
    txt << line;
    std::snprintf(line, sizeof line, "|<%s@%.6g|%s@%.6g>| = %.6g\n", rep.a.c_str(), rep.from_epsilon,
                  rep.a.c_str(), rep.to_epsilon, rep.same_overlap);
    txt << line;
    std::snprintf(line, sizeof line, "|<%s@%.6g|%s@%.6g>| = %.6g\n", rep.a.c_str(), rep.from_epsilon,
                  rep.b.c_str(), rep.to_epsilon, rep.cross_overlap);
    txt << line;
    txt << "structure exchanged: " << (rep.exchanged ? "yes" : "no") << "\n";
    for (const auto& [label, series] : rep.bystanders) {
      txt << "bystander " << label << " tau/T:";
      for (double v : series) {
        std::snprintf(line, sizeof line, " %.6g", v);
        txt << line;
      }
      txt << "\n";
    }
  }
  ctx.summary["crossing"] = {{"a", rep.a},
                             {"b", rep.b},
                             {"gap_min", rep.gap_min},
                             {"gap_min_epsilon", rep.gap_min_epsilon},
                             {"same_overlap", rep.same_overlap},
                             {"cross_overlap", rep.cross_overlap},
                             {"exchanged", rep.exchanged}};
  return kExitOk;
}

Json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  return doc;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Complex-scaled Floquet resonance simulator"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  int jobs = 1;
  bool human = false;
  std::string state;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"spectrum", "static complex-scaled eigenvalues and state labels"},
      {"floquet", "one-period Floquet matrix, eigenvalues and resonance labels"},
      {"husimi", "Husimi phase-space grid of a selected state"},
      {"classical", "periodic orbits and strobe map of the classical drive"},
      {"scan", "field-strength sweep, branch tracking and crossing report"},
      {"validate", "check the configuration and print it fully resolved"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "JSON config (defaults to $CCFM_CONFIG if set)");
    sub->add_option("--set", overrides, "override a config key: dotted.path=value")->take_all();
    sub->add_option("-j,--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--human", human, "round CSV numbers for reading");
    if (name == "husimi") sub->add_option("--state", state, "resonance:K, floquet:BETA or static:I");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig config;
  try {
    if (config_path.empty()) {
      if (const char* env = std::getenv("CCFM_CONFIG")) config_path = env;
    }
    Json doc = config_path.empty() ? Json::object() : read_config_file(config_path);
    if (!state.empty()) overrides.push_back("husimi.state=\"" + state + "\"");
    apply_overrides(doc, overrides);
    config = config_from_json(doc);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  if (command == "validate") {
    std::cout << config_to_json(config).dump(2) << "\n"
              << "config_hash " << config_hash(config) << "\n";
    return kExitOk;
  }

  Context ctx;
  ctx.config = config;
  ctx.command = command;
  ctx.human = human;
  ctx.jobs = jobs;
  ctx.dir = config.output.directory;
  int code = kExitOk;
  try {
    fs::create_directories(ctx.dir);
    if (command == "spectrum") code = cmd_spectrum(ctx);
    else if (command == "floquet") code = cmd_floquet(ctx);
    else if (command == "husimi") code = cmd_husimi(ctx);
    else if (command == "classical") code = cmd_classical(ctx);
    else code = cmd_scan(ctx);
    write_manifest(ctx);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  for (const auto& w : ctx.warnings) std::cerr << "warning: " << w.get<std::string>() << "\n";
  std::cout << ctx.dir.string() << "/manifest.json\n";
  return code;
}

}  // namespace ccfm

#include "fpu/scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "fpu/error.hpp"
#include "fpu/experiments.hpp"
#include "fpu/plot.hpp"

namespace fpu {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

enum class KeyType { Number, Integer, String, List };

struct KeyDef {
  const char* key;
  KeyType type;
  const char* def;
  const char* description;
  std::vector<std::string> choices;
};

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      {"scenario.kind", KeyType::String, "OrbitalStability", "scenario pipeline",
       {"OrbitalStability", "LinearizedFPUDecay", "LinearizedKdVDecay", "BacklundAudit", "SolitonResolution",
        "DispersionAudit"}},
      {"model.potential", KeyType::String, "alpha-fpu", "lattice potential", {"alpha-fpu", "toda"}},
      {"train.eps", KeyType::Number, "0.2", "small parameter eps", {}},
      {"train.k", KeyType::List, "1,2", "KdV wave numbers k_1 < ... < k_N", {}},
      {"train.separation", KeyType::Number, "12", "scaled separation eps (x_{i+1} - x_i)", {}},
      {"train.first_position", KeyType::Number, "400", "initial crest of the slowest wave", {}},
      {"window.sites", KeyType::Integer, "4000", "lattice window length", {}},
      {"perturbation.shape", KeyType::String, "gaussian-bump", "shape of v0",
       {"gaussian-bump", "single-site", "band-limited-noise"}},
      {"perturbation.delta0", KeyType::Number, "0.1", "delta_0", {}},
      {"perturbation.amplitude", KeyType::Number, "0.3", "||v0|| in units of delta_0 eps^2", {}},
      {"perturbation.seed", KeyType::Integer, "1", "seed for random shapes", {}},
      {"perturbation.offset", KeyType::Number, "30", "center of v0 relative to the slowest crest", {}},
      {"perturbation.width", KeyType::Number, "5", "width of v0 in sites", {}},
      {"evolve.t_end", KeyType::Number, "3000", "final time", {}},
      {"evolve.dt", KeyType::Number, "0.1", "time step", {}},
      {"evolve.scheme", KeyType::String, "symplectic", "time stepper", {"symplectic", "rk4"}},
      {"evolve.track_every", KeyType::Number, "10", "time between tracked samples", {}},
      {"linear.t_end", KeyType::Number, "1000", "final time of the linearized run", {}},
      {"linear.dt", KeyType::Number, "0.1", "linearized time step", {}},
      {"linear.chunk", KeyType::Number, "10", "time between re-projections and window shifts", {}},
      {"linear.fit_from", KeyType::Number, "0.5", "fraction of t_end where the fit starts", {}},
      {"linear.data_offset", KeyType::Number, "-5", "data center relative to the slowest crest", {}},
      {"linear.data_width", KeyType::Number, "4", "data width in sites", {}},
      {"kdv.k", KeyType::List, "0.5,1", "KdV wave numbers", {}},
      {"kdv.gamma", KeyType::List, "0,0", "KdV phases", {}},
      {"kdv.a", KeyType::Number, "0.4", "weight exponent a", {}},
      {"kdv.c", KeyType::Number, "0", "frame speed (0 selects 4 k_1^2)", {}},
      {"kdv.x0", KeyType::Number, "0", "frame origin", {}},
      {"kdv.t_end", KeyType::Number, "20", "final time", {}},
      {"kdv.fit_start", KeyType::Number, "2", "start of the fit window", {}},
      {"kdv.dt", KeyType::Number, "0.002", "time step", {}},
      {"kdv.dx", KeyType::Number, "0.1", "grid spacing", {}},
      {"kdv.left", KeyType::Number, "-100", "left end of the grid", {}},
      {"kdv.right", KeyType::Number, "160", "right end of the grid", {}},
      {"kdv.reproject_every", KeyType::Integer, "100", "steps between secular re-projections", {}},
      {"backlund.draws", KeyType::Integer, "20", "random families", {}},
      {"backlund.max_n", KeyType::Integer, "4", "largest N (draws cycle through 1..max_n)", {}},
      {"backlund.times", KeyType::List, "0,1,10", "residual times", {}},
      {"backlund.k_min", KeyType::Number, "0.3", "smallest k", {}},
      {"backlund.k_max", KeyType::Number, "3", "largest k", {}},
      {"backlund.gamma_range", KeyType::Number, "2", "phases drawn from [-range, range]", {}},
      {"backlund.fields", KeyType::Integer, "20", "random fields per level", {}},
      {"backlund.seed", KeyType::Integer, "7", "seed", {}},
      {"resolution.k", KeyType::List, "1,2", "KdV wave numbers", {}},
      {"resolution.gamma", KeyType::List, "0,0", "KdV phases", {}},
      {"resolution.times", KeyType::List, "5,10,15,20", "sample times", {}},
      {"resolution.dx", KeyType::Number, "0.025", "grid spacing", {}},
      {"resolution.phase_time", KeyType::Number, "5", "time of the crest measurement", {}},
      {"resolution.phase_weight", KeyType::String, "full", "pairwise sum weighted by 1/k_i (full) or 1/(2k_i) (half)",
       {"full", "half"}},
      {"dispersion.eps", KeyType::List, "0.05,0.1,0.2", "eps values", {}},
      {"dispersion.a", KeyType::Number, "0", "weight (0 selects k_1)", {}},
      {"dispersion.k1", KeyType::Number, "1", "k_1", {}},
      {"dispersion.K", KeyType::Number, "2", "low-band cut K", {}},
      {"dispersion.delta", KeyType::Number, "1", "high-band cut delta", {}},
      {"dispersion.points", KeyType::Integer, "10000", "eta grid size", {}},
      {"dispersion.high_band", KeyType::String, "half-angle",
       "high-band constant 1 - cos(delta/2) (half-angle) or 1 - cos(delta) (full-angle)", {"half-angle", "full-angle"}},
      {"dispersion.tail_eps", KeyType::List, "0.2,0.25,0.3,0.4,0.5", "eps values of the transform tail fit", {}},
      {"tolerance.orbital_A", KeyType::Number, "10", "deviation <= A (||v0|| + eps^1.5 e^{-k_1 L})", {}},
      {"tolerance.speed_variation", KeyType::Number, "0.001", "final speed variation <= value * eps^2", {}},
      {"tolerance.lfpu_rate", KeyType::Number, "0.05", "linearized lattice decay rate >= value * eps^3", {}},
      {"tolerance.kdv_ratio_min", KeyType::Number, "0.9", "lower bound of rate / a(c - a^2)", {}},
      {"tolerance.kdv_ratio_max", KeyType::Number, "1.5", "upper bound of rate / a(c - a^2)", {}},
      {"tolerance.airy_rate", KeyType::Number, "-0.1125", "Airy baseline rate upper bound", {}},
      {"tolerance.backlund_residual", KeyType::Number, "1e-8", "ladder residual bound", {}},
      {"tolerance.wrong_phase", KeyType::Number, "0.01", "wrong-phase residual lower bound", {}},
      {"tolerance.roundtrip", KeyType::Number, "1e-6", "relative round-trip bound", {}},
      {"tolerance.orthogonality", KeyType::Number, "1e-8", "relative orthogonality bound", {}},
      {"tolerance.phase", KeyType::Number, "1e-12", "asymptotic phase bound", {}},
      {"tolerance.symbol_spread", KeyType::Number, "2", "max/min of eps^2 sup|m|", {}},
      {"tolerance.tail_r2", KeyType::Number, "0.99", "R^2 of the transform tail fit", {}},
  };
  return defs;
}

const KeyDef& key_def(const std::string& key) {
  for (const auto& d : key_defs())
    if (key == d.key) return d;
  throw ConfigError("unknown config key: " + key);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_number(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + v + "'");
  }
  if (pos != v.size() || !std::isfinite(x)) throw ConfigError(key + ": not a number: '" + v + "'");
  return x;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_number(key, trim(item)));
  return out;
}

void check_value(const KeyDef& d, const std::string& v) {
  switch (d.type) {
    case KeyType::Number: to_number(d.key, v); break;
    case KeyType::Integer: {
      const double x = to_number(d.key, v);
      if (x != std::floor(x) || x < 0) throw ConfigError(std::string(d.key) + ": expected a nonnegative integer");
      break;
    }
    case KeyType::List: to_list(d.key, v); break;
    case KeyType::String:
      if (!d.choices.empty() && std::find(d.choices.begin(), d.choices.end(), v) == d.choices.end())
        throw ConfigError(std::string(d.key) + ": invalid value '" + v + "'");
      break;
  }
}

// ---- output helpers ----

std::string fmt(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    rows_.push_back(std::move(s));
  }
  void row_text(const std::string& s) { rows_.push_back(s); }
  void write(const fs::path& p) const {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write " + p.string());
    for (std::size_t i = 0; i < header_.size(); ++i) f << (i ? "," : "") << header_[i];
    f << '\n';
    for (const auto& r : rows_) f << r << '\n';
    if (!f) throw IoError("write failed: " + p.string());
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  f << s;
  if (!f) throw IoError("write failed: " + p.string());
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Check make_check(const std::string& name, double value, const std::string& rel, double limit) {
  bool ok = false;
  if (rel == "<=") ok = value <= limit;
  else if (rel == ">=") ok = value >= limit;
  else if (rel == "<") ok = value < limit;
  else if (rel == ">") ok = value > limit;
  else if (rel == "==") ok = value == limit;
  return Check{name, value, rel, limit, ok && std::isfinite(value)};
}

PlotSeries fit_line_series(const std::string& name, const std::vector<double>& t, const DecayFit& f) {
  PlotSeries s{name, {}, {}, true};
  for (double x : t) {
    s.x.push_back(x);
    s.y.push_back(std::exp(f.intercept + f.rate * x));
  }
  return s;
}

std::vector<double> tail_from(const std::vector<double>& t, double t0) {
  std::vector<double> out;
  for (double x : t)
    if (x >= t0 - 1e-12) out.push_back(x);
  return out;
}

json fit_json(const DecayFit& f) { return {{"rate", f.rate}, {"intercept", f.intercept}, {"r2", f.r2}, {"samples", f.samples}}; }

struct Run {
  std::vector<Check> checks;
  json results = json::object();
  std::map<std::string, double> fitted;
  std::vector<std::string> files;
};

PotentialModel model_of(const Config& c) { return parse_potential(c.text("model.potential")); }

Run run_orbital_scenario(const Config& c, const fs::path& dir) {
  OrbitalConfig oc;
  oc.model = model_of(c);
  oc.eps = c.number("train.eps");
  oc.k = c.numbers("train.k");
  oc.scaled_separation = c.number("train.separation");
  oc.first_position = c.number("train.first_position");
  oc.window = static_cast<std::size_t>(c.integer("window.sites"));
  oc.shape = parse_shape(c.text("perturbation.shape"));
  oc.delta0 = c.number("perturbation.delta0");
  oc.amplitude = c.number("perturbation.amplitude");
  oc.seed = static_cast<std::uint64_t>(c.integer("perturbation.seed"));
  oc.perturbation_offset = c.number("perturbation.offset");
  oc.perturbation_width = c.number("perturbation.width");
  oc.t_end = c.number("evolve.t_end");
  oc.dt = c.number("evolve.dt");
  oc.scheme = c.text("evolve.scheme") == "rk4" ? Scheme::RK4 : Scheme::Symplectic2;
  oc.track_every = c.number("evolve.track_every");
  const auto r = run_orbital(oc);

  Run run;
  const std::size_t N = oc.k.size();
  std::vector<std::string> hdr{"t"};
  for (std::size_t i = 0; i < N; ++i) hdr.push_back("c" + std::to_string(i + 1));
  for (std::size_t i = 0; i < N; ++i) hdr.push_back("x" + std::to_string(i + 1));
  for (const char* h : {"deviation", "v_norm", "energy"}) hdr.push_back(h);
  Csv csv(hdr);
  for (std::size_t j = 0; j < r.track.times.size(); ++j) {
    std::vector<double> row{r.track.times[j]};
    for (double v : r.track.states[j].params.c) row.push_back(v);
    for (double v : r.track.states[j].params.x) row.push_back(v);
    row.push_back(r.deviation[j]);
    row.push_back(r.v_norm[j]);
    row.push_back(r.energy[j]);
    csv.row(row);
  }
  csv.write(dir / "track.csv");
  const double A = c.number("tolerance.orbital_A");
  PlotSpec ps{"Tracked deviation", "t", "l2 norm", true, {}};
  ps.series.push_back({"deviation", r.track.times, r.deviation, false});
  ps.series.push_back({"||v||", r.track.times, r.v_norm, false});
  ps.series.push_back({"bound", r.track.times, std::vector<double>(r.track.times.size(), A * r.bound_scale), true});
  write_svg((dir / "deviation.svg").string(), ps);
  run.files = {"track.csv", "deviation.svg"};

  const double eps = oc.eps;
  const double var = *std::max_element(r.speed_variation.begin(), r.speed_variation.end());
  const double drift = *std::max_element(r.max_speed_drift.begin(), r.max_speed_drift.end());
  run.checks.push_back(make_check("max deviation", r.max_deviation, "<=", A * r.bound_scale));
  run.checks.push_back(make_check("final speed variation", var, "<=", c.number("tolerance.speed_variation") * eps * eps));
  run.checks.push_back(make_check("speed and position ordering", r.ordering_preserved ? 1.0 : 0.0, "==", 1.0));
  run.fitted = {{"A", r.fitted_A},
                {"max_deviation", r.max_deviation},
                {"v0_norm", r.v0_norm},
                {"max_speed_variation", var},
                {"max_c_drift", drift},
                {"max_boundary_mass", r.max_boundary_mass}};
  run.results["initial"] = {{"c", r.initial.c}, {"x", r.initial.x}};
  run.results["c_plus"] = r.track.c_plus;
  run.results["speed_variation"] = r.speed_variation;
  run.results["max_c_drift"] = r.max_speed_drift;
  run.results["bound_scale"] = r.bound_scale;
  return run;
}

Run run_lfpu_scenario(const Config& c, const fs::path& dir) {
  LinearFpuConfig lc;
  lc.model = model_of(c);
  lc.eps = c.number("train.eps");
  lc.k = c.numbers("train.k");
  lc.scaled_separation = c.number("train.separation");
  lc.t_end = c.number("linear.t_end");
  lc.dt = c.number("linear.dt");
  lc.chunk = c.number("linear.chunk");
  lc.fit_from = c.number("linear.fit_from");
  lc.data_offset = c.number("linear.data_offset");
  lc.data_width = c.number("linear.data_width");
  const auto r = run_linear_fpu(lc);
  Run run;
  Csv csv({"t", "weighted_norm"});
  for (std::size_t j = 0; j < r.t.size(); ++j) csv.row({r.t[j], r.norm[j]});
  csv.write(dir / "decay.csv");
  PlotSpec ps{"Linearized lattice flow", "t", "weighted norm", true, {}};
  ps.series.push_back({"norm", r.t, r.norm, false});
  ps.series.push_back(fit_line_series("fit", tail_from(r.t, lc.fit_from * lc.t_end), r.fit));
  write_svg((dir / "decay.svg").string(), ps);
  run.files = {"decay.csv", "decay.svg"};
  const double e3 = lc.eps * lc.eps * lc.eps;
  run.checks.push_back(make_check("decay rate / eps^3", r.rate_over_eps3, ">=", c.number("tolerance.lfpu_rate")));
  run.fitted = {{"rate", r.fit.rate}, {"rate_over_eps3", r.rate_over_eps3}, {"r2", r.fit.r2}};
  run.results["fit"] = fit_json(r.fit);
  run.results["free_bound_over_eps3"] = r.free_bound_over_eps3;
  run.results["eps3"] = e3;
  return run;
}

Run run_kdv_scenario(const Config& c, const fs::path& dir) {
  KdvDecayConfig kc;
  kc.k = c.numbers("kdv.k");
  kc.gamma = c.numbers("kdv.gamma");
  kc.a = c.number("kdv.a");
  kc.c = c.number("kdv.c");
  kc.x0 = c.number("kdv.x0");
  kc.t_end = c.number("kdv.t_end");
  kc.fit_start = c.number("kdv.fit_start");
  kc.dt = c.number("kdv.dt");
  kc.dx = c.number("kdv.dx");
  kc.left = c.number("kdv.left");
  kc.right = c.number("kdv.right");
  kc.reproject_every = static_cast<std::size_t>(c.integer("kdv.reproject_every"));
  const auto r = run_kdv_decay(kc);
  Run run;
  Csv csv({"t", "weighted_norm", "airy_weighted_norm"});
  for (std::size_t j = 0; j < r.t.size(); ++j) csv.row({r.t[j], r.norm[j], r.airy_norm[j]});
  csv.write(dir / "decay.csv");
  PlotSpec ps{"Linearized KdV flow", "t", "weighted norm", true, {}};
  ps.series.push_back({"linearized", r.t, r.norm, false});
  ps.series.push_back({"Airy", r.t, r.airy_norm, false});
  ps.series.push_back(fit_line_series("fit", tail_from(r.t, kc.fit_start), r.fit));
  write_svg((dir / "decay.svg").string(), ps);
  run.files = {"decay.csv", "decay.svg"};
  run.checks.push_back(make_check("rate / a(c - a^2) lower", r.ratio, ">=", c.number("tolerance.kdv_ratio_min")));
  run.checks.push_back(make_check("rate / a(c - a^2) upper", r.ratio, "<=", c.number("tolerance.kdv_ratio_max")));
  run.checks.push_back(make_check("Airy baseline rate", r.airy_fit.rate, "<=", c.number("tolerance.airy_rate")));
  run.fitted = {{"rate", r.fit.rate}, {"ratio", r.ratio}, {"airy_rate", r.airy_fit.rate}, {"r2", r.fit.r2}};
  run.results["fit"] = fit_json(r.fit);
  run.results["airy_fit"] = fit_json(r.airy_fit);
  run.results["target"] = r.target;
  return run;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + fmt(v[i]);
  return s;
}

Run run_backlund_scenario(const Config& c, const fs::path& dir) {
  BacklundAuditConfig bc;
  bc.draws = static_cast<std::size_t>(c.integer("backlund.draws"));
  bc.max_n = static_cast<std::size_t>(c.integer("backlund.max_n"));
  bc.times = c.numbers("backlund.times");
  bc.k_min = c.number("backlund.k_min");
  bc.k_max = c.number("backlund.k_max");
  bc.gamma_range = c.number("backlund.gamma_range");
  bc.fields = static_cast<std::size_t>(c.integer("backlund.fields"));
  bc.seed = static_cast<std::uint64_t>(c.integer("backlund.seed"));
  const auto r = run_backlund_audit(bc);
  Run run;
  Csv csv({"draw", "N", "k", "gamma", "residual", "wrong_phase", "forward_inverse", "inverse_forward", "orthogonality"});
  PlotSpec ps{"Backlund audit", "draw", "value", true, {}};
  PlotSeries res{"residual", {}, {}, false}, rt{"round trip", {}, {}, false}, orth{"orthogonality", {}, {}, false};
  for (std::size_t j = 0; j < r.draws.size(); ++j) {
    const auto& d = r.draws[j];
    csv.row_text(std::to_string(j) + "," + std::to_string(d.family.size()) + "," + join(d.family.k) + "," +
                 join(d.family.gamma) + "," + fmt(d.max_residual) + "," + fmt(d.wrong_phase) + "," +
                 fmt(d.forward_inverse) + "," + fmt(d.inverse_forward) + "," + fmt(d.orthogonality));
    const double x = static_cast<double>(j);
    res.x.push_back(x);
    res.y.push_back(d.max_residual);
    rt.x.push_back(x);
    rt.y.push_back(std::max(d.forward_inverse, d.inverse_forward));
    orth.x.push_back(x);
    orth.y.push_back(d.orthogonality);
  }
  csv.write(dir / "draws.csv");
  ps.series = {res, rt, orth};
  write_svg((dir / "audit.svg").string(), ps);
  run.files = {"draws.csv", "audit.svg"};
  const double rtmax = std::max(r.max_forward_inverse, r.max_inverse_forward);
  run.checks.push_back(make_check("ladder residual", r.max_residual, "<=", c.number("tolerance.backlund_residual")));
  if (r.min_wrong_phase >= 0.0)
    run.checks.push_back(make_check("wrong-phase residual", r.min_wrong_phase, ">=", c.number("tolerance.wrong_phase")));
  run.checks.push_back(make_check("round trip", rtmax, "<=", c.number("tolerance.roundtrip")));
  run.checks.push_back(make_check("output orthogonality", r.max_orthogonality, "<=", c.number("tolerance.orthogonality")));
  run.fitted = {{"max_residual", r.max_residual},
                {"min_wrong_phase", r.min_wrong_phase},
                {"max_roundtrip", rtmax},
                {"max_orthogonality", r.max_orthogonality}};
  run.results["max_forward_inverse"] = r.max_forward_inverse;
  run.results["max_inverse_forward"] = r.max_inverse_forward;
  return run;
}

Run run_resolution_scenario(const Config& c, const fs::path& dir) {
  ResolutionConfig rc;
  rc.k = c.numbers("resolution.k");
  rc.gamma = c.numbers("resolution.gamma");
  rc.times = c.numbers("resolution.times");
  rc.dx = c.number("resolution.dx");
  rc.phase_time = c.number("resolution.phase_time");
  const auto r = run_resolution(rc);
  const bool half = c.text("resolution.phase_weight") == "half";
  const auto& sup = half ? r.sup_remainder_half : r.sup_remainder;
  const auto& fit = half ? r.fit_half : r.fit;
  const auto& phases = half ? r.half_phases : r.phases;
  const double perr = half ? r.half_phase_error : r.phase_error;
  Run run;
  Csv csv({"t", "sup_remainder_full", "sup_remainder_half"});
  for (std::size_t j = 0; j < r.times.size(); ++j) csv.row({r.times[j], r.sup_remainder[j], r.sup_remainder_half[j]});
  csv.write(dir / "remainder.csv");
  Csv pc({"i", "k", "phase_full", "phase_half", "measured"});
  for (std::size_t i = 0; i < rc.k.size(); ++i)
    pc.row({static_cast<double>(i + 1), rc.k[i], r.phases[i], r.half_phases[i], r.measured[i]});
  pc.write(dir / "phases.csv");
  PlotSpec ps{"Soliton resolution remainder", "t", "sup remainder", true, {}};
  ps.series.push_back({"remainder", r.times, sup, false});
  ps.series.push_back(fit_line_series("fit", r.times, fit));
  write_svg((dir / "remainder.svg").string(), ps);
  run.files = {"remainder.csv", "phases.csv", "remainder.svg"};
  run.checks.push_back(make_check("remainder decay rate", fit.rate, "<", 0.0));
  run.checks.push_back(make_check("phase error", perr, "<=", c.number("tolerance.phase")));
  run.fitted = {{"rate", fit.rate}, {"phase_error", perr}};
  run.results["phases"] = phases;
  run.results["measured"] = r.measured;
  run.results["fit"] = fit_json(fit);
  return run;
}

Run run_dispersion_scenario(const Config& c, const fs::path& dir) {
  DispersionAuditConfig dc;
  dc.eps = c.numbers("dispersion.eps");
  dc.a = c.number("dispersion.a");
  dc.k1 = c.number("dispersion.k1");
  dc.K = c.number("dispersion.K");
  dc.delta = c.number("dispersion.delta");
  dc.points = static_cast<std::size_t>(c.integer("dispersion.points"));
  dc.half_angle_high_band = c.text("dispersion.high_band") == "half-angle";
  dc.tail_eps = c.numbers("dispersion.tail_eps");
  dc.family = SolitonFamily{{dc.k1}, {0.0}};
  const auto r = run_dispersion_audit(dc);
  Run run;
  Csv mc({"eps", "cubic_constant", "margin_cubic", "margin_quadratic", "margin_high", "margin_high_half",
          "margin_minus", "worst_eta_high", "symbol"});
  double worst[5] = {INFINITY, INFINITY, INFINITY, INFINITY, INFINITY};
  for (std::size_t j = 0; j < r.reports.size(); ++j) {
    const auto& d = r.reports[j];
    mc.row({d.eps, d.cubic_constant, d.margin_cubic, d.margin_quadratic, d.margin_high, d.margin_high_half,
            d.margin_minus, d.worst_eta_high, r.symbol[j]});
    const double m[5] = {d.margin_cubic, d.margin_quadratic, d.margin_high, d.margin_high_half, d.margin_minus};
    for (int q = 0; q < 5; ++q) worst[q] = std::min(worst[q], m[q]);
  }
  mc.write(dir / "margins.csv");
  Csv tc({"eps", "max_ft_difference"});
  PlotSeries ts{"max |FT difference|", {}, {}, false};
  for (const auto& p : r.tail.tail) {
    tc.row({p.eps, p.max_diff});
    ts.x.push_back(1.0 / p.eps);
    ts.y.push_back(p.max_diff);
  }
  tc.write(dir / "tail.csv");
  PlotSeries tf{"fit", {}, {}, true};
  for (double x : ts.x) {
    tf.x.push_back(x);
    tf.y.push_back(std::exp(r.tail.fit.intercept + r.tail.fit.slope * x));
  }
  write_svg((dir / "tail.svg").string(), PlotSpec{"Transform tail", "1/eps", "difference", true, {ts, tf}});
  run.files = {"margins.csv", "tail.csv", "tail.svg"};
  const double high = dc.half_angle_high_band ? worst[3] : worst[2];
  run.checks.push_back(make_check("cubic expansion margin", worst[0], ">=", 0.0));
  run.checks.push_back(make_check("quadratic band margin", worst[1], ">", 0.0));
  run.checks.push_back(make_check("high band margin", high, ">", 0.0));
  run.checks.push_back(make_check("lambda_- margin", worst[4], ">", 0.0));
  run.checks.push_back(make_check("symbol spread", r.symbol_spread, "<=", c.number("tolerance.symbol_spread")));
  run.checks.push_back(make_check("tail slope", r.tail.fit.slope, "<", 0.0));
  run.checks.push_back(make_check("tail R^2", r.tail.fit.r2, ">=", c.number("tolerance.tail_r2")));
  run.fitted = {{"margin_cubic", worst[0]},      {"margin_quadratic", worst[1]},
                {"margin_high", worst[2]},       {"margin_high_half", worst[3]},
                {"margin_minus", worst[4]},      {"symbol_spread", r.symbol_spread},
                {"tail_slope", r.tail.fit.slope}, {"tail_r2", r.tail.fit.r2}};
  run.results["symbol"] = r.symbol;
  json cub = json::array();
  for (const auto& d : r.reports) cub.push_back({{"eps", d.eps}, {"cubic_constant", d.cubic_constant}});
  run.results["cubic_constants"] = cub;
  return run;
}

json module_versions() {
  json m;
  for (const char* mod : {"lattice_core", "integrators", "kdv_solitons", "backlund", "fpu_waves", "modulation",
                          "diagnostics", "cli"})
    m[mod] = kVersion;
  return m;
}

json tolerances_of(const Config& c) {
  json t = json::object();
  for (const auto& d : key_defs()) {
    const std::string k = d.key;
    if (k.rfind("tolerance.", 0) == 0) t[k.substr(10)] = c.number(k);
  }
  return t;
}

void write_manifest(const fs::path& dir, const std::vector<std::string>& files, json extra) {
  json m = std::move(extra);
  m["version"] = kVersion;
  m["modules"] = module_versions();
  json f = json::object();
  for (const auto& name : files) f[name] = sha256_file(dir / name);
  m["files"] = f;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

json checks_json(const std::vector<Check>& checks) {
  json a = json::array();
  for (const auto& c : checks)
    a.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"limit", c.limit}, {"pass", c.pass}});
  return a;
}

std::string sanitize(const std::string& s) {
  std::string o;
  for (char ch : s) o += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-') ? ch : '_';
  return o;
}

void verify_manifest(const fs::path& dir, const json& manifest) {
  if (!manifest.contains("files") || !manifest["files"].is_object())
    throw IntegrityError("manifest without file list in " + dir.string());
  for (const auto& [name, digest] : manifest["files"].items()) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) throw IoError("missing artifact " + p.string());
    if (sha256_file(p) != digest.get<std::string>()) throw IntegrityError("digest mismatch for " + p.string());
  }
}

double scalar_or_nan(const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    return pos == v.size() ? x : NAN;
  } catch (const std::exception&) {
    return NAN;
  }
}

double num_of(const json& j, const char* key) {
  return j.contains(key) && j[key].is_number() ? j[key].get<double>() : NAN;
}

json load_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw IoError("corrupt " + p.string() + ": " + e.what());
  }
}

}  // namespace

ScenarioKind parse_kind(const std::string& name) {
  static const std::map<std::string, ScenarioKind> m{{"OrbitalStability", ScenarioKind::OrbitalStability},
                                                     {"LinearizedFPUDecay", ScenarioKind::LinearizedFPUDecay},
                                                     {"LinearizedKdVDecay", ScenarioKind::LinearizedKdVDecay},
                                                     {"BacklundAudit", ScenarioKind::BacklundAudit},
                                                     {"SolitonResolution", ScenarioKind::SolitonResolution},
                                                     {"DispersionAudit", ScenarioKind::DispersionAudit}};
  const auto it = m.find(name);
  if (it == m.end()) throw ConfigError("unknown scenario kind: " + name);
  return it->second;
}

std::string kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::OrbitalStability: return "OrbitalStability";
    case ScenarioKind::LinearizedFPUDecay: return "LinearizedFPUDecay";
    case ScenarioKind::LinearizedKdVDecay: return "LinearizedKdVDecay";
    case ScenarioKind::BacklundAudit: return "BacklundAudit";
    case ScenarioKind::SolitonResolution: return "SolitonResolution";
    case ScenarioKind::DispersionAudit: return "DispersionAudit";
  }
  return "?";
}

Config Config::parse(const std::string& text) {
  Config c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (c.has(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key " + key);
    try {
      c.set(key, trim(t.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

Config Config::load(const fs::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse(text);
}

void Config::set(const std::string& key, const std::string& value) {
  check_value(key_def(key), value);
  values_[key] = value;
}

std::string Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  return it != values_.end() ? it->second : std::string(key_def(key).def);
}

double Config::number(const std::string& key) const { return to_number(key, raw(key)); }

long Config::integer(const std::string& key) const { return std::lround(number(key)); }

std::vector<double> Config::numbers(const std::string& key) const { return to_list(key, raw(key)); }

ScenarioKind Config::kind() const { return parse_kind(raw("scenario.kind")); }

json Config::resolved() const {
  json j = json::object();
  for (const auto& d : key_defs()) {
    switch (d.type) {
      case KeyType::Number: j[d.key] = number(d.key); break;
      case KeyType::Integer: j[d.key] = integer(d.key); break;
      case KeyType::List: j[d.key] = numbers(d.key); break;
      case KeyType::String: j[d.key] = raw(d.key); break;
    }
  }
  return j;
}

std::string Config::str() const {
  std::string s;
  for (const auto& [k, v] : values_) s += k + " = " + v + "\n";
  return s;
}

const json& config_schema() {
  static const json schema = [] {
    json props = json::object();
    for (const auto& d : key_defs()) {
      json p;
      p["description"] = d.description;
      switch (d.type) {
        case KeyType::Number:
          p["type"] = "number";
          p["default"] = std::stod(d.def);
          break;
        case KeyType::Integer:
          p["type"] = "integer";
          p["minimum"] = 0;
          p["default"] = std::stol(d.def);
          break;
        case KeyType::List:
          p["type"] = "array";
          p["items"] = {{"type", "number"}};
          p["default"] = to_list(d.key, d.def);
          break;
        case KeyType::String:
          p["type"] = "string";
          p["default"] = d.def;
          if (!d.choices.empty()) p["enum"] = d.choices;
          break;
      }
      props[d.key] = p;
    }
    return json{{"$schema", "https://json-schema.org/draft/2020-12/schema"},
                {"title", "fpulab scenario config"},
                {"type", "object"},
                {"additionalProperties", false},
                {"properties", props}};
  }();
  return schema;
}

ScenarioOutcome run_scenario(const Config& cfg, const fs::path& out_dir) {
  const ScenarioKind kind = cfg.kind();
  fs::create_directories(out_dir);
  write_text(out_dir / "config.txt", cfg.str());
  Run run;
  try {
    switch (kind) {
      case ScenarioKind::OrbitalStability: run = run_orbital_scenario(cfg, out_dir); break;
      case ScenarioKind::LinearizedFPUDecay: run = run_lfpu_scenario(cfg, out_dir); break;
      case ScenarioKind::LinearizedKdVDecay: run = run_kdv_scenario(cfg, out_dir); break;
      case ScenarioKind::BacklundAudit: run = run_backlund_scenario(cfg, out_dir); break;
      case ScenarioKind::SolitonResolution: run = run_resolution_scenario(cfg, out_dir); break;
      case ScenarioKind::DispersionAudit: run = run_dispersion_scenario(cfg, out_dir); break;
    }
  } catch (const std::exception& e) {
    write_text(out_dir / "error.txt", std::string(e.what()) + "\n");
    throw Error(kind_name(kind) + ": " + e.what());
  }

  ScenarioOutcome out;
  out.kind = kind;
  out.dir = out_dir;
  out.checks = run.checks;
  out.pass = std::all_of(run.checks.begin(), run.checks.end(), [](const Check& c) { return c.pass; });
  json fitted = json::object();
  for (const auto& [k, v] : run.fitted) fitted[k] = v;
  out.summary = {{"kind", kind_name(kind)}, {"pass", out.pass},          {"checks", checks_json(run.checks)},
                 {"fitted", fitted},        {"results", run.results},     {"config", cfg.resolved()}};
  write_text(out_dir / "summary.json", out.summary.dump(2) + "\n");
  std::vector<std::string> files{"summary.json", "config.txt"};
  files.insert(files.end(), run.files.begin(), run.files.end());
  write_manifest(out_dir, files, {{"kind", kind_name(kind)}, {"tolerances", tolerances_of(cfg)}});
  return out;
}

bool SweepOutcome::pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const SweepEntry& e) { return e.ok && e.pass; });
}

bool SweepOutcome::errors() const {
  return std::any_of(entries.begin(), entries.end(), [](const SweepEntry& e) { return !e.ok; });
}

unsigned sweep_threads() {
  if (const char* s = std::getenv("FPULAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (end != s && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SweepOutcome sweep(const Config& base, const std::string& axis, const std::vector<std::string>& values,
                   const fs::path& out_dir, unsigned threads) {
  key_def(axis);
  if (threads == 0) threads = sweep_threads();
  SweepOutcome out;
  out.axis = axis;
  out.entries.resize(values.size());
  fs::create_directories(out_dir);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      auto& e = out.entries[i];
      e.value = values[i];
      e.dir = out_dir / (std::to_string(i) + "_" + sanitize(values[i]));
      try {
        Config c = base;
        c.set(axis, values[i]);
        const auto r = run_scenario(c, e.dir);
        e.ok = true;
        e.pass = r.pass;
        for (const auto& [k, v] : r.summary["fitted"].items()) e.fitted[k] = v.is_number() ? v.get<double>() : NAN;
      } catch (const std::exception& ex) {
        e.error = ex.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, values.size()); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::vector<std::string> keys;
  for (const auto& e : out.entries)
    for (const auto& [k, v] : e.fitted)
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());

  std::vector<std::string> hdr{"index", "value", "ok", "pass"};
  hdr.insert(hdr.end(), keys.begin(), keys.end());
  Csv csv(hdr);
  json agg = json::array();
  PlotSpec ps{"Sweep over " + axis, axis, "fitted value", false, {}};
  for (const auto& k : keys) ps.series.push_back({k, {}, {}, false});
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    const auto& e = out.entries[i];
    std::string row = std::to_string(i) + "," + e.value + "," + (e.ok ? "1" : "0") + "," + (e.pass ? "1" : "0");
    for (std::size_t q = 0; q < keys.size(); ++q) {
      const auto it = e.fitted.find(keys[q]);
      row += "," + (it != e.fitted.end() ? fmt(it->second) : std::string("nan"));
      const double x = scalar_or_nan(e.value);
      if (it != e.fitted.end() && std::isfinite(x)) {
        ps.series[q].x.push_back(x);
        ps.series[q].y.push_back(it->second);
      }
    }
    csv.row_text(row);
    json f = json::object();
    for (const auto& [k, v] : e.fitted) f[k] = v;
    agg.push_back({{"value", e.value}, {"dir", e.dir.filename().string()}, {"ok", e.ok}, {"pass", e.pass},
                   {"error", e.error}, {"fitted", f}});
  }
  csv.write(out_dir / "sweep.csv");
  write_svg((out_dir / "sweep.svg").string(), ps);
  json sj = {{"axis", axis}, {"entries", agg}, {"pass", out.pass()}, {"base_config", base.resolved()}};
  write_text(out_dir / "sweep.json", sj.dump(2) + "\n");
  write_manifest(out_dir, {"sweep.json", "sweep.csv", "sweep.svg"}, {{"kind", "sweep"}, {"tolerances", tolerances_of(base)}});
  return out;
}

std::string sha256_file(const fs::path& path) {
  const std::string data = read_text(path);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw IoError("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

Digest report(const fs::path& dir) {
  const fs::path mp = dir / "manifest.json";
  if (!fs::exists(mp)) throw IoError("no manifest.json in " + dir.string());
  const json manifest = load_json(mp);
  verify_manifest(dir, manifest);
  Digest d;
  std::ostringstream o;
  if (fs::exists(dir / "sweep.json")) {
    const json sj = load_json(dir / "sweep.json");
    o << "sweep over " << sj.value("axis", "?") << " (" << sj["entries"].size() << " values)\n";
    d.pass = true;
    for (const auto& e : sj["entries"]) {
      o << "\n== " << sj.value("axis", "?") << " = " << e.value("value", "") << " ==\n";
      if (!e.value("ok", false)) {
        o << "ERROR " << e.value("error", "") << "\n";
        d.pass = false;
        continue;
      }
      const auto sub = report(dir / e.value("dir", ""));
      o << sub.text;
      d.pass = d.pass && sub.pass;
    }
    o << "\nsweep " << (d.pass ? "PASS" : "FAIL") << "\n";
    d.text = o.str();
    return d;
  }
  const fs::path sp = dir / "summary.json";
  if (!fs::exists(sp)) throw IoError("no summary.json in " + dir.string());
  if (!manifest["files"].contains("summary.json")) throw IntegrityError("summary.json not covered by the manifest");
  const json s = load_json(sp);
  o << "scenario " << s.value("kind", "?") << "\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-34s %14s %3s %14s  %s\n", "item", "value", "", "limit", "result");
  o << line;
  d.pass = true;
  for (const auto& c : s["checks"]) {
    const bool ok = c.value("pass", false);
    std::snprintf(line, sizeof line, "%-34s %14.6g %3s %14.6g  %s\n", c.value("name", "").c_str(), num_of(c, "value"),
                  c.value("relation", "").c_str(), num_of(c, "limit"), ok ? "PASS" : "FAIL");
    o << line;
    d.pass = d.pass && ok;
  }
  if (s.contains("fitted"))
    for (const auto& [k, v] : s["fitted"].items()) {
      std::snprintf(line, sizeof line, "  %-32s %14.6g\n", k.c_str(), v.is_number() ? v.get<double>() : NAN);
      o << line;
    }
  o << "overall " << (d.pass ? "PASS" : "FAIL") << "\n";
  d.text = o.str();
  return d;
}

}  // namespace fpu

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpu/backlund.hpp"
#include "fpu/diagnostics.hpp"
#include "fpu/modulation.hpp"

namespace fpu {

enum class PerturbationShape { GaussianBump, SingleSite, BandLimitedNoise };
PerturbationShape parse_shape(const std::string& name);
std::string shape_name(PerturbationShape s);

struct PerturbationSpec {
  PerturbationShape shape = PerturbationShape::GaussianBump;
  double norm = 0.0;      // l2 norm of v0
  double center = 0.0;    // site
  double width = 5.0;     // sites (bump width, noise envelope)
  std::uint64_t seed = 1;
};
LatticeField make_perturbation(const PerturbationSpec& spec, long offset, std::size_t n);

// Train of solitary waves plus a perturbation, evolved on a fixed window and tracked.
struct OrbitalConfig {
  PotentialModel model = PotentialModel::alpha_fpu();
  double eps = 0.2;
  std::vector<double> k{1.0, 2.0};
  double scaled_separation = 12.0;  // eps (x_{i+1} - x_i)
  double delta0 = 0.1;
  double amplitude = 0.3;  // ||v0|| = amplitude * delta0 * eps^2
  PerturbationShape shape = PerturbationShape::GaussianBump;
  double perturbation_offset = 30.0;  // relative to x_1
  double perturbation_width = 5.0;
  std::uint64_t seed = 1;
  std::size_t window = 4000;
  double first_position = 400.0;
  double t_end = 3000.0;
  double dt = 0.1;
  Scheme scheme = Scheme::Symplectic2;
  double track_every = 10.0;
};

struct OrbitalResult {
  WaveParams initial;
  double v0_norm = 0.0;
  ModulationTrack track;
  std::vector<double> deviation;  // ||u - sum u_{c_i,0}(. - x_i(t))||
  std::vector<double> v_norm;     // ||u - sum u_{c_i(t)}(. - x_i(t))||
  std::vector<double> energy;     // H(u(t))
  double max_deviation = 0.0;
  double bound_scale = 0.0;  // ||v0|| + eps^{3/2} e^{-k_1 L}
  double fitted_A = 0.0;     // max_deviation / bound_scale
  std::vector<double> speed_variation;
  std::vector<double> max_speed_drift;  // max_t |c_i(t) - c_i,0|
  bool ordering_preserved = true;
  double max_boundary_mass = 0.0;
};
OrbitalResult run_orbital(const OrbitalConfig& cfg);

// Linearized lattice flow around an evolving train in a window that follows the slow wave.
struct LinearFpuConfig {
  PotentialModel model = PotentialModel::alpha_fpu();
  double eps = 0.2;
  std::vector<double> k{1.0, 2.0};
  double scaled_separation = 12.0;
  double t_end = 1000.0;
  double dt = 0.1;
  double chunk = 10.0;
  double data_offset = -5.0;  // bump center relative to x_1
  double data_width = 4.0;
  double fit_from = 0.5;      // fraction of t_end where the fit starts
};

struct LinearFpuResult {
  std::vector<double> t, norm;
  DecayFit fit;
  double rate_over_eps3 = 0.0;
  double free_bound_over_eps3 = 0.0;  // k_1^3/8
};
LinearFpuResult run_linear_fpu(const LinearFpuConfig& cfg);

// Linearized KdV flow of secular-free data in the weight e^{a(x - c t - x0)}.
struct KdvDecayConfig {
  std::vector<double> k{0.5, 1.0};
  std::vector<double> gamma{0.0, 0.0};
  double a = 0.4;
  double c = 0.0;  // 0 selects 4 k_1^2
  double x0 = 0.0;
  double t_end = 20.0;
  double fit_start = 2.0;
  double dt = 2e-3;
  double dx = 0.1;
  double left = -100.0, right = 160.0;
  std::size_t reproject_every = 100;
  double data_center = 2.0;
  double data_width = 2.0;
};

struct KdvDecayResult {
  double target = 0.0;  // a (c - a^2)
  std::vector<double> t, norm, airy_norm;
  DecayFit fit, airy_fit;
  double ratio = 0.0;  // -rate / target
};
KdvDecayResult run_kdv_decay(const KdvDecayConfig& cfg);

struct BacklundAuditConfig {
  std::size_t draws = 20;
  std::size_t max_n = 4;
  std::vector<double> times{0.0, 1.0, 10.0};
  double k_min = 0.3, k_max = 3.0;
  double min_gap = 0.1;
  double gamma_range = 2.0;
  std::size_t fields = 20;  // random fields per level
  std::uint64_t seed = 7;
};

struct BacklundDraw {
  SolitonFamily family;
  double max_residual = 0.0;
  double wrong_phase = -1.0;  // negative when N = 1
  double forward_inverse = 0.0;
  double inverse_forward = 0.0;
  double orthogonality = 0.0;
};

struct BacklundAuditResult {
  std::vector<BacklundDraw> draws;
  double max_residual = 0.0;
  double min_wrong_phase = 0.0;
  double max_forward_inverse = 0.0;
  double max_inverse_forward = 0.0;
  double max_orthogonality = 0.0;
};
BacklundAuditResult run_backlund_audit(const BacklundAuditConfig& cfg);
BacklundDraw audit_family(const SolitonFamily& fam, const std::vector<double>& times, std::size_t fields,
                          std::uint64_t seed);

// Phase shifts with the pairwise sum weighted by 1/(2 k_i) instead of 1/k_i.
std::vector<double> half_sum_phases(const SolitonFamily& fam);
// Crest of the i-th soliton at large t, expressed as a phase x - 4 k_i^2 t.
double measured_phase(const SolitonFamily& fam, std::size_t i, double t);

struct ResolutionConfig {
  std::vector<double> k{1.0, 2.0};
  std::vector<double> gamma{0.0, 0.0};
  std::vector<double> times{5.0, 10.0, 15.0, 20.0};
  double dx = 0.025;
  double phase_time = 5.0;
};

struct ResolutionResult {
  std::vector<double> times, sup_remainder, sup_remainder_half;
  DecayFit fit, fit_half;
  std::vector<double> phases, half_phases, measured;
  double phase_error = 0.0;       // max |phases - measured|
  double half_phase_error = 0.0;  // max |half_phases - measured|
};
ResolutionResult run_resolution(const ResolutionConfig& cfg);

struct DispersionAuditConfig {
  std::vector<double> eps{0.05, 0.1, 0.2};
  double a = 0.0;  // 0 selects k_1
  double k1 = 1.0;
  double K = 2.0;
  double delta = 1.0;
  std::size_t points = 10000;
  bool half_angle_high_band = true;
  std::vector<double> tail_eps{0.2, 0.25, 0.3, 0.4, 0.5};
  SolitonFamily family{{1.0}, {0.0}};
};

struct DispersionAuditResult {
  std::vector<DispersionReport> reports;
  std::vector<double> symbol;
  double symbol_spread = 0.0;  // max/min
  TailReport tail;
  bool inequalities_hold = false;  // with the selected high-band constant
  bool printed_hold = false;       // with 1 - cos(delta)
};
DispersionAuditResult run_dispersion_audit(const DispersionAuditConfig& cfg);

struct VirialConfig {
  PotentialModel model = PotentialModel::alpha_fpu();
  double eps = 0.2;
  double amplitude = 0.05;  // ||v0|| = amplitude * eps^2
  double a_factor = 0.3;    // a = a_factor * eps
  double width = 3.0;
  double t_end = 500.0;
  double dt = 0.02;
  std::size_t half_window = 700;
};

struct VirialResult {
  VirialSeries series;
  double a = 0.0, speed = 0.0, v0_norm = 0.0;
  // (psi_energy(0) - psi_energy(T)) / (a * integrated(T))
  double dissipation_ratio = 0.0;
  double max_boundary_mass = 0.0;
};
VirialResult run_virial(const VirialConfig& cfg);

}  // namespace fpu

#pragma once

#include <functional>
#include <vector>

#include "fpu/integrators.hpp"
#include "fpu/kdv.hpp"
#include "fpu/lattice.hpp"
#include "fpu/modulation.hpp"
#include "fpu/spectral.hpp"

namespace fpu {

// ||w u|| with the weight evaluated in log domain (no overflow for large a*window).
double weighted_norm(const LatticeField& u, const WeightSpec& w);
// L^2 version on a grid (trapezoid).
double weighted_norm(const GridField& f, const WeightSpec& w);
// ||u||_{W(t)} = sum_i ||e^{-k_i eps |n - x_i|/2} u||.
double w_norm(const LatticeField& u, const std::vector<double>& k, double eps, const std::vector<double>& x);
// ||u||_{X(t)} = (sum e^{k_1 eps (n - x_ref)} |u|^2)^{1/2}.
double x_norm(const LatticeField& u, double k1, double eps, double x_ref);

struct VirialSeries {
  std::vector<double> t;
  std::vector<double> psi_energy;    // sum psi_a h_1
  std::vector<double> sech_energy;   // ||sech a(.-xtilde) v_1||^2
  std::vector<double> integrated;    // int_0^t sech_energy (trapezoid)
  double max_increase = 0.0;         // max over consecutive samples of the increase of psi_energy
  bool hypothesis_ok = true;         // d xtilde/dt >= min_speed at every sample
};

// psi_a = 1 + tanh a(x - xtilde(t)), h_1 = p^2/2 + V(r).
VirialSeries virial_series(const Trajectory& v1, double a, const std::function<double(double)>& xtilde,
                           const PotentialModel& model, double min_speed);

// Smooth cutoff: 1 on [-1,1], 0 outside [-2,2].
double cutoff(double s);

struct BandSplit {
  double k_eps = 0.0;  // K eps
  double delta = 0.0;
  std::vector<double> xi;  // in [-pi, pi), FFT order
  std::vector<cplx> f_plus, f_minus, f1, f2, f3;
  long offset = 0;
  double weight_rate = 0.0;  // k_1 eps
  double phase_speed = 0.0;  // c_{1,eps} t
};

// f = e^{i c t xi} P(xi)^* F[e^{k_1 eps (n - c t)} w](xi) with the unitary DFT; f_+ is cut into
// chi_{K eps} f_+, (chi_delta - chi_{K eps}) f_+, (1 - chi_delta) f_+.
BandSplit band_split(const LatticeField& w, double eps, double k1, double c1eps, double K, double delta, double t);
// Inverts the transform from f_+ = f1+f2+f3 and f_-; returns e^{k_1 eps (n - c t)} w.
LatticeField band_reconstruct(const BandSplit& b);
double band_energy(const std::vector<cplx>& f);

// lambda_{+-}(xi) = c xi -+ 2 sin(xi/2) for complex xi.
cplx lambda_branch(cplx xi, double c, int sign);

struct DispersionReport {
  double eps = 0.0, a = 0.0, k1 = 0.0, K = 0.0, delta = 0.0, c1 = 0.0;
  std::size_t points = 0;
  double lambda_plus_zero = 0.0, lambda_minus_zero = 0.0;
  // max |lambda_+ - eps^3/24((eta+ia)^3 + 4k_1^2(eta+ia))| / (eps^5 <eta>^5) on [-2K, 2K]
  double cubic_constant = 0.0;
  // Worst margins (value - bound) of each inequality on its domain.
  double margin_cubic = 0.0;       // eps^5<eta>^5/1000 - error
  double margin_quadratic = 0.0;   // Im lambda_+ - eps^3 a eta^2/16 on K <= |eta| <= 2 delta/eps
  double margin_high = 0.0;        // Im lambda_+ - eps a (1 - cos delta) on delta/eps <= |eta| <= pi/eps
  double margin_high_half = 0.0;   // same with 1 - cos(delta/2)
  double margin_minus = 0.0;       // Im lambda_- - eps a on |eta| <= pi/eps
  double worst_eta_high = 0.0;
  bool all_hold() const { return margin_cubic >= 0 && margin_quadratic > 0 && margin_high > 0 && margin_minus > 0; }
};

// Uses c_{1,eps} = 1 + k_1^2 eps^2 / 6 and a uniform grid of `points` values of eta in
// [-pi/eps, pi/eps] together with the end points of every inequality domain.
DispersionReport dispersion_check(double eps, double a, double k1, double K, double delta, std::size_t points = 10000);

// eps^2 sup_{xi in [-pi,pi]} |m(xi + i a eps)|, m(z) = z^2 / (c^2 z^2 - 4 sin^2(z/2)).
double symbol_sup(double eps, double a, double c, std::size_t points = 4001);

struct TailPoint {
  double eps = 0.0;
  double max_diff = 0.0;  // max_xi |lattice FT - continuum FT|
};
struct TailReport {
  std::vector<double> symbol;  // eps^2 sup|m| per eps
  std::vector<TailPoint> tail;
  LinearFit fit;               // log max_diff against 1/eps
};
// Lattice FT sum_n r(n) e^{-i n xi} / sqrt(2 pi) of r(x) = eps^2 phi_N(0, eps x), against
// the continuum transform by fine-grid quadrature.
double ft_difference(const SolitonFamily& fam, double eps, double xi);
double ft_difference_max(const SolitonFamily& fam, double eps, std::size_t points = 257);
TailReport symbol_and_tail_check(const std::vector<double>& symbol_eps, const std::vector<double>& tail_eps, double a,
                                 double k1, const SolitonFamily& fam);

struct DecayFit {
  double rate = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t samples = 0;
};
// Least squares of log value against t over the trailing fraction of the series.
DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& value, double window = 1.0);

struct StabilityMetrics {
  double M1 = 0.0, M2 = 0.0, M3 = 0.0, M4 = 0.0, M5 = 0.0;
};
// Proxies with v_2 in place of the cascade pieces.
StabilityMetrics stability_metrics(const SplitResult& split, const WaveParams& initial, double eps);

}  // namespace fpu

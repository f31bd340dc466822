#pragma once

#include <map>
#include <memory>
#include <vector>

#include "fpu/lattice.hpp"
#include "fpu/spectral.hpp"

namespace fpu {

// Two-component continuum profile on the fine grid x_j = x0 + j*h, zero outside,
// stored with x-derivatives for cubic Hermite evaluation.
struct Profile {
  double x0 = 0.0;
  double h = 0.125;
  std::vector<double> r, p, rx, px;

  std::size_t size() const { return r.size(); }
  double x(std::size_t j) const { return x0 + h * static_cast<double>(j); }
  double r_at(double x) const;
  double p_at(double x) const;
  // u(n - shift) on the window.
  LatticeField sample(long offset, std::size_t n, double shift) const;
  // Profile of the x-derivative (spectral).
  Profile derivative() const;

  // Builds derivative samples spectrally.
  static Profile from_values(double x0, double h, std::vector<double> r, std::vector<double> p);
};

struct ProfileOptions {
  int oversample = 8;
  // Half-width of the periodic box; 0 selects one from the linear decay rate.
  double half_width = 0.0;
  double tol = 1e-12;
  int max_iter = 2000;
};

struct WaveProfile {
  PotentialModel model;
  double c = 1.0;
  Profile u;
  double residual = 0.0;
  int iterations = 0;
  // Relative change sup|r_new - r| / sup|r_new| per iteration.
  std::vector<double> history;

  LatticeField sample(long offset, std::size_t n, double shift) const { return u.sample(offset, n, shift); }
};

// Spatial decay rate mu of a wave of speed c > 1: c = sinh(mu/2)/(mu/2).
double decay_rate(double c);
double default_half_width(double c);

// Exact Toda solitary wave, c = sinh(kappa)/kappa, crest at 0.
WaveProfile toda_soliton(double kappa, const ProfileOptions& opt = {});

// Solitary wave of speed c > 1 by Petviashvili iteration on c^2 r'' = (e^d - 2 + e^{-d}) V'(r),
// seeded with the KdV profile; p from -c p' = V'(r(x)) - V'(r(x-1)).
WaveProfile solve_profile(const PotentialModel& model, double c, const ProfileOptions& opt = {});

enum class ProfileDerivative { DDx, DDc };
// DDc by central differences of two solves at c(1 +- 1e-4 (c-1)/c) on the same box.
Profile profile_derivative(const WaveProfile& w, ProfileDerivative which, const ProfileOptions& opt = {});

// rho_c = d_x (c d_x + J)^{-1} (H'(u_c) - u_c) on the fine grid.
Profile rho_profile(const WaveProfile& w);

// Fourier-multiplier residual sup|c^2 r'' - (e^d - 2 + e^{-d}) V'(r)| on the fine grid.
double traveling_wave_residual(const WaveProfile& w);

// Crest of the r component by a quadratic fit through the three largest samples.
double crest_position(const LatticeField& u);

struct EnergyCurve {
  std::vector<double> c, H, theta1;
};
// H(u_c) on integer samples and theta1 = dH/dc by central differences.
EnergyCurve energy_curve(const PotentialModel& model, const std::vector<double>& speeds, const ProfileOptions& opt = {});

// Profiles at arbitrary speeds by cubic interpolation in log(c-1) over a table with 64
// nodes per decade of c-1. Nodes are solved on demand on a common box.
class ProfileFamily {
 public:
  ProfileFamily(PotentialModel model, double c_min, double c_max, ProfileOptions opt = {});

  struct Eval {
    Profile u, du_dc, du_dx;
    // Filled only when requested.
    Profile du_dxx, du_dcdx, du_dcc;
  };
  Eval at(double c, bool second = false) const;
  const PotentialModel& model() const { return model_; }
  double c_min() const { return c_min_; }
  double c_max() const { return c_max_; }

 private:
  const WaveProfile& node(long j) const;
  PotentialModel model_;
  double c_min_, c_max_;
  ProfileOptions opt_;
  mutable std::map<long, WaveProfile> nodes_;
};

}  // namespace fpu

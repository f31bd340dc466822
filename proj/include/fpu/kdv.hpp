#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "fpu/spectral.hpp"

namespace fpu {

// N-soliton data for d_t u + d_x(d_x^2 u + 6u^2) = 0: speeds 4k_i^2, phases gamma_i.
struct SolitonFamily {
  std::vector<double> k;
  std::vector<double> gamma;

  std::size_t size() const { return k.size(); }
  // 0 < k_1 < ... < k_N, N <= 8, matching sizes.
  void validate() const;
};

// Phases gamma^m_i (i < m) for every ladder level m = 0..N; level N is the family.
struct PhaseLadder {
  std::vector<std::vector<double>> gamma;
};

// log of the level-m tau function and its first three x-derivatives.
struct TauValue {
  double log = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

// Delta_m(t,x) = exp(-sum_{i>=m} theta_i) det(I + C_m), evaluated as a log-sum-exp over
// principal minors. level_gamma supplies the phases of the first m solitons (defaults to
// family.gamma); the exponential prefactor always uses family.gamma.
TauValue tau_eval(const SolitonFamily& fam, double t, double x, std::size_t m,
                  std::span<const double> level_gamma = {});
double tau_logdet(const SolitonFamily& fam, double t, double x, std::size_t m,
                  std::span<const double> level_gamma = {});

// phi_N = d_x^2 log Delta_N on a grid.
GridField kdv_profile(const SolitonFamily& fam, double t, const Grid& grid);
// v^m = d_x log Delta_m with ladder phases.
GridField ladder_potential(const SolitonFamily& fam, const PhaseLadder& ladder, std::size_t m, double t,
                           const Grid& grid);
// d_x v^m.
GridField ladder_potential_dx(const SolitonFamily& fam, const PhaseLadder& ladder, std::size_t m, double t,
                              const Grid& grid);

// Rejects grids with dx > 0.1 / k_N.
void check_grid_resolution(const SolitonFamily& fam, const Grid& grid);

struct SecularBasis {
  // xi1[i] = d phi_N / d gamma_i, xi2[i] = d phi_N / d k_i; eta = antiderivatives from the left.
  std::vector<std::vector<double>> xi1, xi2, eta1, eta2;
  Grid grid;
  // gram(2j+l, 2i+q) = <xi_i^{q+1}, eta_j^{l+1}>.
  Eigen::MatrixXd gram;
};

SecularBasis secular_basis(const SolitonFamily& fam, double t, const Grid& grid, double step = 1e-5);

// Projection Q f = f - sum c xi with <Qf, eta_j^l> = 0 for all j, l.
std::vector<double> secular_project(const SecularBasis& basis, const std::vector<double>& f);

// sup_x |phi_t + phi_xxx + 12 phi phi_x| at the middle of an odd number (>= 5) of
// equally spaced samples; 4th-order centred time derivative, spectral x-derivatives.
double kdv_residual(const std::vector<GridField>& samples, double dt);

struct SolitonResolution {
  std::vector<double> gamma_tilde;
  GridField train;
  GridField remainder;
  double sup_remainder = 0.0;
};

// Asymptotic crest phases as t -> +inf.
std::vector<double> asymptotic_phases(const SolitonFamily& fam);
// phi_N = sum_j k_j^2 sech^2(k_j(x - 4k_j^2 t - gamma_tilde_j)) + remainder; the remainder is
// assembled without subtracting the two large terms.
SolitonResolution soliton_resolution(const SolitonFamily& fam, double t, const Grid& grid);

// log psi_m = k_m(gamma^m_m - gamma^N_m) + log Delta_{m-1} - log Delta_m, m in 1..N.
GridField psi_ratio(const SolitonFamily& fam, const PhaseLadder& ladder, std::size_t m, double t,
                    const Grid& grid);

}  // namespace fpu

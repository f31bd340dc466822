#pragma once

#include <functional>
#include <vector>

#include "fpu/kdv.hpp"

namespace fpu {

// gamma^{m-1}_i = gamma^m_i + log((k_m - k_i)/(k_m + k_i)) / (2 k_i), i < m.
PhaseLadder phase_ladder(const SolitonFamily& fam);

// sup_x |d_x(v^m + v^{m-1}) - k_m^2 + (v^m - v^{m-1})^2|, m in 1..N.
double backlund_residual(const SolitonFamily& fam, const PhaseLadder& ladder, std::size_t m, double t,
                         const Grid& grid);

// Level-m data for the linearized maps at a fixed time.
struct BacklundLevel {
  std::size_t m = 0;
  Grid grid;
  std::vector<double> log_psi;  // log psi_m
  std::vector<double> D;        // v^m - v^{m-1}
  std::vector<double> kernel;   // d v^m / d gamma^m_m, spans ker A
  std::vector<double> zg;       // d_x d v^m / d gamma^m_m
  std::vector<double> zk;       // d_x d v^m / d k_m
  std::size_t crest = 0;        // argmax log psi_m
};

BacklundLevel backlund_level(const SolitonFamily& fam, const PhaseLadder& ladder, std::size_t m, double t,
                             const Grid& grid, double step = 1e-5);

struct Orthogonality {
  double gamma = 0.0;  // <w, d_x d_gamma v^m>
  double k = 0.0;      // <w, d_x d_k v^m>
};
Orthogonality level_orthogonality(const BacklundLevel& lvl, const std::vector<double>& w);

// w^m = -w^{m-1} + I_m(w^{m-1}) + alpha d_gamma v^m with alpha fixed by <w^m, d_x d_k v^m> = 0.
std::vector<double> linearized_forward(const BacklundLevel& lvl, const std::vector<double>& w_prev,
                                       double* alpha = nullptr);

// w^{m-1} = -w^m + 4 int_x^inf D psi(y)^2/psi(x)^2 w^m dy (right of the crest), and the
// equivalent left-tail form left of the crest. Throws InvalidArgument when the two forms
// disagree at the crest by more than tol (input outside X_m).
std::vector<double> linearized_inverse(const BacklundLevel& lvl, const std::vector<double>& w_m, double tol = 1e-5);

// Orthogonal (L^2) projection onto the complement of {d_x d_gamma_i v^N, d_x d_k_i v^N}.
std::vector<double> project_out_secular(const SolitonFamily& fam, double t, const Grid& grid,
                                        const std::vector<double>& w, double step = 1e-5);

struct LadderResult {
  // levels[m] = w^m, m = 0..N.
  std::vector<std::vector<double>> levels;
};

// Descends w^N -> w^0 with the inverse maps at time t.
LadderResult ladder_conjugate(const SolitonFamily& fam, double t, const Grid& grid, const std::vector<double>& w_N);

enum class FlowForm {
  Conservative,  // v_t + d_x(v_xx + 12 phi v) = 0
  Advective      // w_t + w_xxx + 12 phi w_x = 0
};

// Weight e^{a(x - c t - x0)}; the flow is evolved on g = weight * field in the moving
// coordinate y = x - c t - x0, so ||g|| is the weighted norm.
struct WeightedFrame {
  double a = 0.0;
  double c = 0.0;
  double x0 = 0.0;
};

using PotentialFn = std::function<std::vector<double>(double t, const Grid& lab_grid)>;
// Acts on the unweighted field in lab coordinates at time t.
using Projector = std::function<std::vector<double>(double t, const Grid& lab_grid, const std::vector<double>& v)>;

struct FlowConfig {
  double t0 = 0.0;
  double t1 = 1.0;
  double dt = 1e-3;
  FlowForm form = FlowForm::Conservative;
  WeightedFrame frame;
  std::size_t store_every = 100;
  std::size_t reproject_every = 0;
  bool dealias = true;
};

struct FlowTrajectory {
  Grid grid;  // moving coordinate y
  WeightedFrame frame;
  std::vector<double> times;
  std::vector<std::vector<double>> g;  // weighted field samples
  std::vector<double> norms;           // ||g|| (trapezoid)

  // Unweighted field in lab coordinates at sample j.
  GridField lab_field(std::size_t j) const;
};

// Integrating-factor RK4 for the linear part, 2/3-rule dealiasing of the potential term.
// v0 is given on a lab grid at t0.
FlowTrajectory evolve_linear_flow(const GridField& v0, const PotentialFn& potential, const FlowConfig& cfg,
                                  const Projector& projector = {});

// LKdV around phi_N; reprojects with the secular basis when cfg.reproject_every > 0.
FlowTrajectory linearized_kdv_evolve(const GridField& v0, const SolitonFamily& fam, FlowConfig cfg);

}  // namespace fpu

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fpu/integrators.hpp"
#include "fpu/lattice.hpp"
#include "fpu/waves.hpp"

namespace fpu {

// Speeds and crest positions of N solitary waves, ordered x_1 < ... < x_N.
struct WaveParams {
  std::vector<double> c;
  std::vector<double> x;
  std::size_t size() const { return c.size(); }
};

// c_i = 1 + k_i^2 eps^2 / 6.
WaveParams kdv_scaled_params(const std::vector<double>& k, double eps, const std::vector<double>& x);

// sum_i u_{c_i}(. - x_i) on the window.
LatticeField wave_train(const ProfileFamily& fam, const WaveParams& w, long offset, std::size_t n);

// Scaled 2N x 2N matrix of blocks A_{i,j} (rows 2i, 2i+1; columns 2j, 2j+1):
//   [ eps^-1 <d_c u_j, J^-1 d_x u_i>   eps^-4 <d_x u_j, J^-1 d_x u_i> ]
//   [ eps^2  <d_c u_j, J^-1 d_c u_i>   eps^-1 <d_x u_j, J^-1 d_c u_i> ]
Eigen::MatrixXd secular_gram(const ProfileFamily& fam, const WaveParams& w, double eps, long offset, std::size_t n);

// Exact Jacobian of the scaled Newton residual of decompose(), including the terms that
// differentiate the test functions. Equals secular_gram when u is the train itself.
Eigen::MatrixXd newton_jacobian(const LatticeField& u, const ProfileFamily& fam, const WaveParams& w, double eps);

// w - sum_j (alpha_j d_x u_j + beta_j d_c u_j) with <., J^-1 d_x u_i> = <., J^-1 d_c u_i> = 0,
// u_j = u_{c_j}(. - x_j).
LatticeField symplectic_project(const LatticeField& w, const ProfileFamily& fam, const WaveParams& p);
// The 2N conditions above for w.
std::vector<double> symplectic_residuals(const LatticeField& w, const ProfileFamily& fam, const WaveParams& p);

struct DecomposeOptions {
  int max_iter = 30;
  double step_tol = 1e-13;
  // Scaled separation eps*min(x_{i+1}-x_i) below which a warning flag is raised.
  double separation_floor = 0.0;
};

struct ModulationState {
  WaveParams params;
  LatticeField v;
  // <v, J^-1 d_x u_{c_i}(.-x_i)>, <v, J^-1 d_c u_{c_i}(.-x_i)> interleaved.
  std::vector<double> orthogonality;
  int iterations = 0;
  double min_separation = 0.0;
  bool separation_warning = false;
};

// Newton iteration on <v, J^-1 d_x u_{c_i}(.-x_i)> = <v, J^-1 d_c u_{c_i}(.-x_i)> = 0 with
// v = u - sum u_{c_i}(.-x_i), residual rows scaled (eps^-4, eps^-1) and unknowns
// (-eps^-3 c_i, x_i). Throws ConvergenceError on divergence or wave collision.
ModulationState decompose(const LatticeField& u, const ProfileFamily& fam, const WaveParams& guess, double eps,
                          const DecomposeOptions& opt = {});

struct ModulationTrack {
  std::vector<double> times;
  std::vector<ModulationState> states;
  // Mean speed over the final 20% of samples.
  std::vector<double> c_plus;
  // xdot[i][j]: centred differences of x_i at sample j.
  std::vector<std::vector<double>> xdot;
};

// Sequential decomposition seeded from the previous frame.
class Tracker {
 public:
  Tracker(const ProfileFamily& fam, WaveParams guess, double eps, DecomposeOptions opt = {}, bool keep_residual = false);
  const ModulationState& push(double t, const LatticeField& u);
  ModulationTrack finish() const;

 private:
  const ProfileFamily* fam_;
  WaveParams guess_;
  double eps_;
  DecomposeOptions opt_;
  bool keep_;
  ModulationTrack track_;
};

ModulationTrack track(const Trajectory& traj, const ProfileFamily& fam, const WaveParams& guess, double eps,
                      const DecomposeOptions& opt = {});

// Speed variation max_j xdot - min_j xdot over the final fraction of samples, per wave.
std::vector<double> final_speed_variation(const ModulationTrack& tr, double fraction = 0.2);

struct SplitSample {
  double t = 0.0;
  WaveParams params;
  double v_norm = 0.0;    // ||u - U_N||
  double v1_norm = 0.0;   // ||v_1||
  double v2_norm = 0.0;   // ||v_2||
  double v_x_norm = 0.0;  // ||v||_{X_N(t)}
  double v2_x_norm = 0.0; // ||v_2||_{X_N(t)}
  double v_w_norm = 0.0;  // ||v||_{W(t)}
  double v1_w_norm = 0.0; // ||v_1||_{W(t)}
  double v2_w_norm = 0.0; // ||v_2||_{W(t)}
  double v2_psi_norm = 0.0; // ||(1 + tanh k_1 eps (n - x_1))^{1/2} v_2||
};

struct SplitResult {
  std::vector<SplitSample> samples;
  ModulationTrack track;
  // Stored only when requested.
  Trajectory v1, v2;
};

struct SplitConfig {
  EvolveConfig evolve;
  std::vector<double> k;  // weights k_i eps in the W and X norms
  bool keep_states = false;
};

// v_1 evolves v0 alone under the full lattice; v_2 = u - U_N - v_1 with U_N from tracking.
SplitResult perturbation_split(const LatticeField& u0, const LatticeField& v0, const ProfileFamily& fam,
                               const WaveParams& guess, double eps, const SplitConfig& cfg);

}  // namespace fpu

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fpu/lattice.hpp"

namespace fpu {

enum class Scheme { Symplectic2, RK4 };

struct EvolveConfig {
  double t0 = 0.0;
  double t_end = 1.0;
  double dt = 0.05;
  Scheme scheme = Scheme::Symplectic2;
  std::size_t observe_every = 1;
  // Boundary mass above this raises the alarm flag.
  double boundary_alarm = 1e-8;
  bool abort_on_boundary = false;
};

struct Observer {
  std::string name;
  std::function<std::vector<double>(double, const LatticeField&)> fn;
};

struct ObserverRecord {
  std::string name;
  std::vector<double> times;
  std::vector<std::vector<double>> values;
};

struct EvolveResult {
  LatticeField final_state;
  double t = 0.0;
  std::size_t steps = 0;
  double max_boundary_mass = 0.0;
  bool boundary_alarm = false;
  std::vector<ObserverRecord> records;
};

// u' = J H'(u) with zero extension outside the window. Observers run at t0 and
// every observe_every steps, including the final step.
EvolveResult evolve_nonlinear(const LatticeField& u0, const PotentialModel& model, const EvolveConfig& cfg,
                              const std::vector<Observer>& observers = {});

// One step of either scheme; exposed for tests.
void step_nonlinear(LatticeField& u, const PotentialModel& model, double dt, Scheme scheme);

using FieldProvider = std::function<LatticeField(double)>;

struct Trajectory {
  std::vector<double> times;
  std::vector<LatticeField> states;
};

// Piecewise-linear interpolation in t of a stored trajectory.
FieldProvider interpolate_trajectory(Trajectory traj);

struct LinearizedConfig {
  double t0 = 0.0;
  double t_end = 1.0;
  double dt = 0.05;
  std::size_t store_every = 1;
};

// w' = J H''(U(t)) w + F1(t) + J F2(t), classical RK4. Background and forcing
// must live on the window of w0.
Trajectory evolve_linearized(const LatticeField& w0, const PotentialModel& model, const FieldProvider& background,
                             const LinearizedConfig& cfg, const FieldProvider& f1 = {},
                             const FieldProvider& f2 = {});

}  // namespace fpu

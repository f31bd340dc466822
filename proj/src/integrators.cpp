#include "fpu/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fpu/error.hpp"

namespace fpu {

namespace {

void validate_dt(double dt, double t0, double t_end) {
  if (!(dt > 0.0) || dt > 0.25) throw InvalidArgument("time step must satisfy 0 < dt <= 0.25");
  if (!(t_end >= t0)) throw InvalidArgument("t_end must not precede t0");
}

bool all_finite(const LatticeField& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u.r[i] + u.p[i];
  return std::isfinite(s);
}

LatticeField rhs_nonlinear(const LatticeField& u, const PotentialModel& model) {
  return apply_j(grad_hamiltonian(u, model), JMode::Forward);
}

void kick(LatticeField& u, const PotentialModel& model, double h) {
  double prev = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double cur = potential_eval(model, u.r[i], 1);
    u.p[i] += h * (cur - prev);
    prev = cur;
  }
}

void drift(LatticeField& u, double h) {
  const std::size_t n = u.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double next = (i + 1 < n) ? u.p[i + 1] : 0.0;
    u.r[i] += h * (next - u.p[i]);
  }
}

}  // namespace

void step_nonlinear(LatticeField& u, const PotentialModel& model, double dt, Scheme scheme) {
  if (scheme == Scheme::Symplectic2) {
    kick(u, model, 0.5 * dt);
    drift(u, dt);
    kick(u, model, 0.5 * dt);
    return;
  }
  const LatticeField k1 = rhs_nonlinear(u, model);
  LatticeField tmp = u;
  axpy(0.5 * dt, k1, tmp);
  const LatticeField k2 = rhs_nonlinear(tmp, model);
  tmp = u;
  axpy(0.5 * dt, k2, tmp);
  const LatticeField k3 = rhs_nonlinear(tmp, model);
  tmp = u;
  axpy(dt, k3, tmp);
  const LatticeField k4 = rhs_nonlinear(tmp, model);
  axpy(dt / 6.0, k1, u);
  axpy(dt / 3.0, k2, u);
  axpy(dt / 3.0, k3, u);
  axpy(dt / 6.0, k4, u);
}

EvolveResult evolve_nonlinear(const LatticeField& u0, const PotentialModel& model, const EvolveConfig& cfg,
                              const std::vector<Observer>& observers) {
  validate_dt(cfg.dt, cfg.t0, cfg.t_end);
  if (cfg.observe_every == 0) throw InvalidArgument("observe_every must be positive");
  EvolveResult res;
  res.final_state = u0;
  res.t = cfg.t0;
  res.records.resize(observers.size());
  for (std::size_t k = 0; k < observers.size(); ++k) res.records[k].name = observers[k].name;

  auto observe = [&]() {
    for (std::size_t k = 0; k < observers.size(); ++k) {
      res.records[k].times.push_back(res.t);
      res.records[k].values.push_back(observers[k].fn(res.t, res.final_state));
    }
  };

  const auto nsteps = static_cast<std::size_t>(std::ceil((cfg.t_end - cfg.t0) / cfg.dt - 1e-9));
  const double dt = nsteps ? (cfg.t_end - cfg.t0) / static_cast<double>(nsteps) : cfg.dt;
  res.max_boundary_mass = boundary_mass(res.final_state);
  observe();
  for (std::size_t s = 1; s <= nsteps; ++s) {
    const double last_good = res.t;
    step_nonlinear(res.final_state, model, dt, cfg.scheme);
    res.t = cfg.t0 + dt * static_cast<double>(s);
    res.steps = s;
    if (!all_finite(res.final_state)) {
      std::ostringstream os;
      os << "non-finite state after t=" << last_good;
      throw EvolutionError(os.str(), last_good);
    }
    const double bm = boundary_mass(res.final_state);
    res.max_boundary_mass = std::max(res.max_boundary_mass, bm);
    if (bm > cfg.boundary_alarm) {
      res.boundary_alarm = true;
      if (cfg.abort_on_boundary) {
        std::ostringstream os;
        os << "boundary mass " << bm << " exceeds alarm at t=" << res.t;
        throw EvolutionError(os.str(), res.t);
      }
    }
    if (s % cfg.observe_every == 0 || s == nsteps) observe();
  }
  return res;
}

FieldProvider interpolate_trajectory(Trajectory traj) {
  if (traj.times.empty() || traj.times.size() != traj.states.size())
    throw InvalidArgument("interpolate_trajectory: empty or inconsistent trajectory");
  return [traj = std::move(traj)](double t) {
    const auto& ts = traj.times;
    if (t <= ts.front()) return traj.states.front();
    if (t >= ts.back()) return traj.states.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - ts.begin());
    const double th = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
    LatticeField out = (1.0 - th) * traj.states[j - 1];
    axpy(th, traj.states[j], out);
    return out;
  };
}

Trajectory evolve_linearized(const LatticeField& w0, const PotentialModel& model, const FieldProvider& background,
                             const LinearizedConfig& cfg, const FieldProvider& f1, const FieldProvider& f2) {
  validate_dt(cfg.dt, cfg.t0, cfg.t_end);
  if (cfg.store_every == 0) throw InvalidArgument("store_every must be positive");
  if (!background) throw InvalidArgument("evolve_linearized: background provider required");

  auto rhs = [&](double t, const LatticeField& w) {
    const LatticeField U = background(t);
    require_same_window(U, w, "evolve_linearized(background)");
    LatticeField h = hessian_apply(U, w, model);
    if (f2) {
      const LatticeField g = f2(t);
      require_same_window(g, w, "evolve_linearized(F2)");
      h += g;
    }
    LatticeField out = apply_j(h, JMode::Forward);
    if (f1) {
      const LatticeField g = f1(t);
      require_same_window(g, w, "evolve_linearized(F1)");
      out += g;
    }
    return out;
  };

  Trajectory traj;
  LatticeField w = w0;
  double t = cfg.t0;
  traj.times.push_back(t);
  traj.states.push_back(w);
  const auto nsteps = static_cast<std::size_t>(std::ceil((cfg.t_end - cfg.t0) / cfg.dt - 1e-9));
  const double dt = nsteps ? (cfg.t_end - cfg.t0) / static_cast<double>(nsteps) : cfg.dt;
  for (std::size_t s = 1; s <= nsteps; ++s) {
    const LatticeField k1 = rhs(t, w);
    LatticeField tmp = w;
    axpy(0.5 * dt, k1, tmp);
    const LatticeField k2 = rhs(t + 0.5 * dt, tmp);
    tmp = w;
    axpy(0.5 * dt, k2, tmp);
    const LatticeField k3 = rhs(t + 0.5 * dt, tmp);
    tmp = w;
    axpy(dt, k3, tmp);
    const LatticeField k4 = rhs(t + dt, tmp);
    axpy(dt / 6.0, k1, w);
    axpy(dt / 3.0, k2, w);
    axpy(dt / 3.0, k3, w);
    axpy(dt / 6.0, k4, w);
    const double last_good = t;
    t = cfg.t0 + dt * static_cast<double>(s);
    if (!all_finite(w)) throw EvolutionError("non-finite linearized state", last_good);
    if (s % cfg.store_every == 0 || s == nsteps) {
      traj.times.push_back(t);
      traj.states.push_back(w);
    }
  }
  return traj;
}

}  // namespace fpu

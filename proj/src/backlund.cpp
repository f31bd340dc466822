#include "fpu/backlund.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "fpu/error.hpp"

namespace fpu {

PhaseLadder phase_ladder(const SolitonFamily& fam) {
  fam.validate();
  const std::size_t N = fam.size();
  PhaseLadder ladder;
  ladder.gamma.resize(N + 1);
  ladder.gamma[N] = fam.gamma;
  for (std::size_t m = N; m >= 1; --m) {
    const double km = fam.k[m - 1];
    auto& lo = ladder.gamma[m - 1];
    lo.resize(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const double ki = fam.k[i];
      lo[i] = ladder.gamma[m][i] + std::log((km - ki) / (km + ki)) / (2.0 * ki);
    }
  }
  return ladder;
}

double backlund_residual(const SolitonFamily& fam, const PhaseLadder& ladder, std::size_t m, double t,
                         const Grid& grid) {
  if (m == 0 || m > fam.size()) throw InvalidArgument("backlund_residual: level must be in 1..N");
  const double km = fam.k[m - 1];
  double sup = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double x = grid.x(i);
    const TauValue hi = tau_eval(fam, t, x, m, ladder.gamma.at(m));
    const TauValue lo = tau_eval(fam, t, x, m - 1, ladder.gamma.at(m - 1));
    const double d = hi.d1 - lo.d1;
    sup = std::max(sup, std::abs(hi.d2 + lo.d2 - km * km + d * d));
  }
  return sup;
}

BacklundLevel backlund_level(const SolitonFamily& fam, const PhaseLadder& ladder, std::size_t m, double t,
                             const Grid& grid, double step) {
  if (m == 0 || m > fam.size()) throw InvalidArgument("backlund_level: level must be in 1..N");
  if (grid.n < 6) throw InvalidArgument("backlund_level: grid too small");
  BacklundLevel lvl;
  lvl.m = m;
  lvl.grid = grid;
  lvl.log_psi = psi_ratio(fam, ladder, m, t, grid).values;
  const auto vm = ladder_potential(fam, ladder, m, t, grid).values;
  const auto vm1 = ladder_potential(fam, ladder, m - 1, t, grid).values;
  lvl.D.resize(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) lvl.D[i] = vm[i] - vm1[i];

  auto central = [&](const GridField& a, const GridField& b) {
    std::vector<double> d(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) d[i] = (a.values[i] - b.values[i]) / (2.0 * step);
    return d;
  };
  PhaseLadder up = ladder, dn = ladder;
  up.gamma[m][m - 1] += step;
  dn.gamma[m][m - 1] -= step;
  lvl.kernel = central(ladder_potential(fam, up, m, t, grid), ladder_potential(fam, dn, m, t, grid));
  lvl.zg = central(ladder_potential_dx(fam, up, m, t, grid), ladder_potential_dx(fam, dn, m, t, grid));
  SolitonFamily fu = fam, fd = fam;
  fu.k[m - 1] += step;
  fd.k[m - 1] -= step;
  lvl.zk = central(ladder_potential_dx(fu, ladder, m, t, grid), ladder_potential_dx(fd, ladder, m, t, grid));
  lvl.crest = static_cast<std::size_t>(std::max_element(lvl.log_psi.begin(), lvl.log_psi.end()) - lvl.log_psi.begin());
  return lvl;
}

Orthogonality level_orthogonality(const BacklundLevel& lvl, const std::vector<double>& w) {
  std::vector<double> a(w.size()), b(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    a[i] = w[i] * lvl.zg[i];
    b[i] = w[i] * lvl.zk[i];
  }
  return {trapezoid(a, lvl.grid.dx), trapezoid(b, lvl.grid.dx)};
}

namespace {

// int_{x_j}^{x_{j+1}} g(y) exp(2 sign (L_ref - L(y))) dy on the 6-point stencil.
double interval_integral(const std::vector<double>& g, const std::vector<double>& L, std::size_t j, std::size_t ref,
                         double sign, double dx) {
  const std::size_t n = g.size();
  const int s = interval_stencil_start(j, n);
  const auto& w = interval_weights(s);
  double acc = 0.0;
  for (int o = 0; o < 6; ++o) {
    const auto node = static_cast<std::size_t>(static_cast<long>(j) + s + o);
    acc += w[static_cast<std::size_t>(o)] * g[node] * std::exp(2.0 * sign * (L[ref] - L[node]));
  }
  return dx * acc;
}

void check_size(const BacklundLevel& lvl, const std::vector<double>& w, const char* where) {
  if (w.size() != lvl.grid.n) throw InvalidArgument(std::string(where) + ": field does not match level grid");
}

}  // namespace

std::vector<double> linearized_forward(const BacklundLevel& lvl, const std::vector<double>& w_prev, double* alpha) {
  check_size(lvl, w_prev, "linearized_forward");
  const std::size_t n = lvl.grid.n, c = lvl.crest;
  const auto& L = lvl.log_psi;
  const double dx = lvl.grid.dx;
  std::vector<double> g(n), S(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) g[i] = 4.0 * lvl.D[i] * w_prev[i];
  for (std::size_t j = c; j + 1 < n; ++j)
    S[j + 1] = std::exp(2.0 * (L[j + 1] - L[j])) * S[j] + interval_integral(g, L, j, j + 1, 1.0, dx);
  for (std::size_t j = c; j-- > 0;)
    S[j] = std::exp(2.0 * (L[j] - L[j + 1])) * S[j + 1] - interval_integral(g, L, j, j, 1.0, dx);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = S[i] - w_prev[i];
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = out[i] * lvl.zk[i];
    b[i] = lvl.kernel[i] * lvl.zk[i];
  }
  const double al = -trapezoid(a, dx) / trapezoid(b, dx);
  for (std::size_t i = 0; i < n; ++i) out[i] += al * lvl.kernel[i];
  if (alpha) *alpha = al;
  return out;
}

std::vector<double> linearized_inverse(const BacklundLevel& lvl, const std::vector<double>& w_m, double tol) {
  check_size(lvl, w_m, "linearized_inverse");
  const std::size_t n = lvl.grid.n, c = lvl.crest;
  const auto& L = lvl.log_psi;
  const double dx = lvl.grid.dx;
  std::vector<double> g(n), right(n, 0.0), left(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) g[i] = 4.0 * lvl.D[i] * w_m[i];
  for (std::size_t j = n - 1; j-- > c;)
    right[j] = std::exp(2.0 * (L[j + 1] - L[j])) * right[j + 1] + interval_integral(g, L, j, j, -1.0, dx);
  for (std::size_t j = 0; j < c; ++j)
    left[j + 1] = std::exp(2.0 * (L[j] - L[j + 1])) * left[j] - interval_integral(g, L, j, j + 1, -1.0, dx);

  double scale = std::max(std::abs(right[c]), std::abs(left[c]));
  for (double v : w_m) scale = std::max(scale, std::abs(v));
  if (std::abs(right[c] - left[c]) > tol * std::max(scale, 1e-300)) {
    std::ostringstream os;
    os << "linearized_inverse: input not orthogonal to level " << lvl.m << " secular modes (tail mismatch "
       << std::abs(right[c] - left[c]) << ")";
    throw InvalidArgument(os.str());
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (i >= c ? right[i] : left[i]) - w_m[i];
  return out;
}

std::vector<double> project_out_secular(const SolitonFamily& fam, double t, const Grid& grid,
                                        const std::vector<double>& w, double step) {
  const SecularBasis b = secular_basis(fam, t, grid, step);
  const std::size_t N = fam.size(), n = grid.n;
  std::vector<const std::vector<double>*> Z;
  for (std::size_t i = 0; i < N; ++i) {
    Z.push_back(&b.xi1[i]);
    Z.push_back(&b.xi2[i]);
  }
  const long q = static_cast<long>(Z.size());
  Eigen::MatrixXd G(q, q);
  Eigen::VectorXd rhs(q);
  std::vector<double> prod(n);
  for (long a = 0; a < q; ++a) {
    for (long c = 0; c < q; ++c) {
      for (std::size_t s = 0; s < n; ++s) prod[s] = (*Z[a])[s] * (*Z[c])[s];
      G(a, c) = trapezoid(prod, grid.dx);
    }
    for (std::size_t s = 0; s < n; ++s) prod[s] = (*Z[a])[s] * w[s];
    rhs(a) = trapezoid(prod, grid.dx);
  }
  const Eigen::VectorXd coef = G.ldlt().solve(rhs);
  std::vector<double> out = w;
  for (long a = 0; a < q; ++a)
    for (std::size_t s = 0; s < n; ++s) out[s] -= coef(a) * (*Z[a])[s];
  return out;
}

LadderResult ladder_conjugate(const SolitonFamily& fam, double t, const Grid& grid, const std::vector<double>& w_N) {
  const PhaseLadder ladder = phase_ladder(fam);
  const std::size_t N = fam.size();
  LadderResult res;
  res.levels.resize(N + 1);
  res.levels[N] = w_N;
  for (std::size_t m = N; m >= 1; --m) {
    const BacklundLevel lvl = backlund_level(fam, ladder, m, t, grid);
    res.levels[m - 1] = linearized_inverse(lvl, res.levels[m]);
  }
  return res;
}

GridField FlowTrajectory::lab_field(std::size_t j) const {
  GridField out;
  out.grid = grid;
  out.grid.x0 = grid.x0 + frame.c * times.at(j) + frame.x0;
  out.values.resize(grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) out.values[i] = g[j][i] * std::exp(-frame.a * grid.x(i));
  return out;
}

FlowTrajectory evolve_linear_flow(const GridField& v0, const PotentialFn& potential, const FlowConfig& cfg,
                                  const Projector& projector) {
  if (!(cfg.dt > 0.0) || !(cfg.t1 >= cfg.t0)) throw InvalidArgument("evolve_linear_flow: bad time interval");
  if (cfg.store_every == 0) throw InvalidArgument("evolve_linear_flow: store_every must be positive");
  const std::size_t n = v0.grid.n;
  const WeightedFrame fr = cfg.frame;
  FlowTrajectory traj;
  traj.frame = fr;
  traj.grid = v0.grid;
  traj.grid.x0 = v0.grid.x0 - fr.c * cfg.t0 - fr.x0;
  const Grid& yg = traj.grid;
  auto lab_grid = [&](double t) {
    Grid g = yg;
    g.x0 = yg.x0 + fr.c * t + fr.x0;
    return g;
  };

  Fft fft(n);
  const auto xi = wavenumbers(n, yg.dx);
  std::vector<cplx> kappa(n), lin(n);
  std::vector<double> mask(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    const long s = (j <= n / 2) ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n);
    if (cfg.dealias && 3 * std::abs(s) > static_cast<long>(n)) mask[j] = 0.0;
    if (n % 2 == 0 && j == n / 2) mask[j] = 0.0;
    kappa[j] = cplx(-fr.a, xi[j]);
    lin[j] = -(kappa[j] * kappa[j] * kappa[j] - fr.c * kappa[j]);
  }

  std::vector<double> wy(n);
  for (std::size_t i = 0; i < n; ++i) wy[i] = std::exp(fr.a * yg.x(i));

  std::map<double, std::vector<double>> pot_cache;
  auto phi = [&](double t) -> const std::vector<double>& {
    auto it = pot_cache.find(t);
    if (it != pot_cache.end()) return it->second;
    if (pot_cache.size() > 4) pot_cache.erase(pot_cache.begin());
    auto v = potential ? potential(t, lab_grid(t)) : std::vector<double>(n, 0.0);
    if (v.size() != n) throw InvalidArgument("evolve_linear_flow: potential size mismatch");
    return pot_cache.emplace(t, std::move(v)).first->second;
  };

  std::vector<cplx> tmp(n), phys(n);
  auto nonlinear = [&](double t, const std::vector<cplx>& gh, std::vector<cplx>& out) {
    const auto& ph = phi(t);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = gh[j] * mask[j] * (cfg.form == FlowForm::Advective ? kappa[j] : cplx(1.0));
    fft.backward(tmp, phys);
    for (std::size_t i = 0; i < n; ++i) phys[i] = cplx(ph[i] * phys[i].real() / static_cast<double>(n), 0.0);
    fft.forward(phys, out);
    for (std::size_t j = 0; j < n; ++j)
      out[j] *= -12.0 * mask[j] * (cfg.form == FlowForm::Conservative ? kappa[j] : cplx(1.0));
  };

  auto to_physical = [&](const std::vector<cplx>& gh) {
    std::vector<cplx> z;
    fft.backward(gh, z);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = z[i].real() / static_cast<double>(n);
    return out;
  };
  auto to_spectral = [&](const std::vector<double>& g) {
    std::vector<cplx> z(g.begin(), g.end()), out;
    fft.forward(z, out);
    return out;
  };
  auto reproject = [&](double t, std::vector<cplx>& gh) {
    auto g = to_physical(gh);
    for (std::size_t i = 0; i < n; ++i) g[i] /= wy[i];
    g = projector(t, lab_grid(t), g);
    for (std::size_t i = 0; i < n; ++i) g[i] *= wy[i];
    gh = to_spectral(g);
  };
  auto store = [&](double t, const std::vector<cplx>& gh) {
    auto g = to_physical(gh);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = g[i] * g[i];
    traj.times.push_back(t);
    traj.norms.push_back(std::sqrt(trapezoid(sq, yg.dx)));
    traj.g.push_back(std::move(g));
  };

  std::vector<double> g0(n);
  for (std::size_t i = 0; i < n; ++i) g0[i] = wy[i] * v0.values[i];
  std::vector<cplx> gh = to_spectral(g0);
  for (std::size_t j = 0; j < n; ++j) gh[j] *= (n % 2 == 0 && j == n / 2) ? 0.0 : 1.0;
  if (projector && cfg.reproject_every > 0) reproject(cfg.t0, gh);
  store(cfg.t0, gh);

  const auto nsteps = static_cast<std::size_t>(std::ceil((cfg.t1 - cfg.t0) / cfg.dt - 1e-9));
  const double dt = nsteps ? (cfg.t1 - cfg.t0) / static_cast<double>(nsteps) : cfg.dt;
  std::vector<cplx> E(n), E2(n);
  for (std::size_t j = 0; j < n; ++j) {
    E[j] = std::exp(lin[j] * (0.5 * dt));
    E2[j] = E[j] * E[j];
  }
  std::vector<cplx> a(n), b(n), c(n), d(n), st(n);
  double t = cfg.t0;
  for (std::size_t s = 1; s <= nsteps; ++s) {
    nonlinear(t, gh, a);
    for (std::size_t j = 0; j < n; ++j) st[j] = E[j] * (gh[j] + 0.5 * dt * a[j]);
    nonlinear(t + 0.5 * dt, st, b);
    for (std::size_t j = 0; j < n; ++j) st[j] = E[j] * gh[j] + 0.5 * dt * b[j];
    nonlinear(t + 0.5 * dt, st, c);
    for (std::size_t j = 0; j < n; ++j) st[j] = E2[j] * gh[j] + dt * E[j] * c[j];
    nonlinear(t + dt, st, d);
    for (std::size_t j = 0; j < n; ++j)
      gh[j] = E2[j] * gh[j] + dt / 6.0 * (E2[j] * a[j] + 2.0 * E[j] * (b[j] + c[j]) + d[j]);
    t = cfg.t0 + dt * static_cast<double>(s);
    if (!std::isfinite(std::abs(gh[0])) || !std::isfinite(std::abs(gh[n / 3]))) throw EvolutionError("evolve_linear_flow: non-finite state", t - dt);
    if (projector && cfg.reproject_every > 0 && s % cfg.reproject_every == 0) reproject(t, gh);
    if (s % cfg.store_every == 0 || s == nsteps) store(t, gh);
  }
  return traj;
}

FlowTrajectory linearized_kdv_evolve(const GridField& v0, const SolitonFamily& fam, FlowConfig cfg) {
  fam.validate();
  check_grid_resolution(fam, v0.grid);
  cfg.form = FlowForm::Conservative;
  PotentialFn pot = [fam](double t, const Grid& g) { return kdv_profile(fam, t, g).values; };
  Projector proj;
  if (cfg.reproject_every > 0)
    proj = [fam](double t, const Grid& g, const std::vector<double>& v) {
      return secular_project(secular_basis(fam, t, g), v);
    };
  return evolve_linear_flow(v0, pot, cfg, proj);
}

}  // namespace fpu

#include "fpu/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fpu/error.hpp"

namespace fpu {

namespace {

double l2(const std::vector<double>& v, double dx) {
  std::vector<double> s(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) s[i] = v[i] * v[i];
  return std::sqrt(trapezoid(s, dx));
}

double l2_diff(const std::vector<double>& a, const std::vector<double>& b, double dx) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return l2(d, dx);
}

ProfileFamily train_family(const PotentialModel& model, const std::vector<double>& k, double eps) {
  const double lo = 1.0 + k.front() * k.front() * eps * eps / 6.0;
  const double hi = 1.0 + k.back() * k.back() * eps * eps / 6.0;
  return ProfileFamily(model, 1.0 + 0.5 * (lo - 1.0), 1.0 + 1.5 * (hi - 1.0));
}

std::vector<double> train_positions(std::size_t n, double first, double scaled_sep, double eps) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = first + static_cast<double>(i) * scaled_sep / eps;
  return x;
}

void require_train(const std::vector<double>& k, double eps) {
  if (k.empty()) throw InvalidArgument("empty k vector");
  if (!(eps > 0.0) || eps > 0.5) throw InvalidArgument("eps must lie in (0, 0.5]");
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (!(k[i] > 0.0)) throw InvalidArgument("k must be positive");
    if (i > 0 && !(k[i] > k[i - 1])) throw InvalidArgument("k must be increasing");
  }
}

std::vector<double> sech2_train(const std::vector<double>& k, const std::vector<double>& phase, double t,
                                const Grid& g) {
  std::vector<double> out(g.n, 0.0);
  for (std::size_t j = 0; j < k.size(); ++j)
    for (std::size_t i = 0; i < g.n; ++i) {
      const double s = 1.0 / std::cosh(k[j] * (g.x(i) - 4.0 * k[j] * k[j] * t - phase[j]));
      out[i] += k[j] * k[j] * s * s;
    }
  return out;
}

std::vector<double> random_bumps(std::mt19937_64& rng, const Grid& g, double lo, double hi) {
  std::uniform_real_distribution<double> uc(lo, hi), uw(0.8, 3.0), ua(-1.0, 1.0);
  std::vector<double> w(g.n, 0.0);
  for (int b = 0; b < 3; ++b) {
    const double c = uc(rng), s = uw(rng), a = ua(rng);
    for (std::size_t i = 0; i < g.n; ++i) w[i] += a * std::exp(-std::pow((g.x(i) - c) / s, 2));
  }
  return w;
}

DecayFit log_fit(const std::vector<double>& t, const std::vector<double>& v) {
  std::vector<double> y(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) throw InvalidArgument("log fit needs positive values");
    y[i] = std::log(v[i]);
  }
  const auto f = fit_line(t, y);
  return DecayFit{f.slope, f.intercept, f.r2, t.size()};
}

}  // namespace

PerturbationShape parse_shape(const std::string& name) {
  if (name == "gaussian-bump") return PerturbationShape::GaussianBump;
  if (name == "single-site") return PerturbationShape::SingleSite;
  if (name == "band-limited-noise") return PerturbationShape::BandLimitedNoise;
  throw InvalidArgument("unknown perturbation shape: " + name);
}

std::string shape_name(PerturbationShape s) {
  switch (s) {
    case PerturbationShape::GaussianBump: return "gaussian-bump";
    case PerturbationShape::SingleSite: return "single-site";
    case PerturbationShape::BandLimitedNoise: return "band-limited-noise";
  }
  return "?";
}

LatticeField make_perturbation(const PerturbationSpec& spec, long offset, std::size_t n) {
  LatticeField v(offset, n);
  if (spec.norm < 0.0) throw InvalidArgument("perturbation norm must be nonnegative");
  if (spec.norm == 0.0) return v;
  if (!(spec.width > 0.0)) throw InvalidArgument("perturbation width must be positive");
  const double w2 = spec.width * spec.width;
  switch (spec.shape) {
    case PerturbationShape::GaussianBump:
      for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(offset + static_cast<long>(i)) - spec.center;
        v.r[i] = std::exp(-x * x / w2);
        v.p[i] = -0.5 * std::exp(-(x - 1.0) * (x - 1.0) / w2);
      }
      break;
    case PerturbationShape::SingleSite: {
      const long s = std::lround(spec.center);
      if (s < v.first() || s > v.last()) throw InvalidArgument("perturbation site outside the window");
      v.r[static_cast<std::size_t>(s - offset)] = 1.0;
      break;
    }
    case PerturbationShape::BandLimitedNoise: {
      std::mt19937_64 rng(spec.seed);
      std::uniform_real_distribution<double> uxi(0.0, 0.5), uph(0.0, 2.0 * M_PI);
      std::normal_distribution<double> ua(0.0, 1.0);
      constexpr int modes = 8;
      double xi[2][modes], ph[2][modes], am[2][modes];
      for (int c = 0; c < 2; ++c)
        for (int j = 0; j < modes; ++j) {
          xi[c][j] = uxi(rng);
          ph[c][j] = uph(rng);
          am[c][j] = ua(rng);
        }
      for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(offset + static_cast<long>(i)) - spec.center;
        const double env = std::exp(-x * x / (4.0 * w2));
        double r = 0.0, p = 0.0;
        for (int j = 0; j < modes; ++j) {
          r += am[0][j] * std::cos(xi[0][j] * x + ph[0][j]);
          p += am[1][j] * std::cos(xi[1][j] * x + ph[1][j]);
        }
        v.r[i] = env * r;
        v.p[i] = env * p;
      }
      break;
    }
  }
  const double nv = l2_norm(v);
  if (!(nv > 0.0)) throw InvalidArgument("perturbation vanishes on the window");
  v *= spec.norm / nv;
  return v;
}

OrbitalResult run_orbital(const OrbitalConfig& cfg) {
  require_train(cfg.k, cfg.eps);
  if (!(cfg.scaled_separation > 0.0)) throw InvalidArgument("separation must be positive");
  if (cfg.delta0 < 0.0 || cfg.amplitude < 0.0) throw InvalidArgument("perturbation amplitude must be nonnegative");
  const double eps = cfg.eps;
  const ProfileFamily fam = train_family(cfg.model, cfg.k, eps);
  OrbitalResult res;
  res.initial = kdv_scaled_params(cfg.k, eps, train_positions(cfg.k.size(), cfg.first_position,
                                                               cfg.scaled_separation, eps));
  const std::size_t n = cfg.window;
  if (res.initial.x.back() + 100.0 > static_cast<double>(n) || cfg.first_position < 100.0)
    throw InvalidArgument("train does not fit in the window");

  LatticeField u = wave_train(fam, res.initial, 0, n);
  PerturbationSpec ps{cfg.shape, cfg.amplitude * cfg.delta0 * eps * eps, cfg.first_position + cfg.perturbation_offset,
                      cfg.perturbation_width, cfg.seed};
  const LatticeField v0 = make_perturbation(ps, 0, n);
  res.v0_norm = l2_norm(v0);
  u += v0;

  EvolveConfig ec;
  ec.t_end = cfg.t_end;
  ec.dt = cfg.dt;
  ec.scheme = cfg.scheme;
  ec.observe_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.track_every / cfg.dt)));

  Tracker tk(fam, res.initial, eps);
  Observer ob{"track", [&](double t, const LatticeField& s) {
                const auto& st = tk.push(t, s);
                WaveParams q = res.initial;
                q.x = st.params.x;
                res.deviation.push_back(l2_norm(s - wave_train(fam, q, 0, n)));
                res.v_norm.push_back(l2_norm(st.v));
                res.energy.push_back(hamiltonian(s, cfg.model));
                for (std::size_t i = 1; i < st.params.size(); ++i)
                  if (!(st.params.x[i] > st.params.x[i - 1]) || !(st.params.c[i] > st.params.c[i - 1]))
                    res.ordering_preserved = false;
                return std::vector<double>{};
              }};
  const auto er = evolve_nonlinear(u, cfg.model, ec, {ob});
  res.max_boundary_mass = er.max_boundary_mass;
  res.track = tk.finish();
  res.max_deviation = *std::max_element(res.deviation.begin(), res.deviation.end());
  res.bound_scale = res.v0_norm + std::pow(eps, 1.5) * std::exp(-cfg.k.front() * cfg.scaled_separation);
  res.fitted_A = res.max_deviation / res.bound_scale;
  res.speed_variation = final_speed_variation(res.track);
  res.max_speed_drift.assign(cfg.k.size(), 0.0);
  for (const auto& st : res.track.states)
    for (std::size_t i = 0; i < cfg.k.size(); ++i)
      res.max_speed_drift[i] = std::max(res.max_speed_drift[i], std::abs(st.params.c[i] - res.initial.c[i]));
  return res;
}

LinearFpuResult run_linear_fpu(const LinearFpuConfig& cfg) {
  require_train(cfg.k, cfg.eps);
  if (!(cfg.chunk > 0.0) || !(cfg.dt > 0.0) || cfg.t_end < cfg.chunk) throw InvalidArgument("bad time stepping");
  const double eps = cfg.eps, k1 = cfg.k.front();
  const ProfileFamily fam = train_family(cfg.model, cfg.k, eps);
  WaveParams p = kdv_scaled_params(cfg.k, eps, train_positions(cfg.k.size(), 0.0, cfg.scaled_separation, eps));
  const double c1 = p.c.front();
  const long margin = static_cast<long>(std::ceil(40.0 / (k1 * eps)));
  long off = -margin;
  const std::size_t n = static_cast<std::size_t>(2 * margin + static_cast<long>(std::ceil(p.x.back())) + 200);

  LatticeField u = wave_train(fam, p, off, n);
  LatticeField w(off, n);
  const double w2 = cfg.data_width * cfg.data_width;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(off + static_cast<long>(i)) - (p.x.front() + cfg.data_offset);
    w.r[i] = std::exp(-x * x / w2);
    w.p[i] = 0.5 * std::exp(-(x - 1.0) * (x - 1.0) / w2);
  }
  w = symplectic_project(w, fam, p);
  w *= 1.0 / l2_norm(w);

  LinearFpuResult res;
  double t = 0.0;
  auto measure = [&] {
    res.t.push_back(t);
    res.norm.push_back(weighted_norm(w, WeightSpec{k1 * eps, c1 * t, WeightOrientation::RightGrowing}));
  };
  measure();
  while (t < cfg.t_end - 1e-9) {
    // Background at half the step so that RK4 stages of the linear flow see interpolated states.
    Trajectory bg;
    bg.times.push_back(t);
    bg.states.push_back(u);
    EvolveConfig ec;
    ec.t0 = t;
    ec.t_end = t + cfg.chunk;
    ec.dt = cfg.dt / 2.0;
    ec.scheme = Scheme::RK4;
    Observer ob{"background", [&](double tt, const LatticeField& s) {
                  if (tt > t) {
                    bg.times.push_back(tt);
                    bg.states.push_back(s);
                  }
                  return std::vector<double>{};
                }};
    u = evolve_nonlinear(u, cfg.model, ec, {ob}).final_state;
    LinearizedConfig lc;
    lc.t0 = t;
    lc.t_end = t + cfg.chunk;
    lc.dt = cfg.dt;
    lc.store_every = static_cast<std::size_t>(-1);
    w = evolve_linearized(w, cfg.model, interpolate_trajectory(std::move(bg)), lc).states.back();
    t += cfg.chunk;
    for (std::size_t i = 0; i < p.size(); ++i) p.x[i] += p.c[i] * cfg.chunk;
    p = decompose(u, fam, p, eps).params;
    w = symplectic_project(w, fam, p);
    measure();
    const long noff = static_cast<long>(std::floor(p.x.front())) - margin;
    if (noff != off) {
      u = reembed(u, noff, n);
      w = reembed(w, noff, n);
      off = noff;
    }
  }
  std::vector<double> ft, fn;
  for (std::size_t j = 0; j < res.t.size(); ++j)
    if (res.t[j] >= cfg.fit_from * cfg.t_end) {
      ft.push_back(res.t[j]);
      fn.push_back(res.norm[j]);
    }
  res.fit = decay_fit(ft, fn);
  res.rate_over_eps3 = -res.fit.rate / (eps * eps * eps);
  res.free_bound_over_eps3 = k1 * k1 * k1 / 8.0;
  return res;
}

KdvDecayResult run_kdv_decay(const KdvDecayConfig& cfg) {
  const SolitonFamily fam{cfg.k, cfg.gamma};
  fam.validate();
  const double c = cfg.c > 0.0 ? cfg.c : 4.0 * cfg.k.front() * cfg.k.front();
  if (!(cfg.a > 0.0) || cfg.a >= 2.0 * cfg.k.front()) throw InvalidArgument("weight a must lie in (0, 2 k_1)");
  const auto grid = Grid::span(cfg.left, cfg.right, cfg.dx);
  GridField v0{grid, std::vector<double>(grid.n)};
  const double w2 = cfg.data_width * cfg.data_width;
  for (std::size_t i = 0; i < grid.n; ++i) v0.values[i] = std::exp(-std::pow(grid.x(i) - cfg.data_center, 2) / w2);
  v0.values = secular_project(secular_basis(fam, 0.0, grid), v0.values);

  FlowConfig fc;
  fc.t1 = cfg.t_end;
  fc.dt = cfg.dt;
  fc.store_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.5 / cfg.dt)));
  fc.frame = {cfg.a, c, cfg.x0};
  fc.reproject_every = cfg.reproject_every;
  const auto tr = linearized_kdv_evolve(v0, fam, fc);
  fc.reproject_every = 0;
  const auto airy = evolve_linear_flow(v0, {}, fc);

  KdvDecayResult res;
  res.target = cfg.a * (c - cfg.a * cfg.a);
  res.t = tr.times;
  res.norm = tr.norms;
  res.airy_norm = airy.norms;
  std::vector<double> ft, fn, fa;
  for (std::size_t j = 0; j < tr.times.size(); ++j)
    if (tr.times[j] >= cfg.fit_start - 1e-12) {
      ft.push_back(tr.times[j]);
      fn.push_back(tr.norms[j]);
      fa.push_back(airy.norms[j]);
    }
  res.fit = decay_fit(ft, fn);
  res.airy_fit = decay_fit(ft, fa);
  res.ratio = -res.fit.rate / res.target;
  return res;
}

BacklundDraw audit_family(const SolitonFamily& fam, const std::vector<double>& times, std::size_t fields,
                          std::uint64_t seed) {
  fam.validate();
  const std::size_t N = fam.size();
  const auto ladder = phase_ladder(fam);
  const double k1 = fam.k.front(), kN = fam.k.back();
  BacklundDraw d;
  d.family = fam;
  for (double t : times) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < N; ++i) {
      const double x = 4.0 * fam.k[i] * fam.k[i] * t + fam.gamma[i];
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    const auto grid = Grid::span(lo - 10.0 - 30.0 / k1, hi + 10.0 + 30.0 / k1, 0.1 / kN);
    for (std::size_t m = 1; m <= N; ++m)
      d.max_residual = std::max(d.max_residual, backlund_residual(fam, ladder, m, t, grid));
    if (N >= 2) {
      // Level-N ladder with the previous level's phases equal to the family's.
      PhaseLadder wrong = ladder;
      wrong.gamma[N - 1] = std::vector<double>(fam.gamma.begin(), fam.gamma.begin() + static_cast<long>(N - 1));
      const double r = backlund_residual(fam, wrong, N, t, grid);
      d.wrong_phase = d.wrong_phase < 0.0 ? r : std::min(d.wrong_phase, r);
    }
  }

  if (fields == 0) return d;
  const double half = 10.0 + 25.0 / k1;
  const auto grid = Grid::span(-half, half, 0.035 / kN);
  std::mt19937_64 rng(seed);
  for (std::size_t m = 1; m <= N; ++m) {
    const auto lvl = backlund_level(fam, ladder, m, 0.0, grid);
    for (std::size_t f = 0; f < fields; ++f) {
      const auto w = random_bumps(rng, grid, -10.0, 10.0);
      const auto fw = linearized_forward(lvl, w);
      const double nf = l2(fw, grid.dx);
      const auto o = level_orthogonality(lvl, fw);
      d.orthogonality = std::max({d.orthogonality, std::abs(o.gamma) / nf, std::abs(o.k) / nf});
      const auto back = linearized_inverse(lvl, fw);
      d.inverse_forward = std::max(d.inverse_forward, l2_diff(back, w, grid.dx) / l2(w, grid.dx));
      const auto again = linearized_forward(lvl, back);
      d.forward_inverse = std::max(d.forward_inverse, l2_diff(again, fw, grid.dx) / nf);
    }
  }
  return d;
}

BacklundAuditResult run_backlund_audit(const BacklundAuditConfig& cfg) {
  if (cfg.max_n < 1 || cfg.max_n > 8) throw InvalidArgument("max_n must lie in 1..8");
  if (!(cfg.k_min > 0.0) || cfg.k_max - cfg.k_min < cfg.min_gap * static_cast<double>(cfg.max_n))
    throw InvalidArgument("k range too narrow for the requested gap");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uk(cfg.k_min, cfg.k_max), ug(-cfg.gamma_range, cfg.gamma_range);
  BacklundAuditResult res;
  res.min_wrong_phase = -1.0;
  for (std::size_t d = 0; d < cfg.draws; ++d) {
    const std::size_t N = 1 + d % cfg.max_n;
    SolitonFamily fam;
    for (;;) {
      fam.k.clear();
      for (std::size_t i = 0; i < N; ++i) fam.k.push_back(uk(rng));
      std::sort(fam.k.begin(), fam.k.end());
      bool ok = true;
      for (std::size_t i = 1; i < N; ++i) ok = ok && fam.k[i] - fam.k[i - 1] >= cfg.min_gap;
      if (ok) break;
    }
    fam.gamma.clear();
    for (std::size_t i = 0; i < N; ++i) fam.gamma.push_back(ug(rng));
    auto draw = audit_family(fam, cfg.times, cfg.fields, rng());
    res.max_residual = std::max(res.max_residual, draw.max_residual);
    if (draw.wrong_phase >= 0.0)
      res.min_wrong_phase = res.min_wrong_phase < 0.0 ? draw.wrong_phase : std::min(res.min_wrong_phase, draw.wrong_phase);
    res.max_forward_inverse = std::max(res.max_forward_inverse, draw.forward_inverse);
    res.max_inverse_forward = std::max(res.max_inverse_forward, draw.inverse_forward);
    res.max_orthogonality = std::max(res.max_orthogonality, draw.orthogonality);
    res.draws.push_back(std::move(draw));
  }
  return res;
}

std::vector<double> half_sum_phases(const SolitonFamily& fam) {
  fam.validate();
  const auto& k = fam.k;
  std::vector<double> g(fam.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = i + 1; j < k.size(); ++j) s += std::log((k[j] + k[i]) / (k[j] - k[i]));
    g[i] = fam.gamma[i] - std::log(2.0 * k[i]) / (2.0 * k[i]) - s / (2.0 * k[i]);
  }
  return g;
}

double measured_phase(const SolitonFamily& fam, std::size_t i, double t) {
  fam.validate();
  if (i >= fam.size()) throw InvalidArgument("soliton index out of range");
  const double k = fam.k[i];
  const double guess = 4.0 * k * k * t + asymptotic_phases(fam)[i];
  // phi_x = d^3 log Delta changes sign from + to - across the crest.
  double a = guess - 1.5 / k, b = guess + 1.5 / k;
  auto slope = [&](double x) { return tau_eval(fam, t, x, fam.size()).d3; };
  if (!(slope(a) > 0.0 && slope(b) < 0.0)) throw ConvergenceError("crest not bracketed");
  for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(guess)); ++it) {
    const double m = 0.5 * (a + b);
    (slope(m) > 0.0 ? a : b) = m;
  }
  return 0.5 * (a + b) - 4.0 * k * k * t;
}

ResolutionResult run_resolution(const ResolutionConfig& cfg) {
  const SolitonFamily fam{cfg.k, cfg.gamma};
  fam.validate();
  ResolutionResult res;
  res.phases = asymptotic_phases(fam);
  res.half_phases = half_sum_phases(fam);
  for (std::size_t i = 0; i < fam.size(); ++i) {
    res.measured.push_back(measured_phase(fam, i, cfg.phase_time));
    res.phase_error = std::max(res.phase_error, std::abs(res.phases[i] - res.measured[i]));
    res.half_phase_error = std::max(res.half_phase_error, std::abs(res.half_phases[i] - res.measured[i]));
  }
  const double k1 = fam.k.front(), kN = fam.k.back();
  for (double t : cfg.times) {
    const double lo = std::min(0.0, *std::min_element(cfg.gamma.begin(), cfg.gamma.end())) - 30.0 / k1;
    const double hi = 4.0 * kN * kN * t + *std::max_element(cfg.gamma.begin(), cfg.gamma.end()) + 30.0 / k1;
    const auto grid = Grid::span(lo, hi, cfg.dx);
    const auto sr = soliton_resolution(fam, t, grid);
    res.times.push_back(t);
    res.sup_remainder.push_back(sr.sup_remainder);
    const auto phi = kdv_profile(fam, t, grid);
    const auto train = sech2_train(fam.k, res.half_phases, t, grid);
    double m = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i) m = std::max(m, std::abs(phi.values[i] - train[i]));
    res.sup_remainder_half.push_back(m);
  }
  res.fit = log_fit(res.times, res.sup_remainder);
  res.fit_half = log_fit(res.times, res.sup_remainder_half);
  return res;
}

DispersionAuditResult run_dispersion_audit(const DispersionAuditConfig& cfg) {
  if (cfg.eps.empty()) throw InvalidArgument("empty eps list");
  const double a = cfg.a > 0.0 ? cfg.a : cfg.k1;
  DispersionAuditResult res;
  res.inequalities_hold = true;
  res.printed_hold = true;
  for (double e : cfg.eps) {
    const auto r = dispersion_check(e, a, cfg.k1, cfg.K, cfg.delta, cfg.points);
    const double high = cfg.half_angle_high_band ? r.margin_high_half : r.margin_high;
    res.inequalities_hold = res.inequalities_hold && r.margin_cubic >= 0.0 && r.margin_quadratic > 0.0 &&
                            high > 0.0 && r.margin_minus > 0.0;
    res.printed_hold = res.printed_hold && r.all_hold();
    res.reports.push_back(r);
  }
  res.tail = symbol_and_tail_check(cfg.eps, cfg.tail_eps, a, cfg.k1, cfg.family);
  res.symbol = res.tail.symbol;
  const auto [mn, mx] = std::minmax_element(res.symbol.begin(), res.symbol.end());
  res.symbol_spread = *mx / *mn;
  return res;
}

VirialResult run_virial(const VirialConfig& cfg) {
  if (!(cfg.eps > 0.0) || !(cfg.a_factor > 0.0) || cfg.amplitude < 0.0) throw InvalidArgument("bad virial parameters");
  const double eps = cfg.eps;
  VirialResult res;
  res.a = cfg.a_factor * eps;
  res.speed = 1.0 + eps * eps / 12.0;
  const double min_speed = 1.0 + eps * eps / 24.0;
  const long off = -static_cast<long>(cfg.half_window);
  const std::size_t n = 2 * cfg.half_window + 1;
  const LatticeField v0 = make_perturbation({PerturbationShape::GaussianBump, cfg.amplitude * eps * eps, 0.0, cfg.width, 1},
                                            off, n);
  res.v0_norm = l2_norm(v0);

  const double speed = res.speed;
  const auto xtilde = [speed](double t) { return speed * t; };
  Trajectory buf;
  bool first = true;
  auto flush = [&] {
    if (buf.times.size() < 2) return;
    const auto s = virial_series(buf, res.a, xtilde, cfg.model, min_speed);
    auto& out = res.series;
    const std::size_t skip = first ? 0 : 1;
    const double base = out.integrated.empty() ? 0.0 : out.integrated.back();
    for (std::size_t j = skip; j < s.t.size(); ++j) {
      out.t.push_back(s.t[j]);
      out.psi_energy.push_back(s.psi_energy[j]);
      out.sech_energy.push_back(s.sech_energy[j]);
      out.integrated.push_back(base + s.integrated[j]);
    }
    out.max_increase = first ? s.max_increase : std::max(out.max_increase, s.max_increase);
    out.hypothesis_ok = out.hypothesis_ok && s.hypothesis_ok;
    first = false;
    Trajectory next;
    next.times.push_back(buf.times.back());
    next.states.push_back(std::move(buf.states.back()));
    buf = std::move(next);
  };
  EvolveConfig ec;
  ec.t_end = cfg.t_end;
  ec.dt = cfg.dt;
  ec.scheme = Scheme::RK4;
  Observer ob{"virial", [&](double t, const LatticeField& u) {
                buf.times.push_back(t);
                buf.states.push_back(u);
                if (buf.times.size() >= 1000) flush();
                return std::vector<double>{};
              }};
  const auto er = evolve_nonlinear(v0, cfg.model, ec, {ob});
  flush();
  res.max_boundary_mass = er.max_boundary_mass;
  const auto& s = res.series;
  if (!s.integrated.empty() && s.integrated.back() > 0.0)
    res.dissipation_ratio = (s.psi_energy.front() - s.psi_energy.back()) / (res.a * s.integrated.back());
  return res;
}

}  // namespace fpu

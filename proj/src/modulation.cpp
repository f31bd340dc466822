#include "fpu/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fpu/error.hpp"

namespace fpu {

namespace {

double dot(const LatticeField& a, const LatticeField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.r[i] * b.r[i] + a.p[i] * b.p[i];
  return s;
}

// Sampled wave data for one soliton on the window.
struct WaveFields {
  LatticeField u, dx, dc, jdx, jdc;  // jdx = J^-1 dx, jdc = J^-1 dc
  LatticeField dxx, dcx, dcc;        // second derivatives, when requested
};

WaveFields sample_wave(const ProfileFamily& fam, double c, double x, long offset, std::size_t n, bool second) {
  const auto e = fam.at(c, second);
  WaveFields f;
  f.u = e.u.sample(offset, n, x);
  f.dx = e.du_dx.sample(offset, n, x);
  f.dc = e.du_dc.sample(offset, n, x);
  f.jdx = apply_j(f.dx, JMode::Inverse, 1e-8);
  f.jdc = apply_j(f.dc, JMode::Inverse, 1e-8);
  if (second) {
    f.dxx = e.du_dxx.sample(offset, n, x);
    f.dcx = e.du_dcdx.sample(offset, n, x);
    f.dcc = e.du_dcc.sample(offset, n, x);
  }
  return f;
}

void check_params(const WaveParams& w) {
  if (w.c.empty() || w.c.size() != w.x.size()) throw InvalidArgument("wave parameters need matching c and x");
  for (double c : w.c)
    if (!(c > 1.0) || !std::isfinite(c)) throw ConvergenceError("wave speed left the range c > 1");
  for (std::size_t i = 1; i < w.size(); ++i)
    if (!(w.x[i] - w.x[i - 1] >= 2.0)) throw ConvergenceError("wave collision: crest separation below 2 sites");
}

Eigen::MatrixXd assemble(const std::vector<WaveFields>& f, const LatticeField* v, double eps) {
  const std::size_t N = f.size();
  Eigen::MatrixXd A(2 * N, 2 * N);
  const double e1 = 1.0 / eps, e4 = std::pow(eps, -4.0), e2 = eps * eps;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      A(2 * i, 2 * j) = e1 * dot(f[j].dc, f[i].jdx);
      A(2 * i, 2 * j + 1) = e4 * dot(f[j].dx, f[i].jdx);
      A(2 * i + 1, 2 * j) = e2 * dot(f[j].dc, f[i].jdc);
      A(2 * i + 1, 2 * j + 1) = e1 * dot(f[j].dx, f[i].jdc);
    }
    if (v) {
      // d/dc_i and d/dx_i of the test functions; unknown a_i = -eps^-3 c_i.
      const auto jcx = apply_j(f[i].dcx, JMode::Inverse, 1e-8);
      const auto jxx = apply_j(f[i].dxx, JMode::Inverse, 1e-8);
      const auto jcc = apply_j(f[i].dcc, JMode::Inverse, 1e-8);
      A(2 * i, 2 * i) += -e1 * dot(*v, jcx);
      A(2 * i, 2 * i + 1) += -e4 * dot(*v, jxx);
      A(2 * i + 1, 2 * i) += -e2 * dot(*v, jcc);
      A(2 * i + 1, 2 * i + 1) += -e1 * dot(*v, jcx);
    }
  }
  return A;
}

}  // namespace

WaveParams kdv_scaled_params(const std::vector<double>& k, double eps, const std::vector<double>& x) {
  if (k.size() != x.size()) throw InvalidArgument("k and x must have the same length");
  WaveParams w;
  for (std::size_t i = 0; i < k.size(); ++i) {
    w.c.push_back(1.0 + k[i] * k[i] * eps * eps / 6.0);
    w.x.push_back(x[i]);
  }
  return w;
}

LatticeField wave_train(const ProfileFamily& fam, const WaveParams& w, long offset, std::size_t n) {
  LatticeField u(offset, n);
  for (std::size_t i = 0; i < w.size(); ++i) u += fam.at(w.c[i]).u.sample(offset, n, w.x[i]);
  return u;
}

Eigen::MatrixXd secular_gram(const ProfileFamily& fam, const WaveParams& w, double eps, long offset, std::size_t n) {
  check_params(w);
  std::vector<WaveFields> f;
  for (std::size_t i = 0; i < w.size(); ++i) f.push_back(sample_wave(fam, w.c[i], w.x[i], offset, n, false));
  return assemble(f, nullptr, eps);
}

Eigen::MatrixXd newton_jacobian(const LatticeField& u, const ProfileFamily& fam, const WaveParams& w, double eps) {
  check_params(w);
  std::vector<WaveFields> f;
  LatticeField v = u;
  for (std::size_t i = 0; i < w.size(); ++i) {
    f.push_back(sample_wave(fam, w.c[i], w.x[i], u.offset, u.size(), true));
    v -= f.back().u;
  }
  return assemble(f, &v, eps);
}

LatticeField symplectic_project(const LatticeField& w, const ProfileFamily& fam, const WaveParams& p) {
  check_params(p);
  const std::size_t N = p.size();
  std::vector<WaveFields> f;
  for (std::size_t i = 0; i < N; ++i) f.push_back(sample_wave(fam, p.c[i], p.x[i], w.offset, w.size(), false));
  Eigen::MatrixXd G(2 * N, 2 * N);
  Eigen::VectorXd b(2 * N);
  for (std::size_t i = 0; i < N; ++i) {
    b(2 * i) = dot(w, f[i].jdx);
    b(2 * i + 1) = dot(w, f[i].jdc);
    for (std::size_t j = 0; j < N; ++j) {
      G(2 * i, 2 * j) = dot(f[j].dx, f[i].jdx);
      G(2 * i, 2 * j + 1) = dot(f[j].dc, f[i].jdx);
      G(2 * i + 1, 2 * j) = dot(f[j].dx, f[i].jdc);
      G(2 * i + 1, 2 * j + 1) = dot(f[j].dc, f[i].jdc);
    }
  }
  const Eigen::VectorXd coef = G.fullPivLu().solve(b);
  LatticeField out = w;
  for (std::size_t j = 0; j < N; ++j) {
    axpy(-coef(2 * j), f[j].dx, out);
    axpy(-coef(2 * j + 1), f[j].dc, out);
  }
  return out;
}

std::vector<double> symplectic_residuals(const LatticeField& w, const ProfileFamily& fam, const WaveParams& p) {
  check_params(p);
  std::vector<double> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto f = sample_wave(fam, p.c[i], p.x[i], w.offset, w.size(), false);
    out.push_back(dot(w, f.jdx));
    out.push_back(dot(w, f.jdc));
  }
  return out;
}

ModulationState decompose(const LatticeField& u, const ProfileFamily& fam, const WaveParams& guess, double eps,
                          const DecomposeOptions& opt) {
  check_params(guess);
  const std::size_t N = guess.size();
  WaveParams w = guess;
  const double e1 = 1.0 / eps, e4 = std::pow(eps, -4.0), e3 = eps * eps * eps;
  ModulationState st;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int it = 0; it <= opt.max_iter; ++it) {
    check_params(w);
    std::vector<WaveFields> f;
    LatticeField v = u;
    for (std::size_t i = 0; i < N; ++i) {
      f.push_back(sample_wave(fam, w.c[i], w.x[i], u.offset, u.size(), true));
      v -= f.back().u;
    }
    Eigen::VectorXd F(2 * N);
    std::vector<double> orth(2 * N);
    for (std::size_t i = 0; i < N; ++i) {
      orth[2 * i] = dot(v, f[i].jdx);
      orth[2 * i + 1] = dot(v, f[i].jdc);
      F(2 * i) = e4 * orth[2 * i];
      F(2 * i + 1) = e1 * orth[2 * i + 1];
    }
    const double fn = F.norm();
    if (fn < best) {
      best = fn;
      since_best = 0;
    } else if (++since_best > 5) {
      throw ConvergenceError("modulation Newton iteration stopped reducing the residual");
    }
    const Eigen::MatrixXd A = assemble(f, &v, eps);
    const Eigen::VectorXd dz = A.fullPivLu().solve(-F);
    double step = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      step = std::max(step, std::abs(e3 * dz(2 * j)) / (w.c[j] - 1.0));
      step = std::max(step, std::abs(dz(2 * j + 1)) / (1.0 + std::abs(w.x[j])));
    }
    st.params = w;
    st.v = std::move(v);
    st.orthogonality = orth;
    st.iterations = it;
    if (!dz.allFinite()) throw ConvergenceError("singular modulation Jacobian");
    if (step <= opt.step_tol) break;
    if (it == opt.max_iter) throw ConvergenceError("modulation Newton iteration did not converge");
    for (std::size_t j = 0; j < N; ++j) {
      w.c[j] -= e3 * dz(2 * j);
      w.x[j] += dz(2 * j + 1);
    }
  }
  st.min_separation = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < N; ++i)
    st.min_separation = std::min(st.min_separation, st.params.x[i] - st.params.x[i - 1]);
  st.separation_warning = N > 1 && eps * st.min_separation < opt.separation_floor;
  return st;
}

Tracker::Tracker(const ProfileFamily& fam, WaveParams guess, double eps, DecomposeOptions opt, bool keep_residual)
    : fam_(&fam), guess_(std::move(guess)), eps_(eps), opt_(opt), keep_(keep_residual) {}

const ModulationState& Tracker::push(double t, const LatticeField& u) {
  if (!track_.times.empty() && !(t > track_.times.back())) throw InvalidArgument("track times must increase");
  // Advance the seed by the previous speeds.
  if (!track_.times.empty())
    for (std::size_t i = 0; i < guess_.size(); ++i) guess_.x[i] += guess_.c[i] * (t - track_.times.back());
  ModulationState st;
  try {
    st = decompose(u, *fam_, guess_, eps_, opt_);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(std::string(e.what()) + " at t=" + std::to_string(t));
  }
  guess_ = st.params;
  if (!keep_) st.v = LatticeField();
  track_.times.push_back(t);
  track_.states.push_back(std::move(st));
  return track_.states.back();
}

ModulationTrack Tracker::finish() const {
  ModulationTrack tr = track_;
  const std::size_t M = tr.times.size();
  if (M == 0) return tr;
  const std::size_t N = tr.states[0].params.size();
  tr.xdot.assign(N, std::vector<double>(M, 0.0));
  tr.c_plus.assign(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < M && M > 1; ++j) {
      const std::size_t a = j == 0 ? 0 : j - 1, b = j + 1 == M ? j : j + 1;
      tr.xdot[i][j] = (tr.states[b].params.x[i] - tr.states[a].params.x[i]) / (tr.times[b] - tr.times[a]);
    }
    const std::size_t start = M - std::max<std::size_t>(1, M / 5);
    double s = 0.0;
    for (std::size_t j = start; j < M; ++j) s += tr.states[j].params.c[i];
    tr.c_plus[i] = s / static_cast<double>(M - start);
  }
  return tr;
}

ModulationTrack track(const Trajectory& traj, const ProfileFamily& fam, const WaveParams& guess, double eps,
                      const DecomposeOptions& opt) {
  Tracker tk(fam, guess, eps, opt);
  for (std::size_t j = 0; j < traj.times.size(); ++j) tk.push(traj.times[j], traj.states[j]);
  return tk.finish();
}

std::vector<double> final_speed_variation(const ModulationTrack& tr, double fraction) {
  std::vector<double> out;
  const std::size_t M = tr.times.size();
  const std::size_t start = M - std::max<std::size_t>(2, static_cast<std::size_t>(fraction * static_cast<double>(M)));
  for (const auto& xd : tr.xdot) {
    // Interior samples only; the end points use one-sided differences.
    const std::size_t a = std::max<std::size_t>(start, 1), b = M - 1;
    if (b <= a) {
      out.push_back(0.0);
      continue;
    }
    const auto [lo, hi] = std::minmax_element(xd.begin() + static_cast<long>(a), xd.begin() + static_cast<long>(b));
    out.push_back(*hi - *lo);
  }
  return out;
}

SplitResult perturbation_split(const LatticeField& u0, const LatticeField& v0, const ProfileFamily& fam,
                               const WaveParams& guess, double eps, const SplitConfig& cfg) {
  require_same_window(u0, v0, "perturbation_split");
  const auto& model = fam.model();
  Trajectory v1;
  Observer keep{"state", [&](double t, const LatticeField& u) {
                  v1.times.push_back(t);
                  v1.states.push_back(u);
                  return std::vector<double>{};
                }};
  evolve_nonlinear(v0, model, cfg.evolve, {keep});

  SplitResult out;
  Tracker tk(fam, guess, eps, {}, true);
  std::size_t j = 0;
  const std::size_t N = guess.size();
  auto weight_norms = [&](const LatticeField& f, const WaveParams& w, double& wn, double* xn) {
    wn = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double k = i < cfg.k.size() ? cfg.k[i] : 1.0;
      wn += weighted_l2_norm(f, WeightSpec{k * eps / 2.0, w.x[i], WeightOrientation::TwoSidedDecaying});
    }
    if (xn) {
      const double k1 = cfg.k.empty() ? 1.0 : cfg.k[0];
      *xn = weighted_l2_norm(f, WeightSpec{k1 * eps / 2.0, w.x[0], WeightOrientation::RightGrowing});
    }
  };
  Observer obs{"split", [&](double t, const LatticeField& u) {
                 const auto& st = tk.push(t, u);
                 if (j >= v1.states.size() || v1.times[j] != t) throw EvolutionError("split sample mismatch", t);
                 const LatticeField& a = v1.states[j++];
                 LatticeField v2 = st.v - a;
                 SplitSample s;
                 s.t = t;
                 s.params = st.params;
                 s.v_norm = l2_norm(st.v);
                 s.v1_norm = l2_norm(a);
                 s.v2_norm = l2_norm(v2);
                 weight_norms(st.v, st.params, s.v_w_norm, &s.v_x_norm);
                 weight_norms(a, st.params, s.v1_w_norm, nullptr);
                 weight_norms(v2, st.params, s.v2_w_norm, &s.v2_x_norm);
                 const double k1 = cfg.k.empty() ? 1.0 : cfg.k[0];
                 s.v2_psi_norm =
                     weighted_l2_norm(v2, WeightSpec{k1 * eps, st.params.x[0], WeightOrientation::Sigmoid});
                 out.samples.push_back(s);
                 if (cfg.keep_states) {
                   out.v2.times.push_back(t);
                   out.v2.states.push_back(std::move(v2));
                 }
                 return std::vector<double>{};
               }};
  evolve_nonlinear(u0, model, cfg.evolve, {obs});
  out.track = tk.finish();
  for (auto& s : out.track.states) s.v = LatticeField();
  if (cfg.keep_states) out.v1 = std::move(v1);
  return out;
}

}  // namespace fpu

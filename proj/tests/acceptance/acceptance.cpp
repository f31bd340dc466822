// Acceptance runner: one PASS/FAIL line per criterion. `--only N` runs a single item.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "fpu/backlund.hpp"
#include "fpu/experiments.hpp"
#include "fpu/waves.hpp"

using namespace fpu;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Outcome kdv_exactness() {
  const SolitonFamily fam{{0.5, 1.0, 1.5}, {0.0, 0.0, 0.0}};
  const auto grid = Grid::span(-60, 60, 0.05);
  check_grid_resolution(fam, grid);
  const double dt = 1e-3;
  double worst = 0.0;
  for (double tc = 0.0; tc <= 2.0 + 1e-12; tc += 0.25) {
    std::vector<GridField> s;
    for (int j = -2; j <= 2; ++j) s.push_back(kdv_profile(fam, tc + j * dt, grid));
    worst = std::max(worst, kdv_residual(s, dt));
  }
  return {worst <= 1e-5, fmt("max kdv residual %.3e (<= 1e-5) over t in [0,2]", worst)};
}

Outcome backlund_ladder() {
  BacklundAuditConfig c;
  c.fields = 0;
  const auto r = run_backlund_audit(c);
  const bool ok = r.max_residual <= 1e-8 && r.min_wrong_phase >= 1e-2;
  return {ok, fmt("%zu draws, N<=4, t in {0,1,10}: max residual %.3e (<= 1e-8), min wrong-phase residual %.3e (>= 1e-2)",
                  r.draws.size(), r.max_residual, r.min_wrong_phase)};
}

Outcome backlund_isomorphism() {
  BacklundAuditConfig c;
  c.times = {0.0};
  const auto r = run_backlund_audit(c);
  const double rt = std::max(r.max_forward_inverse, r.max_inverse_forward);
  const bool ok = rt <= 1e-6 && r.max_orthogonality <= 1e-8;
  return {ok, fmt("%zu fields per level: round trips %.3e / %.3e (<= 1e-6), orthogonality %.3e (<= 1e-8)", c.fields,
                  r.max_inverse_forward, r.max_forward_inverse, r.max_orthogonality)};
}

Outcome kdv_decay() {
  const auto r = run_kdv_decay({});
  const bool ok = r.ratio >= 0.9 && r.ratio <= 1.5 && r.airy_fit.rate <= -0.1125;
  return {ok, fmt("rate %.4f, a(c-a^2) %.4f, ratio %.3f in [0.9,1.5], r2 %.4f; Airy rate %.4f (<= -0.1125)", -r.fit.rate,
                  r.target, r.ratio, r.fit.r2, r.airy_fit.rate)};
}

Outcome solitary_waves() {
  const auto fpu = PotentialModel::alpha_fpu();
  double worst_res = 0.0;
  std::vector<double> ratio;
  for (double eps : {0.4, 0.2, 0.1}) {
    const auto w = solve_profile(fpu, 1.0 + eps * eps / 6.0);
    worst_res = std::max(worst_res, traveling_wave_residual(w));
    ratio.push_back(w.u.r_at(0.0) / (eps * eps));
  }
  const bool monotone = std::abs(ratio[2] - 1.0) < std::abs(ratio[1] - 1.0) &&
                        std::abs(ratio[1] - 1.0) < std::abs(ratio[0] - 1.0);

  double toda_err = 0.0;
  for (double kappa : {0.2, 0.5}) {
    const auto exact = toda_soliton(kappa);
    ProfileOptions o;
    o.half_width = -exact.u.x0;
    o.oversample = static_cast<int>(std::lround(1.0 / exact.u.h));
    const auto w = solve_profile(PotentialModel::toda(), exact.c, o);
    worst_res = std::max(worst_res, traveling_wave_residual(w));
    for (std::size_t j = 0; j < w.u.size(); ++j)
      toda_err = std::max({toda_err, std::abs(w.u.r[j] - exact.u.r_at(w.u.x(j))), std::abs(w.u.p[j] - exact.u.p_at(w.u.x(j)))});
  }

  const double eps = 0.05, c = 1.0 + eps * eps / 6.0;
  const auto e = energy_curve(fpu, {c});
  const double th = e.theta1[0] / (c * eps);
  const bool ok = worst_res <= 1e-10 && toda_err <= 1e-8 && monotone && std::abs(th / 12.0 - 1.0) <= 0.05;
  return {ok, fmt("residual %.2e (<= 1e-10), Toda error %.2e (<= 1e-8), r(0)/eps^2 = %.4f, %.4f, %.4f (monotone to 1: %s), "
                  "theta1/(c eps) = %.3f (12 +- 5%%)",
                  worst_res, toda_err, ratio[0], ratio[1], ratio[2], monotone ? "yes" : "no", th)};
}

Outcome secular_identities() {
  double s1max = 0.0, s2min = INFINITY;
  const long off = -200;
  const std::size_t n = 401;
  for (const auto& w : {toda_soliton(0.3), solve_profile(PotentialModel::alpha_fpu(), 1.0 + 0.04 / 6.0)}) {
    const auto ux = profile_derivative(w, ProfileDerivative::DDx).sample(off, n, 0.0);
    const auto uc = profile_derivative(w, ProfileDerivative::DDc).sample(off, n, 0.0);
    s1max = std::max(s1max, std::abs(weighted_pairing(ux, ux, PairingMode::JInverse)));
    s2min = std::min(s2min, weighted_pairing(ux, uc, PairingMode::JInverse));
  }
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::uniform_int_distribution<int> len(1, 40), start(0, 60);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    LatticeField u(-50, 101);
    const int a = start(rng), l = len(rng);
    for (int i = a; i < std::min(a + l, 101); ++i) {
      u.r[static_cast<std::size_t>(i)] = val(rng);
      u.p[static_cast<std::size_t>(i)] = val(rng);
    }
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      s1 += u.r[i];
      s2 += u.p[i];
    }
    const double lhs = weighted_pairing(u, u, PairingMode::JInverse);
    worst = std::max(worst, std::abs(lhs - s1 * s2) / std::max(1.0, std::abs(s1 * s2)));
  }
  const bool ok = s1max <= 1e-8 && s2min > 0.0 && worst <= 1e-12;
  return {ok, fmt("|<u_x, J^-1 u_x>| %.2e (<= 1e-8), min <u_x, J^-1 u_c> %.4e (> 0), <u, J^-1 u> vs sums %.2e (<= 1e-12)",
                  s1max, s2min, worst)};
}

Outcome orbital() {
  const OrbitalConfig c;
  const auto r = run_orbital(c);
  const double lim = 1e-3 * c.eps * c.eps;
  const double var = *std::max_element(r.speed_variation.begin(), r.speed_variation.end());
  const bool ok = r.max_deviation <= 10.0 * r.bound_scale && var <= lim && r.ordering_preserved;
  return {ok, fmt("t=%.0f: deviation %.3e (<= %.3e), A %.2f, speed variation %.2e (<= %.1e), ordering %s, boundary %.1e",
                  c.t_end, r.max_deviation, 10.0 * r.bound_scale, r.fitted_A, var, lim,
                  r.ordering_preserved ? "kept" : "lost", r.max_boundary_mass)};
}

Outcome linear_fpu() {
  LinearFpuConfig a;
  a.eps = 0.2;
  a.t_end = 1000.0;
  LinearFpuConfig b = a;
  b.eps = 0.15;
  b.t_end = 2400.0;
  const auto ra = run_linear_fpu(a);
  const auto rb = run_linear_fpu(b);
  const double q = std::max(ra.rate_over_eps3, rb.rate_over_eps3) / std::min(ra.rate_over_eps3, rb.rate_over_eps3);
  const bool ok = ra.rate_over_eps3 >= 0.05 && rb.rate_over_eps3 > 0.0 && q <= 2.0;
  return {ok, fmt("rate/eps^3 = %.4f (eps 0.2, r2 %.3f), %.4f (eps 0.15, r2 %.3f); >= 0.05, spread %.3f (<= 2)",
                  ra.rate_over_eps3, ra.fit.r2, rb.rate_over_eps3, rb.fit.r2, q)};
}

Outcome virial() {
  const auto r = run_virial({});
  const bool ok = r.series.max_increase <= 1e-12 && r.series.hypothesis_ok;
  return {ok, fmt("%zu steps to t=500: max increase %.2e (<= 1e-12), psi energy %.4e -> %.4e, boundary %.1e",
                  r.series.t.size() - 1, r.series.max_increase, r.series.psi_energy.front(), r.series.psi_energy.back(),
                  r.max_boundary_mass)};
}

Outcome dispersion() {
  DispersionAuditConfig c;
  c.half_angle_high_band = false;
  const auto r = run_dispersion_audit(c);
  double high = INFINITY, half = INFINITY, others = INFINITY;
  for (const auto& d : r.reports) {
    high = std::min(high, d.margin_high);
    half = std::min(half, d.margin_high_half);
    others = std::min({others, d.margin_cubic, d.margin_quadratic, d.margin_minus});
  }
  const bool ok = r.inequalities_hold && r.symbol_spread <= 2.0 && r.tail.fit.slope < 0.0 && r.tail.fit.r2 >= 0.99;
  return {ok, fmt("high-band margin with 1-cos(delta) %.3e (needs > 0; with 1-cos(delta/2) %.3e), other margins >= %.2e, "
                  "symbol spread %.4f (<= 2), tail slope %.3f r2 %.4f",
                  high, half, others, r.symbol_spread, r.tail.fit.slope, r.tail.fit.r2)};
}

Outcome resolution() {
  const auto r = run_resolution({});
  double formula_gap = 0.0;
  for (std::size_t i = 0; i < r.phases.size(); ++i)
    formula_gap = std::max(formula_gap, std::abs(r.half_phases[i] - r.measured[i]));
  const bool ok = r.fit_half.rate < 0.0 && formula_gap <= 1e-12;
  return {ok, fmt("stated phases (%.6f, %.6f) vs measured crests (%.12f, %.12f): gap %.3e (<= 1e-12); "
                  "remainder rate %.3e (needs < 0); with 1/k_i weighting: gap %.2e, rate %.2f",
                  r.half_phases[0], r.half_phases[1], r.measured[0], r.measured[1], formula_gap, r.fit_half.rate,
                  r.phase_error, r.fit.rate)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> items = {
      {"KdV N-soliton exactness", kdv_exactness},
      {"Backlund ladder", backlund_ladder},
      {"linearized Backlund isomorphism", backlund_isomorphism},
      {"linearized KdV decay", kdv_decay},
      {"FPU solitary waves", solitary_waves},
      {"secular identities", secular_identities},
      {"orbital stability", orbital},
      {"linearized FPU decay", linear_fpu},
      {"virial monotonicity", virial},
      {"dispersion and symbol audits", dispersion},
      {"soliton resolution", resolution},
  };
  bool all = true;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (only != 0 && static_cast<int>(i + 1) != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = items[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2zu %s  %s: %s [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL", items[i].first,
                o.detail.c_str(), s);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}

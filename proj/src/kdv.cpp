#include "fpu/kdv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fpu/error.hpp"

namespace fpu {

void SolitonFamily::validate() const {
  if (k.empty()) throw InvalidArgument("soliton family is empty");
  if (k.size() > 8) throw InvalidArgument("soliton family limited to N <= 8");
  if (gamma.size() != k.size()) throw InvalidArgument("soliton family: k and gamma sizes differ");
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (!(k[i] > 0.0) || !std::isfinite(k[i])) throw InvalidArgument("soliton family: k must be positive");
    if (i > 0 && !(k[i] > k[i - 1])) throw InvalidArgument("soliton family: k must be strictly increasing");
    if (!std::isfinite(gamma[i])) throw InvalidArgument("soliton family: non-finite phase");
  }
}

namespace {

double log_minor_weight(const std::vector<double>& k, unsigned mask) {
  double a = 0.0;
  const std::size_t n = k.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(mask >> i & 1u)) continue;
    a -= std::log(2.0 * k[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!(mask >> j & 1u)) continue;
      a += 2.0 * std::log(std::abs(k[i] - k[j]) / (k[i] + k[j]));
    }
  }
  return a;
}

// log Delta_m = e0 + e1 x + LSE_S(c_S + s_S x).
struct TauTable {
  std::vector<double> c, s;
  double e0 = 0.0, e1 = 0.0;
};

TauTable make_table(const SolitonFamily& fam, double t, std::size_t m, std::span<const double> level_gamma) {
  fam.validate();
  if (m > fam.size()) throw InvalidArgument("tau level exceeds family size");
  if (!level_gamma.empty() && level_gamma.size() < m) throw InvalidArgument("tau: level phases too short");
  const auto& k = fam.k;
  TauTable tb;
  for (std::size_t i = m; i < fam.size(); ++i) {
    tb.e1 -= k[i];
    tb.e0 += k[i] * (4.0 * k[i] * k[i] * t + fam.gamma[i]);
  }
  std::vector<double> ks(k.begin(), k.begin() + static_cast<long>(m));
  const unsigned count = 1u << m;
  tb.c.resize(count);
  tb.s.resize(count);
  for (unsigned mask = 0; mask < count; ++mask) {
    double c = log_minor_weight(ks, mask), s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(mask >> i & 1u)) continue;
      const double g = level_gamma.empty() ? fam.gamma[i] : level_gamma[i];
      c += 2.0 * k[i] * (4.0 * k[i] * k[i] * t + g);
      s -= 2.0 * k[i];
    }
    tb.c[mask] = c;
    tb.s[mask] = s;
  }
  return tb;
}

TauValue eval_table(const TauTable& tb, double x) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < tb.c.size(); ++j) mx = std::max(mx, tb.c[j] + tb.s[j] * x);
  double z = 0.0, m1 = 0.0;
  thread_local std::vector<double> w;
  w.resize(tb.c.size());
  for (std::size_t j = 0; j < tb.c.size(); ++j) {
    w[j] = std::exp(tb.c[j] + tb.s[j] * x - mx);
    z += w[j];
    m1 += w[j] * tb.s[j];
  }
  m1 /= z;
  double m2 = 0.0, m3 = 0.0;
  for (std::size_t j = 0; j < tb.c.size(); ++j) {
    const double d = tb.s[j] - m1;
    m2 += w[j] * d * d;
    m3 += w[j] * d * d * d;
  }
  TauValue v;
  v.log = tb.e0 + tb.e1 * x + mx + std::log(z);
  v.d1 = tb.e1 + m1;
  v.d2 = m2 / z;
  v.d3 = m3 / z;
  return v;
}

std::span<const double> level_phases(const PhaseLadder& ladder, std::size_t m) {
  if (m >= ladder.gamma.size()) throw InvalidArgument("phase ladder has no such level");
  return ladder.gamma[m];
}

GridField grid_apply(const Grid& grid, const TauTable& tb, double TauValue::*member) {
  GridField out{grid, std::vector<double>(grid.n)};
  for (std::size_t i = 0; i < grid.n; ++i) out.values[i] = eval_table(tb, grid.x(i)).*member;
  return out;
}

}  // namespace

TauValue tau_eval(const SolitonFamily& fam, double t, double x, std::size_t m, std::span<const double> level_gamma) {
  return eval_table(make_table(fam, t, m, level_gamma), x);
}

double tau_logdet(const SolitonFamily& fam, double t, double x, std::size_t m, std::span<const double> level_gamma) {
  return tau_eval(fam, t, x, m, level_gamma).log;
}

void check_grid_resolution(const SolitonFamily& fam, const Grid& grid) {
  if (grid.dx > 0.1 / fam.k.back() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "grid too coarse: dx=" << grid.dx << " exceeds 0.1/k_N=" << 0.1 / fam.k.back();
    throw InvalidArgument(os.str());
  }
}

GridField kdv_profile(const SolitonFamily& fam, double t, const Grid& grid) {
  return grid_apply(grid, make_table(fam, t, fam.size(), {}), &TauValue::d2);
}

GridField ladder_potential(const SolitonFamily& fam, const PhaseLadder& ladder, std::size_t m, double t,
                           const Grid& grid) {
  return grid_apply(grid, make_table(fam, t, m, level_phases(ladder, m)), &TauValue::d1);
}

GridField ladder_potential_dx(const SolitonFamily& fam, const PhaseLadder& ladder, std::size_t m, double t,
                              const Grid& grid) {
  return grid_apply(grid, make_table(fam, t, m, level_phases(ladder, m)), &TauValue::d2);
}

SecularBasis secular_basis(const SolitonFamily& fam, double t, const Grid& grid, double step) {
  fam.validate();
  const std::size_t N = fam.size();
  SecularBasis b;
  b.grid = grid;
  auto diff = [&](SolitonFamily lo, SolitonFamily hi) {
    const auto a = kdv_profile(hi, t, grid).values;
    const auto c = kdv_profile(lo, t, grid).values;
    std::vector<double> d(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) d[i] = (a[i] - c[i]) / (2.0 * step);
    return d;
  };
  for (std::size_t i = 0; i < N; ++i) {
    SolitonFamily lo = fam, hi = fam;
    lo.gamma[i] -= step;
    hi.gamma[i] += step;
    b.xi1.push_back(diff(lo, hi));
    lo = fam;
    hi = fam;
    lo.k[i] -= step;
    hi.k[i] += step;
    b.xi2.push_back(diff(lo, hi));
  }
  for (std::size_t i = 0; i < N; ++i) {
    for (const auto* xi : {&b.xi1[i], &b.xi2[i]}) {
      double mx = 0.0;
      for (double v : *xi) mx = std::max(mx, std::abs(v));
      if (std::abs(xi->front()) > 1e-10 * mx)
        throw InvalidArgument("secular_basis: domain too short, integrand not flat at the left edge");
    }
    b.eta1.push_back(cumulative_integral(b.xi1[i], grid.dx));
    b.eta2.push_back(cumulative_integral(b.xi2[i], grid.dx));
  }
  b.gram.resize(2 * N, 2 * N);
  std::vector<double> prod(grid.n);
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t q = 0; q < 2; ++q) {
          const auto& xi = q == 0 ? b.xi1[i] : b.xi2[i];
          const auto& eta = l == 0 ? b.eta1[j] : b.eta2[j];
          for (std::size_t s = 0; s < grid.n; ++s) prod[s] = xi[s] * eta[s];
          b.gram(static_cast<long>(2 * j + l), static_cast<long>(2 * i + q)) = trapezoid(prod, grid.dx);
        }
  return b;
}

std::vector<double> secular_project(const SecularBasis& basis, const std::vector<double>& f) {
  const std::size_t N = basis.xi1.size();
  const std::size_t n = basis.grid.n;
  if (f.size() != n) throw InvalidArgument("secular_project: field size does not match basis grid");
  Eigen::VectorXd rhs(static_cast<long>(2 * N));
  std::vector<double> prod(n);
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t l = 0; l < 2; ++l) {
      const auto& eta = l == 0 ? basis.eta1[j] : basis.eta2[j];
      for (std::size_t s = 0; s < n; ++s) prod[s] = f[s] * eta[s];
      rhs(static_cast<long>(2 * j + l)) = trapezoid(prod, basis.grid.dx);
    }
  const Eigen::VectorXd c = basis.gram.fullPivLu().solve(rhs);
  std::vector<double> out = f;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t s = 0; s < n; ++s)
      out[s] -= c(static_cast<long>(2 * i)) * basis.xi1[i][s] + c(static_cast<long>(2 * i + 1)) * basis.xi2[i][s];
  return out;
}

double kdv_residual(const std::vector<GridField>& samples, double dt) {
  if (samples.size() < 5 || samples.size() % 2 == 0)
    throw InvalidArgument("kdv_residual: need an odd number (>= 5) of samples");
  const std::size_t mid = samples.size() / 2;
  const auto& f = samples[mid].values;
  const double dx = samples[mid].grid.dx;
  for (const auto& s : samples)
    if (s.values.size() != f.size()) throw InvalidArgument("kdv_residual: samples on different grids");
  const auto fx = spectral_derivative(f, dx, 1);
  const auto fxxx = spectral_derivative(f, dx, 3);
  double sup = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double ft = (samples[mid - 2].values[i] - 8.0 * samples[mid - 1].values[i] +
                       8.0 * samples[mid + 1].values[i] - samples[mid + 2].values[i]) /
                      (12.0 * dt);
    sup = std::max(sup, std::abs(ft + fxxx[i] + 12.0 * f[i] * fx[i]));
  }
  return sup;
}

std::vector<double> asymptotic_phases(const SolitonFamily& fam) {
  fam.validate();
  const std::size_t N = fam.size();
  // Tail sets T_j = {j..N-1}; the crest of soliton j sits where the T_j and T_{j+1}
  // minors balance.
  std::vector<double> out(N);
  for (std::size_t j = 0; j < N; ++j) {
    const unsigned tj = ((1u << N) - 1u) & ~((1u << j) - 1u);
    const unsigned tj1 = tj & ~(1u << j);
    const double logb = log_minor_weight(fam.k, tj) - log_minor_weight(fam.k, tj1);
    out[j] = fam.gamma[j] + logb / (2.0 * fam.k[j]);
  }
  return out;
}

SolitonResolution soliton_resolution(const SolitonFamily& fam, double t, const Grid& grid) {
  fam.validate();
  const std::size_t N = fam.size();
  const auto& k = fam.k;
  SolitonResolution res;
  res.gamma_tilde = asymptotic_phases(fam);
  res.train = GridField{grid, std::vector<double>(grid.n, 0.0)};
  res.remainder = GridField{grid, std::vector<double>(grid.n, 0.0)};

  std::vector<double> logb(N);
  for (std::size_t j = 0; j < N; ++j) logb[j] = 2.0 * k[j] * (res.gamma_tilde[j] - fam.gamma[j]);

  const unsigned count = 1u << N;
  // Product expansion prod_j (1 + b_j e^{-2 theta_j}) agrees with det(I + C) on tail sets;
  // the difference d_S = A_S - B_S lives on the remaining subsets.
  std::vector<double> logB(count), s(count), c(count), logd(count), sgn(count);
  std::vector<bool> nontail(count, false);
  for (unsigned mask = 0; mask < count; ++mask) {
    double lb = 0.0, sl = 0.0, cc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (!(mask >> i & 1u)) continue;
      lb += logb[i];
      sl -= 2.0 * k[i];
      cc += 2.0 * k[i] * (4.0 * k[i] * k[i] * t + fam.gamma[i]);
    }
    logB[mask] = lb;
    s[mask] = sl;
    c[mask] = cc;
    const double la = log_minor_weight(k, mask);
    const double rel = std::expm1(la - lb);
    bool tail = false;
    for (std::size_t j = 0; j <= N; ++j) tail = tail || mask == (((1u << N) - 1u) & ~((1u << j) - 1u));
    if (!tail && rel != 0.0) {
      nontail[mask] = true;
      logd[mask] = lb + std::log(std::abs(rel));
      sgn[mask] = rel > 0 ? 1.0 : -1.0;
    }
  }

  double sup = 0.0;
  for (std::size_t ix = 0; ix < grid.n; ++ix) {
    const double x = grid.x(ix);
    double train = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      const double th = k[j] * (x - 4.0 * k[j] * k[j] * t - res.gamma_tilde[j]);
      const double sh = 1.0 / std::cosh(th);
      train += k[j] * k[j] * sh * sh;
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < count; ++mask) mx = std::max(mx, logB[mask] + c[mask] + s[mask] * x);
    double z = 0.0, p1 = 0.0, p2 = 0.0;
    for (unsigned mask = 0; mask < count; ++mask) {
      const double w = std::exp(logB[mask] + c[mask] + s[mask] * x - mx);
      z += w;
      p1 += w * s[mask];
      p2 += w * s[mask] * s[mask];
    }
    const double logP = mx + std::log(z);
    p1 /= z;
    p2 /= z;
    double r0 = 0.0, r1 = 0.0, r2 = 0.0;
    for (unsigned mask = 0; mask < count; ++mask) {
      if (!nontail[mask]) continue;
      const double w = sgn[mask] * std::exp(logd[mask] + c[mask] + s[mask] * x - logP);
      r0 += w;
      r1 += w * s[mask];
      r2 += w * s[mask] * s[mask];
    }
    const double R = r0;
    const double R1 = r1 - r0 * p1;
    const double R2 = r2 - 2.0 * r1 * p1 - r0 * p2 + 2.0 * r0 * p1 * p1;
    const double rem = R2 / (1.0 + R) - (R1 / (1.0 + R)) * (R1 / (1.0 + R));
    res.train.values[ix] = train;
    res.remainder.values[ix] = rem;
    sup = std::max(sup, std::abs(rem));
  }
  res.sup_remainder = sup;
  return res;
}

GridField psi_ratio(const SolitonFamily& fam, const PhaseLadder& ladder, std::size_t m, double t, const Grid& grid) {
  if (m == 0 || m > fam.size()) throw InvalidArgument("psi_ratio: level must be in 1..N");
  const std::size_t i = m - 1;
  const double pref = fam.k[i] * (level_phases(ladder, m)[i] - fam.gamma[i]);
  const auto lo = make_table(fam, t, m - 1, level_phases(ladder, m - 1));
  const auto hi = make_table(fam, t, m, level_phases(ladder, m));
  GridField out{grid, std::vector<double>(grid.n)};
  for (std::size_t j = 0; j < grid.n; ++j) {
    const double x = grid.x(j);
    out.values[j] = pref + eval_table(lo, x).log - eval_table(hi, x).log;
  }
  return out;
}

}  // namespace fpu

#include "fpu/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fpu/error.hpp"

namespace fpu {

namespace {

constexpr double kPi = 3.14159265358979323846;

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double log_factor(const WeightSpec& w, double n) {
  const double s = n - w.x0;
  switch (w.orientation) {
    case WeightOrientation::RightGrowing:
      return w.a * s;
    case WeightOrientation::LeftGrowing:
      return -w.a * s;
    case WeightOrientation::TwoSidedDecaying:
      return -w.a * std::abs(s);
    case WeightOrientation::Sigmoid:
      // log (1 + tanh y)^{1/2} = (log 2 - softplus(-2y)) / 2
      return 0.5 * (std::log(2.0) - softplus(-2.0 * w.a * s));
  }
  return 0.0;
}

double trapezoid_weights(const std::vector<double>& t, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t j = 1; j < t.size(); ++j) s += 0.5 * (t[j] - t[j - 1]) * (f[j] + f[j - 1]);
  return s;
}

}  // namespace

double weighted_norm(const LatticeField& u, const WeightSpec& w) {
  const std::size_t n = u.size();
  std::vector<double> lf(n);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    lf[i] = log_factor(w, static_cast<double>(u.offset + static_cast<long>(i)));
    if (u.r[i] != 0.0 || u.p[i] != 0.0) m = std::max(m, lf[i]);
  }
  if (!std::isfinite(m)) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = std::exp(lf[i] - m);
    s += f * f * (u.r[i] * u.r[i] + u.p[i] * u.p[i]);
  }
  return std::exp(m) * std::sqrt(s);
}

double weighted_norm(const GridField& g, const WeightSpec& w) {
  const std::size_t n = g.values.size();
  std::vector<double> lf(n);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    lf[i] = log_factor(w, g.grid.x(i));
    if (g.values[i] != 0.0) m = std::max(m, lf[i]);
  }
  if (!std::isfinite(m)) return 0.0;
  std::vector<double> f2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = std::exp(lf[i] - m) * g.values[i];
    f2[i] = f * f;
  }
  return std::exp(m) * std::sqrt(trapezoid(f2, g.grid.dx));
}

double w_norm(const LatticeField& u, const std::vector<double>& k, double eps, const std::vector<double>& x) {
  if (k.size() != x.size()) throw InvalidArgument("w_norm needs one k per crest");
  double s = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i)
    s += weighted_norm(u, WeightSpec{k[i] * eps / 2.0, x[i], WeightOrientation::TwoSidedDecaying});
  return s;
}

double x_norm(const LatticeField& u, double k1, double eps, double x_ref) {
  return weighted_norm(u, WeightSpec{k1 * eps / 2.0, x_ref, WeightOrientation::RightGrowing});
}

VirialSeries virial_series(const Trajectory& v1, double a, const std::function<double(double)>& xtilde,
                           const PotentialModel& model, double min_speed) {
  VirialSeries out;
  for (std::size_t j = 0; j < v1.times.size(); ++j) {
    const double t = v1.times[j];
    const auto& v = v1.states[j];
    const double xt = xtilde(t);
    const double h = 1e-3;
    const double speed = (xtilde(t + h) - xtilde(t - h)) / (2.0 * h);
    if (speed < min_speed) out.hypothesis_ok = false;
    double pe = 0.0, se = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double y = a * (static_cast<double>(v.offset + static_cast<long>(i)) - xt);
      const double hn = 0.5 * v.p[i] * v.p[i] + potential_eval(model, v.r[i], 0);
      pe += (1.0 + std::tanh(y)) * hn;
      const double sc = 1.0 / std::cosh(y);
      se += sc * sc * (v.r[i] * v.r[i] + v.p[i] * v.p[i]);
    }
    out.t.push_back(t);
    out.psi_energy.push_back(pe);
    out.sech_energy.push_back(se);
    const double prev = out.integrated.empty() ? 0.0 : out.integrated.back();
    out.integrated.push_back(j == 0 ? 0.0 : prev + 0.5 * (t - out.t[j - 1]) * (se + out.sech_energy[j - 1]));
    if (j > 0) out.max_increase = std::max(out.max_increase, pe - out.psi_energy[j - 1]);
  }
  return out;
}

double cutoff(double s) {
  const double x = std::abs(s);
  if (x <= 1.0) return 1.0;
  if (x >= 2.0) return 0.0;
  auto g = [](double y) { return y > 0.0 ? std::exp(-1.0 / y) : 0.0; };
  const double up = g(2.0 - x), down = g(x - 1.0);
  return up / (up + down);
}

BandSplit band_split(const LatticeField& w, double eps, double k1, double c1eps, double K, double delta, double t) {
  const std::size_t n = w.size();
  if (n < 16) throw InvalidArgument("band_split window too short");
  if (K * eps >= delta) throw InvalidArgument("band_split needs K eps < delta");
  if (2.0 * kPi / static_cast<double>(n) > K * eps)
    throw InvalidArgument("band_split window too short to resolve |xi| <= K eps");
  BandSplit b;
  b.k_eps = K * eps;
  b.delta = delta;
  b.offset = w.offset;
  b.weight_rate = k1 * eps;
  b.phase_speed = c1eps * t;
  std::vector<cplx> r(n), p(n), rh, ph;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = static_cast<double>(w.offset + static_cast<long>(i));
    const double f = std::exp(b.weight_rate * (m - b.phase_speed));
    r[i] = f * w.r[i];
    p[i] = f * w.p[i];
  }
  Fft fft(n);
  fft.forward(r, rh);
  fft.forward(p, ph);
  b.xi = wavenumbers(n, 1.0);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  const double s2 = 1.0 / std::sqrt(2.0);
  b.f_plus.resize(n);
  b.f_minus.resize(n);
  b.f1.resize(n);
  b.f2.resize(n);
  b.f3.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double xi = b.xi[j];
    const cplx shift = std::polar(norm, -xi * static_cast<double>(w.offset));
    const cplx a = shift * rh[j], q = shift * ph[j];
    const cplx ph_t = std::polar(1.0, b.phase_speed * xi);
    const cplx h = std::polar(1.0, xi / 2.0);
    b.f_plus[j] = ph_t * s2 * (a - h * q);
    b.f_minus[j] = ph_t * s2 * (std::conj(h) * a + q);
    const double ck = cutoff(xi / b.k_eps), cd = cutoff(xi / delta);
    b.f1[j] = ck * b.f_plus[j];
    b.f2[j] = (cd - ck) * b.f_plus[j];
    b.f3[j] = (1.0 - cd) * b.f_plus[j];
  }
  return b;
}

LatticeField band_reconstruct(const BandSplit& b) {
  const std::size_t n = b.xi.size();
  std::vector<cplx> rh(n), ph(n), r, p;
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  const double s2 = 1.0 / std::sqrt(2.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double xi = b.xi[j];
    const cplx fp = b.f1[j] + b.f2[j] + b.f3[j];
    const cplx back = std::polar(1.0, -b.phase_speed * xi);
    const cplx h = std::polar(1.0, xi / 2.0);
    const cplx a = back * s2 * (fp + h * b.f_minus[j]);
    const cplx q = back * s2 * (-std::conj(h) * fp + b.f_minus[j]);
    const cplx shift = std::polar(1.0, xi * static_cast<double>(b.offset));
    rh[j] = shift * a;
    ph[j] = shift * q;
  }
  Fft fft(n);
  fft.backward(rh, r);
  fft.backward(ph, p);
  LatticeField out(b.offset, n);
  for (std::size_t i = 0; i < n; ++i) {
    out.r[i] = r[i].real() * norm;
    out.p[i] = p[i].real() * norm;
  }
  return out;
}

double band_energy(const std::vector<cplx>& f) {
  double s = 0.0;
  for (const auto& z : f) s += std::norm(z);
  return s;
}

cplx lambda_branch(cplx xi, double c, int sign) { return c * xi - static_cast<double>(sign) * 2.0 * std::sin(xi / 2.0); }

DispersionReport dispersion_check(double eps, double a, double k1, double K, double delta, std::size_t points) {
  if (!(a > 0.0 && a < 2.0 * k1)) throw InvalidArgument("dispersion_check needs 0 < a < 2 k1");
  if (!(delta > 0.0 && delta < kPi)) throw InvalidArgument("dispersion_check needs 0 < delta < pi");
  if (points < 2) throw InvalidArgument("dispersion_check needs at least two grid points");
  DispersionReport rep;
  rep.eps = eps;
  rep.a = a;
  rep.k1 = k1;
  rep.K = K;
  rep.delta = delta;
  rep.points = points;
  rep.c1 = 1.0 + k1 * k1 * eps * eps / 6.0;
  rep.lambda_plus_zero = std::abs(lambda_branch(0.0, rep.c1, 1));
  rep.lambda_minus_zero = std::abs(lambda_branch(0.0, rep.c1, -1));

  const double top = kPi / eps;
  std::vector<double> eta;
  for (std::size_t j = 0; j < points; ++j)
    eta.push_back(-top + 2.0 * top * static_cast<double>(j) / static_cast<double>(points - 1));
  for (double e : {2.0 * K, K, delta / eps, 2.0 * delta / eps}) {
    eta.push_back(e);
    eta.push_back(-e);
  }

  const double inf = std::numeric_limits<double>::infinity();
  rep.margin_cubic = rep.margin_quadratic = rep.margin_high = rep.margin_high_half = rep.margin_minus = inf;
  for (double e : eta) {
    const cplx z(e, a);
    const cplx xi = eps * z;
    const cplx lp = lambda_branch(xi, rep.c1, 1), lm = lambda_branch(xi, rep.c1, -1);
    const double ae = std::abs(e);
    if (ae <= 2.0 * K) {
      const cplx cubic = eps * eps * eps / 24.0 * (z * z * z + 4.0 * k1 * k1 * z);
      const double br = std::pow(eps, 5) * std::pow(1.0 + e * e, 2.5);
      const double err = std::abs(lp - cubic);
      rep.cubic_constant = std::max(rep.cubic_constant, err / br);
      rep.margin_cubic = std::min(rep.margin_cubic, br / 1000.0 - err);
    }
    if (ae >= K && ae <= 2.0 * delta / eps)
      rep.margin_quadratic = std::min(rep.margin_quadratic, lp.imag() - eps * eps * eps * a * e * e / 16.0);
    if (ae >= delta / eps && ae <= top) {
      const double m = lp.imag() - eps * a * (1.0 - std::cos(delta));
      if (m < rep.margin_high) {
        rep.margin_high = m;
        rep.worst_eta_high = e;
      }
      rep.margin_high_half = std::min(rep.margin_high_half, lp.imag() - eps * a * (1.0 - std::cos(delta / 2.0)));
    }
    if (ae <= top) rep.margin_minus = std::min(rep.margin_minus, lm.imag() - eps * a);
  }
  return rep;
}

double symbol_sup(double eps, double a, double c, std::size_t points) {
  double m = 0.0;
  for (std::size_t j = 0; j < points; ++j) {
    const double x = -kPi + 2.0 * kPi * static_cast<double>(j) / static_cast<double>(points - 1);
    const cplx z(x, a * eps);
    const cplx s = std::sin(z / 2.0);
    m = std::max(m, std::abs(z * z / (c * c * z * z - 4.0 * s * s)));
  }
  return eps * eps * m;
}

namespace {

struct Samples {
  double x0, h;
  std::vector<double> r;
};

Samples scaled_profile(const SolitonFamily& fam, double eps, double h) {
  const double kmin = *std::min_element(fam.k.begin(), fam.k.end());
  const auto [gmin, gmax] = std::minmax_element(fam.gamma.begin(), fam.gamma.end());
  const double reach = 45.0 / (kmin * eps);
  const double lo = std::floor(*gmin / eps - reach), hi = std::ceil(*gmax / eps + reach);
  Samples s;
  s.x0 = lo;
  s.h = h;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / h)) + 1;
  s.r.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.r[i] = eps * eps * tau_eval(fam, 0.0, eps * (lo + h * static_cast<double>(i)), fam.size()).d2;
  return s;
}

cplx transform(const Samples& s, double xi, std::size_t stride) {
  // sum r(x_i) e^{-i x_i xi} * spacing / sqrt(2 pi), Kahan summed.
  cplx sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < s.r.size(); i += stride) {
    const double x = s.x0 + s.h * static_cast<double>(i);
    const cplx y = s.r[i] * std::polar(1.0, -x * xi) - comp;
    const cplx t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum * (s.h * static_cast<double>(stride)) / std::sqrt(2.0 * kPi);
}

}  // namespace

double ft_difference(const SolitonFamily& fam, double eps, double xi) {
  fam.validate();
  const auto s = scaled_profile(fam, eps, 1.0 / 16.0);
  return std::abs(transform(s, xi, 16) - transform(s, xi, 1));
}

double ft_difference_max(const SolitonFamily& fam, double eps, std::size_t points) {
  fam.validate();
  const auto s = scaled_profile(fam, eps, 1.0 / 16.0);
  double m = 0.0;
  for (std::size_t j = 0; j < points; ++j) {
    const double xi = -kPi + 2.0 * kPi * static_cast<double>(j) / static_cast<double>(points - 1);
    m = std::max(m, std::abs(transform(s, xi, 16) - transform(s, xi, 1)));
  }
  return m;
}

TailReport symbol_and_tail_check(const std::vector<double>& symbol_eps, const std::vector<double>& tail_eps, double a,
                                 double k1, const SolitonFamily& fam) {
  TailReport rep;
  for (double e : symbol_eps) rep.symbol.push_back(symbol_sup(e, a, 1.0 + k1 * k1 * e * e / 6.0));
  std::vector<double> x, y;
  for (double e : tail_eps) {
    const double d = ft_difference_max(fam, e);
    rep.tail.push_back({e, d});
    if (d > 0.0) {
      x.push_back(1.0 / e);
      y.push_back(std::log(d));
    }
  }
  if (x.size() >= 2) rep.fit = fit_line(x, y);
  return rep;
}

DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& value, double window) {
  if (t.size() != value.size()) throw InvalidArgument("decay_fit needs matching series");
  if (!(window > 0.0 && window <= 1.0)) throw InvalidArgument("decay_fit window must be in (0, 1]");
  const std::size_t M = t.size();
  const auto m = static_cast<std::size_t>(std::ceil(window * static_cast<double>(M)));
  if (m < 10) throw InvalidArgument("decay_fit needs at least 10 samples in the window");
  std::vector<double> x, y;
  for (std::size_t j = M - m; j < M; ++j) {
    if (!(value[j] > 0.0)) throw InvalidArgument("decay_fit needs positive values");
    x.push_back(t[j]);
    y.push_back(std::log(value[j]));
  }
  if (x.front() == x.back()) throw InvalidArgument("decay_fit window is degenerate");
  const auto f = fit_line(x, y);
  return {f.slope, f.intercept, f.r2, m};
}

StabilityMetrics stability_metrics(const SplitResult& split, const WaveParams& initial, double eps) {
  StabilityMetrics m;
  const auto& s = split.samples;
  const auto& tr = split.track;
  const double e15 = std::pow(eps, -1.5);
  std::vector<double> t, w1, w2, x2;
  for (std::size_t j = 0; j < s.size(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < initial.size(); ++i) {
      sum += std::abs(s[j].params.c[i] - initial.c[i]);
      if (j < tr.xdot.at(i).size()) sum += std::abs(tr.xdot[i][j] - s[j].params.c[i]);
    }
    m.M1 = std::max(m.M1, sum / (eps * eps));
    m.M2 = std::max(m.M2, s[j].v2_norm * s[j].v2_norm / (eps * eps * eps));
    m.M3 = std::max(m.M3, e15 * s[j].v1_norm);
    m.M4 = std::max(m.M4, e15 * s[j].v2_psi_norm);
    m.M5 = std::max(m.M5, e15 * s[j].v2_x_norm);
    t.push_back(s[j].t);
    w1.push_back(s[j].v1_w_norm * s[j].v1_w_norm);
    w2.push_back(s[j].v2_w_norm * s[j].v2_w_norm);
    x2.push_back(s[j].v2_x_norm * s[j].v2_x_norm);
  }
  m.M3 += std::sqrt(trapezoid_weights(t, w1));
  m.M4 += std::sqrt(trapezoid_weights(t, w2));
  m.M5 += std::sqrt(trapezoid_weights(t, x2));
  return m;
}

}  // namespace fpu

#include "fpu/waves.hpp"

#include <algorithm>
#include <cmath>

#include "fpu/error.hpp"

namespace fpu {

namespace {

double hermite(const std::vector<double>& f, const std::vector<double>& fx, double x0, double h, double x) {
  const double s = (x - x0) / h;
  if (!(s >= 0.0)) return 0.0;
  const auto j = static_cast<std::size_t>(std::floor(s));
  if (j + 1 >= f.size()) return 0.0;
  const double t = s - static_cast<double>(j);
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * f[j] + h10 * h * fx[j] + h01 * f[j + 1] + h11 * h * fx[j + 1];
}

std::vector<cplx> to_complex(const std::vector<double>& f) {
  return std::vector<cplx>(f.begin(), f.end());
}

std::vector<double> real_part(const std::vector<cplx>& f, double scale) {
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i].real() * scale;
  return out;
}

struct Box {
  double X;
  int ov;
  std::size_t n;
  double x0() const { return -X; }
  double h() const { return 1.0 / ov; }
};

Box make_box(double c, const ProfileOptions& opt) {
  Box b{};
  if (opt.half_width > 0.0) {
    b.X = std::ceil(opt.half_width);
    b.ov = std::max(1, opt.oversample);
  } else {
    b.X = default_half_width(c);
    b.ov = std::max(opt.oversample, static_cast<int>(std::ceil(32.0 * decay_rate(c))));
  }
  b.n = static_cast<std::size_t>(2.0 * b.X) * static_cast<std::size_t>(b.ov);
  return b;
}

// Fixed-point residual sup|r - M^{-1} N(r)| for r on the box; also returns p.
struct Solve {
  std::vector<double> r, p;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

Solve petviashvili(const PotentialModel& model, double c, const Box& box, const ProfileOptions& opt) {
  const std::size_t n = box.n;
  const double h = box.h();
  const auto xi = wavenumbers(n, h);
  std::vector<double> minv(n), m(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s;
    if (xi[j] == 0.0) {
      s = 1.0 / (c * c);
    } else {
      const double sn = std::sin(0.5 * xi[j]);
      s = 4.0 * sn * sn / (c * c * xi[j] * xi[j]);
    }
    minv[j] = s / (1.0 - s);
    m[j] = (1.0 - s) / s;
  }
  Fft fft(n);
  auto nonlinear = [&](const std::vector<double>& r) {
    std::vector<cplx> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = potential_eval(model, r[i], 1) - r[i];
    std::vector<cplx> fh;
    fft.forward(f, fh);
    return fh;
  };

  const double eps = std::sqrt(3.0 * (c * c - 1.0));
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = box.x0() + h * static_cast<double>(i);
    const double s = 1.0 / std::cosh(eps * x);
    r[i] = eps * eps * s * s;
  }
  std::vector<cplx> rh, mrh, tmp;
  fft.forward(to_complex(r), rh);
  mrh.resize(n);
  for (std::size_t j = 0; j < n; ++j) mrh[j] = std::min(m[j], 1e8) * rh[j];

  Solve out;
  int extra = 0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    auto nh = nonlinear(r);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      num += (mrh[j] * std::conj(rh[j])).real();
      den += (nh[j] * std::conj(rh[j])).real();
    }
    const double S = den != 0.0 ? num / den : 1.0;
    const double g = it == 1 ? 1.0 : S * S;
    for (std::size_t j = 0; j < n; ++j) {
      rh[j] = g * minv[j] * nh[j];
      mrh[j] = g * nh[j];
    }
    fft.backward(rh, tmp);
    auto rn = real_part(tmp, 1.0 / static_cast<double>(n));
    double diff = 0.0, amp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diff = std::max(diff, std::abs(rn[i] - r[i]));
      amp = std::max(amp, std::abs(rn[i]));
    }
    r = std::move(rn);
    out.iterations = it;
    if (!std::isfinite(amp) || amp == 0.0) throw ConvergenceError("profile iteration collapsed");
    out.history.push_back(diff / amp);
    if (diff <= opt.tol * amp && std::abs(S - 1.0) <= 10 * opt.tol) {
      if (++extra >= 3) break;
    }
  }

  // Fixed-point residual and momentum component.
  auto nh = nonlinear(r);
  std::vector<cplx> fixed(n), vp(n), ph(n);
  for (std::size_t j = 0; j < n; ++j) fixed[j] = minv[j] * nh[j];
  fft.backward(fixed, tmp);
  double res = 0.0, amp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res = std::max(res, std::abs(tmp[i].real() / static_cast<double>(n) - r[i]));
    amp = std::max(amp, std::abs(r[i]));
  }
  out.residual = res / amp;
  if (out.residual > 1e3 * opt.tol)
    throw ConvergenceError("profile iteration did not converge (residual " + std::to_string(out.residual) + ")");

  std::vector<cplx> vprime(n);
  for (std::size_t i = 0; i < n; ++i) vprime[i] = potential_eval(model, r[i], 1);
  fft.forward(vprime, vp);
  for (std::size_t j = 0; j < n; ++j) {
    if (xi[j] == 0.0) {
      ph[j] = -vp[j] / c;
    } else {
      const cplx ik(0.0, xi[j]);
      ph[j] = -(1.0 - std::exp(-ik)) / (c * ik) * vp[j];
    }
  }
  fft.backward(ph, tmp);
  out.p = real_part(tmp, 1.0 / static_cast<double>(n));
  out.r = std::move(r);
  return out;
}

}  // namespace

double Profile::r_at(double x) const { return hermite(r, rx, x0, h, x); }
double Profile::p_at(double x) const { return hermite(p, px, x0, h, x); }

LatticeField Profile::sample(long offset, std::size_t n, double shift) const {
  LatticeField u(offset, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(offset + static_cast<long>(i)) - shift;
    u.r[i] = r_at(x);
    u.p[i] = p_at(x);
  }
  return u;
}

Profile Profile::derivative() const { return from_values(x0, h, rx, px); }

Profile Profile::from_values(double x0, double h, std::vector<double> r, std::vector<double> p) {
  Profile out;
  out.x0 = x0;
  out.h = h;
  out.rx = spectral_derivative(r, h, 1);
  out.px = spectral_derivative(p, h, 1);
  out.r = std::move(r);
  out.p = std::move(p);
  return out;
}

double decay_rate(double c) {
  if (!(c > 1.0)) throw InvalidArgument("wave speed must exceed 1");
  // sinh(y)/y = c with y = mu/2
  double y = std::sqrt(6.0 * (c - 1.0));
  for (int i = 0; i < 100; ++i) {
    const double f = std::sinh(y) / y - c;
    const double df = (y * std::cosh(y) - std::sinh(y)) / (y * y);
    const double dy = f / df;
    y -= dy;
    if (std::abs(dy) < 1e-15 * y) break;
  }
  return 2.0 * y;
}

double default_half_width(double c) { return std::ceil(40.0 / decay_rate(c)) + 10.0; }

WaveProfile toda_soliton(double kappa, const ProfileOptions& opt) {
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  const double c = std::sinh(kappa) / kappa;
  const Box box = make_box(c, opt);
  std::vector<double> r(box.n), p(box.n);
  const double sk2 = std::sinh(kappa) * std::sinh(kappa);
  for (std::size_t i = 0; i < box.n; ++i) {
    const double x = box.x0() + box.h() * static_cast<double>(i);
    const double s = 1.0 / std::cosh(kappa * x);
    r[i] = std::log1p(sk2 * s * s);
    // p = -c q', q = log cosh(kx) - log cosh(k(x-1))
    p[i] = -c * kappa * (std::tanh(kappa * x) - std::tanh(kappa * (x - 1.0)));
  }
  WaveProfile w;
  w.model = PotentialModel::toda();
  w.c = c;
  w.u = Profile::from_values(box.x0(), box.h(), std::move(r), std::move(p));
  return w;
}

WaveProfile solve_profile(const PotentialModel& model, double c, const ProfileOptions& opt) {
  model.check_normalization();
  const Box box = make_box(c, opt);
  auto s = petviashvili(model, c, box, opt);
  WaveProfile w;
  w.model = model;
  w.c = c;
  w.residual = s.residual;
  w.iterations = s.iterations;
  w.history = std::move(s.history);
  w.u = Profile::from_values(box.x0(), box.h(), std::move(s.r), std::move(s.p));
  return w;
}

Profile profile_derivative(const WaveProfile& w, ProfileDerivative which, const ProfileOptions& opt) {
  if (which == ProfileDerivative::DDx) return w.u.derivative();
  ProfileOptions o = opt;
  o.half_width = -w.u.x0;
  o.oversample = static_cast<int>(std::lround(1.0 / w.u.h));
  const double hc = 1e-4 * (w.c - 1.0);
  const Box box = make_box(w.c, o);
  auto plus = petviashvili(w.model, w.c + hc, box, o);
  auto minus = petviashvili(w.model, w.c - hc, box, o);
  std::vector<double> r(box.n), p(box.n);
  for (std::size_t i = 0; i < box.n; ++i) {
    r[i] = (plus.r[i] - minus.r[i]) / (2.0 * hc);
    p[i] = (plus.p[i] - minus.p[i]) / (2.0 * hc);
  }
  return Profile::from_values(box.x0(), box.h(), std::move(r), std::move(p));
}

Profile rho_profile(const WaveProfile& w) {
  const std::size_t n = w.u.size();
  const double c = w.c;
  const auto xi = wavenumbers(n, w.u.h);
  std::vector<cplx> f(n), fh, a(n), b(n), ta, tb;
  for (std::size_t i = 0; i < n; ++i) f[i] = potential_eval(w.model, w.u.r[i], 1) - w.u.r[i];
  Fft fft(n);
  fft.forward(f, fh);
  for (std::size_t j = 0; j < n; ++j) {
    if (xi[j] == 0.0) {
      a[j] = c / (c * c - 1.0) * fh[j];
      b[j] = -1.0 / (c * c - 1.0) * fh[j];
      continue;
    }
    const double sn = std::sin(0.5 * xi[j]);
    const double den = c * c * xi[j] * xi[j] - 4.0 * sn * sn;
    const cplx ik(0.0, xi[j]);
    a[j] = c * xi[j] * xi[j] / den * fh[j];
    b[j] = ik * (1.0 - std::exp(-ik)) / den * fh[j];
  }
  fft.backward(a, ta);
  fft.backward(b, tb);
  const double sc = 1.0 / static_cast<double>(n);
  return Profile::from_values(w.u.x0, w.u.h, real_part(ta, sc), real_part(tb, sc));
}

double traveling_wave_residual(const WaveProfile& w) {
  const std::size_t n = w.u.size();
  const double c = w.c;
  const auto xi = wavenumbers(n, w.u.h);
  std::vector<cplx> rh, vh, res(n), out;
  std::vector<cplx> vp(n);
  for (std::size_t i = 0; i < n; ++i) vp[i] = potential_eval(w.model, w.u.r[i], 1);
  Fft fft(n);
  fft.forward(to_complex(w.u.r), rh);
  fft.forward(vp, vh);
  for (std::size_t j = 0; j < n; ++j) {
    const double sn = std::sin(0.5 * xi[j]);
    res[j] = -c * c * xi[j] * xi[j] * rh[j] + 4.0 * sn * sn * vh[j];
  }
  fft.backward(res, out);
  double m = 0.0;
  for (auto& z : out) m = std::max(m, std::abs(z.real()) / static_cast<double>(n));
  return m;
}

double crest_position(const LatticeField& u) {
  if (u.size() < 3) throw InvalidArgument("crest_position needs at least three sites");
  const auto it = std::max_element(u.r.begin(), u.r.end());
  auto j = static_cast<std::size_t>(it - u.r.begin());
  j = std::clamp<std::size_t>(j, 1, u.size() - 2);
  const double a = u.r[j - 1], b = u.r[j], c = u.r[j + 1];
  const double den = a - 2.0 * b + c;
  const double off = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
  return static_cast<double>(u.offset + static_cast<long>(j)) + off;
}

EnergyCurve energy_curve(const PotentialModel& model, const std::vector<double>& speeds, const ProfileOptions& opt) {
  EnergyCurve out;
  auto energy = [&](const WaveProfile& w) {
    const long first = static_cast<long>(std::floor(w.u.x0));
    const auto n = static_cast<std::size_t>(2.0 * -w.u.x0) + 1;
    return hamiltonian(w.sample(first, n, 0.0), model);
  };
  for (double c : speeds) {
    auto w = solve_profile(model, c, opt);
    ProfileOptions o = opt;
    o.half_width = -w.u.x0;
    o.oversample = static_cast<int>(std::lround(1.0 / w.u.h));
    const double hc = 1e-3 * (c - 1.0);
    const double hp = energy(solve_profile(model, c + hc, o));
    const double hm = energy(solve_profile(model, c - hc, o));
    out.c.push_back(c);
    out.H.push_back(energy(w));
    out.theta1.push_back((hp - hm) / (2.0 * hc));
  }
  return out;
}

ProfileFamily::ProfileFamily(PotentialModel model, double c_min, double c_max, ProfileOptions opt)
    : model_(std::move(model)), c_min_(c_min), c_max_(c_max), opt_(opt) {
  if (!(c_min > 1.0) || !(c_max >= c_min)) throw InvalidArgument("invalid speed range for profile family");
  model_.check_normalization();
  // Common box wide enough for the slowest node, resolved for the fastest.
  const double lo = 1.0 + (c_min - 1.0) * std::pow(10.0, -2.0 / 64.0);
  const double hi = 1.0 + (c_max - 1.0) * std::pow(10.0, 3.0 / 64.0);
  if (opt_.half_width <= 0.0) opt_.half_width = default_half_width(lo);
  opt_.oversample = std::max(opt_.oversample, static_cast<int>(std::ceil(32.0 * decay_rate(hi))));
}

const WaveProfile& ProfileFamily::node(long j) const {
  auto it = nodes_.find(j);
  if (it != nodes_.end()) return it->second;
  const double c = 1.0 + std::pow(10.0, static_cast<double>(j) / 64.0);
  return nodes_.emplace(j, solve_profile(model_, c, opt_)).first->second;
}

ProfileFamily::Eval ProfileFamily::at(double c, bool second) const {
  if (!(c > 1.0)) throw InvalidArgument("wave speed must exceed 1");
  const double s = 64.0 * std::log10(c - 1.0);
  const long j0 = static_cast<long>(std::floor(s));
  const double t = s - static_cast<double>(j0);
  // Lagrange basis on nodes -1, 0, 1, 2 and its t-derivative.
  const double nodes[4] = {-1.0, 0.0, 1.0, 2.0};
  double w[4], dw[4], d2w[4];
  for (int a = 0; a < 4; ++a) {
    double den = 1.0, prod = 1.0, dsum = 0.0, d2sum = 0.0;
    for (int b = 0; b < 4; ++b) {
      if (b == a) continue;
      den *= nodes[a] - nodes[b];
      prod *= t - nodes[b];
    }
    for (int b = 0; b < 4; ++b) {
      if (b == a) continue;
      double term = 1.0;
      for (int e = 0; e < 4; ++e)
        if (e != a && e != b) term *= t - nodes[e];
      dsum += term;
      for (int e = 0; e < 4; ++e)
        if (e != a && e != b) d2sum += t - nodes[6 - a - b - e];
    }
    w[a] = prod / den;
    dw[a] = dsum / den;
    d2w[a] = d2sum / den;
  }
  const double dt_dc = 64.0 / ((c - 1.0) * std::log(10.0));
  const WaveProfile* nd[4];
  for (int a = 0; a < 4; ++a) nd[a] = &node(j0 - 1 + a);
  const std::size_t n = nd[0]->u.size();
  Eval e;
  // d2/dc2 = t'' d/dt + t'^2 d2/dt2 with t'' = -t'/(c-1)
  const double d2t_dc2 = -dt_dc / (c - 1.0);
  std::vector<double> r(n, 0.0), p(n, 0.0), rc(n, 0.0), pc(n, 0.0), rcc, pcc;
  if (second) {
    rcc.assign(n, 0.0);
    pcc.assign(n, 0.0);
  }
  for (int a = 0; a < 4; ++a) {
    const auto& u = nd[a]->u;
    const double wc = dw[a] * dt_dc, wcc = dw[a] * d2t_dc2 + d2w[a] * dt_dc * dt_dc;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] += w[a] * u.r[i];
      p[i] += w[a] * u.p[i];
      rc[i] += wc * u.r[i];
      pc[i] += wc * u.p[i];
    }
    if (second) {
      for (std::size_t i = 0; i < n; ++i) {
        rcc[i] += wcc * u.r[i];
        pcc[i] += wcc * u.p[i];
      }
    }
  }
  const double x0 = nd[0]->u.x0, h = nd[0]->u.h;
  e.u = Profile::from_values(x0, h, std::move(r), std::move(p));
  e.du_dc = Profile::from_values(x0, h, std::move(rc), std::move(pc));
  e.du_dx = e.u.derivative();
  if (second) {
    e.du_dxx = e.du_dx.derivative();
    e.du_dcdx = e.du_dc.derivative();
    e.du_dcc = Profile::from_values(x0, h, std::move(rcc), std::move(pcc));
  }
  return e;
}

}  // namespace fpu

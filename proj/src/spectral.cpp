#include "fpu/spectral.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>

#include <cmath>
#include <mutex>
#include <numbers>

#include "fpu/error.hpp"

namespace fpu {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Grid Grid::span(double a, double b, double dx) {
  if (!(b > a) || !(dx > 0)) throw InvalidArgument("Grid::span: need b > a and dx > 0");
  Grid g;
  g.x0 = a;
  g.dx = dx;
  g.n = static_cast<std::size_t>(std::llround((b - a) / dx));
  return g;
}

Fft::Fft(std::size_t n) : n_(n) {
  if (n == 0) throw InvalidArgument("Fft: size must be positive");
  std::lock_guard<std::mutex> lock(planner_mutex());
  buf_in_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * n));
  buf_out_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * n));
  auto* in = reinterpret_cast<fftw_complex*>(buf_in_);
  auto* out = reinterpret_cast<fftw_complex*>(buf_out_);
  fwd_ = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft::~Fft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
  fftw_free(buf_in_);
  fftw_free(buf_out_);
}

void Fft::forward(const std::vector<cplx>& in, std::vector<cplx>& out) const {
  if (in.size() != n_) throw InvalidArgument("Fft::forward: size mismatch");
  std::copy(in.begin(), in.end(), buf_in_);
  fftw_execute(static_cast<fftw_plan>(fwd_));
  out.assign(buf_out_, buf_out_ + n_);
}

void Fft::backward(const std::vector<cplx>& in, std::vector<cplx>& out) const {
  if (in.size() != n_) throw InvalidArgument("Fft::backward: size mismatch");
  std::copy(in.begin(), in.end(), buf_in_);
  fftw_execute(static_cast<fftw_plan>(bwd_));
  out.assign(buf_out_, buf_out_ + n_);
}

std::vector<double> wavenumbers(std::size_t n, double dx) {
  std::vector<double> k(n);
  const double base = 2.0 * std::numbers::pi / (static_cast<double>(n) * dx);
  for (std::size_t j = 0; j < n; ++j) {
    const auto jj = static_cast<long>(j);
    const long s = (j <= n / 2) ? jj : jj - static_cast<long>(n);
    k[j] = base * static_cast<double>(s);
  }
  return k;
}

std::vector<double> spectral_derivative(const std::vector<double>& f, double dx, int order) {
  const std::size_t n = f.size();
  Fft fft(n);
  std::vector<cplx> a(f.begin(), f.end()), fa;
  fft.forward(a, fa);
  const auto k = wavenumbers(n, dx);
  for (std::size_t j = 0; j < n; ++j) {
    cplx m = std::pow(cplx(0.0, k[j]), order);
    // Odd derivatives of the Nyquist mode are not representable as real data.
    if (n % 2 == 0 && j == n / 2 && order % 2 == 1) m = 0.0;
    fa[j] *= m;
  }
  fft.backward(fa, a);
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = a[j].real() / static_cast<double>(n);
  return out;
}

double trapezoid(const std::vector<double>& f, double dx) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * dx;
}

std::vector<double> cumulative_trapezoid(const std::vector<double>& f, double dx) {
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t i = 1; i < f.size(); ++i) out[i] = out[i - 1] + 0.5 * dx * (f[i - 1] + f[i]);
  return out;
}

const std::array<double, 6>& interval_weights(int start) {
  if (start < -5 || start > 0) throw InvalidArgument("interval_weights: start must be in [-5, 0]");
  static const auto table = [] {
    std::array<std::array<double, 6>, 6> t{};
    for (int s = -5; s <= 0; ++s) {
      Eigen::Matrix<double, 6, 6> V;
      Eigen::Matrix<double, 6, 1> rhs;
      for (int p = 0; p < 6; ++p) {
        for (int o = 0; o < 6; ++o) V(p, o) = std::pow(static_cast<double>(s + o), p);
        rhs(p) = 1.0 / (p + 1);
      }
      const Eigen::Matrix<double, 6, 1> w = V.fullPivLu().solve(rhs);
      for (int o = 0; o < 6; ++o) t[static_cast<std::size_t>(s + 5)][static_cast<std::size_t>(o)] = w(o);
    }
    return t;
  }();
  return table[static_cast<std::size_t>(start + 5)];
}

int interval_stencil_start(std::size_t j, std::size_t n) {
  if (n < 6) throw InvalidArgument("interval_stencil_start: need at least 6 points");
  long s = static_cast<long>(j) - 2;
  s = std::max(s, 0L);
  s = std::min(s, static_cast<long>(n) - 6);
  return static_cast<int>(s - static_cast<long>(j));
}

std::vector<double> cumulative_integral(const std::vector<double>& f, double dx) {
  const std::size_t n = f.size();
  if (n < 6) return cumulative_trapezoid(f, dx);
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const int s = interval_stencil_start(j, n);
    const auto& w = interval_weights(s);
    double acc = 0.0;
    for (int o = 0; o < 6; ++o) acc += w[static_cast<std::size_t>(o)] * f[static_cast<std::size_t>(static_cast<long>(j) + s + o)];
    out[j + 1] = out[j] + dx * acc;
  }
  return out;
}

std::vector<double> fd_derivative(const std::vector<double>& f, double dx) {
  static const double c8[] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  static const double c6[] = {3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
  static const double c4[] = {2.0 / 3.0, -1.0 / 12.0};
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 3) return d;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t room = std::min(i, n - 1 - i);
    double s = 0.0;
    if (room >= 4) {
      for (int j = 0; j < 4; ++j) s += c8[j] * (f[i + j + 1] - f[i - j - 1]);
    } else if (room == 3) {
      for (int j = 0; j < 3; ++j) s += c6[j] * (f[i + j + 1] - f[i - j - 1]);
    } else if (room == 2) {
      for (int j = 0; j < 2; ++j) s += c4[j] * (f[i + j + 1] - f[i - j - 1]);
    } else if (room == 1) {
      s = 0.5 * (f[i + 1] - f[i - 1]);
    } else if (i == 0) {
      s = -1.5 * f[0] + 2.0 * f[1] - 0.5 * f[2];
    } else {
      s = 1.5 * f[n - 1] - 2.0 * f[n - 2] + 0.5 * f[n - 3];
    }
    d[i] = s / dx;
  }
  return d;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_line: need >= 2 matching points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace fpu

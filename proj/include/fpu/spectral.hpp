#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace fpu {

using cplx = std::complex<double>;

// Uniform grid x_i = x0 + i*dx, i = 0..n-1.
struct Grid {
  double x0 = 0.0;
  double dx = 1.0;
  std::size_t n = 0;

  double x(std::size_t i) const { return x0 + dx * static_cast<double>(i); }
  double length() const { return dx * static_cast<double>(n); }
  static Grid span(double a, double b, double dx);
};

struct GridField {
  Grid grid;
  std::vector<double> values;
};

// Complex-to-complex FFT of fixed size. Planning is serialized internally so
// instances can be created from several threads.
class Fft {
 public:
  explicit Fft(std::size_t n);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  std::size_t size() const { return n_; }
  void forward(const std::vector<cplx>& in, std::vector<cplx>& out) const;
  // Unnormalized inverse; divide by n to undo forward().
  void backward(const std::vector<cplx>& in, std::vector<cplx>& out) const;

 private:
  std::size_t n_;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
  cplx* buf_in_ = nullptr;
  cplx* buf_out_ = nullptr;
};

// Angular wavenumbers 2*pi*j/(n*dx) in FFT order.
std::vector<double> wavenumbers(std::size_t n, double dx);

// d^order f / dx^order by Fourier multiplication (periodic extension).
std::vector<double> spectral_derivative(const std::vector<double>& f, double dx, int order);

double trapezoid(const std::vector<double>& f, double dx);
// F(x_i) = int_{x_0}^{x_i} f.
std::vector<double> cumulative_trapezoid(const std::vector<double>& f, double dx);

// Weights w_o, o = 0..5, with int_{x_j}^{x_{j+1}} f ~ dx * sum_o w_o f(x_{j+start+o});
// start in [-5, 0]. Exact for polynomials of degree 5.
const std::array<double, 6>& interval_weights(int start);
// Stencil start for interval [j, j+1] on n points (centred where possible).
int interval_stencil_start(std::size_t j, std::size_t n);

// Sixth-order F(x_i) = int_{x_0}^{x_i} f.
std::vector<double> cumulative_integral(const std::vector<double>& f, double dx);

// Central finite difference of order 8 (one-sided near the ends, order 6).
std::vector<double> fd_derivative(const std::vector<double>& f, double dx);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fpu

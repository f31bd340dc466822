#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace fpu {

// Field u = (r, p) on the integer window offset .. offset+size()-1, zero outside.
struct LatticeField {
  long offset = 0;
  std::vector<double> r;
  std::vector<double> p;

  LatticeField() = default;
  LatticeField(long offset_, std::size_t n) : offset(offset_), r(n, 0.0), p(n, 0.0) {}

  std::size_t size() const { return r.size(); }
  long first() const { return offset; }
  long last() const { return offset + static_cast<long>(r.size()) - 1; }
  bool same_window(const LatticeField& o) const { return offset == o.offset && size() == o.size(); }

  LatticeField& operator+=(const LatticeField& o);
  LatticeField& operator-=(const LatticeField& o);
  LatticeField& operator*=(double s);
};

LatticeField operator+(LatticeField a, const LatticeField& b);
LatticeField operator-(LatticeField a, const LatticeField& b);
LatticeField operator*(double s, LatticeField a);
// a += s*b
void axpy(double s, const LatticeField& b, LatticeField& a);

// Copy into a new window, zero-filling sites not covered by the source.
LatticeField reembed(const LatticeField& u, long offset, std::size_t n);

void require_same_window(const LatticeField& a, const LatticeField& b, const char* where);

enum class PotentialKind { AlphaFPU, Toda, Custom };

// V(r) for the nearest-neighbour chain. Custom potentials are polynomials
// V(r) = sum_j coeffs[j] r^j with coeffs[0] = coeffs[1] = 0.
struct PotentialModel {
  PotentialKind kind = PotentialKind::AlphaFPU;
  std::vector<double> coeffs;

  static PotentialModel alpha_fpu();
  static PotentialModel toda();
  static PotentialModel custom(std::vector<double> coeffs);

  // (V(0), V'(0), V''(0), V'''(0)) == (0, 0, 1, 1); throws InvalidArgument otherwise.
  void check_normalization(double tol = 1e-12) const;
  std::string name() const;
};

PotentialModel parse_potential(const std::string& name);

// order in 0..3 selects V, V', V'', V'''.
double potential_eval(const PotentialModel& model, double r, int order);

double hamiltonian(const LatticeField& u, const PotentialModel& model);
// H'(u) = (V'(r), p)
LatticeField grad_hamiltonian(const LatticeField& u, const PotentialModel& model);
// H''(u) w = (V''(r) w_r, w_p)
LatticeField hessian_apply(const LatticeField& u, const LatticeField& w, const PotentialModel& model);

enum class JMode { Forward, Inverse };

// Forward: J v = ((e^d - 1) v_p, (1 - e^{-d}) v_r).
// Inverse: (sum_{k<=0} v_p(n+k), sum_{k<=-1} v_r(n+k)); throws TailError when the
// field does not vanish at the left edge to within tail_tol * max|v|.
LatticeField apply_j(const LatticeField& v, JMode mode, double tail_tol = 1e-10);
// Forward J with periodic wrap; debugging aid only.
LatticeField apply_j_periodic(const LatticeField& v);

enum class WeightOrientation { RightGrowing, LeftGrowing, TwoSidedDecaying, Sigmoid };

struct WeightSpec {
  double a = 0.0;
  double x0 = 0.0;
  WeightOrientation orientation = WeightOrientation::RightGrowing;

  // Multiplier applied to the field inside a norm: e^{a(n-x0)}, e^{-a(n-x0)},
  // e^{-a|n-x0|} or (1 + tanh a(n-x0))^{1/2}.
  double factor(double n) const;
};

enum class PairingMode { Plain, JInverse };

// Plain: sum_n w(n)^2 (u_r v_r + u_p v_p). JInverse: <W^2 u, J^{-1} v> through the
// split form <u_r, sum_{k<=0} e^{kd} v_p> + <v_r, sum_{k>=1} e^{kd} u_p>.
double weighted_pairing(const LatticeField& u, const LatticeField& v, PairingMode mode,
                        const std::optional<WeightSpec>& weight = std::nullopt);

double l2_norm(const LatticeField& u);
double weighted_l2_norm(const LatticeField& u, const WeightSpec& w);

// max |u| over the outermost `sites` sites on either end.
double boundary_mass(const LatticeField& u, std::size_t sites = 5);

void write_csv(const std::string& path, const LatticeField& u);
LatticeField read_csv(const std::string& path);
// Little-endian: int64 offset, uint64 length, then r and p as float64.
void write_binary(const std::string& path, const LatticeField& u);
LatticeField read_binary(const std::string& path);

}  // namespace fpu

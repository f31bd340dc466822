#include "fpu/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fpu/error.hpp"

namespace fpu {

LatticeField& LatticeField::operator+=(const LatticeField& o) {
  require_same_window(*this, o, "operator+=");
  for (std::size_t i = 0; i < size(); ++i) {
    r[i] += o.r[i];
    p[i] += o.p[i];
  }
  return *this;
}

LatticeField& LatticeField::operator-=(const LatticeField& o) {
  require_same_window(*this, o, "operator-=");
  for (std::size_t i = 0; i < size(); ++i) {
    r[i] -= o.r[i];
    p[i] -= o.p[i];
  }
  return *this;
}

LatticeField& LatticeField::operator*=(double s) {
  for (auto& x : r) x *= s;
  for (auto& x : p) x *= s;
  return *this;
}

LatticeField operator+(LatticeField a, const LatticeField& b) { return a += b; }
LatticeField operator-(LatticeField a, const LatticeField& b) { return a -= b; }
LatticeField operator*(double s, LatticeField a) { return a *= s; }

void axpy(double s, const LatticeField& b, LatticeField& a) {
  require_same_window(a, b, "axpy");
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.r[i] += s * b.r[i];
    a.p[i] += s * b.p[i];
  }
}

LatticeField reembed(const LatticeField& u, long offset, std::size_t n) {
  LatticeField out(offset, n);
  for (std::size_t i = 0; i < n; ++i) {
    const long site = offset + static_cast<long>(i);
    if (site < u.first() || site > u.last()) continue;
    const auto j = static_cast<std::size_t>(site - u.offset);
    out.r[i] = u.r[j];
    out.p[i] = u.p[j];
  }
  return out;
}

void require_same_window(const LatticeField& a, const LatticeField& b, const char* where) {
  if (!a.same_window(b)) {
    std::ostringstream os;
    os << where << ": window mismatch [" << a.first() << "," << a.last() << "] vs [" << b.first()
       << "," << b.last() << "]";
    throw WindowMismatch(os.str());
  }
}

PotentialModel PotentialModel::alpha_fpu() { return {PotentialKind::AlphaFPU, {}}; }

PotentialModel PotentialModel::toda() { return {PotentialKind::Toda, {}}; }

PotentialModel PotentialModel::custom(std::vector<double> coeffs) {
  PotentialModel m{PotentialKind::Custom, std::move(coeffs)};
  m.check_normalization();
  return m;
}

void PotentialModel::check_normalization(double tol) const {
  const double v[4] = {potential_eval(*this, 0.0, 0), potential_eval(*this, 0.0, 1),
                       potential_eval(*this, 0.0, 2), potential_eval(*this, 0.0, 3)};
  const double want[4] = {0.0, 0.0, 1.0, 1.0};
  for (int j = 0; j < 4; ++j) {
    if (std::abs(v[j] - want[j]) > tol) {
      std::ostringstream os;
      os << "potential " << name() << " violates normalization: derivative " << j << " at 0 is "
         << v[j] << ", expected " << want[j];
      throw InvalidArgument(os.str());
    }
  }
}

std::string PotentialModel::name() const {
  switch (kind) {
    case PotentialKind::AlphaFPU:
      return "alpha_fpu";
    case PotentialKind::Toda:
      return "toda";
    case PotentialKind::Custom:
      return "custom";
  }
  return "unknown";
}

PotentialModel parse_potential(const std::string& name) {
  if (name == "alpha-fpu" || name == "alpha_fpu" || name == "AlphaFPU" || name == "fpu") return PotentialModel::alpha_fpu();
  if (name == "toda" || name == "Toda") return PotentialModel::toda();
  throw InvalidArgument("unknown potential '" + name + "'");
}

double potential_eval(const PotentialModel& model, double r, int order) {
  if (order < 0 || order > 3) throw InvalidArgument("potential_eval: derivative order must be 0..3");
  switch (model.kind) {
    case PotentialKind::AlphaFPU:
      switch (order) {
        case 0:
          return r * r * (0.5 + r / 6.0);
        case 1:
          return r + 0.5 * r * r;
        case 2:
          return 1.0 + r;
        case 3:
          return 1.0;
      }
      break;
    case PotentialKind::Toda: {
      // e^r - 1 - r, written with expm1 to keep small-r accuracy.
      const double em1 = std::expm1(r);
      switch (order) {
        case 0:
          return em1 - r;
        case 1:
          return em1;
        case 2:
        case 3:
          return em1 + 1.0;
      }
      break;
    }
    case PotentialKind::Custom: {
      double s = 0.0;
      for (int j = static_cast<int>(model.coeffs.size()) - 1; j >= order; --j) {
        double f = 1.0;
        for (int q = 0; q < order; ++q) f *= static_cast<double>(j - q);
        s = s * r + model.coeffs[static_cast<std::size_t>(j)] * f;
      }
      return s;
    }
  }
  throw InvalidArgument("potential_eval: derivative order must be 0..3");
}

double hamiltonian(const LatticeField& u, const PotentialModel& model) {
  double h = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) h += 0.5 * u.p[i] * u.p[i] + potential_eval(model, u.r[i], 0);
  return h;
}

LatticeField grad_hamiltonian(const LatticeField& u, const PotentialModel& model) {
  LatticeField g(u.offset, u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    g.r[i] = potential_eval(model, u.r[i], 1);
    g.p[i] = u.p[i];
  }
  return g;
}

LatticeField hessian_apply(const LatticeField& u, const LatticeField& w, const PotentialModel& model) {
  require_same_window(u, w, "hessian_apply");
  LatticeField out(u.offset, u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    out.r[i] = potential_eval(model, u.r[i], 2) * w.r[i];
    out.p[i] = w.p[i];
  }
  return out;
}

LatticeField apply_j(const LatticeField& v, JMode mode, double tail_tol) {
  const std::size_t n = v.size();
  LatticeField out(v.offset, n);
  if (n == 0) return out;
  if (mode == JMode::Forward) {
    for (std::size_t i = 0; i < n; ++i) {
      const double pn1 = (i + 1 < n) ? v.p[i + 1] : 0.0;
      const double rm1 = (i > 0) ? v.r[i - 1] : 0.0;
      out.r[i] = pn1 - v.p[i];
      out.p[i] = v.r[i] - rm1;
    }
    return out;
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max({scale, std::abs(v.r[i]), std::abs(v.p[i])});
  const double edge = std::max(std::abs(v.r[0]), std::abs(v.p[0]));
  if (edge > tail_tol * std::max(scale, 1e-300) && scale > 0) {
    std::ostringstream os;
    os << "apply_j(Inverse): left tail not summable in window (edge value " << edge << ")";
    throw TailError(os.str());
  }
  double sp = 0.0, sr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sp += v.p[i];
    out.r[i] = sp;
    out.p[i] = sr;
    sr += v.r[i];
  }
  return out;
}

LatticeField apply_j_periodic(const LatticeField& v) {
  const std::size_t n = v.size();
  LatticeField out(v.offset, n);
  for (std::size_t i = 0; i < n; ++i) {
    out.r[i] = v.p[(i + 1) % n] - v.p[i];
    out.p[i] = v.r[i] - v.r[(i + n - 1) % n];
  }
  return out;
}

double WeightSpec::factor(double n) const {
  const double s = n - x0;
  switch (orientation) {
    case WeightOrientation::RightGrowing:
      return std::exp(a * s);
    case WeightOrientation::LeftGrowing:
      return std::exp(-a * s);
    case WeightOrientation::TwoSidedDecaying:
      return std::exp(-a * std::abs(s));
    case WeightOrientation::Sigmoid:
      return std::sqrt(1.0 + std::tanh(a * s));
  }
  return 1.0;
}

double weighted_pairing(const LatticeField& u, const LatticeField& v, PairingMode mode,
                        const std::optional<WeightSpec>& weight) {
  require_same_window(u, v, "weighted_pairing");
  const std::size_t n = u.size();
  auto w2 = [&](std::size_t i) {
    if (!weight) return 1.0;
    const double f = weight->factor(static_cast<double>(u.offset) + static_cast<double>(i));
    return f * f;
  };
  if (mode == PairingMode::Plain) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w2(i) * (u.r[i] * v.r[i] + u.p[i] * v.p[i]);
    return s;
  }
  // First term: prefix sums of v_p against (weighted) u_r.
  double s1 = 0.0, prefix = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    prefix += v.p[i];
    s1 += w2(i) * u.r[i] * prefix;
  }
  // Second term: strict suffix sums of (weighted) u_p against v_r.
  double s2 = 0.0, suffix = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    s2 += v.r[i] * suffix;
    suffix += w2(i) * u.p[i];
  }
  return s1 + s2;
}

double l2_norm(const LatticeField& u) { return std::sqrt(weighted_pairing(u, u, PairingMode::Plain)); }

double weighted_l2_norm(const LatticeField& u, const WeightSpec& w) {
  return std::sqrt(weighted_pairing(u, u, PairingMode::Plain, w));
}

double boundary_mass(const LatticeField& u, std::size_t sites) {
  const std::size_t n = u.size();
  double m = 0.0;
  for (std::size_t i = 0; i < std::min(sites, n); ++i) {
    m = std::max({m, std::abs(u.r[i]), std::abs(u.p[i]), std::abs(u.r[n - 1 - i]), std::abs(u.p[n - 1 - i])});
  }
  return m;
}

void write_csv(const std::string& path, const LatticeField& u) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.precision(17);
  os << "n,r,p\n";
  for (std::size_t i = 0; i < u.size(); ++i) os << u.offset + static_cast<long>(i) << ',' << u.r[i] << ',' << u.p[i] << '\n';
  if (!os) throw IoError("write failed: " + path);
}

LatticeField read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("n,r,p", 0) != 0) throw IoError(path + ": missing header n,r,p");
  LatticeField u;
  long expect = 0;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    long n;
    double r, p;
    char c1, c2;
    if (!(ls >> n >> c1 >> r >> c2 >> p) || c1 != ',' || c2 != ',') throw IoError(path + ": malformed row '" + line + "'");
    if (first) {
      u.offset = n;
      expect = n;
      first = false;
    }
    if (n != expect) throw IoError(path + ": sites must be consecutive");
    u.r.push_back(r);
    u.p.push_back(p);
    ++expect;
  }
  return u;
}

namespace {
template <class T>
void put_le(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  is.read(reinterpret_cast<char*>(b), sizeof(T));
  if (!is) throw IoError("truncated binary lattice file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}
}  // namespace

void write_binary(const std::string& path, const LatticeField& u) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  put_le<std::int64_t>(os, u.offset);
  put_le<std::uint64_t>(os, u.size());
  for (double x : u.r) put_le<double>(os, x);
  for (double x : u.p) put_le<double>(os, x);
  if (!os) throw IoError("write failed: " + path);
}

LatticeField read_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  const auto off = get_le<std::int64_t>(is);
  const auto n = get_le<std::uint64_t>(is);
  if (n > (1ull << 32)) throw IoError(path + ": implausible length");
  LatticeField u(off, n);
  for (auto& x : u.r) x = get_le<double>(is);
  for (auto& x : u.p) x = get_le<double>(is);
  return u;
}

}  // namespace fpu

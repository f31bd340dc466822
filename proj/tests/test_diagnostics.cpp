#include <doctest.h>

#include <cmath>
#include <random>

#include "fpu/diagnostics.hpp"
#include "fpu/error.hpp"

using namespace fpu;

namespace {

LatticeField bump(long offset, std::size_t n, double center, double width, double amp) {
  LatticeField u(offset, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(offset + static_cast<long>(i)) - center;
    u.r[i] = amp * std::exp(-x * x / (width * width));
    u.p[i] = -amp * std::exp(-(x - 0.5) * (x - 0.5) / (width * width));
  }
  return u;
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("weighted norms of point masses") {
    LatticeField d0(-10, 21);
    d0.r[10] = 1.0;
    const WeightSpec w{0.3, 0.0, WeightOrientation::RightGrowing};
    CHECK(weighted_norm(d0, w) == doctest::Approx(1.0).epsilon(1e-15));
    LatticeField d5(-10, 21);
    d5.r[15] = 1.0;
    CHECK(weighted_norm(d5, w) == doctest::Approx(4.481689).epsilon(1e-6));
    CHECK(weighted_norm(d5, w) == doctest::Approx(weighted_l2_norm(d5, w)).epsilon(1e-14));
    // no overflow far from the reference point
    LatticeField far(100000, 3);
    far.r[1] = 1e-300;
    CHECK(std::isfinite(weighted_norm(far, WeightSpec{0.001, 0.0, WeightOrientation::RightGrowing})));
  }

  TEST_CASE("W norm is a sum of two-sided norms") {
    const auto u = bump(0, 200, 90.0, 10.0, 1.0);
    const double eps = 0.2;
    const double w = w_norm(u, {1.0, 2.0}, eps, {60.0, 120.0});
    const double a = weighted_norm(u, WeightSpec{0.5 * eps, 60.0, WeightOrientation::TwoSidedDecaying});
    const double b = weighted_norm(u, WeightSpec{1.0 * eps, 120.0, WeightOrientation::TwoSidedDecaying});
    CHECK(w == doctest::Approx(a + b).epsilon(1e-14));
    CHECK(x_norm(u, 1.0, eps, 60.0) ==
          doctest::Approx(weighted_norm(u, WeightSpec{0.5 * eps, 60.0, WeightOrientation::RightGrowing})).epsilon(1e-14));
  }

  TEST_CASE("grid weighted norm") {
    const auto g = Grid::span(-30, 30, 0.01);
    GridField f{g, std::vector<double>(g.n)};
    for (std::size_t i = 0; i < g.n; ++i) f.values[i] = std::exp(-g.x(i) * g.x(i));
    // int e^{2ax} e^{-2x^2} dx = sqrt(pi/2) e^{a^2/2}
    const double a = 0.4;
    CHECK(weighted_norm(f, WeightSpec{a, 0.0, WeightOrientation::RightGrowing}) ==
          doctest::Approx(std::sqrt(std::sqrt(M_PI / 2) * std::exp(a * a / 2))).epsilon(1e-10));
  }

  TEST_CASE("cutoff") {
    CHECK(cutoff(0.0) == 1.0);
    CHECK(cutoff(1.0) == 1.0);
    CHECK(cutoff(-2.0) == 0.0);
    CHECK(cutoff(2.5) == 0.0);
    for (double s = 1.0; s < 2.0; s += 0.01) {
      CHECK(cutoff(s + 0.01) <= cutoff(s));
      CHECK(cutoff(s) == doctest::Approx(cutoff(-s)));
    }
  }

  TEST_CASE("band split: Parseval, partition and reconstruction") {
    const double eps = 0.2, k1 = 1.0, c1 = 1.0 + eps * eps / 6.0;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    LatticeField w(-100, 256);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double x = static_cast<double>(w.offset + static_cast<long>(i));
      const double env = std::exp(-x * x / 800.0 - k1 * eps * x);
      w.r[i] = env * nd(rng);
      w.p[i] = env * nd(rng);
    }
    const auto b = band_split(w, eps, k1, c1, 2.0, 1.0, 3.0);
    LatticeField ew = w;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double f = std::exp(k1 * eps * (static_cast<double>(w.offset + static_cast<long>(i)) - c1 * 3.0));
      ew.r[i] *= f;
      ew.p[i] *= f;
    }
    const double e2 = l2_norm(ew) * l2_norm(ew);
    CHECK(band_energy(b.f_plus) + band_energy(b.f_minus) == doctest::Approx(e2).epsilon(1e-10));
    double part = 0.0;
    for (std::size_t j = 0; j < b.xi.size(); ++j) part = std::max(part, std::abs(b.f1[j] + b.f2[j] + b.f3[j] - b.f_plus[j]));
    CHECK(part <= 1e-14 * std::sqrt(e2));
    const auto back = band_reconstruct(b);
    CHECK(l2_norm(back - ew) <= 1e-10 * l2_norm(ew));
  }

  TEST_CASE("band split localizes smooth and oscillating data") {
    const double eps = 0.2, k1 = 1.0, c1 = 1.0 + eps * eps / 6.0;
    LatticeField smooth(-300, 600), spikes(-300, 600);
    for (std::size_t i = 0; i < 600; ++i) {
      const double x = static_cast<double>(-300 + static_cast<long>(i));
      const double env = std::exp(-std::pow(x * eps / 10.0, 2) - k1 * eps * x);
      smooth.r[i] = env;
      smooth.p[i] = -env;
      const double s = (i % 2 == 0 ? 1.0 : -1.0) * std::exp(-std::pow(x / 20.0, 2) - k1 * eps * x);
      spikes.r[i] = s;
      spikes.p[i] = s;
    }
    auto frac = [](const BandSplit& b, bool low) {
      const double tot = band_energy(b.f_plus) + band_energy(b.f_minus);
      return ((low ? band_energy(b.f1) : band_energy(b.f3)) + band_energy(b.f_minus)) / tot;
    };
    CHECK(frac(band_split(smooth, eps, k1, c1, 2.0, 1.0, 0.0), true) >= 0.99);
    CHECK(frac(band_split(spikes, eps, k1, c1, 2.0, 1.0, 0.0), false) >= 0.99);
    CHECK_THROWS_AS(band_split(LatticeField(0, 8), eps, k1, c1, 2.0, 1.0, 0.0), InvalidArgument);
  }

  TEST_CASE("dispersion branches") {
    const double c = 1.0 + 0.01 / 6.0;
    CHECK(std::abs(lambda_branch(0.0, c, +1)) == 0.0);
    CHECK(std::abs(lambda_branch(0.0, c, -1)) == 0.0);
    CHECK(lambda_branch(M_PI, c, +1).real() == doctest::Approx(1.146832).epsilon(1e-5));
    CHECK(lambda_branch(M_PI, c, +1).real() == doctest::Approx(c * M_PI - 2.0).epsilon(1e-15));
  }

  TEST_CASE("dispersion inequalities") {
    const auto r = dispersion_check(0.1, 1.0, 1.0, 2.0, 1.0);
    CHECK(r.margin_minus > 0.0);
    CHECK(r.margin_cubic >= 0.0);
    CHECK(r.margin_quadratic > 0.0);
    CHECK(r.margin_high_half > 0.0);
    CHECK(r.lambda_plus_zero == 0.0);
    // the cos(delta) form of the high band bound fails next to |eta| = delta/eps
    const auto s = dispersion_check(0.05, 1.0, 1.0, 2.0, 1.0);
    CHECK(s.margin_high < 0.0);
    CHECK(std::abs(s.worst_eta_high) == doctest::Approx(1.0 / 0.05).epsilon(1e-3));
  }

  TEST_CASE("symbol bound is uniform in eps") {
    std::vector<double> v;
    for (double eps : {0.05, 0.1, 0.2}) v.push_back(symbol_sup(eps, 1.0, 1.0 + eps * eps / 6.0));
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    CHECK(*hi / *lo <= 2.0);
  }

  TEST_CASE("lattice and continuum transforms") {
    const SolitonFamily one{{1.0}, {0.0}};
    CHECK(ft_difference(one, 0.1, M_PI / 2) <= 1e-10);
    const auto rep = symbol_and_tail_check({0.05, 0.1, 0.2}, {0.2, 0.25, 0.3, 0.4, 0.5}, 1.0, 1.0, one);
    CHECK(rep.fit.slope < 0.0);
    CHECK(rep.fit.r2 >= 0.99);
  }

  TEST_CASE("decay fit") {
    std::vector<double> t, v, c, s;
    for (int i = 0; i < 50; ++i) {
      t.push_back(0.5 * i);
      v.push_back(std::exp(-0.125 * t.back()));
      c.push_back(3.0);
      s.push_back(7.0 * v.back());
    }
    CHECK(std::abs(decay_fit(t, v).rate + 0.125) <= 1e-12);
    CHECK(std::abs(decay_fit(t, c).rate) <= 1e-15);
    const auto a = decay_fit(t, v), b = decay_fit(t, s);
    CHECK(b.rate == doctest::Approx(a.rate).epsilon(1e-12));
    CHECK(b.intercept - a.intercept == doctest::Approx(std::log(7.0)).epsilon(1e-12));
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd(0.0, 0.01);
    std::vector<double> tn, vn;
    for (int i = 0; i < 200; ++i) {
      tn.push_back(0.25 * i);
      vn.push_back(std::exp(-0.3 * tn.back()) * (1.0 + nd(rng)));
    }
    CHECK(decay_fit(tn, vn).rate == doctest::Approx(-0.3).epsilon(0.05));
    std::vector<double> bad = v;
    bad[3] = 0.0;
    CHECK_THROWS_AS(decay_fit(t, bad), InvalidArgument);
    CHECK_THROWS_AS(decay_fit({1, 2, 3}, {1, 1, 1}), InvalidArgument);
  }

  TEST_CASE("virial series") {
    const auto model = PotentialModel::alpha_fpu();
    const double eps = 0.2;
    Trajectory zero;
    for (int j = 0; j < 5; ++j) {
      zero.times.push_back(j);
      zero.states.emplace_back(0, 50);
    }
    const auto vz = virial_series(zero, 0.3 * eps, [](double t) { return t; }, model, 1.0);
    for (double x : vz.psi_energy) CHECK(x == 0.0);
    for (double x : vz.sech_energy) CHECK(x == 0.0);

    const double speed = 1.0 + eps * eps / 12.0;
    const auto v0 = bump(-100, 400, 0.0, 3.0, 0.05 * eps * eps / 2.0);
    EvolveConfig cfg;
    cfg.t_end = 60.0;
    cfg.dt = 0.02;
    cfg.scheme = Scheme::RK4;
    Trajectory tr;
    Observer ob{"keep", [&](double t, const LatticeField& u) {
                  tr.times.push_back(t);
                  tr.states.push_back(u);
                  return std::vector<double>{};
                }};
    evolve_nonlinear(v0, model, cfg, {ob});
    const auto vs = virial_series(tr, 0.3 * eps, [&](double t) { return speed * t; }, model, 1.0 + eps * eps / 24.0);
    CHECK(vs.hypothesis_ok);
    CHECK(vs.max_increase <= 1e-12);
    CHECK(vs.psi_energy.back() < vs.psi_energy.front());
    const auto bad = virial_series(tr, 0.3 * eps, [](double t) { return t; }, model, 1.0 + eps * eps / 24.0);
    CHECK_FALSE(bad.hypothesis_ok);
  }

  TEST_CASE("stability metrics vanish without perturbation") {
    static const ProfileFamily fam(PotentialModel::alpha_fpu(), 1.005, 1.03);
    const double eps = 0.2;
    const auto p = kdv_scaled_params({1.0, 2.0}, eps, {80.0, 140.0});
    SplitConfig cfg;
    cfg.evolve.t_end = 10.0;
    cfg.evolve.dt = 0.05;
    cfg.evolve.scheme = Scheme::RK4;
    cfg.evolve.observe_every = 20;
    cfg.k = {1.0, 2.0};
    const auto res = perturbation_split(wave_train(fam, p, 0, 400), LatticeField(0, 400), fam, p, eps, cfg);
    const auto m = stability_metrics(res, p, eps);
    for (double x : {m.M1, m.M2, m.M3, m.M4, m.M5}) {
      CHECK(std::isfinite(x));
      CHECK(std::abs(x) <= 1e-3);
    }
  }
}

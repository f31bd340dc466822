#include <doctest.h>

#include <cmath>
#include <random>

#include "fpu/backlund.hpp"
#include "fpu/error.hpp"

using namespace fpu;

namespace {

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double l2(const std::vector<double>& v, double dx) {
  std::vector<double> s(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) s[i] = v[i] * v[i];
  return std::sqrt(trapezoid(s, dx));
}

double dot(const std::vector<double>& a, const std::vector<double>& b, double dx) {
  std::vector<double> s(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) s[i] = a[i] * b[i];
  return trapezoid(s, dx);
}

std::vector<double> random_bumps(std::mt19937_64& rng, const Grid& g, double lo, double hi) {
  std::uniform_real_distribution<double> uc(lo, hi), uw(0.8, 3.0), ua(-1.0, 1.0);
  std::vector<double> w(g.n, 0.0);
  for (int b = 0; b < 3; ++b) {
    const double c = uc(rng), s = uw(rng), a = ua(rng);
    for (std::size_t i = 0; i < g.n; ++i) w[i] += a * std::exp(-std::pow((g.x(i) - c) / s, 2));
  }
  return w;
}

std::vector<double> diff(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

}  // namespace

TEST_SUITE("backlund") {
  TEST_CASE("phase ladder values") {
    const SolitonFamily f{{1.0, 2.0}, {0.0, 0.0}};
    const auto l = phase_ladder(f);
    CHECK(l.gamma[1][0] == doctest::Approx(0.5 * std::log(1.0 / 3.0)).epsilon(1e-14));
    CHECK(l.gamma[1][0] == doctest::Approx(-0.549306).epsilon(1e-6));
    const SolitonFamily one{{0.7}, {1.5}};
    CHECK(phase_ladder(one).gamma[1][0] == 1.5);

    const SolitonFamily a{{0.5, 1.0, 1.7}, {0.3, -0.2, 1.1}};
    SolitonFamily b = a;
    for (auto& g : b.gamma) g *= 2.0;
    const auto la = phase_ladder(a), lb = phase_ladder(b);
    for (std::size_t m = 1; m <= 3; ++m)
      for (std::size_t i = 0; i < m; ++i)
        CHECK((lb.gamma[m][i] - b.gamma[i]) == doctest::Approx(la.gamma[m][i] - a.gamma[i]).epsilon(1e-13));
  }

  TEST_CASE("ladder residual and wrong-phase control") {
    const auto grid = Grid::span(-40, 40, 0.05);
    const SolitonFamily one{{1.0}, {0.0}};
    CHECK(backlund_residual(one, phase_ladder(one), 1, 0.0, grid) <= 1e-8);
    const SolitonFamily two{{1.0, 2.0}, {0.0, 0.0}};
    const auto l = phase_ladder(two);
    for (double t : {0.0, 3.0}) {
      const auto g = Grid::span(-40 + 16 * t, 40 + 16 * t, 0.05);
      CHECK(backlund_residual(two, l, 2, t, g) <= 1e-8);
      CHECK(backlund_residual(two, l, 1, t, g) <= 1e-8);
    }
    PhaseLadder wrong = l;
    wrong.gamma[1] = {two.gamma[0]};
    CHECK(backlund_residual(two, wrong, 2, 0.0, grid) >= 0.01);
    CHECK_THROWS_AS(backlund_residual(two, l, 0, 0.0, grid), InvalidArgument);
  }

  TEST_CASE("ladder residual over random families") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uk(0.3, 3.0), ug(-2.0, 2.0);
    for (int trial = 0; trial < 6; ++trial) {
      SolitonFamily f;
      const std::size_t n = 1 + static_cast<std::size_t>(trial % 4);
      while (f.k.size() < n) {
        const double k = uk(rng);
        bool ok = true;
        for (double q : f.k) ok = ok && std::abs(q - k) > 0.05;
        if (ok) f.k.push_back(k);
      }
      std::sort(f.k.begin(), f.k.end());
      for (std::size_t i = 0; i < n; ++i) f.gamma.push_back(ug(rng));
      const auto l = phase_ladder(f);
      const auto g = Grid::span(-30, 30, 0.1 / f.k.back());
      for (std::size_t m = 1; m <= n; ++m) CHECK(backlund_residual(f, l, m, 1.0, g) <= 1e-8);
    }
  }

  TEST_CASE("forward map: zero, orthogonality and the one-soliton formula") {
    const SolitonFamily f{{0.5}, {0.0}};
    const auto grid = Grid::span(-40, 40, 0.05);
    const auto lvl = backlund_level(f, phase_ladder(f), 1, 0.0, grid);
    double alpha = 1.0;
    const auto z = linearized_forward(lvl, std::vector<double>(grid.n, 0.0), &alpha);
    CHECK(sup_abs(z) == 0.0);
    CHECK(alpha == 0.0);

    // k = 1/2, gamma = 0: psi ~ sech(kx), v^1 - v^0 = k tanh(kx), crest at 0.
    // For w0 = sech^4(kx): int_0^x 4 D psi(x)^2/psi(y)^2 w0 = 2 tanh^2(kx) sech^2(kx).
    const double k = 0.5;
    std::vector<double> w0(grid.n), base(grid.n), dg(grid.n), dk(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
      const double x = grid.x(i), s = k * x, sh = 1.0 / std::cosh(s), th = std::tanh(s);
      w0[i] = std::pow(sh, 4);
      base[i] = -w0[i] + 2.0 * th * th * sh * sh;
      dg[i] = -k * k * sh * sh;
      // d/dk of k^2 sech^2(kx + log(2k)/2) at k = 1/2
      dk[i] = 2 * k * sh * sh - 2 * k * k * sh * sh * th * (x + 1.0 / (2 * k));
    }
    const double a0 = -dot(base, dk, grid.dx) / dot(dg, dk, grid.dx);
    std::vector<double> oracle(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) oracle[i] = base[i] + a0 * dg[i];
    const auto w1 = linearized_forward(lvl, w0);
    CHECK(sup_abs(diff(w1, oracle)) <= 1e-8);

    const auto o = level_orthogonality(lvl, w1);
    CHECK(std::abs(o.gamma) <= 1e-8 * l2(w1, grid.dx));
    CHECK(std::abs(o.k) <= 1e-8 * l2(w1, grid.dx));
  }

  TEST_CASE("forward and inverse maps are mutually inverse") {
    const SolitonFamily f{{0.5, 1.0, 1.4}, {-3.0, 0.0, 2.0}};
    const auto l = phase_ladder(f);
    const auto grid = Grid::span(-50, 50, 0.025);
    std::mt19937_64 rng(3);
    for (std::size_t m = 1; m <= 3; ++m) {
      const auto lvl = backlund_level(f, l, m, 0.5, grid);
      for (int trial = 0; trial < 4; ++trial) {
        const auto w = random_bumps(rng, grid, -10, 10);
        const auto fw = linearized_forward(lvl, w);
        const auto o = level_orthogonality(lvl, fw);
        CHECK(std::abs(o.gamma) <= 1e-8 * l2(fw, grid.dx));
        CHECK(std::abs(o.k) <= 1e-8 * l2(fw, grid.dx));
        const auto back = linearized_inverse(lvl, fw);
        CHECK(l2(diff(back, w), grid.dx) <= 1e-6 * l2(w, grid.dx));
        const auto again = linearized_forward(lvl, back);
        CHECK(l2(diff(again, fw), grid.dx) <= 1e-6 * l2(fw, grid.dx));
      }
    }
  }

  TEST_CASE("inverse map rejects fields outside the orthogonal space") {
    const SolitonFamily f{{0.5, 1.0}, {0.0, 0.0}};
    const auto grid = Grid::span(-40, 40, 0.05);
    const auto lvl = backlund_level(f, phase_ladder(f), 2, 0.0, grid);
    CHECK_THROWS_AS(linearized_inverse(lvl, lvl.zg), InvalidArgument);
    CHECK(sup_abs(linearized_inverse(lvl, std::vector<double>(grid.n, 0.0))) == 0.0);
    CHECK_THROWS_AS(linearized_inverse(lvl, std::vector<double>(grid.n - 1, 0.0)), InvalidArgument);
  }

  TEST_CASE("secular projection removes the secular modes") {
    const SolitonFamily f{{0.5, 1.0}, {0.0, 0.0}};
    const auto grid = Grid::span(-40, 40, 0.05);
    const auto b = secular_basis(f, 0.0, grid);
    CHECK(sup_abs(project_out_secular(f, 0.0, grid, b.xi1[0])) <= 1e-8 * sup_abs(b.xi1[0]));
    std::mt19937_64 rng(5);
    const auto w = random_bumps(rng, grid, -5, 5);
    const auto p1 = project_out_secular(f, 0.0, grid, w);
    const auto p2 = project_out_secular(f, 0.0, grid, p1);
    CHECK(sup_abs(diff(p1, p2)) <= 1e-10);
  }

  TEST_CASE("ladder conjugation") {
    const auto grid = Grid::span(-40, 40, 0.05);
    std::mt19937_64 rng(9);
    {
      const SolitonFamily f{{0.5}, {0.0}};
      const auto lvl = backlund_level(f, phase_ladder(f), 1, 0.0, grid);
      const auto w1 = linearized_forward(lvl, random_bumps(rng, grid, -5, 5));
      const auto res = ladder_conjugate(f, 0.0, grid, w1);
      const auto up = linearized_forward(lvl, res.levels[0]);
      CHECK(l2(diff(up, w1), grid.dx) <= 1e-6 * l2(w1, grid.dx));
    }
    const SolitonFamily f{{0.5, 1.0}, {0.0, 0.0}};
    const auto l = phase_ladder(f);
    const auto l1 = backlund_level(f, l, 1, 0.0, grid);
    const auto l2v = backlund_level(f, l, 2, 0.0, grid);
    double cmax = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const auto w0 = random_bumps(rng, grid, -6, 6);
      const auto wN = linearized_forward(l2v, linearized_forward(l1, w0));
      const auto res = ladder_conjugate(f, 0.0, grid, wN);
      CHECK(l2(diff(res.levels[0], w0), grid.dx) <= 1e-6 * l2(w0, grid.dx));
      const double r = l2(wN, grid.dx) / l2(w0, grid.dx);
      cmax = std::max({cmax, r, 1.0 / r});
    }
    CHECK(cmax < 50.0);
    const auto zero = ladder_conjugate(f, 0.0, grid, std::vector<double>(grid.n, 0.0));
    CHECK(sup_abs(zero.levels[0]) == 0.0);
  }

  TEST_CASE("Airy flow decays in the moving weighted frame") {
    const auto grid = Grid::span(-60, 60, 0.1);
    GridField v0{grid, std::vector<double>(grid.n)};
    for (std::size_t i = 0; i < grid.n; ++i) v0.values[i] = std::exp(-grid.x(i) * grid.x(i));
    FlowConfig cfg;
    cfg.t1 = 12.0;
    cfg.dt = 0.01;
    cfg.store_every = 20;
    cfg.frame = {0.5, 1.0, 0.0};
    const auto tr = evolve_linear_flow(v0, {}, cfg);
    std::vector<double> t, lg;
    for (std::size_t j = 0; j < tr.times.size(); ++j)
      if (tr.times[j] >= 4.0) {
        t.push_back(tr.times[j]);
        lg.push_back(std::log(tr.norms[j]));
      }
    // a (c - a^2) = 0.375
    CHECK(fit_line(t, lg).slope <= -0.9 * 0.375);
  }

  TEST_CASE("secular mode follows the parameter derivative") {
    const SolitonFamily f{{0.5, 1.0}, {0.0, 0.0}};
    const auto grid = Grid::span(-40, 40, 0.05);
    const auto b0 = secular_basis(f, 0.0, grid);
    FlowConfig cfg;
    cfg.t1 = 2.0;
    cfg.dt = 1e-3;
    cfg.store_every = 500;
    const auto tr = linearized_kdv_evolve(GridField{grid, b0.xi1[0]}, f, cfg);
    const auto b2 = secular_basis(f, 2.0, grid);
    CHECK(sup_abs(diff(tr.g.back(), b2.xi1[0])) <= 1e-4);
    const double m0 = trapezoid(tr.g.front(), grid.dx);
    for (const auto& g : tr.g) CHECK(std::abs(trapezoid(g, grid.dx) - m0) <= 1e-8);
  }
}

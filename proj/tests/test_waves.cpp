#include <doctest.h>

#include <cmath>

#include "fpu/error.hpp"
#include "fpu/integrators.hpp"
#include "fpu/waves.hpp"

using namespace fpu;

namespace {

double sup_diff_fine(const Profile& a, const Profile& b, double half) {
  double m = 0.0;
  for (double x = -half; x <= half; x += 0.0625)
    m = std::max({m, std::abs(a.r_at(x) - b.r_at(x)), std::abs(a.p_at(x) - b.p_at(x))});
  return m;
}

double kdv_eps(double c) { return std::sqrt(6.0 * (c - 1.0)); }

}  // namespace

TEST_SUITE("waves") {
  TEST_CASE("decay rate inverts the dispersion relation") {
    for (double c : {1.0001, 1.01, 1.2, 2.0}) {
      const double mu = decay_rate(c);
      CHECK(std::sinh(mu / 2) / (mu / 2) == doctest::Approx(c).epsilon(1e-13));
    }
    CHECK_THROWS_AS(decay_rate(1.0), InvalidArgument);
  }

  TEST_CASE("Toda soliton closed form") {
    const auto w = toda_soliton(1.0);
    CHECK(w.c == doctest::Approx(1.175201).epsilon(1e-6));
    const auto u = w.sample(-60, 121, 0.0);
    double mass = 0.0;
    for (double r : u.r) mass += r;
    CHECK(mass == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(hamiltonian(u, PotentialModel::toda()) == doctest::Approx(std::sinh(2.0) - 2.0).epsilon(1e-6));
    CHECK(std::abs(hamiltonian(u, PotentialModel::toda()) - 1.626860) <= 1e-6);
    CHECK_THROWS_AS(toda_soliton(0.0), InvalidArgument);
  }

  TEST_CASE("Petviashvili reproduces the Toda soliton") {
    const double kappa = 0.3;
    const auto exact = toda_soliton(kappa);
    const auto w = solve_profile(PotentialModel::toda(), exact.c);
    CHECK(sup_diff_fine(w.u, exact.u, 60.0) <= 1e-8);
    CHECK(traveling_wave_residual(w) <= 1e-10);
  }

  TEST_CASE("Petviashvili residual decreases monotonically") {
    for (const auto& m : {PotentialModel::alpha_fpu(), PotentialModel::toda()})
      for (double c : {1.001, 1.01, 1.05}) {
        const auto w = solve_profile(m, c);
        REQUIRE(w.history.size() > 6);
        // strictly smaller until the change reaches the rounding floor
        for (std::size_t i = 5; i + 1 < w.history.size(); ++i)
          if (w.history[i] > 1e-13) CHECK(w.history[i + 1] < w.history[i]);
      }
  }

  TEST_CASE("alpha-FPU profile follows KdV scaling") {
    std::vector<double> ratio;
    for (double eps : {0.4, 0.2, 0.1}) {
      const auto w = solve_profile(PotentialModel::alpha_fpu(), 1.0 + eps * eps / 6.0);
      CHECK(traveling_wave_residual(w) <= 1e-10);
      ratio.push_back(w.u.r_at(0.0) / (eps * eps));
    }
    CHECK(ratio[1] >= 0.9);
    CHECK(ratio[1] <= 1.1);
    CHECK(std::abs(ratio[2] - 1.0) < std::abs(ratio[1] - 1.0));
    CHECK(std::abs(ratio[1] - 1.0) < std::abs(ratio[0] - 1.0));
  }

  TEST_CASE("profiles are even single humps") {
    const auto w = solve_profile(PotentialModel::alpha_fpu(), 1.0 + 0.04 / 6.0);
    double odd = 0.0;
    for (double x = 0.0; x <= 40.0; x += 0.125) odd = std::max(odd, std::abs(w.u.r_at(x) - w.u.r_at(-x)));
    CHECK(odd <= 1e-10);
    for (double x = 0.0; x < 40.0; x += 0.125) CHECK(w.u.r_at(x + 0.125) <= w.u.r_at(x));
    CHECK(crest_position(w.sample(-20, 41, 0.3)) == doctest::Approx(0.3).epsilon(1e-2));
  }

  TEST_CASE("secular mode identity and secular pairings") {
    const auto w = toda_soliton(0.3);
    const auto dx = profile_derivative(w, ProfileDerivative::DDx);
    const auto dxx = dx.derivative();
    const auto dc = profile_derivative(w, ProfileDerivative::DDc);
    const long off = -80;
    const std::size_t n = 161;
    const auto u = w.sample(off, n, 0.0);
    const auto ux = dx.sample(off, n, 0.0);
    const auto uxx = dxx.sample(off, n, 0.0);
    const auto uc = dc.sample(off, n, 0.0);
    auto res = w.c * uxx + apply_j(hessian_apply(u, ux, w.model), JMode::Forward, 1e300);
    double m = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) m = std::max({m, std::abs(res.r[i]), std::abs(res.p[i])});
    CHECK(m <= 1e-6);

    CHECK(std::abs(weighted_pairing(ux, ux, PairingMode::JInverse)) <= 1e-8);
    const double s2 = weighted_pairing(ux, uc, PairingMode::JInverse);
    CHECK(s2 > 0.0);
    // (1/c) dH/dc with H = sinh 2k - 2k, c = sinh k / k
    const double k = 0.3;
    const double dHdk = 2.0 * std::cosh(2 * k) - 2.0, dcdk = (k * std::cosh(k) - std::sinh(k)) / (k * k);
    CHECK(s2 == doctest::Approx(dHdk / dcdk / w.c).epsilon(1e-5));
  }

  TEST_CASE("rho vanishes for a quadratic potential") {
    WaveProfile w = solve_profile(PotentialModel::alpha_fpu(), 1.01);
    w.model = PotentialModel{PotentialKind::Custom, {0.0, 0.0, 0.5}};
    const auto rho = rho_profile(w);
    double m = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) m = std::max({m, std::abs(rho.r[i]), std::abs(rho.p[i])});
    CHECK(m <= 1e-14);
  }

  TEST_CASE("rho scales like eps^{3/2}") {
    std::vector<double> q;
    for (double eps : {0.2, 0.1, 0.05}) {
      const auto w = solve_profile(PotentialModel::alpha_fpu(), 1.0 + eps * eps / 6.0);
      const auto rho = rho_profile(w);
      const long half = static_cast<long>(-w.u.x0) - 1;
      q.push_back(l2_norm(rho.sample(-half, static_cast<std::size_t>(2 * half + 1), 0.0)) / std::pow(eps, 1.5));
    }
    CHECK(q[1] / q[0] <= 2.0);
    CHECK(q[1] / q[0] >= 0.5);
    CHECK(q[2] / q[1] <= 2.0);
    CHECK(q[2] / q[1] >= 0.5);
  }

  TEST_CASE("energy curve") {
    std::vector<double> kappas{0.2, 0.3, 0.5}, cs;
    for (double k : kappas) cs.push_back(std::sinh(k) / k);
    const auto e = energy_curve(PotentialModel::toda(), cs);
    for (std::size_t i = 0; i < kappas.size(); ++i) {
      CHECK(std::abs(e.H[i] - (std::sinh(2 * kappas[i]) - 2 * kappas[i])) <= 1e-6);
      CHECK(e.theta1[i] > 0.0);
    }
    const double eps = 0.05, c = 1.0 + eps * eps / 6.0;
    const auto a = energy_curve(PotentialModel::alpha_fpu(), {c});
    CHECK(a.theta1[0] / (c * eps) == doctest::Approx(12.0).epsilon(0.05));
    CHECK(kdv_eps(c) == doctest::Approx(eps).epsilon(1e-12));
  }

  TEST_CASE("profile family interpolates solved profiles") {
    const ProfileFamily fam(PotentialModel::alpha_fpu(), 1.004, 1.03);
    const double c = 1.0123;
    const auto e = fam.at(c, true);
    ProfileOptions o;
    o.half_width = -e.u.x0;
    o.oversample = static_cast<int>(std::lround(1.0 / e.u.h));
    const auto w = solve_profile(PotentialModel::alpha_fpu(), c, o);
    CHECK(sup_diff_fine(e.u, w.u, 40.0) <= 1e-5 * w.u.r_at(0.0));
    const auto dc = profile_derivative(w, ProfileDerivative::DDc, o);
    CHECK(sup_diff_fine(e.du_dc, dc, 40.0) <= 1e-4 * std::abs(dc.r_at(0.0)));
    CHECK(sup_diff_fine(e.du_dx, w.u.derivative(), 40.0) <= 1e-5 * w.u.r_at(0.0));
    CHECK(sup_diff_fine(e.du_dcdx, dc.derivative(), 40.0) <= 1e-3 * std::abs(dc.r_at(0.0)));
    CHECK_THROWS_AS(fam.at(1.0), InvalidArgument);
  }

  TEST_CASE("solved profile translates at its speed") {
    const auto w = solve_profile(PotentialModel::alpha_fpu(), 1.0 + 0.04 / 6.0);
    const auto u0 = w.sample(-80, 260, 0.0);
    EvolveConfig cfg;
    cfg.t_end = 50.0;
    cfg.dt = 0.02;
    const auto res = evolve_nonlinear(u0, w.model, cfg);
    const double drift = crest_position(res.final_state) - crest_position(w.sample(-80, 260, w.c * 50.0));
    CHECK(std::abs(drift) <= 1e-3);
  }
}

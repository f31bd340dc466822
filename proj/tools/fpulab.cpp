#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "fpu/error.hpp"
#include "fpu/experiments.hpp"
#include "fpu/scenario.hpp"
#include "fpu/waves.hpp"

using namespace fpu;
namespace fs = std::filesystem;

namespace {

constexpr int kPass = 0, kFail = 1, kError = 2;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    const double v = std::stod(item, &pos);
    if (pos != item.size()) throw InvalidArgument("not a number: " + item);
    out.push_back(v);
  }
  return out;
}

int cmd_simulate(const std::string& path, std::string out) {
  const Config cfg = Config::load(path);
  if (out.empty()) out = "runs/" + kind_name(cfg.kind());
  const auto r = run_scenario(cfg, out);
  std::cout << report(r.dir).text << "artifacts in " << r.dir.string() << "\n";
  return r.pass ? kPass : kFail;
}

int cmd_sweep(const std::string& path, const std::string& axis, const std::vector<std::string>& values, std::string out,
              unsigned threads) {
  const Config cfg = Config::load(path);
  if (out.empty()) out = "runs/sweep_" + kind_name(cfg.kind());
  const auto s = sweep(cfg, axis, values, out, threads);
  for (const auto& e : s.entries)
    std::cout << axis << " = " << e.value << ": " << (e.ok ? (e.pass ? "PASS" : "FAIL") : "ERROR " + e.error) << "\n";
  std::cout << s.entries.size() << " runs, aggregate in " << out << "\n";
  if (s.errors()) return kError;
  return s.pass() ? kPass : kFail;
}

int cmd_report(const std::string& dir) {
  const auto d = report(dir);
  std::cout << d.text;
  return d.pass ? kPass : kFail;
}

int cmd_soliton(const std::string& model_name, double c, const std::string& out) {
  const auto model = parse_potential(model_name);
  const auto w = solve_profile(model, c);
  const double eps = std::sqrt(6.0 * (c - 1.0));
  nlohmann::json hdr = {{"c", c}, {"eps", eps}, {"model", model.name()}, {"residual", w.residual},
                        {"iterations", w.iterations}, {"h", w.u.h}, {"points", w.u.size()}};
  if (!out.empty()) {
    std::ofstream f(out + ".csv");
    if (!f) throw IoError("cannot write " + out + ".csv");
    f << "x,r,p\n";
    char line[96];
    for (std::size_t j = 0; j < w.u.size(); ++j) {
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", w.u.x(j), w.u.r[j], w.u.p[j]);
      f << line;
    }
    std::ofstream h(out + ".json");
    if (!h) throw IoError("cannot write " + out + ".json");
    h << hdr.dump(2) << "\n";
  }
  std::cout << hdr.dump(2) << "\n";
  return w.residual <= 1e-10 ? kPass : kFail;
}

int cmd_backlund(const std::string& k, const std::string& gamma, const std::string& times, std::size_t fields,
                 std::uint64_t seed) {
  SolitonFamily fam{parse_list(k), {}};
  fam.gamma = gamma.empty() ? std::vector<double>(fam.k.size(), 0.0) : parse_list(gamma);
  const auto d = audit_family(fam, parse_list(times), fields, seed);
  nlohmann::json j = {{"k", fam.k},
                      {"gamma", fam.gamma},
                      {"max_residual", d.max_residual},
                      {"wrong_phase", d.wrong_phase},
                      {"forward_inverse", d.forward_inverse},
                      {"inverse_forward", d.inverse_forward},
                      {"orthogonality", d.orthogonality}};
  std::cout << j.dump(2) << "\n";
  const bool ok = d.max_residual <= 1e-8 && (d.wrong_phase < 0.0 || d.wrong_phase >= 1e-2) &&
                  std::max(d.forward_inverse, d.inverse_forward) <= 1e-6 && d.orthogonality <= 1e-8;
  return ok ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fpulab: solitary-wave stability experiments for FPU lattices"};
  app.require_subcommand(1);

  std::string config, out, axis, dir, model = "alpha-fpu", k, gamma, times = "0,1,10";
  std::vector<std::string> values;
  unsigned threads = 0;
  double c = 0.0;
  std::size_t fields = 20;
  std::uint64_t seed = 7;

  auto* sim = app.add_subcommand("simulate", "run one scenario");
  sim->add_option("config", config, "config file")->required();
  sim->add_option("--out", out, "artifact directory");

  auto* sw = app.add_subcommand("sweep", "run a scenario for each value of one config key");
  sw->add_option("config", config, "base config file")->required();
  sw->add_option("--axis", axis, "config key to sweep")->required();
  sw->add_option("--values", values, "values (space separated)")->expected(0, -1);
  sw->add_option("--out", out, "aggregate directory");
  sw->add_option("--threads", threads, "worker threads (default FPULAB_THREADS or all cores)");

  auto* rep = app.add_subcommand("report", "verify and print an artifact directory");
  rep->add_option("dir", dir, "artifact directory")->required();

  auto* sol = app.add_subcommand("soliton", "solve and export a solitary-wave profile");
  sol->add_option("--model", model, "alpha-fpu or toda");
  sol->add_option("--c", c, "wave speed > 1")->required();
  sol->add_option("--out", out, "output prefix for .csv and .json");

  auto* bl = app.add_subcommand("backlund-audit", "Backlund ladder residuals and linearized round trips");
  bl->add_option("--k", k, "comma-separated increasing k")->required();
  bl->add_option("--gamma", gamma, "comma-separated phases (default zeros)");
  bl->add_option("--t", times, "comma-separated times");
  bl->add_option("--fields", fields, "random fields per level");
  bl->add_option("--seed", seed, "seed");

  auto* sch = app.add_subcommand("schema", "print the JSON schema of the config format");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kError;
  }

  try {
    if (*sim) return cmd_simulate(config, out);
    if (*sw) {
      // A bare --values yields one empty token.
      std::erase(values, std::string());
      return cmd_sweep(config, axis, values, out, threads);
    }
    if (*rep) return cmd_report(dir);
    if (*sol) return cmd_soliton(model, c, out);
    if (*bl) return cmd_backlund(k, gamma, times, fields, seed);
    if (*sch) {
      std::cout << config_schema().dump(2) << "\n";
      return kPass;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}

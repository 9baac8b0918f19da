// heisbeta: command-line front end of the experiment harness.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include <hbeta/harness.hpp>
#include <hbeta/suites.hpp>

namespace {

struct Flags {
  std::string config;
  std::string output;
  std::string csv;
  std::optional<int> n;
  std::optional<std::string> family;
  std::optional<double> lambda;
  std::optional<double> radius_max;
  std::optional<int> scales;
  std::optional<int> centers;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::optional<double> c;
  int trials = 32;
  int instances = 1000;
  int grids = 200;
};

void add_run_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "flat JSON config file");
  app->add_option("--output", f.output, "JSON report path (stdout when omitted)");
  app->add_option("--n", f.n, "group index");
  app->add_option("--family", f.family, "vertical-plane | smooth-bump | random-lipschitz");
  app->add_option("--lambda", f.lambda, "intrinsic Lipschitz constant");
  app->add_option("--radius-max", f.radius_max, "largest ball radius R_max");
  app->add_option("--scales", f.scales, "number of dyadic scales K");
  app->add_option("--centers", f.centers, "net points per scale");
  app->add_option("--samples", f.samples, "samples per beta estimate");
  app->add_option("--seed", f.seed, "random seed");
  app->add_option("--empirical-c", f.c, "quasibox constant (calibrated when omitted)");
}

hbeta::RunConfig make_config(const Flags& f) {
  hbeta::RunConfig cfg;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw std::runtime_error("cannot open config " + f.config);
    cfg = hbeta::run_config_from_json(nlohmann::json::parse(in));
  }
  if (f.n) cfg.family.n = *f.n;
  if (f.family) cfg.family.family = hbeta::parse_family(*f.family);
  if (f.lambda) cfg.family.lambda = *f.lambda;
  if (f.radius_max) cfg.R_max = *f.radius_max;
  if (f.scales) cfg.num_scales = *f.scales;
  if (f.centers) cfg.centers_per_scale = *f.centers;
  if (f.samples) cfg.samples_per_beta = *f.samples;
  if (f.seed) cfg.seed = *f.seed;
  if (f.c) cfg.empirical_c = *f.c;
  if (!f.output.empty()) cfg.output_path = f.output;
  if (!f.csv.empty()) cfg.csv_path = f.csv;
  cfg.validate();
  return cfg;
}

void emit(const nlohmann::ordered_json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beta numbers of intrinsic Lipschitz graphs in Heisenberg groups"};
  app.require_subcommand(1);
  Flags f;

  auto* carleson = app.add_subcommand("carleson", "Carleson sums of beta^2 over nested balls");
  add_run_flags(carleson, f);
  carleson->add_option("--csv", f.csv, "CSV of per-scale contributions (k,r,contribution)");
  auto* theta = app.add_subcommand("theta", "theta_f double integrals on P_w-cosets");
  add_run_flags(theta, f);
  auto* calibrate = app.add_subcommand("calibrate", "quasibox constant c of the family graph");
  add_run_flags(calibrate, f);
  calibrate->add_option("--trials", f.trials, "(x, r) pairs per radius");
  auto* identities = app.add_subcommand("identities", "wavelet identity suite");
  identities->add_option("--grids", f.grids, "random grids per (d, J)");
  identities->add_option("--seed", f.seed, "random seed");
  identities->add_option("--output", f.output, "JSON report path (stdout when omitted)");
  auto* selftest = app.add_subcommand("selftest", "algebraic suite");
  selftest->add_option("--instances", f.instances, "instances per check and n");
  selftest->add_option("--seed", f.seed, "random seed");
  selftest->add_option("--output", f.output, "JSON report path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (carleson->parsed()) {
      const auto cfg = make_config(f);
      const auto rep = hbeta::run_carleson(cfg);
      for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
      emit(hbeta::to_json(rep), cfg.output_path);
      if (!cfg.csv_path.empty()) {
        std::ofstream out(cfg.csv_path);
        if (!out) throw std::runtime_error("cannot write " + cfg.csv_path);
        out << hbeta::carleson_csv(rep);
      }
    } else if (theta->parsed()) {
      const auto cfg = make_config(f);
      emit(hbeta::to_json(hbeta::run_theta_slices(cfg)), cfg.output_path);
    } else if (calibrate->parsed()) {
      const auto cfg = make_config(f);
      hbeta::CalibrationOptions opts;
      opts.pairs_per_radius = f.trials;
      opts.seed = cfg.seed;
      const auto rep = hbeta::calibrate_c(hbeta::build_graph(cfg), opts);
      nlohmann::ordered_json j;
      j["kind"] = "calibration";
      j["config"] = hbeta::to_json(cfg);
      j["radii"] = opts.radii;
      j["c"] = rep.c;
      j["outer"] = rep.outer;
      j["inner"] = rep.inner;
      j["pairs"] = rep.pairs;
      j["points"] = rep.points;
      j["nodes"] = rep.nodes;
      emit(j, cfg.output_path);
    } else if (identities->parsed()) {
      const auto rep = hbeta::run_wavelet_suite(f.grids, f.seed.value_or(1));
      emit(hbeta::to_json(rep), f.output);
      return rep.pass() ? 0 : 1;
    } else if (selftest->parsed()) {
      const auto rep = hbeta::run_algebraic_suite(f.instances, f.seed.value_or(1));
      emit(hbeta::to_json(rep), f.output);
      return rep.pass() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

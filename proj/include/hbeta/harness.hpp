#pragma once

// Experiment runner: Carleson sums of beta^2 over dyadic nets, the theta_f
// corollary on P_w-cosets and quasibox calibration.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbeta/beta.hpp"
#include "hbeta/graphs.hpp"

namespace hbeta {

struct RunConfig {
  RunConfig() { family.coarse = 16; }  // random-lipschitz: a random value at every grid node

  GraphFamilySpec family;  // n, lambda, resolution, box and family parameters
  double R_max = 0.5;      // one grid cell of the default 16-point box [-4, 4]
  int num_scales = 5;  // K; scales r_k = R_max 2^-k
  int centers_per_scale = 40;
  int samples_per_beta = 2000;
  std::uint64_t seed = 1;
  double empirical_c = 0.0;  // <= 0: calibrate on the run's scales
  std::string output_path;
  std::string csv_path;
  /// Ball center: "node" (graph point over the grid node nearest the box center) or "origin".
  std::string center = "node";
  int dense_samples = 4000;  // surrogate points per ball for nets and cell measures
  int cone_trials = 20000;
  int slices = 10;           // theta: sampled P_w-cosets
  int theta_points = 200;    // theta: ball points per coset
  int theta_lattice = 8;     // theta: lattice points per axis on each small ball
  unsigned threads = 0;

  [[nodiscard]] int n() const { return family.n; }
  void validate() const;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Flat key-value JSON; unknown keys throw ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::ordered_json to_json(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Calibration of the quasibox constant

struct CalibrationOptions {
  std::vector<double> radii{0.25, 1.0, 4.0};
  int pairs_per_radius = 32;
  int samples_per_pair = 1000;
  std::uint64_t seed = 1;
  double c_max = 64.0;
  double rel_tol = 1e-4;
};

struct CalibrationReport {
  double c = 0.0;
  double outer = 0.0;  // smallest c with Pi_w(B(x,r) cap Gamma) in Q_w(x, c r)
  double inner = 0.0;  // smallest c with Q_w(x, r/c) lifting into B(x, r)
  int pairs = 0;
  long points = 0;  // ball samples checked
  long nodes = 0;   // box nodes lifted at the final c
};

class CalibrationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Smallest c in [1, c_max] with Q_w(x, r/c) in Pi_w(B(x,r) cap Gamma) in Q_w(x, c r) on all sampled pairs.
/// Centers are graph points over the central quarter of the box.
CalibrationReport calibrate_c(const IntrinsicGraph& G, const CalibrationOptions& opts = {});

// ---------------------------------------------------------------------------
// Carleson sums

struct ScaleContribution {
  int k = 0;
  double r = 0.0;
  double contribution = 0.0;  // ln 2 sum_i beta_i^2 mu(cell_i)
  double std_error = 0.0;
  int centers = 0;
  int dropped = 0;  // net candidates outside the eroded box
  std::vector<BetaEstimate> betas;
  std::vector<double> cell_measure;
};

struct BallReport {
  double R = 0.0;
  double measure = 0.0;  // surrogate measure of B(x0, R) cap Gamma
  double I = 0.0;
  double std_error = 0.0;
  double ratio = 0.0;  // I / R^{2n+1}
  std::vector<ScaleContribution> per_scale;
};

struct CarlesonReport {
  RunConfig config;
  double empirical_c = 0.0;
  ConeCheck cone;
  HPointD x0;
  std::vector<BallReport> balls;  // R_max/4, R_max/2, R_max
  double exponent = 0.0;          // slope of log I vs log R
  double exponent_std_error = 0.0;
  double ratio_envelope = 0.0;    // max_R I(R) / R^{2n+1}
  double ratio_spread = 0.0;      // max / min of the three ratios
  std::vector<std::string> warnings;

  [[nodiscard]] const BallReport& full() const { return balls.back(); }
};

IntrinsicGraph build_graph(const RunConfig& cfg);
/// x0 of the Carleson balls.
HPointD ball_center(const IntrinsicGraph& G, const std::string& center);

CarlesonReport run_carleson(const RunConfig& cfg);
CarlesonReport run_carleson(const IntrinsicGraph& G, const RunConfig& cfg);

nlohmann::ordered_json to_json(const BetaEstimate& b);
nlohmann::ordered_json to_json(const CarlesonReport& rep);
/// Rows k,r,contribution for the R_max ball.
std::string carleson_csv(const CarlesonReport& rep);

// ---------------------------------------------------------------------------
// theta_f on P_w-cosets

struct ThetaSlice {
  int id = 0;
  double offset = 0.0;    // coset {x_n = offset}
  double integral = 0.0;  // int_{B(y,R)} int theta dr/r dx
  double std_error = 0.0;
  double lip = 0.0;       // sampled Lipschitz constant of f on the coset
  double bound = 0.0;     // lip^2 R^{2m+2}, m = n - 1
  double ratio = 0.0;
  int clipped = 0;        // lattice nodes off the sampled box
};

struct ThetaReport {
  RunConfig config;
  double R = 0.0;
  int scales = 0;
  std::vector<ThetaSlice> per_slice;
  int skipped = 0;
  double max_ratio = 0.0;
};

/// theta_F(B(x, r)) = r^{-2m-4} inf_Aff ||F - g||^2_{L2(B(x,r))} for F on H_m, x a slice point.
class ThetaEvaluator {
 public:
  ThetaEvaluator(int m, int lattice);
  template <typename F>
  double operator()(F&& field, const HPointD& x, double r, int* clipped = nullptr) const;
  [[nodiscard]] int m() const { return m_; }

 private:
  double eval(const std::vector<double>& values, const std::vector<char>& keep) const;
  int m_;
  std::vector<HPointD> unit_nodes_;
  MatD design_;
  Eigen::ColPivHouseholderQR<MatD> qr_;
  double cell_ = 0.0;
};

/// Haar measure of the Koranyi unit ball of H_m.
double koranyi_ball_volume(int m);

ThetaReport run_theta_slices(const RunConfig& cfg);
ThetaReport run_theta_slices(const IntrinsicGraph& G, const RunConfig& cfg);
nlohmann::ordered_json to_json(const ThetaReport& rep);

// ---------------------------------------------------------------------------

template <typename F>
double ThetaEvaluator::operator()(F&& field, const HPointD& x, double r, int* clipped) const {
  std::vector<double> values(unit_nodes_.size());
  std::vector<char> keep(unit_nodes_.size(), 1);
  for (std::size_t i = 0; i < unit_nodes_.size(); ++i) {
    values[i] = field(x * dilate(r, unit_nodes_[i]));
    if (!std::isfinite(values[i])) {
      keep[i] = 0;
      if (clipped) ++*clipped;
    }
  }
  // cell volume scales by r^{2m+2}; theta divides by r^{2m+4}
  return eval(values, keep) / (r * r);
}

}  // namespace hbeta

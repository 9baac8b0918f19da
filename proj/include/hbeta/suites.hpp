#pragma once

// Randomized identity suites: the algebraic one (group law, dilations, Pi_w) and
// the wavelet one (verify_identities over random grids).

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace hbeta {

struct SuiteCheck {
  std::string name;
  int n = 0;  // group index or cube dimension
  int instances = 0;
  double max_error = 0.0;
  bool pass = false;
};

struct SuiteReport {
  std::vector<SuiteCheck> checks;
  [[nodiscard]] bool pass() const;
};

/// Group axioms, dilations, commutator and Pi_w invariance; gauge comparisons in exact arithmetic.
SuiteReport run_algebraic_suite(int instances, std::uint64_t seed, const std::vector<int>& ns = {1, 2, 3},
                                double tol = 1e-10);
/// verify_identities on random grids for every (d, J).
SuiteReport run_wavelet_suite(int grids, std::uint64_t seed, const std::vector<int>& ds = {3, 4, 5},
                              const std::vector<int>& Js = {2, 3}, double tol = 1e-9);
nlohmann::ordered_json to_json(const SuiteReport& rep);

}  // namespace hbeta

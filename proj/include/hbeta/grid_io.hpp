#pragma once

// Self-describing container for grid data, shared by graph parametrizations and
// wavelet grids.
//
// Binary layout (all integers and floats little-endian):
//   char[8]  magic "HBGRID01"
//   u32      kind (0 = plain grid, 1 = intrinsic graph)
//   u32      d, u32 points per axis
//   f64[d]   box lo, f64[d] box hi
//   kind 1:  u32 n, f64[2n] w (horizontal part), f64 lambda, f64 lambda_prime
//   u64      value count, f64[count] values (row-major, last axis fastest)

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "hbeta/grid.hpp"

namespace hbeta {

struct GraphHeader {
  int n = 0;
  VecD w;  // horizontal part of the direction, length 2n
  double lambda = 0.0;
  double lambda_prime = 0.0;
};

struct GridContainer {
  GridFunction grid;
  std::optional<GraphHeader> graph;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_binary(std::ostream& out, const GridContainer& c);
GridContainer read_binary(std::istream& in);

nlohmann::json to_json(const GridContainer& c);
GridContainer grid_container_from_json(const nlohmann::json& j);

void save_binary(const std::string& path, const GridContainer& c);
GridContainer load_binary(const std::string& path);

}  // namespace hbeta

#include "hbeta/grid_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace hbeta {
namespace {

constexpr std::array<char, 8> kMagic{'H', 'B', 'G', 'R', 'I', 'D', '0', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  out.write(buf.data(), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> buf;
  if (!in.read(buf.data(), sizeof(T))) throw FormatError("grid container: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  T v;
  std::memcpy(&v, buf.data(), sizeof(T));
  return v;
}

void put_vec(std::ostream& out, const VecD& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(out, v(i));
}

VecD get_vec(std::istream& in, Eigen::Index len) {
  VecD v(len);
  for (Eigen::Index i = 0; i < len; ++i) v(i) = get<double>(in);
  return v;
}

VecD vec_from_json(const nlohmann::json& j) {
  const auto xs = j.get<std::vector<double>>();
  return Eigen::Map<const VecD>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

std::vector<double> vec_to_std(const VecD& v) { return {v.data(), v.data() + v.size()}; }

// Guards against absurd headers before allocating.
constexpr std::uint32_t kMaxDim = 16;
constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 32;

}  // namespace

void write_binary(std::ostream& out, const GridContainer& c) {
  const auto& g = c.grid;
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, c.graph ? 1u : 0u);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.points_per_axis()));
  put_vec(out, g.box().lo);
  put_vec(out, g.box().hi);
  if (c.graph) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c.graph->n));
    put_vec(out, c.graph->w);
    put<double>(out, c.graph->lambda);
    put<double>(out, c.graph->lambda_prime);
  }
  put<std::uint64_t>(out, g.size());
  for (double v : g.values()) put<double>(out, v);
  if (!out) throw FormatError("grid container: write failed");
}

GridContainer read_binary(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("grid container: bad magic");
  const auto kind = get<std::uint32_t>(in);
  if (kind > 1) throw FormatError("grid container: unknown kind");
  const auto d = get<std::uint32_t>(in);
  const auto pts = get<std::uint32_t>(in);
  if (d == 0 || d > kMaxDim) throw FormatError("grid container: bad dimension");
  VecD lo = get_vec(in, d);
  VecD hi = get_vec(in, d);
  GridContainer c;
  if (kind == 1) {
    GraphHeader h;
    h.n = static_cast<int>(get<std::uint32_t>(in));
    if (h.n < 1 || 2u * static_cast<std::uint32_t>(h.n) != d) throw FormatError("grid container: graph n inconsistent with d");
    h.w = get_vec(in, 2 * h.n);
    h.lambda = get<double>(in);
    h.lambda_prime = get<double>(in);
    c.graph = h;
  }
  const auto count = get<std::uint64_t>(in);
  if (count > kMaxValues) throw FormatError("grid container: value count too large");
  std::vector<double> values(count);
  for (auto& v : values) v = get<double>(in);
  try {
    c.grid = GridFunction(Box(lo, hi), static_cast<int>(pts), std::move(values));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("grid container: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const GridContainer& c) {
  const auto& g = c.grid;
  nlohmann::json j;
  j["kind"] = c.graph ? "graph" : "grid";
  j["d"] = g.dim();
  j["resolution"] = g.points_per_axis();
  j["box"] = {{"lo", vec_to_std(g.box().lo)}, {"hi", vec_to_std(g.box().hi)}};
  if (c.graph) {
    j["graph"] = {{"n", c.graph->n},
                  {"w", vec_to_std(c.graph->w)},
                  {"lambda", c.graph->lambda},
                  {"lambda_prime", c.graph->lambda_prime}};
  }
  j["values"] = std::vector<double>(g.values().begin(), g.values().end());
  return j;
}

GridContainer grid_container_from_json(const nlohmann::json& j) {
  try {
    GridContainer c;
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "grid" && kind != "graph") throw FormatError("grid container: unknown kind " + kind);
    Box box(vec_from_json(j.at("box").at("lo")), vec_from_json(j.at("box").at("hi")));
    c.grid = GridFunction(box, j.at("resolution").get<int>(), j.at("values").get<std::vector<double>>());
    if (c.grid.dim() != j.at("d").get<int>()) throw FormatError("grid container: d does not match box");
    if (kind == "graph") {
      const auto& g = j.at("graph");
      GraphHeader h;
      h.n = g.at("n").get<int>();
      h.w = vec_from_json(g.at("w"));
      h.lambda = g.at("lambda").get<double>();
      h.lambda_prime = g.at("lambda_prime").get<double>();
      c.graph = h;
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("grid container: ") + e.what());
  }
}

void save_binary(const std::string& path, const GridContainer& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  write_binary(out, c);
}

GridContainer load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return read_binary(in);
}

}  // namespace hbeta

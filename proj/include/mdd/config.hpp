#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mdd/boundary.hpp"
#include "mdd/mc.hpp"
#include "mdd/model.hpp"
#include "mdd/region2.hpp"
#include "mdd/value.hpp"

namespace mdd {

// Every default below is written back into the canonical config, so the hash covers it.
struct MeshConfig {
  double s_min = 0.0;  // 0 selects state0.s
  double s_max = 0.0;  // 0 selects 50 max(K, state0.s)
  std::size_t n_s = 160;
  double s_stretch = 4.0;
  std::size_t n_y = 160;
  double y_stretch = 4.0;
  double eps_start = 1e-4;
  int ladder_depth = 12;
  bool region2 = true;
  std::vector<double> s_mesh;  // explicit meshes override the generated ones
  std::vector<double> y_mesh;
};

struct OutputConfig {
  std::string format = "json";  // json | csv (csv applies to `boundary`)
  std::size_t boundary_rows = 64;
};

struct VerifyConfig {
  std::size_t n_samples = 10000;
  std::uint64_t seed = 7;
};

struct GStarInput {
  double beta1, beta2;
};

struct RunConfig {
  CoefficientField field = CoefficientField::constant(0.03, 0.3);
  MarketParams params;
  State state0{1.0, 1.0, 0.0};
  MeshConfig meshes;
  MCConfig mc;
  OutputConfig output;
  VerifyConfig verify;
  std::optional<GStarInput> gstar;

  std::string canonical;  // sorted-key JSON of the effective configuration
  std::uint64_t hash = 0;
  std::string hash_hex() const;
};

// Throws Error(ConfigError) on malformed JSON or unknown keys, and the model's own errors on bad values.
RunConfig parse_config(const std::string& json_text, std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt);

// FNV-1a 64.
std::uint64_t fnv1a64(const std::string& bytes);

struct Pipeline {
  std::shared_ptr<const BoundaryFamily> family;
  std::shared_ptr<const Region2Grid> region2;  // null when no node has b > s
  std::shared_ptr<const PiecewiseValue> value;
  std::vector<double> y_mesh;
};

std::vector<double> pipeline_s_mesh(const RunConfig& cfg);
Pipeline build_pipeline(const RunConfig& cfg);

}  // namespace mdd

#include "mdd/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mdd/errors.hpp"

namespace mdd {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) fail(ErrorCode::ConfigError, "unknown key '" + k + "' in " + where);
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::ConfigError, std::string("bad type for '") + key + "' in " + where);
  }
}

double get_num(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorCode::ConfigError, std::string("missing '") + key + "' in " + where);
  const auto& v = j.at(key);
  if (!v.is_number()) fail(ErrorCode::ConfigError, std::string("'") + key + "' in " + where + " must be a number");
  return v.get<double>();
}

Profile profile_from_json(const json& j, const std::string& where, bool tilt) {
  if (j.is_number()) return Profile{j.get<double>(), 0.0, 0.0, 0.0};
  if (tilt)
    only_keys(j, where, {"level", "amplitude", "decay", "tilt"});
  else
    only_keys(j, where, {"level", "amplitude", "decay"});
  Profile p;
  p.level = get_num(j, "level", where);
  p.amplitude = get_or<double>(j, "amplitude", 0.0, where);
  p.decay = get_or<double>(j, "decay", 0.0, where);
  p.tilt = tilt ? get_or<double>(j, "tilt", 0.0, where) : 0.0;
  return p;
}

json profile_to_json(const Profile& p, bool tilt) {
  json j{{"level", p.level}, {"amplitude", p.amplitude}, {"decay", p.decay}};
  if (tilt) j["tilt"] = p.tilt;
  return j;
}

CoefficientField field_from_json(const json& j) {
  only_keys(j, "model", {"family", "delta", "sigma", "box"});
  const std::string family = get_or<std::string>(j, "family", "", "model");
  AdmissibleBox box;
  if (j.contains("box")) {
    only_keys(j["box"], "model.box", {"s_min", "s_max"});
    box.s_min = get_or<double>(j["box"], "s_min", box.s_min, "model.box");
    box.s_max = get_or<double>(j["box"], "s_max", box.s_max, "model.box");
  }
  if (!j.contains("delta") || !j.contains("sigma")) fail(ErrorCode::ConfigError, "model needs delta and sigma");
  if (family == "constant") {
    if (!j["delta"].is_number() || !j["sigma"].is_number())
      fail(ErrorCode::ConfigError, "constant model takes numeric delta and sigma");
    return CoefficientField::constant(j["delta"].get<double>(), j["sigma"].get<double>(), box);
  }
  if (family == "separable_s")
    return CoefficientField::separable_s(profile_from_json(j["delta"], "model.delta", false),
                                         profile_from_json(j["sigma"], "model.sigma", false), box);
  if (family == "general_sy")
    return CoefficientField::general_sy(profile_from_json(j["delta"], "model.delta", true),
                                        profile_from_json(j["sigma"], "model.sigma", true), box);
  fail(ErrorCode::ConfigError, "model.family must be constant, separable_s or general_sy");
}

json field_to_json(const CoefficientField& f) {
  json j;
  j["family"] = to_string(f.family());
  j["box"] = {{"s_min", f.box().s_min}, {"s_max", f.box().s_max}};
  if (f.family() == FamilyKind::Constant) {
    j["delta"] = f.delta_profile().level;
    j["sigma"] = f.sigma_profile().level;
  } else {
    const bool tilt = f.family() == FamilyKind::GeneralSY;
    j["delta"] = profile_to_json(f.delta_profile(), tilt);
    j["sigma"] = profile_to_json(f.sigma_profile(), tilt);
  }
  return j;
}

std::vector<double> mesh_from_json(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  std::vector<double> out;
  try {
    out = j.at(key).get<std::vector<double>>();
  } catch (const json::exception&) {
    fail(ErrorCode::ConfigError, std::string("meshes.") + key + " must be an array of numbers");
  }
  if (out.size() < 2 || !std::is_sorted(out.begin(), out.end()) ||
      std::adjacent_find(out.begin(), out.end()) != out.end())
    fail(ErrorCode::ConfigError, std::string("meshes.") + key + " must be strictly increasing with >= 2 nodes");
  return out;
}

json to_json(const RunConfig& c) {
  json j;
  j["model"] = field_to_json(c.field);
  j["params"] = {{"rho", c.params.rho}, {"K", c.params.K}, {"payoff_kind", to_string(c.params.kind)}};
  j["state0"] = {{"x", c.state0.x}, {"s", c.state0.s}, {"y", c.state0.y}};
  const auto& m = c.meshes;
  j["meshes"] = {{"s_min", m.s_min},         {"s_max", m.s_max},         {"n_s", m.n_s},
                 {"s_stretch", m.s_stretch}, {"n_y", m.n_y},             {"y_stretch", m.y_stretch},
                 {"eps_start", m.eps_start}, {"ladder_depth", m.ladder_depth}, {"region2", m.region2},
                 {"s_mesh", m.s_mesh},       {"y_mesh", m.y_mesh}};
  j["mc"] = {{"n_paths", c.mc.n_paths},
             {"dt", c.mc.dt},
             {"horizon", c.mc.horizon},
             {"seed", c.mc.seed},
             {"antithetic", c.mc.antithetic},
             {"monitoring", to_string(c.mc.monitoring)},
             {"simd", c.mc.simd}};
  j["output"] = {{"format", c.output.format}, {"boundary_rows", c.output.boundary_rows}};
  j["verify"] = {{"n_samples", c.verify.n_samples}, {"seed", c.verify.seed}};
  if (c.gstar) j["gstar"] = {{"beta1", c.gstar->beta1}, {"beta2", c.gstar->beta2}};
  return j;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string RunConfig::hash_hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 0; k < 16; ++k) out[15 - k] = digits[(hash >> (4 * k)) & 0xF];
  return out;
}

RunConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("invalid JSON: ") + e.what());
  }
  only_keys(j, "config", {"model", "params", "state0", "meshes", "mc", "output", "verify", "gstar"});
  RunConfig c;
  if (!j.contains("model") || !j.contains("params")) fail(ErrorCode::ConfigError, "config needs model and params");
  c.field = field_from_json(j["model"]);

  const json& p = j["params"];
  only_keys(p, "params", {"rho", "K", "payoff_kind"});
  c.params = MarketParams::make(get_num(p, "rho", "params"), get_num(p, "K", "params"),
                                payoff_kind_from_string(get_or<std::string>(p, "payoff_kind", "", "params")));

  if (j.contains("state0")) {
    const json& s = j["state0"];
    only_keys(s, "state0", {"x", "s", "y"});
    c.state0 = State::make(get_num(s, "x", "state0"), get_num(s, "s", "state0"), get_num(s, "y", "state0"));
  }

  if (j.contains("meshes")) {
    const json& m = j["meshes"];
    only_keys(m, "meshes",
              {"s_min", "s_max", "n_s", "s_stretch", "n_y", "y_stretch", "eps_start", "ladder_depth", "region2",
               "s_mesh", "y_mesh"});
    auto& mc = c.meshes;
    mc.s_min = get_or<double>(m, "s_min", mc.s_min, "meshes");
    mc.s_max = get_or<double>(m, "s_max", mc.s_max, "meshes");
    mc.n_s = get_or<std::size_t>(m, "n_s", mc.n_s, "meshes");
    mc.s_stretch = get_or<double>(m, "s_stretch", mc.s_stretch, "meshes");
    mc.n_y = get_or<std::size_t>(m, "n_y", mc.n_y, "meshes");
    mc.y_stretch = get_or<double>(m, "y_stretch", mc.y_stretch, "meshes");
    mc.eps_start = get_or<double>(m, "eps_start", mc.eps_start, "meshes");
    mc.ladder_depth = get_or<int>(m, "ladder_depth", mc.ladder_depth, "meshes");
    mc.region2 = get_or<bool>(m, "region2", mc.region2, "meshes");
    mc.s_mesh = mesh_from_json(m, "s_mesh");
    mc.y_mesh = mesh_from_json(m, "y_mesh");
  }
  auto& ms = c.meshes;
  if (ms.s_min == 0.0) ms.s_min = c.state0.s;
  if (ms.s_max == 0.0) ms.s_max = 50.0 * std::max(c.params.K, c.state0.s);
  if (ms.s_mesh.empty()) {
    if (!(ms.s_min > 0.0 && ms.s_max > ms.s_min)) fail(ErrorCode::ConfigError, "need 0 < meshes.s_min < s_max");
    if (ms.n_s < 1 || ms.n_y < 2) fail(ErrorCode::ConfigError, "need n_s >= 1 and n_y >= 2");
  }
  if (!(ms.eps_start > 0.0 && ms.eps_start < 1.0)) fail(ErrorCode::ConfigError, "meshes.eps_start must lie in (0,1)");
  if (ms.ladder_depth < 0) fail(ErrorCode::ConfigError, "meshes.ladder_depth must be >= 0");

  if (j.contains("mc")) {
    const json& m = j["mc"];
    only_keys(m, "mc", {"n_paths", "dt", "horizon", "seed", "antithetic", "monitoring", "simd"});
    c.mc.n_paths = get_or<std::uint64_t>(m, "n_paths", c.mc.n_paths, "mc");
    c.mc.dt = get_or<double>(m, "dt", c.mc.dt, "mc");
    c.mc.horizon = get_or<double>(m, "horizon", c.mc.horizon, "mc");
    c.mc.seed = get_or<std::uint64_t>(m, "seed", c.mc.seed, "mc");
    c.mc.antithetic = get_or<bool>(m, "antithetic", c.mc.antithetic, "mc");
    const std::string mon = get_or<std::string>(m, "monitoring", "discrete", "mc");
    if (mon == "discrete")
      c.mc.monitoring = Monitoring::Discrete;
    else if (mon == "bridge")
      c.mc.monitoring = Monitoring::Bridge;
    else
      fail(ErrorCode::ConfigError, "mc.monitoring must be discrete or bridge");
    c.mc.simd = get_or<std::string>(m, "simd", c.mc.simd, "mc");
    if (c.mc.simd != "auto" && c.mc.simd != "scalar" && c.mc.simd != "avx2")
      fail(ErrorCode::ConfigError, "mc.simd must be auto, scalar or avx2");
  }
  if (seed_override) c.mc.seed = *seed_override;
  if (c.mc.horizon == 0.0) c.mc.horizon = c.mc.horizon_for(c.params.rho);
  c.mc.validate();

  if (j.contains("output")) {
    const json& o = j["output"];
    only_keys(o, "output", {"format", "boundary_rows"});
    c.output.format = get_or<std::string>(o, "format", c.output.format, "output");
    c.output.boundary_rows = get_or<std::size_t>(o, "boundary_rows", c.output.boundary_rows, "output");
    if (c.output.format != "json" && c.output.format != "csv")
      fail(ErrorCode::ConfigError, "output.format must be json or csv");
    if (c.output.boundary_rows < 2) fail(ErrorCode::ConfigError, "output.boundary_rows must be >= 2");
  }
  if (j.contains("verify")) {
    const json& v = j["verify"];
    only_keys(v, "verify", {"n_samples", "seed"});
    c.verify.n_samples = get_or<std::size_t>(v, "n_samples", c.verify.n_samples, "verify");
    c.verify.seed = get_or<std::uint64_t>(v, "seed", c.verify.seed, "verify");
  }
  if (j.contains("gstar")) {
    const json& g = j["gstar"];
    only_keys(g, "gstar", {"beta1", "beta2"});
    c.gstar = GStarInput{get_num(g, "beta1", "gstar"), get_num(g, "beta2", "gstar")};
  }

  c.canonical = to_json(c).dump();
  c.hash = fnv1a64(c.canonical);
  return c;
}

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ConfigError, "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), seed_override);
}

std::vector<double> pipeline_s_mesh(const RunConfig& cfg) {
  const auto& m = cfg.meshes;
  std::vector<double> sm = m.s_mesh.empty() ? stretched_mesh(m.s_min, m.s_max, m.n_s, m.s_stretch) : m.s_mesh;
  if (cfg.state0.s < sm.front() || cfg.state0.s > sm.back())
    fail(ErrorCode::ConfigError, "the s mesh does not cover state0.s");
  return sm;
}

Pipeline build_pipeline(const RunConfig& cfg) {
  Pipeline p;
  MeshSpec ms;
  ms.eps_start = cfg.meshes.eps_start;
  ms.ladder_depth = cfg.meshes.ladder_depth;
  const auto sm = pipeline_s_mesh(cfg);
  auto family = std::make_shared<BoundaryFamily>(build_family(sm, cfg.params.kind, cfg.field, cfg.params, ms));
  p.family = family;
  if (cfg.meshes.region2) {
    double ytop = 0.0;
    for (const auto& sl : family->slices())
      for (const auto& c : sl.crossings) ytop = std::max(ytop, c.y);
    if (ytop > 0.0) {
      p.y_mesh = cfg.meshes.y_mesh.empty() ? stretched_mesh(0.0, ytop * 1.001, cfg.meshes.n_y, cfg.meshes.y_stretch)
                                           : cfg.meshes.y_mesh;
      try {
        p.region2 = std::make_shared<Region2Grid>(
            solve_region2(*family, cfg.params.kind, cfg.field, cfg.params, p.y_mesh));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyRegion) throw;
      }
    }
  }
  p.value = std::make_shared<PiecewiseValue>(p.family, p.region2, cfg.params, cfg.field);
  return p;
}

}  // namespace mdd

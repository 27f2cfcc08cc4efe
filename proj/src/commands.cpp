#include "mdd/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "mdd/closedform.hpp"
#include "mdd/diagnostics.hpp"
#include "mdd/errors.hpp"
#include "mdd/gstar.hpp"

namespace mdd {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string error_document(const std::string& code, const std::string& message, const std::string& config_hash) {
  json j;
  j["error"] = {{"code", code}, {"message", message}};
  j["config_hash"] = config_hash.empty() ? json(nullptr) : json(config_hash);
  return j.dump(2) + "\n";
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

std::string finish(json j, const RunConfig& cfg) {
  j["config_hash"] = cfg.hash_hex();
  return j.dump(2) + "\n";
}

// Runs fn and returns its value, or a not-applicable marker for the expected refusals.
template <class Fn>
json attempt(Fn&& fn) {
  try {
    return num(fn());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotApplicable || e.code() == ErrorCode::TooCloseToKink ||
        e.code() == ErrorCode::OutsideSolvedRange)
      return json{{"not_applicable", std::string(to_string(e.code()))}};
    throw;
  }
}

double g_star_at(const RunConfig& cfg, double s) {
  if (cfg.params.kind == PayoffKind::FixedStrike) return 1.0;
  MeshSpec ms;
  ms.eps_start = cfg.meshes.eps_start;
  return base_start_slope(s, cfg.params.kind, cfg.field, cfg.params, ms);
}

json report_json(const ResidualReport& r) {
  return {{"id", r.id}, {"x", num(r.x)},          {"s", num(r.s)},        {"y", num(r.y)},
          {"residual", num(r.residual)}, {"tolerance", r.tolerance}, {"pass", r.pass}};
}

// Keeps the worst residual seen for one condition.
struct Worst {
  ResidualReport r;
  bool seen = false;
  Worst(std::string id, double tol) {
    r.id = std::move(id);
    r.tolerance = tol;
    r.pass = true;
  }
  void add(double residual, double x, double s, double y) {
    if (!std::isfinite(residual)) {
      r.pass = false;
    }
    if (!seen || !(std::abs(residual) <= std::abs(r.residual))) {
      r.residual = residual;
      r.x = x;
      r.s = s;
      r.y = y;
    }
    seen = true;
    if (!(std::abs(residual) <= r.tolerance)) r.pass = false;
  }
};

}  // namespace

std::string cmd_price(const RunConfig& cfg) {
  const Pipeline p = build_pipeline(cfg);
  const auto& st = cfg.state0;
  const auto r = p.value->evaluate(st.x, st.s, st.y);
  json diag;
  diag["generator"] = attempt([&] {
    const auto g = generator_residual(*p.value, st.x, st.s, st.y);
    return g.residual / std::max(g.scale, std::numeric_limits<double>::min());
  });
  diag["smooth_fit"] = attempt([&] { return smooth_fit_residual(*p.value, st.s, st.y); });
  // Region-2 reflection is reported through the grid residual norms.
  if (p.value->evaluate(st.s - st.y, st.s, st.y).branch == Branch::Region2)
    diag["reflection_d2"] = {{"not_applicable", "Region2"}};
  else
    diag["reflection_d2"] = attempt([&] { return normal_reflection_residual(*p.value, st.s, st.y, Plane::D2); });
  if (p.region2)
    diag["region2_residual_norms"] = {{"s_eq", p.region2->residual_norms.s_eq},
                                      {"y_eq", p.region2->residual_norms.y_eq}};
  json j;
  j["value"] = r.value;
  j["branch"] = to_string(r.branch);
  j["b_at_state"] = num(r.b);
  j["g_star"] = g_star_at(cfg, st.s);
  j["diagnostics_summary"] = diag;
  return finish(j, cfg);
}

std::string cmd_boundary(const RunConfig& cfg) {
  const Pipeline p = build_pipeline(cfg);
  const std::size_t rows = cfg.output.boundary_rows;
  struct Row {
    double s, y, b;
    int region;
    double margin;
  };
  std::vector<Row> out;
  for (const auto& sl : p.family->slices()) {
    const double y_hi = sl.y0();
    const double y_lo = sl.infinite_below ? 0.0 : std::max(0.0, sl.y_end());
    for (std::size_t k = 0; k < rows; ++k) {
      const double y = k + 1 == rows ? y_lo : y_hi - (y_hi - y_lo) * static_cast<double>(k) / static_cast<double>(rows - 1);
      out.push_back({sl.s, y, sl.b_at(y), sl.region_index(y), constraint_margin(sl, cfg.field, y)});
    }
  }
  if (cfg.output.format == "csv") {
    std::string s = "# config_hash=" + cfg.hash_hex() + "\ns,y,b,region_index,constraint_margin\n";
    for (const auto& r : out) {
      s += format_double(r.s) + ',' + format_double(r.y) + ',' + format_double(r.b) + ',' +
           std::to_string(r.region) + ',' + format_double(r.margin) + '\n';
    }
    return s;
  }
  json rows_json = json::array();
  for (const auto& r : out)
    rows_json.push_back({{"s", r.s}, {"y", r.y}, {"b", num(r.b)}, {"region_index", r.region},
                         {"constraint_margin", num(r.margin)}});
  json j;
  j["rows"] = rows_json;
  return finish(j, cfg);
}

std::string cmd_gstar(const RunConfig& cfg) {
  double b1, b2;
  if (cfg.gstar) {
    b1 = cfg.gstar->beta1;
    b2 = cfg.gstar->beta2;
  } else {
    const double s = cfg.state0.s;
    const auto e = exponents_at(cfg.field, s, s * (1.0 - cfg.meshes.eps_start), cfg.params.rho);
    b1 = e.gamma1;
    b2 = e.gamma2;
  }
  const double K = cfg.params.K;
  json j;
  j["beta1"] = b1;
  j["beta2"] = b2;
  j["K"] = K;
  const auto g = solve_gstar_floating(b1, b2, K);
  j["g_star"] = g.g_star;
  j["h1"] = g.h1;
  j["h2"] = g.h2;
  j["bracket"] = {g.bracket[0], g.bracket[1]};
  j["residual"] = g.residual;
  const auto second = gstar_second_root(b1, b2, K);
  j["second_root"] = second ? json(*second) : json(nullptr);
  j["g_star_fixed"] = solve_gstar_fixed(b1, b2);
  return finish(j, cfg);
}

std::string cmd_verify(const RunConfig& cfg) {
  const Pipeline p = build_pipeline(cfg);
  const PiecewiseValue& pv = *p.value;
  const auto& par = cfg.params;
  const auto& sm = p.family->s_mesh();
  const double s_lo = sm.front();
  const double s_hi = std::max(s_lo * (1.0 + 1e-9), std::min(4.0 * s_lo, 0.5 * sm.back()));
  const auto states = sample_states({s_lo, s_hi}, cfg.verify.n_samples, cfg.verify.seed);

  Worst gen("generator_region1_analytic", 1e-10);
  Worst gen_stop("generator_stopping_sign", 0.0);
  double worst_stop = -std::numeric_limits<double>::infinity();
  State worst_stop_at{0, 0, 0};
  for (const auto& st : states) {
    ValueResult r;
    try {
      r = pv.evaluate(st.x, st.s, st.y);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OutsideSolvedRange) continue;
      throw;
    }
    if (r.branch == Branch::Region1) {
      const auto g = generator_residual(pv, st.x, st.s, st.y, Derivatives::Analytic);
      gen.add(g.residual / std::max(g.scale, std::numeric_limits<double>::min()), st.x, st.s, st.y);
    } else if (r.branch == Branch::Stop && r.value > 0.0) {
      const auto g = generator_residual(pv, st.x, st.s, st.y, Derivatives::Analytic);
      const double v = g.residual / value_scale(par, st.x);
      if (v > worst_stop) {
        worst_stop = v;
        worst_stop_at = st;
      }
    }
  }
  // L G - rho G < 0 on the stopping set: the signed worst value must be negative.
  if (std::isfinite(worst_stop)) {
    gen_stop.r = {"generator_stopping_sign", worst_stop_at.x, worst_stop_at.s, worst_stop_at.y, worst_stop, 0.0,
                  worst_stop < 0.0};
    gen_stop.seen = true;
  }

  Worst fit("smooth_fit", 1e-6);
  Worst refl("reflection_d2_region1", 1e-6);
  std::size_t refl_skipped = 0;
  const std::size_t n_sl = sm.size();
  const std::size_t slice_stride = std::max<std::size_t>(1, n_sl / 24);
  for (std::size_t i = 0; i < n_sl; i += slice_stride) {
    const auto& sl = p.family->slice(i);
    if (sl.s > s_hi) break;
    const std::size_t stride = std::max<std::size_t>(1, sl.y_grid.size() / 40);
    for (std::size_t k = stride; k < sl.y_grid.size(); k += stride) {
      const double y = sl.y_grid[k], b = sl.b_values[k], s = sl.s;
      if (!(b < s)) continue;
      fit.add(smooth_fit_residual(pv, s, y) / (value_scale(par, b) / b), b, s, y);
      try {
        refl.add(normal_reflection_residual(pv, s, y, Plane::D2) / (value_scale(par, s - y) / s), s - y, s, y);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::TooCloseToKink) throw;
        ++refl_skipped;
      }
    }
  }

  json reports = json::array();
  for (const Worst* w : {&gen, &gen_stop, &fit, &refl})
    if (w->seen) reports.push_back(report_json(w->r));

  json info;
  info["reflection_d2_skipped"] = refl_skipped;
  if (p.region2) {
    const auto grid = grid_reflection_residual(*p.region2);
    reports.push_back(report_json({"reflection_grid_d1", 0, 0, 0, grid.s_eq, 1e-4, grid.s_eq <= 1e-4}));
    reports.push_back(report_json({"reflection_grid_d2", 0, 0, 0, grid.y_eq, 1e-4, grid.y_eq <= 1e-4}));
    info["region2_residual_norms"] = {{"s_eq", p.region2->residual_norms.s_eq},
                                      {"y_eq", p.region2->residual_norms.y_eq}};
    info["region2_sweeps"] = p.region2->sweeps;
  }

  const auto var = variational_check(pv, states, 1e-10);
  reports.push_back(report_json({"variational", 0, 0, 0, var.worst_gap, 1e-10, var.pass()}));
  info["variational"] = {{"samples", var.samples},
                         {"below_payoff", var.below_payoff},
                         {"stop_not_equal", var.stop_not_equal},
                         {"not_strict", var.not_strict},
                         {"skipped", var.skipped}};

  // Corner limits at y = s(1 - 1e-4).
  const double s = s_lo, y = s * (1.0 - 1e-4), u = s - y;
  const double v = value_full(u, s, y, pv);
  if (par.kind == PayoffKind::FixedStrike) {
    const double r = std::abs(v - par.K) / par.K;
    reports.push_back(report_json({"limit_fixed_corner", u, s, y, r, 1e-3, r <= 1e-3}));
  } else {
    const double ratio = v / u;
    const double lo = std::max(par.K - 1.0, 0.0), hi = par.K;
    const double miss = std::max({lo - ratio, ratio - hi, 0.0});
    reports.push_back(report_json({"limit_floating_corner", u, s, y, miss, 0.0, miss <= 0.0}));
  }

  bool all = true;
  for (const auto& r : reports) all = all && r["pass"].get<bool>();
  json j;
  j["reports"] = reports;
  j["info"] = info;
  j["all_pass"] = all;
  return finish(j, cfg);
}

std::string cmd_mc_check(const RunConfig& cfg) {
  const Pipeline p = build_pipeline(cfg);
  const FamilyPolicy policy(*p.family);
  const auto est = price_policy(policy, cfg.params, cfg.field, cfg.state0, cfg.mc);
  json j;
  j["mean"] = est.mean;
  j["stderr"] = est.std_err;
  j["n_exercised"] = est.n_exercised;
  j["truncation_bound"] = est.truncation_bound;
  j["dt"] = cfg.mc.dt;
  j["n_paths"] = est.n_paths;
  j["seed"] = cfg.mc.seed;
  j["horizon"] = cfg.mc.horizon;
  j["monitoring"] = to_string(cfg.mc.monitoring);
  j["extrapolated"] = est.extrapolated;
  return finish(j, cfg);
}

}  // namespace mdd

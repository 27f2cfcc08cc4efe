#include "mdd/mc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "mdd/closedform.hpp"
#include "mdd/errors.hpp"
#include "mdd/parallel.hpp"

namespace mdd {

std::string to_string(Monitoring m) { return m == Monitoring::Bridge ? "bridge" : "discrete"; }

void MCConfig::validate() const {
  if (n_paths < 1) fail(ErrorCode::InvalidParams, "n_paths must be >= 1");
  if (!(dt > 0.0)) fail(ErrorCode::InvalidParams, "dt must be positive");
  if (horizon != 0.0 && !(horizon >= dt)) fail(ErrorCode::InvalidParams, "horizon must be >= dt");
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

PathRng::PathRng(std::uint64_t seed, std::uint64_t path) {
  std::uint64_t sm = seed;
  const std::uint64_t key = splitmix64(sm);
  std::uint64_t x = key ^ (path * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL);
  for (auto& w : st_) w = splitmix64(x);
}

std::uint64_t PathRng::next() {
  const std::uint64_t result = rotl(st_[1] * 5, 7) * 9;
  const std::uint64_t t = st_[1] << 17;
  st_[2] ^= st_[0];
  st_[3] ^= st_[1];
  st_[1] ^= st_[2];
  st_[0] ^= st_[3];
  st_[2] ^= t;
  st_[3] = rotl(st_[3], 45);
  return result;
}

double PathRng::uniform_open() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

double PathRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform_open()));
  const double a = 2.0 * std::numbers::pi * uniform_open();
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double PathRng::exponential() { return -std::log(uniform_open()); }

namespace {

struct Coeffs {
  double mu, vol;
};

Coeffs step_coeffs(const CoefficientField& field, double rho, double dt, double s, double y) {
  const auto cv = field.eval(s, y);
  return {(rho - cv.delta - 0.5 * cv.sigma * cv.sigma) * dt, cv.sigma * std::sqrt(dt)};
}

constexpr std::size_t kLanes = 64;

struct Batch {
  std::array<double, kLanes> logx, s, y, mu, vol, logb, z, emax, emin, lmax;
  std::array<std::uint8_t, kLanes> flags;

  void park(std::size_t k) {
    logx[k] = 0.0;
    s[k] = 1.0;
    y[k] = 0.0;
    mu[k] = vol[k] = z[k] = emax[k] = emin[k] = 0.0;
    logb[k] = std::numeric_limits<double>::infinity();
  }
  StepArgs args(bool bridge) {
    return {kLanes, logx.data(), s.data(), y.data(), mu.data(), vol.data(), logb.data(), z.data(),
            emax.data(), emin.data(), lmax.data(), flags.data(), bridge};
  }
};

struct PathOutcome {
  double payoff = 0.0;
  double trunc = 0.0;
  bool exercised = false;
};

double safe_log_b(double b) { return b > 0.0 ? std::log(b) : -std::numeric_limits<double>::infinity(); }

}  // namespace

std::vector<PathPoint> simulate_path(const CoefficientField& field, double rho, const State& state0,
                                     const MCConfig& config, std::uint64_t path_index) {
  config.validate();
  const std::uint64_t n_steps = static_cast<std::uint64_t>(std::ceil(config.horizon_for(rho) / config.dt - 1e-9));
  PathRng rng(config.seed, path_index);
  const bool bridge = config.monitoring == Monitoring::Bridge;
  const StepKernel kern = step_kernel(resolve_simd(config.simd));
  Batch bt;
  for (std::size_t k = 0; k < 4; ++k) bt.park(k);
  bt.logx[0] = std::log(state0.x);
  bt.s[0] = state0.s;
  bt.y[0] = state0.y;
  auto c = step_coeffs(field, rho, config.dt, state0.s, state0.y);
  std::vector<PathPoint> path;
  path.reserve(n_steps + 1);
  path.push_back({0.0, state0.x, state0.s, state0.y});
  StepArgs a = bt.args(bridge);
  a.n = 4;
  for (std::uint64_t n = 1; n <= n_steps; ++n) {
    bt.mu[0] = c.mu;
    bt.vol[0] = c.vol;
    bt.z[0] = rng.normal();
    if (bridge) {
      bt.emax[0] = rng.exponential();
      bt.emin[0] = rng.exponential();
    }
    kern(a);
    const double x = std::exp(bt.logx[0]);
    const double s = bt.s[0], y = bt.y[0];
    // The update rules enforce the state ordering up to the rounding of exp.
    if (!(s - y <= x * (1.0 + 1e-12) && x <= s * (1.0 + 1e-12) && s - y > 0.0))
      fail(ErrorCode::InvalidState, "simulated state left the state space");
    path.push_back({static_cast<double>(n) * config.dt, x, s, y});
    if (bt.flags[0] & kChanged) c = step_coeffs(field, rho, config.dt, s, y);
  }
  return path;
}

void check_horizon(const PriceEstimate& est) {
  if (est.truncation_bound > 10.0 * est.std_err)
    fail(ErrorCode::HorizonDominates, "truncation bound " + std::to_string(est.truncation_bound) +
                                          " exceeds 10 standard errors; lengthen the horizon");
}

PriceEstimate price_policy(const ExercisePolicy& policy, const MarketParams& params,
                           const CoefficientField& field, const State& state0, const MCConfig& config) {
  config.validate();
  const double rho = params.rho;
  const double T = config.horizon_for(rho);
  const std::uint64_t n_steps = static_cast<std::uint64_t>(std::ceil(T / config.dt - 1e-9));
  const double t_end = static_cast<double>(n_steps) * config.dt;
  const double disc_end = std::exp(-rho * t_end);
  const bool bridge = config.monitoring == Monitoring::Bridge;
  const StepKernel kern = step_kernel(resolve_simd(config.simd));
  const bool constant = field.family() == FamilyKind::Constant;
  const std::uint64_t n = config.n_paths;

  PriceEstimate est;
  est.n_paths = n;
  est.extrapolated = policy.extrapolates(state0.s);

  const double b0 = policy.boundary(state0.s, state0.y);
  if (state0.x >= b0) {
    est.mean = payoff(params.kind, params.K, state0.x, state0.s, state0.y);
    est.n_exercised = n;
    return est;
  }
  const Coeffs c0 = step_coeffs(field, rho, config.dt, state0.s, state0.y);

  std::vector<PathOutcome> out(n);
  std::vector<std::uint8_t> extrap(n, 0);
  constexpr std::uint64_t kChunk = 4096;
  const std::uint64_t n_chunks = (n + kChunk - 1) / kChunk;

  parallel_for(n_chunks, [&](std::size_t chunk) {
    const std::uint64_t p_begin = chunk * kChunk, p_end = std::min(n, p_begin + kChunk);
    std::uint64_t next_path = p_begin;
    Batch bt;
    std::array<std::uint64_t, kLanes> pid{};
    std::array<std::uint64_t, kLanes> step{};
    std::array<double, kLanes> sign{};
    std::array<bool, kLanes> alive{};
    std::vector<PathRng> rngs(kLanes, PathRng(0, 0));
    std::size_t n_alive = 0;

    auto load = [&](std::size_t k) {
      while (next_path < p_end) {
        const std::uint64_t p = next_path++;
        const std::uint64_t stream = config.antithetic ? p / 2 : p;
        rngs[k] = PathRng(config.seed, stream);
        sign[k] = (config.antithetic && (p & 1)) ? -1.0 : 1.0;
        pid[k] = p;
        step[k] = 0;
        bt.logx[k] = std::log(state0.x);
        bt.s[k] = state0.s;
        bt.y[k] = state0.y;
        bt.mu[k] = c0.mu;
        bt.vol[k] = c0.vol;
        bt.logb[k] = safe_log_b(b0);
        alive[k] = true;
        ++n_alive;
        return;
      }
      alive[k] = false;
      bt.park(k);
    };
    for (std::size_t k = 0; k < kLanes; ++k) load(k);
    StepArgs args = bt.args(bridge);

    while (n_alive > 0) {
      for (std::size_t k = 0; k < kLanes; ++k) {
        if (!alive[k]) continue;
        bt.z[k] = sign[k] * rngs[k].normal();
        if (bridge) {
          bt.emax[k] = rngs[k].exponential();
          bt.emin[k] = rngs[k].exponential();
        }
      }
      kern(args);
      for (std::size_t k = 0; k < kLanes; ++k) {
        if (!alive[k]) continue;
        ++step[k];
        const double s = bt.s[k], y = bt.y[k];
        bool hit = (bt.flags[k] & kHit) != 0;
        double b = std::exp(bt.logb[k]);
        if (bt.flags[k] & kChanged) {
          b = policy.boundary(s, y);
          bt.logb[k] = safe_log_b(b);
          if (policy.extrapolates(s)) extrap[pid[k]] = 1;
          if (!constant) {
            const Coeffs c = step_coeffs(field, rho, config.dt, s, y);
            bt.mu[k] = c.mu;
            bt.vol[k] = c.vol;
          }
          hit = (bridge ? bt.lmax[k] : bt.logx[k]) >= bt.logb[k];
        }
        PathOutcome& o = out[pid[k]];
        if (hit) {
          const double x_ex = bridge ? std::min(b, s) : std::exp(bt.logx[k]);
          o.payoff = std::exp(-rho * static_cast<double>(step[k]) * config.dt) * payoff(params.kind, params.K, x_ex, s, y);
          o.exercised = true;
        } else if (step[k] >= n_steps) {
          const double cap = params.kind == PayoffKind::FixedStrike ? params.K : params.K * std::exp(bt.logx[k]);
          o.trunc = disc_end * cap;
        } else {
          continue;
        }
        --n_alive;
        load(k);
      }
    }
  });

  double sum = 0.0, trunc = 0.0;
  std::uint64_t ex = 0;
  for (std::uint64_t p = 0; p < n; ++p) {
    sum += out[p].payoff;
    trunc += out[p].trunc;
    ex += out[p].exercised ? 1 : 0;
    if (extrap[p]) est.extrapolated = true;
  }
  est.mean = sum / static_cast<double>(n);
  est.truncation_bound = trunc / static_cast<double>(n);
  est.n_exercised = ex;
  // Sample variance over independent units: antithetic pairs when enabled.
  double m2 = 0.0;
  std::uint64_t units = 0;
  if (config.antithetic) {
    for (std::uint64_t p = 0; p < n; p += 2) {
      const double v = p + 1 < n ? 0.5 * (out[p].payoff + out[p + 1].payoff) : out[p].payoff;
      m2 += (v - est.mean) * (v - est.mean);
      ++units;
    }
  } else {
    for (std::uint64_t p = 0; p < n; ++p) m2 += (out[p].payoff - est.mean) * (out[p].payoff - est.mean);
    units = n;
  }
  est.std_err = units > 1 ? std::sqrt(m2 / static_cast<double>(units - 1) / static_cast<double>(units)) : 0.0;
  check_horizon(est);
  return est;
}

}  // namespace mdd

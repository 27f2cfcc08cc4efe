#include "mdd/value.hpp"

#include "mdd/errors.hpp"

namespace mdd {

const char* to_string(Branch b) {
  switch (b) {
    case Branch::Stop: return "stop";
    case Branch::Region1: return "region1";
    case Branch::Region2: return "region2";
  }
  return "unknown";
}

PiecewiseValue::PiecewiseValue(std::shared_ptr<const BoundaryFamily> boundary,
                               std::shared_ptr<const Region2Grid> region2, MarketParams params,
                               CoefficientField field)
    : boundary_(std::move(boundary)), region2_(std::move(region2)), params_(params), field_(std::move(field)) {
  if (!boundary_) fail(ErrorCode::InvalidParams, "piecewise value needs a boundary family");
}

ValueCoefficients PiecewiseValue::region1_coeffs_at(double s, double y, double b) const {
  const auto cv = field_.eval(s, y);
  const auto g = gamma_exponents(cv.delta, cv.sigma, params_.rho);
  return region1_coeffs(params_.kind, s, y, b, g.gamma1, g.gamma2, params_.K);
}

ValueResult PiecewiseValue::evaluate(double x, double s, double y) const {
  State::make(x, s, y);
  if (boundary_->extrapolates(s)) fail(ErrorCode::OutsideSolvedRange, "s outside the boundary mesh");
  const double b = boundary_->b_at(s, y);
  if (x >= b) return {payoff(params_.kind, params_.K, x, s, y), Branch::Stop, b};
  if (b <= s) return {region1_coeffs_at(s, y, b).value(x), Branch::Region1, b};
  if (!region2_ || !region2_->covers(s, y)) fail(ErrorCode::OutsideSolvedRange, "no region-2 solution at the point");
  return {region2_->value(x, s, y), Branch::Region2, b};
}

double value_full(double x, double s, double y, const PiecewiseValue& pv) { return pv.evaluate(x, s, y).value; }

}  // namespace mdd

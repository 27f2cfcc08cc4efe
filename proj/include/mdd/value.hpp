#pragma once

#include <memory>

#include "mdd/boundary.hpp"
#include "mdd/closedform.hpp"
#include "mdd/region2.hpp"

namespace mdd {

enum class Branch { Stop, Region1, Region2 };

const char* to_string(Branch b);

struct ValueResult {
  double value;
  Branch branch;
  double b;
};

class PiecewiseValue {
 public:
  PiecewiseValue(std::shared_ptr<const BoundaryFamily> boundary, std::shared_ptr<const Region2Grid> region2,
                 MarketParams params, CoefficientField field);

  ValueResult evaluate(double x, double s, double y) const;
  ValueCoefficients region1_coeffs_at(double s, double y, double b) const;

  const BoundaryFamily& boundary() const { return *boundary_; }
  const Region2Grid* region2() const { return region2_.get(); }
  const MarketParams& params() const { return params_; }
  const CoefficientField& field() const { return field_; }

 private:
  std::shared_ptr<const BoundaryFamily> boundary_;
  std::shared_ptr<const Region2Grid> region2_;
  MarketParams params_;
  CoefficientField field_;
};

double value_full(double x, double s, double y, const PiecewiseValue& pv);

}  // namespace mdd

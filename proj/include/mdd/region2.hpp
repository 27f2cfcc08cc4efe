#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mdd/boundary.hpp"
#include "mdd/model.hpp"

namespace mdd {

enum class TopKind : std::uint8_t { Node, SbarData, Truncation };
enum class BottomKind : std::uint8_t { Node, CurveData };

// Mesh, mask and boundary data of the b > s regions.
struct Region2Geometry {
  std::vector<double> s_mesh;  // ascending
  std::vector<double> y_mesh;  // ascending, y_mesh[0] = 0 row is never masked
  std::vector<std::uint8_t> mask;
  // V(x) on the s-bar curve next to node (i,j), and its s-position.
  std::function<double(std::size_t, std::size_t, double)> sbar_value;
  std::vector<double> sbar_pos;
  // V(x) on the crossing curve above node (i,j), and its y-position.
  std::function<double(std::size_t, std::size_t, double)> curve_value;
  std::vector<double> curve_pos;

  std::size_t ns() const { return s_mesh.size(); }
  std::size_t ny() const { return y_mesh.size(); }
  std::size_t idx(std::size_t i, std::size_t j) const { return i * y_mesh.size() + j; }
  bool masked(std::size_t i, std::size_t j) const { return mask[idx(i, j)] != 0; }
};

struct NodeEquation {
  std::size_t i, j;
  double s, u;
  double g1, g2;
  TopKind top;
  BottomKind bottom;
  // Exponents of the neighbour representation used on the right-hand sides.
  double top_g1, top_g2, bot_g1, bot_g2;
  double top_data, bot_data;
  // Distance to the s-side data point: the next column or the s-bar crossing.
  double top_h;
  // x at which the y-equation is collocated, midway to the y-side data point.
  double xb;
};

struct DiscreteOperator {
  Region2Geometry geometry;
  std::vector<NodeEquation> equations;  // sweep order: s descending, then y descending
  std::vector<double> g1, g2;           // exponents at every node
  std::vector<double> dgs1, dgs2, dgy1, dgy2;

  // Max over node-coupled equations of |equation residual| / step, for arbitrary fields.
  double truncation_residual(const std::vector<double>& c1, const std::vector<double>& c2) const;
};

struct ResidualNorms {
  double s_eq = 0.0;
  double y_eq = 0.0;
};

struct Region2Grid {
  DiscreteOperator op;
  std::vector<double> c1, c2;
  ResidualNorms residual_norms;      // continuous equations, central differences
  ResidualNorms discrete_residuals;  // the upwind equations themselves
  std::vector<double> history;       // max update per sweep
  int sweeps = 0;

  const Region2Geometry& geometry() const { return op.geometry; }
  double node_value(std::size_t i, std::size_t j, double x) const;
  bool covers(double s, double y) const;
  double value(double x, double s, double y) const;
};

struct Region2Options {
  double tol = 1e-13;
  int max_sweeps = 20;
};

DiscreteOperator assemble_system(const CoefficientField& field, double rho, Region2Geometry geometry);

Region2Geometry region2_geometry(const BoundaryFamily& family, PayoffKind kind, const CoefficientField& field,
                                 const MarketParams& params, const std::vector<double>& y_mesh);

Region2Grid solve_system(DiscreteOperator op, const Region2Options& opts = {});

Region2Grid solve_region2(const BoundaryFamily& family, PayoffKind kind, const CoefficientField& field,
                          const MarketParams& params, const std::vector<double>& y_mesh,
                          const Region2Options& opts = {});

// Nodes on [lo, hi] clustered toward lo: lo + (hi-lo) (e^{a t}-1)/(e^a-1), t = k/n.
std::vector<double> stretched_mesh(double lo, double hi, std::size_t n, double stretch);

}  // namespace mdd

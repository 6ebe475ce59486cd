#pragma once

#include <functional>
#include <memory>
#include <string>

#include "biharm/fespace.hpp"

namespace biharm {

/// Closed-form solution with all partial derivatives through order 4,
/// vanishing with its gradient on the domain boundary. Drives the
/// manufactured convergence studies.
class ManufacturedSolution : public Evaluable {
public:
  virtual ~ManufacturedSolution() = default;

  /// d^(i+j) u / dx^i dy^j for i + j <= 4.
  virtual double derivative(int dx, int dy, const Eigen::Vector2d& p) const = 0;
  virtual std::string name() const = 0;

  double value(const Eigen::Vector2d& p) const { return derivative(0, 0, p); }
  Eigen::Vector2d gradient(const Eigen::Vector2d& p) const;
  Eigen::Matrix2d hessian(const Eigen::Vector2d& p) const;
  double laplacian(const Eigen::Vector2d& p) const;
  double bilaplacian(const Eigen::Vector2d& p) const;

  Evaluation evaluate(int, const Eigen::Vector2d& x) const override;
};

/// Catalog lookup. Known names: "sin2" (sin^2(pi x) sin^2(pi y) on the unit
/// square), "poly" (x^2 y^2 (1-x)^2 (1-y)^2 on the unit square), and
/// "lshape" (x^2 y^2 (1-x^2)^2 (1-y^2)^2, an H^2_0 bubble on the L-shaped
/// domain). Throws on unknown names.
std::shared_ptr<const ManufacturedSolution> manufactured_solution(
    const std::string& name);

/// Strong-form sources induced by a manufactured solution.
/// Biharmonic: F = Delta^2 u.
double biharmonic_source(const ManufacturedSolution& u, const Eigen::Vector2d& p);
/// Navier-Stokes stream function: F = Delta^2 u + u_x (Delta u)_y - u_y (Delta u)_x.
double navier_stokes_source(const ManufacturedSolution& u, const Eigen::Vector2d& p);
/// Von Karman pair: f = Delta^2 u - [u,v] and g = Delta^2 v + 1/2 [u,u].
double von_karman_source_first(const ManufacturedSolution& u,
                               const ManufacturedSolution& v,
                               const Eigen::Vector2d& p);
double von_karman_source_second(const ManufacturedSolution& u,
                                const ManufacturedSolution& v,
                                const Eigen::Vector2d& p);

}  // namespace biharm
